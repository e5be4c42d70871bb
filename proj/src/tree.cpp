#include "bltc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bltc {

Particles Particles::gather(const std::vector<std::size_t>& order) const {
    Particles out(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t j = order[i];
        out.x[i] = x[j];
        out.y[i] = y[j];
        out.z[i] = z[j];
        out.q[i] = q[j];
    }
    return out;
}

Vec3 BoundingBox::center() const noexcept {
    return {0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1]), 0.5 * (min[2] + max[2])};
}

Vec3 BoundingBox::extents() const noexcept {
    return {max[0] - min[0], max[1] - min[1], max[2] - min[2]};
}

double BoundingBox::radius() const noexcept {
    const Vec3 e = extents();
    return 0.5 * std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
}

bool BoundingBox::contains(const Vec3& p) const noexcept {
    for (int d = 0; d < 3; ++d)
        if (p[d] < min[d] || p[d] > max[d])
            return false;
    return true;
}

BoundingBox BoundingBox::of(const Particles& particles, IndexRange range) {
    if (range.size() == 0)
        throw InvalidArgument("BoundingBox::of: empty range");
    BoundingBox box;
    box.min = box.max = particles.position(range.begin);
    for (std::size_t i = range.begin + 1; i < range.end; ++i) {
        const Vec3 p = particles.position(i);
        for (int d = 0; d < 3; ++d) {
            box.min[d] = std::min(box.min[d], p[d]);
            box.max[d] = std::max(box.max[d], p[d]);
        }
    }
    return box;
}

unsigned split_dimensions(const BoundingBox& box) {
    const Vec3 e = box.extents();
    const double longest = std::max({e[0], e[1], e[2]});
    if (longest < kDegenerateExtent)
        throw ZeroExtent("split_dimensions: all box extents are degenerate");
    const double cutoff = longest / std::numbers::sqrt2;
    unsigned dims = 0;
    for (int d = 0; d < 3; ++d)
        if (e[d] > cutoff)
            dims |= 1u << d;
    return dims;
}

ClusterGrid make_cluster_grid(const BoundingBox& box, int degree) {
    return {ChebyshevGrid1D(degree, box.min[0], box.max[0]),
            ChebyshevGrid1D(degree, box.min[1], box.max[1]),
            ChebyshevGrid1D(degree, box.min[2], box.max[2])};
}

namespace {

bool all_extents_nondegenerate(const BoundingBox& box) {
    const Vec3 e = box.extents();
    return e[0] >= kDegenerateExtent && e[1] >= kDegenerateExtent && e[2] >= kDegenerateExtent;
}

class Partitioner {
  public:
    Partitioner(const Particles& input, std::size_t max_leaf)
        : p_(input), scratch_(input.size()), max_leaf_(max_leaf) {
        index_.resize(input.size());
        for (std::size_t i = 0; i < index_.size(); ++i)
            index_[i] = i;
        scratch_index_.resize(input.size());
    }

    PartitionTree run() {
        PartitionTree tree;
        if (p_.empty())
            return tree;
        IndexRange all{0, p_.size()};
        tree.nodes.push_back(make_node(all, 0));
        std::vector<std::uint32_t> stack{0};
        while (!stack.empty()) {
            const std::uint32_t id = stack.back();
            stack.pop_back();
            split(tree.nodes, id, stack);
        }
        tree.particles = std::move(p_);
        tree.original_index = std::move(index_);
        return tree;
    }

  private:
    Cluster make_node(IndexRange range, std::uint32_t level) const {
        Cluster c;
        c.range = range;
        c.box = BoundingBox::of(p_, range);
        c.level = level;
        c.eligible = all_extents_nondegenerate(c.box);
        return c;
    }

    void split(std::vector<Cluster>& nodes, std::uint32_t id, std::vector<std::uint32_t>& stack) {
        const Cluster node = nodes[id];
        if (node.num_particles() <= max_leaf_)
            return;
        unsigned dims = 0;
        try {
            dims = split_dimensions(node.box);
        } catch (const ZeroExtent&) {
            return; // coincident particles cannot be separated
        }
        const Vec3 mid = node.box.center();

        std::array<std::size_t, 8> count{};
        auto octant = [&](std::size_t i) {
            unsigned code = 0;
            if ((dims & 1u) && p_.x[i] > mid[0])
                code |= 1u;
            if ((dims & 2u) && p_.y[i] > mid[1])
                code |= 2u;
            if ((dims & 4u) && p_.z[i] > mid[2])
                code |= 4u;
            return code;
        };
        for (std::size_t i = node.range.begin; i < node.range.end; ++i)
            ++count[octant(i)];
        if (std::count_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; }) < 2)
            return; // midpoint rounding put everything on one side

        std::array<std::size_t, 8> offset{};
        std::size_t running = node.range.begin;
        for (int o = 0; o < 8; ++o) {
            offset[o] = running;
            running += count[o];
        }
        std::array<std::size_t, 8> cursor = offset;
        for (std::size_t i = node.range.begin; i < node.range.end; ++i) {
            const std::size_t dst = cursor[octant(i)]++;
            scratch_.x[dst] = p_.x[i];
            scratch_.y[dst] = p_.y[i];
            scratch_.z[dst] = p_.z[i];
            scratch_.q[dst] = p_.q[i];
            scratch_index_[dst] = index_[i];
        }
        const auto b = static_cast<std::ptrdiff_t>(node.range.begin);
        const auto e = static_cast<std::ptrdiff_t>(node.range.end);
        std::copy(scratch_.x.begin() + b, scratch_.x.begin() + e, p_.x.begin() + b);
        std::copy(scratch_.y.begin() + b, scratch_.y.begin() + e, p_.y.begin() + b);
        std::copy(scratch_.z.begin() + b, scratch_.z.begin() + e, p_.z.begin() + b);
        std::copy(scratch_.q.begin() + b, scratch_.q.begin() + e, p_.q.begin() + b);
        std::copy(scratch_index_.begin() + b, scratch_index_.begin() + e, index_.begin() + b);

        const auto first = static_cast<std::uint32_t>(nodes.size());
        for (int o = 0; o < 8; ++o) {
            if (count[o] == 0)
                continue;
            nodes.push_back(make_node({offset[o], offset[o] + count[o]}, node.level + 1));
        }
        const auto num = static_cast<std::uint32_t>(nodes.size()) - first;
        nodes[id].first_child = first;
        nodes[id].num_children = num;
        // Reverse push so children are processed in octant order.
        for (std::uint32_t c = num; c-- > 0;)
            stack.push_back(first + c);
    }

    Particles p_;
    Particles scratch_;
    std::vector<std::size_t> index_;
    std::vector<std::size_t> scratch_index_;
    std::size_t max_leaf_;
};

std::size_t max_level(const std::vector<Cluster>& nodes) {
    std::uint32_t depth = 0;
    for (const auto& c : nodes)
        depth = std::max(depth, c.level);
    return depth;
}

} // namespace

std::size_t PartitionTree::depth() const { return max_level(nodes); }

std::vector<std::uint32_t> PartitionTree::leaves() const {
    // Depth-first, children in stored order, so leaves come out in index order.
    std::vector<std::uint32_t> out;
    if (nodes.empty())
        return out;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        const Cluster& c = nodes[id];
        if (c.is_leaf()) {
            out.push_back(id);
            continue;
        }
        for (std::uint32_t k = c.num_children; k-- > 0;)
            stack.push_back(c.first_child + k);
    }
    return out;
}

PartitionTree partition_particles(const Particles& particles, std::size_t max_leaf) {
    if (max_leaf < 1)
        throw InvalidArgument("partition_particles: leaf size must be >= 1");
    return Partitioner(particles, max_leaf).run();
}

std::size_t SourceTree::depth() const { return max_level(clusters); }

std::vector<std::size_t> SourceTree::permutation() const {
    std::vector<std::size_t> perm(original_index.size());
    for (std::size_t i = 0; i < original_index.size(); ++i)
        perm[original_index[i]] = i;
    return perm;
}

SourceTree build_source_tree(const Particles& sources, std::size_t leaf_size, int degree) {
    if (sources.empty())
        throw InvalidArgument("build_source_tree: no source particles");
    if (degree < 0)
        throw InvalidArgument("build_source_tree: negative degree");
    PartitionTree partition = partition_particles(sources, leaf_size);
    SourceTree tree;
    tree.clusters = std::move(partition.nodes);
    tree.sources = std::move(partition.particles);
    tree.original_index = std::move(partition.original_index);
    tree.leaf_size = leaf_size;
    tree.degree = degree;
    tree.grids.reserve(tree.clusters.size());
    for (const auto& c : tree.clusters)
        tree.grids.push_back(make_cluster_grid(c.box, degree));
    return tree;
}

TargetBatches build_target_batches(const Particles& targets, std::size_t batch_size) {
    PartitionTree partition = partition_particles(targets, batch_size);
    TargetBatches out;
    for (std::uint32_t id : partition.leaves()) {
        const Cluster& leaf = partition.nodes[id];
        out.batches.push_back({leaf.range, leaf.center(), leaf.radius()});
    }
    out.targets = std::move(partition.particles);
    out.original_index = std::move(partition.original_index);
    return out;
}

} // namespace bltc
