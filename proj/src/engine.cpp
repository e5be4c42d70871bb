#include "bltc/engine.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

#include "bltc/parallel.hpp"

namespace bltc {

void EvalConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0))
        throw InvalidArgument("theta must lie in (0, 1]");
    if (degree < 0)
        throw InvalidArgument("degree must be nonnegative");
    if (leaf_size < 1 || batch_size < 1)
        throw InvalidArgument("leaf and batch sizes must be at least 1");
    if (kernel.kappa < 0.0)
        throw InvalidArgument("kappa must be nonnegative");
}

std::size_t EvalConfig::grid_size() const {
    const auto m = static_cast<std::size_t>(degree) + 1;
    return m * m * m;
}

MacOutcome mac_accept(const TargetBatch& batch, const Cluster& cluster, const EvalConfig& config) {
    const Vec3 cc = cluster.center();
    const double dx = batch.center[0] - cc[0];
    const double dy = batch.center[1] - cc[1];
    const double dz = batch.center[2] - cc[2];
    const double distance = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(batch.radius + cluster.radius() < config.theta * distance))
        return MacOutcome::Geometry;
    if (!(config.grid_size() < cluster.num_particles()))
        return MacOutcome::Size;
    if (!cluster.eligible)
        return MacOutcome::Ineligible;
    return MacOutcome::Accept;
}

namespace {

void traverse(const TargetBatch& batch, std::span<const Cluster> clusters, std::uint32_t id,
              const EvalConfig& config, BatchLists& out) {
    const Cluster& c = clusters[id];
    switch (mac_accept(batch, c, config)) {
    case MacOutcome::Accept:
        out.approx.push_back(id);
        return;
    case MacOutcome::Size:
        out.direct.push_back(id);
        return;
    case MacOutcome::Geometry:
    case MacOutcome::Ineligible:
        if (c.is_leaf()) {
            out.direct.push_back(id);
            return;
        }
        for (std::uint32_t k = 0; k < c.num_children; ++k)
            traverse(batch, clusters, c.first_child + k, config, out);
        return;
    }
}

} // namespace

BatchLists build_batch_lists(const TargetBatch& batch, std::span<const Cluster> clusters,
                             const EvalConfig& config) {
    BatchLists lists;
    if (!clusters.empty())
        traverse(batch, clusters, 0, config, lists);
    return lists;
}

InteractionLists build_interaction_lists(const TargetBatches& batches,
                                         std::span<const Cluster> clusters,
                                         const EvalConfig& config, int threads) {
    InteractionLists lists(batches.size());
    parallel_for_each_index(batches.size(), threads, [&](std::size_t b) {
        lists[b] = build_batch_lists(batches.batches[b], clusters, config);
    });
    return lists;
}

TargetSpan TargetSpan::of(const Particles& p, IndexRange r) {
    const std::size_t n = r.size();
    return {std::span<const double>(p.x).subspan(r.begin, n),
            std::span<const double>(p.y).subspan(r.begin, n),
            std::span<const double>(p.z).subspan(r.begin, n)};
}

namespace {

// Neumaier's compensated addition: returns the rounded sum and adds the
// rounding error to `carry`.
inline double two_sum(double a, double b, double& carry) {
    const double t = a + b;
    carry += (std::abs(a) >= std::abs(b)) ? (a - t) + b : (b - t) + a;
    return t;
}

} // namespace

void Accumulator::add(std::size_t i, double value, double value_carry) {
    sum[i] = two_sum(sum[i], value, carry[i]);
    carry[i] += value_carry;
}

void Accumulator::finish() {
    for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i] += carry[i];
        carry[i] = 0.0;
    }
}

namespace {

// Shared tile: outer loop over targets, inner loop over point sources. Each
// target row is mapped into a scratch buffer (vectorizable, including the
// kernel's transcendental calls) and then summed with compensation in kLanes
// fixed lanes, so the summation order is independent of the instruction set.
// The singular-pair mask is a select, not a branch.
constexpr std::size_t kLanes = 8;
using Lanes = double __attribute__((vector_size(kLanes * sizeof(double))));

template <class Op>
void tile(const Op& op, TargetSpan targets, const double* __restrict sx,
          const double* __restrict sy, const double* __restrict sz, const double* __restrict sq,
          std::size_t ns, Accumulator potentials) {
    thread_local std::vector<double> scratch;
    if (scratch.size() < ns)
        scratch.resize(ns);
    double* __restrict row = scratch.data();
    const std::size_t body = ns - ns % kLanes;

    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double tx = targets.x[i];
        const double ty = targets.y[i];
        const double tz = targets.z[i];
        for (std::size_t j = 0; j < ns; ++j) {
            const double dx = tx - sx[j];
            const double dy = ty - sy[j];
            const double dz = tz - sz[j];
            const double r2 = dx * dx + dy * dy + dz * dz;
            const double g = op(r2);
            row[j] = (r2 < kSingularPairThreshold2) ? 0.0 : g * sq[j];
        }
        Lanes acc = {};
        Lanes err = {};
        for (std::size_t j = 0; j < body; j += kLanes) {
            Lanes v;
            std::memcpy(&v, row + j, sizeof v);
            const Lanes t = acc + v;
            const Lanes abs_acc = acc < 0 ? -acc : acc;
            const Lanes abs_v = v < 0 ? -v : v;
            err += abs_acc >= abs_v ? (acc - t) + v : (v - t) + acc;
            acc = t;
        }
        double sum = 0.0;
        double carry = 0.0;
        for (std::size_t l = 0; l < kLanes; ++l) {
            sum = two_sum(sum, acc[l], carry);
            carry += err[l];
        }
        for (std::size_t j = body; j < ns; ++j)
            sum = two_sum(sum, row[j], carry);
        potentials.add(i, sum, carry);
    }
}

struct ScratchAccumulator {
    std::vector<double> carry;
    Accumulator wrap(std::span<double> potentials) {
        carry.assign(potentials.size(), 0.0);
        return {potentials, carry};
    }
};

} // namespace

void eval_batch_direct(TargetSpan targets, SourceSpan sources, const KernelSpec& kernel,
                       Accumulator potentials) {
    visit_kernel(kernel, [&](const auto& op) {
        tile(op, targets, sources.x.data(), sources.y.data(), sources.z.data(), sources.q.data(),
             sources.size(), potentials);
    });
}

void eval_batch_direct(TargetSpan targets, SourceSpan sources, const KernelSpec& kernel,
                       std::span<double> potentials) {
    ScratchAccumulator s;
    Accumulator acc = s.wrap(potentials);
    eval_batch_direct(targets, sources, kernel, acc);
    acc.finish();
}

void eval_batch_approx(TargetSpan targets, const ClusterGrid& grid, const ClusterMoments& moments,
                       const KernelSpec& kernel, Accumulator potentials) {
    const auto s1 = grid[0].points();
    const auto s2 = grid[1].points();
    const auto s3 = grid[2].points();
    const std::size_t m = s1.size();
    const std::size_t total = m * m * m;
    if (moments.q_hat.size() != total)
        throw InvalidArgument("eval_batch_approx: moments do not match grid degree");

    // Flattened node coordinates in the same k1-outermost order as q_hat.
    thread_local std::vector<double> nodes;
    nodes.resize(3 * total);
    double* nx = nodes.data();
    double* ny = nx + total;
    double* nz = ny + total;
    for (std::size_t k1 = 0, k = 0; k1 < m; ++k1)
        for (std::size_t k2 = 0; k2 < m; ++k2)
            for (std::size_t k3 = 0; k3 < m; ++k3, ++k) {
                nx[k] = s1[k1];
                ny[k] = s2[k2];
                nz[k] = s3[k3];
            }
    visit_kernel(kernel, [&](const auto& op) {
        tile(op, targets, nx, ny, nz, moments.q_hat.data(), total, potentials);
    });
}

void eval_batch_approx(TargetSpan targets, const ClusterGrid& grid, const ClusterMoments& moments,
                       const KernelSpec& kernel, std::span<double> potentials) {
    ScratchAccumulator s;
    Accumulator acc = s.wrap(potentials);
    eval_batch_approx(targets, grid, moments, kernel, acc);
    acc.finish();
}

InteractionCounts count_interactions(const TargetBatches& batches, std::span<const Cluster> clusters,
                                     const InteractionLists& lists, const EvalConfig& config) {
    InteractionCounts counts;
    const std::uint64_t grid = config.grid_size();
    for (std::size_t b = 0; b < lists.size(); ++b) {
        const std::uint64_t nb = batches.batches[b].range.size();
        counts.approx_pairs += nb * grid * lists[b].approx.size();
        for (std::uint32_t c : lists[b].direct)
            counts.direct_pairs += nb * clusters[c].num_particles();
    }
    return counts;
}

std::vector<double> unpermute(std::span<const double> permuted,
                              const std::vector<std::size_t>& original_index) {
    std::vector<double> out(permuted.size());
    for (std::size_t i = 0; i < permuted.size(); ++i)
        out[original_index[i]] = permuted[i];
    return out;
}

std::vector<double> compute_potentials(const TargetBatches& batches, const SourceTree& tree,
                                       const std::vector<ClusterMoments>& moments,
                                       const InteractionLists& lists, const EvalConfig& config,
                                       int threads) {
    std::vector<double> potentials(batches.targets.size(), 0.0);
    std::vector<double> carry(batches.targets.size(), 0.0);
    parallel_for_each_index(batches.size(), threads, [&](std::size_t b) {
        const IndexRange r = batches.batches[b].range;
        const TargetSpan targets = TargetSpan::of(batches.targets, r);
        Accumulator out{std::span<double>(potentials).subspan(r.begin, r.size()),
                        std::span<double>(carry).subspan(r.begin, r.size())};
        for (std::uint32_t c : lists[b].approx)
            eval_batch_approx(targets, tree.grids[c], moments[c], config.kernel, out);
        for (std::uint32_t c : lists[b].direct)
            eval_batch_direct(targets, SourceSpan::of(tree.sources, tree.clusters[c].range),
                              config.kernel, out);
        out.finish();
    });
    return unpermute(potentials, batches.original_index);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

TreecodeResult run_treecode(const Particles& targets, const Particles& sources,
                            const EvalConfig& config, int threads) {
    config.validate();
    TreecodeResult result;
    if (targets.empty())
        return result;
    if (sources.empty()) {
        result.potentials.assign(targets.size(), 0.0);
        return result;
    }
    const auto start = std::chrono::steady_clock::now();

    auto phase = std::chrono::steady_clock::now();
    const SourceTree tree = build_source_tree(sources, config.leaf_size, config.degree);
    const TargetBatches batches = build_target_batches(targets, config.batch_size);
    const InteractionLists lists = build_interaction_lists(batches, tree.clusters, config, threads);
    result.times.setup_s = seconds_since(phase);

    phase = std::chrono::steady_clock::now();
    const std::vector<ClusterMoments> moments = compute_all_moments(tree, threads);
    result.times.precompute_s = seconds_since(phase);

    phase = std::chrono::steady_clock::now();
    result.potentials = compute_potentials(batches, tree, moments, lists, config, threads);
    result.times.compute_s = seconds_since(phase);

    result.counts = count_interactions(batches, tree.clusters, lists, config);
    result.num_clusters = tree.size();
    result.num_batches = batches.size();
    result.times.total_s = seconds_since(start);
    return result;
}

} // namespace bltc
