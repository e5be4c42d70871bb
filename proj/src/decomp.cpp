#include "bltc/decomp.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "bltc/parallel.hpp"

namespace bltc {

// ---------------------------------------------------------------------------
// RCB
// ---------------------------------------------------------------------------

namespace {

class Bisector {
  public:
    Bisector(const Particles& p, int ranks, RcbPartition& out) : p_(p), ranks_(ranks), out_(out) {}

    void run() {
        std::vector<std::size_t> all(p_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        BoundingBox region = BoundingBox::of(p_, {0, p_.size()});
        split(all, region, 0, ranks_);
    }

  private:
    std::size_t share(int rank) const {
        const std::size_t n = p_.size();
        const auto r = static_cast<std::size_t>(ranks_);
        return n / r + (static_cast<std::size_t>(rank) < n % r ? 1 : 0);
    }

    double coord(std::size_t i, int axis) const {
        return axis == 0 ? p_.x[i] : (axis == 1 ? p_.y[i] : p_.z[i]);
    }

    void split(std::vector<std::size_t>& idx, const BoundingBox& region, int first, int end) {
        if (end - first == 1) {
            for (std::size_t i : idx)
                out_.rank_of[i] = first;
            out_.regions[first] = region;
            out_.counts[first] = idx.size();
            return;
        }
        const int mid = first + (end - first) / 2;
        std::size_t below = 0;
        for (int r = first; r < mid; ++r)
            below += share(r);

        BoundingBox box;
        box.min = box.max = p_.position(idx.front());
        for (std::size_t i : idx)
            for (int d = 0; d < 3; ++d) {
                box.min[d] = std::min(box.min[d], coord(i, d));
                box.max[d] = std::max(box.max[d], coord(i, d));
            }
        const Vec3 e = box.extents();
        int axis = 0;
        for (int d = 1; d < 3; ++d)
            if (e[d] > e[axis])
                axis = d;

        auto less = [&](std::size_t a, std::size_t b) {
            const double ca = coord(a, axis), cb = coord(b, axis);
            return ca < cb || (ca == cb && a < b);
        };
        const auto nth = idx.begin() + static_cast<std::ptrdiff_t>(below);
        std::nth_element(idx.begin(), nth, idx.end(), less);
        double lower_max = coord(idx.front(), axis);
        for (auto it = idx.begin(); it != nth; ++it)
            lower_max = std::max(lower_max, coord(*it, axis));
        const double cut = 0.5 * (lower_max + coord(*nth, axis));
        out_.cuts.push_back({axis, cut, first, mid, end});

        std::vector<std::size_t> upper(nth, idx.end());
        idx.erase(nth, idx.end());
        BoundingBox lower_region = region, upper_region = region;
        lower_region.max[axis] = cut;
        upper_region.min[axis] = cut;
        split(idx, lower_region, first, mid);
        split(upper, upper_region, mid, end);
    }

    const Particles& p_;
    int ranks_;
    RcbPartition& out_;
};

} // namespace

RcbPartition rcb_partition(const Particles& particles, int ranks) {
    if (ranks < 1)
        throw InvalidArgument("rcb_partition: need at least one rank");
    if (particles.size() < static_cast<std::size_t>(ranks))
        throw InvalidArgument("rcb_partition: fewer particles than ranks");
    RcbPartition out;
    out.rank_of.assign(particles.size(), 0);
    out.counts.assign(ranks, 0);
    out.regions.resize(ranks);
    Bisector(particles, ranks, out).run();
    return out;
}

// ---------------------------------------------------------------------------
// Rank domains and windows
// ---------------------------------------------------------------------------

RankDomain make_rank_domain(int rank, const Particles& particles, const RcbPartition& rcb,
                            const EvalConfig& config) {
    RankDomain d;
    d.rank = rank;
    d.region = rcb.regions.at(rank);
    for (std::size_t i = 0; i < particles.size(); ++i)
        if (rcb.rank_of[i] == rank)
            d.global_index.push_back(i);
    d.particles = particles.gather(d.global_index);
    d.tree = build_source_tree(d.particles, config.leaf_size, config.degree);
    d.batches = build_target_batches(d.particles, config.batch_size);
    d.local_lists = build_interaction_lists(d.batches, d.tree.clusters, config, 0);
    return d;
}

WindowRegistry::WindowRegistry(int ranks) : windows_(static_cast<std::size_t>(ranks)) {}

void WindowRegistry::publish(int rank, Window window) {
    if (ready_)
        throw InvalidArgument("publish after the publish barrier");
    auto& slot = windows_.at(static_cast<std::size_t>(rank));
    if (slot)
        throw InvalidArgument("rank " + std::to_string(rank) + " published twice");
    slot = std::move(window);
}

void WindowRegistry::fence() {
    for (std::size_t r = 0; r < windows_.size(); ++r)
        if (!windows_[r])
            throw WindowNotReady("rank " + std::to_string(r) + " has not published its windows");
    ready_ = true;
}

const Window& WindowRegistry::checked(int owner) const {
    if (!ready_)
        throw WindowNotReady("window read before the publish barrier");
    return *windows_.at(static_cast<std::size_t>(owner));
}

std::span<const Cluster> WindowRegistry::get_tree_array(int owner) const {
    return checked(owner).tree_array;
}

const ClusterMoments& WindowRegistry::get_moments(int owner, std::uint32_t cluster) const {
    return checked(owner).moments.at(cluster);
}

SourceSpan WindowRegistry::get_sources(int owner, IndexRange range) const {
    return SourceSpan::of(checked(owner).sources, range);
}

int WindowRegistry::degree(int owner) const { return checked(owner).degree; }

void publish_windows(const RankDomain& domain, WindowRegistry& registry) {
    if (registry.ranks() == 1)
        return;
    registry.publish(domain.rank,
                     Window{domain.tree.degree, domain.tree.clusters, domain.tree.sources,
                            domain.moments});
}

// ---------------------------------------------------------------------------
// LET construction
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kTreeRecordBytes = 10 * sizeof(double); // center, radius, N_C, eligible, children
constexpr std::size_t kParticleBytes = 4 * sizeof(double);

struct Interval {
    std::size_t begin, end;
};

/// Union of the direct-list ranges, merged and sorted.
std::vector<Interval> direct_intervals(const RemoteContribution& remote) {
    std::vector<Interval> ranges;
    for (const auto& lists : remote.lists)
        for (std::uint32_t c : lists.direct)
            ranges.push_back({remote.tree_array[c].range.begin, remote.tree_array[c].range.end});
    std::sort(ranges.begin(), ranges.end(),
              [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
    std::vector<Interval> merged;
    for (const Interval& r : ranges) {
        if (!merged.empty() && r.begin <= merged.back().end)
            merged.back().end = std::max(merged.back().end, r.end);
        else
            merged.push_back(r);
    }
    return merged;
}

} // namespace

LocallyEssentialTree build_let(const RankDomain& domain, const WindowRegistry& registry,
                               const EvalConfig& config) {
    LocallyEssentialTree let;
    let.rank = domain.rank;
    if (registry.ranks() == 1)
        return let;

    for (int owner = 0; owner < registry.ranks(); ++owner) {
        if (owner == domain.rank)
            continue;
        RemoteContribution remote;
        remote.owner = owner;
        remote.stats.origin = domain.rank;
        remote.stats.owner = owner;

        // Step one: tree array, then the batch traversal on metadata only.
        const auto tree_array = registry.get_tree_array(owner);
        remote.tree_array.assign(tree_array.begin(), tree_array.end());
        remote.stats.tree_records = remote.tree_array.size();
        remote.lists.resize(domain.batches.size());
        for (std::size_t b = 0; b < domain.batches.size(); ++b)
            remote.lists[b] = build_batch_lists(domain.batches.batches[b], remote.tree_array, config);

        // Step two: moments for approximated clusters, particles for direct ones.
        const std::size_t nclusters = remote.tree_array.size();
        remote.moment_slot.assign(nclusters, -1);
        remote.source_offset.assign(nclusters, -1);
        const int degree = registry.degree(owner);
        for (const auto& lists : remote.lists)
            for (std::uint32_t c : lists.approx) {
                if (remote.moment_slot[c] >= 0)
                    continue;
                remote.moment_slot[c] = static_cast<std::int64_t>(remote.moments.size());
                remote.moments.push_back(registry.get_moments(owner, c));
                remote.grids.push_back(make_cluster_grid(remote.tree_array[c].box, degree));
            }

        const std::vector<Interval> intervals = direct_intervals(remote);
        std::vector<std::size_t> interval_start;
        for (const Interval& iv : intervals) {
            interval_start.push_back(remote.sources.size());
            const SourceSpan s = registry.get_sources(owner, {iv.begin, iv.end});
            for (std::size_t j = 0; j < s.size(); ++j)
                remote.sources.push_back({s.x[j], s.y[j], s.z[j]}, s.q[j]);
        }
        for (const auto& lists : remote.lists)
            for (std::uint32_t c : lists.direct) {
                const std::size_t begin = remote.tree_array[c].range.begin;
                auto it = std::upper_bound(intervals.begin(), intervals.end(), begin,
                                           [](std::size_t v, const Interval& iv) { return v < iv.begin; });
                const auto k = static_cast<std::size_t>(std::distance(intervals.begin(), it)) - 1;
                remote.source_offset[c] =
                    static_cast<std::int64_t>(interval_start[k] + (begin - intervals[k].begin));
            }

        std::size_t distinct = 0;
        for (std::size_t c = 0; c < nclusters; ++c)
            if (remote.moment_slot[c] >= 0 || remote.source_offset[c] >= 0)
                ++distinct;
        const std::size_t grid = config.grid_size();
        remote.stats.clusters = distinct;
        remote.stats.moments = remote.moments.size();
        remote.stats.particles = remote.sources.size();
        remote.stats.bytes = remote.stats.tree_records * kTreeRecordBytes +
                             remote.stats.moments * grid * sizeof(double) +
                             remote.stats.particles * kParticleBytes;
        let.remotes.push_back(std::move(remote));
    }
    return let;
}

LetAudit& LetAudit::operator+=(const LetAudit& o) {
    missing_clusters += o.missing_clusters;
    unused_moments += o.unused_moments;
    unused_particles += o.unused_particles;
    missing_particles += o.missing_particles;
    return *this;
}

LetAudit audit_let(const RankDomain& domain, const LocallyEssentialTree& let,
                   const EvalConfig& config) {
    LetAudit audit;
    for (const RemoteContribution& remote : let.remotes) {
        const std::size_t nclusters = remote.tree_array.size();
        std::vector<char> approx_ref(nclusters, 0);
        std::vector<char> direct_ref(nclusters, 0);
        std::vector<char> covered(remote.tree_array.empty() ? 0 : remote.tree_array[0].range.end, 0);
        for (const auto& batch : domain.batches.batches) {
            const BatchLists lists = build_batch_lists(batch, remote.tree_array, config);
            for (std::uint32_t c : lists.approx)
                approx_ref[c] = 1;
            for (std::uint32_t c : lists.direct) {
                direct_ref[c] = 1;
                const IndexRange r = remote.tree_array[c].range;
                std::fill(covered.begin() + static_cast<std::ptrdiff_t>(r.begin),
                          covered.begin() + static_cast<std::ptrdiff_t>(r.end), 1);
            }
        }
        for (std::size_t c = 0; c < nclusters; ++c) {
            if (approx_ref[c] && remote.moment_slot[c] < 0)
                ++audit.missing_clusters;
            if (direct_ref[c] && remote.source_offset[c] < 0)
                ++audit.missing_clusters;
            if (!approx_ref[c] && remote.moment_slot[c] >= 0)
                ++audit.unused_moments;
        }
        const auto referenced =
            static_cast<std::size_t>(std::count(covered.begin(), covered.end(), char{1}));
        if (remote.sources.size() > referenced)
            audit.unused_particles += remote.sources.size() - referenced;
        else
            audit.missing_particles += referenced - remote.sources.size();
    }
    return audit;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

std::vector<double> evaluate_rank(const RankDomain& domain, const LocallyEssentialTree& let,
                                  const EvalConfig& config, const WindowRegistry* full_data) {
    const TargetBatches& batches = domain.batches;
    std::vector<double> potentials(batches.targets.size(), 0.0);
    std::vector<double> carry(batches.targets.size(), 0.0);
    parallel_for_each_index(batches.size(), 0, [&](std::size_t b) {
        const IndexRange r = batches.batches[b].range;
        const TargetSpan targets = TargetSpan::of(batches.targets, r);
        Accumulator out{std::span<double>(potentials).subspan(r.begin, r.size()),
                        std::span<double>(carry).subspan(r.begin, r.size())};
        const BatchLists& local = domain.local_lists[b];
        for (std::uint32_t c : local.approx)
            eval_batch_approx(targets, domain.tree.grids[c], domain.moments[c], config.kernel, out);
        for (std::uint32_t c : local.direct)
            eval_batch_direct(targets, SourceSpan::of(domain.tree.sources, domain.tree.clusters[c].range),
                              config.kernel, out);

        for (const RemoteContribution& remote : let.remotes) {
            const BatchLists& lists = remote.lists[b];
            for (std::uint32_t c : lists.approx) {
                const Cluster& cl = remote.tree_array[c];
                if (full_data) {
                    const ClusterGrid grid = make_cluster_grid(cl.box, full_data->degree(remote.owner));
                    eval_batch_approx(targets, grid, full_data->get_moments(remote.owner, c),
                                      config.kernel, out);
                } else {
                    const std::int64_t slot = remote.moment_slot[c];
                    if (slot < 0)
                        throw Error("LET is missing moments for a referenced remote cluster");
                    eval_batch_approx(targets, remote.grids[slot], remote.moments[slot], config.kernel,
                                      out);
                }
            }
            for (std::uint32_t c : lists.direct) {
                const Cluster& cl = remote.tree_array[c];
                if (full_data) {
                    eval_batch_direct(targets, full_data->get_sources(remote.owner, cl.range),
                                      config.kernel, out);
                } else {
                    const std::int64_t offset = remote.source_offset[c];
                    if (offset < 0)
                        throw Error("LET is missing particles for a referenced remote cluster");
                    const auto begin = static_cast<std::size_t>(offset);
                    eval_batch_direct(targets,
                                      SourceSpan::of(remote.sources, {begin, begin + cl.num_particles()}),
                                      config.kernel, out);
                }
            }
        }
        out.finish();
    });
    return unpermute(potentials, batches.original_index);
}

InteractionCounts count_rank_interactions(const RankDomain& domain,
                                          const LocallyEssentialTree& let,
                                          const EvalConfig& config) {
    InteractionCounts counts =
        count_interactions(domain.batches, domain.tree.clusters, domain.local_lists, config);
    for (const RemoteContribution& remote : let.remotes)
        counts += count_interactions(domain.batches, remote.tree_array, remote.lists, config);
    return counts;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
double timed(F&& f) {
    const auto start = Clock::now();
    f();
    return seconds_since(start);
}

} // namespace

DistributedResult run_distributed(const Particles& particles, int ranks, const EvalConfig& config,
                                  int threads) {
    config.validate();
    DistributedResult result;
    const auto start = Clock::now();
    const auto R = static_cast<std::size_t>(ranks);

    tbb::task_arena arena(threads > 0 ? threads : tbb::task_arena::automatic);
    arena.execute([&] {
        RcbPartition rcb;
        std::vector<RankDomain> domains(R);
        std::vector<LocallyEssentialTree> lets(R);
        std::vector<std::vector<double>> local(R);
        result.rank_times.assign(R, PhaseTimes{});

        result.times.setup_s += timed([&] {
            rcb = rcb_partition(particles, ranks);
            parallel_for_each_index(R, 0, [&](std::size_t r) {
                result.rank_times[r].setup_s += timed([&] {
                    domains[r] = make_rank_domain(static_cast<int>(r), particles, rcb, config);
                });
            });
        });
        result.rank_counts = rcb.counts;

        result.times.precompute_s = timed([&] {
            parallel_for_each_index(R, 0, [&](std::size_t r) {
                result.rank_times[r].precompute_s =
                    timed([&] { domains[r].moments = compute_all_moments(domains[r].tree, 0); });
            });
        });

        WindowRegistry registry(ranks);
        result.times.setup_s += timed([&] {
            for (const RankDomain& d : domains)
                publish_windows(d, registry);
            if (ranks > 1)
                registry.fence();
            parallel_for_each_index(R, 0, [&](std::size_t r) {
                result.rank_times[r].setup_s +=
                    timed([&] { lets[r] = build_let(domains[r], registry, config); });
            });
        });

        result.times.compute_s = timed([&] {
            parallel_for_each_index(R, 0, [&](std::size_t r) {
                result.rank_times[r].compute_s =
                    timed([&] { local[r] = evaluate_rank(domains[r], lets[r], config); });
            });
        });

        result.potentials.assign(particles.size(), 0.0);
        for (std::size_t r = 0; r < R; ++r) {
            const RankDomain& d = domains[r];
            for (std::size_t i = 0; i < d.global_index.size(); ++i)
                result.potentials[d.global_index[i]] = local[r][i];
            result.counts += count_rank_interactions(d, lets[r], config);
            result.audit += audit_let(d, lets[r], config);
            for (const RemoteContribution& remote : lets[r].remotes)
                result.fetch_stats.push_back(remote.stats);
            PhaseTimes& t = result.rank_times[r];
            t.total_s = t.setup_s + t.precompute_s + t.compute_s;
        }
    });
    result.times.total_s = seconds_since(start);
    return result;
}

} // namespace bltc
