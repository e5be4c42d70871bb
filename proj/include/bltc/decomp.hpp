#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bltc/engine.hpp"

namespace bltc {

// ---------------------------------------------------------------------------
// Recursive coordinate bisection
// ---------------------------------------------------------------------------

struct RcbCut {
    int axis = 0;
    double value = 0.0;
    int first_rank = 0; // ranks [first_rank, split_rank) lie below the cut
    int split_rank = 0;
    int end_rank = 0;
};

struct RcbPartition {
    std::vector<int> rank_of;           // per particle
    std::vector<std::size_t> counts;    // per rank
    std::vector<BoundingBox> regions;   // per rank, slab of the cut tree
    std::vector<RcbCut> cuts;           // in the order they were made
};

/// Splits ranks into floor(R/2) / ceil(R/2) groups along the longest extent of
/// the current particle box (ties x < y < z) and cuts at the order statistic
/// that gives each group its share. Final counts differ by at most one.
RcbPartition rcb_partition(const Particles& particles, int ranks);

// ---------------------------------------------------------------------------
// Rank-local state and published windows
// ---------------------------------------------------------------------------

struct RankDomain {
    int rank = 0;
    BoundingBox region;
    std::vector<std::size_t> global_index; // local -> caller index, ascending
    Particles particles;                   // local targets == sources
    SourceTree tree;
    TargetBatches batches;
    std::vector<ClusterMoments> moments;
    InteractionLists local_lists;
};

/// Builds the local tree, batches and local interaction lists.
RankDomain make_rank_domain(int rank, const Particles& particles, const RcbPartition& rcb,
                            const EvalConfig& config);

/// Read-only data a rank exposes to every other rank.
struct Window {
    int degree = 0;
    std::vector<Cluster> tree_array;
    Particles sources;
    std::vector<ClusterMoments> moments;
};

/// Write-once windows with a single publish barrier. Reads before the barrier
/// throw WindowNotReady. After the barrier everything is immutable, so
/// concurrent gets need no locking.
class WindowRegistry {
  public:
    explicit WindowRegistry(int ranks);

    int ranks() const noexcept { return static_cast<int>(windows_.size()); }

    /// Throws InvalidArgument on a second publish or after the barrier.
    void publish(int rank, Window window);
    /// Global publish barrier. Throws WindowNotReady if a rank has not published.
    void fence();
    bool ready() const noexcept { return ready_; }

    std::span<const Cluster> get_tree_array(int owner) const;
    const ClusterMoments& get_moments(int owner, std::uint32_t cluster) const;
    SourceSpan get_sources(int owner, IndexRange range) const;
    int degree(int owner) const;

  private:
    const Window& checked(int owner) const;

    std::vector<std::optional<Window>> windows_;
    bool ready_ = false;
};

void publish_windows(const RankDomain& domain, WindowRegistry& registry);

// ---------------------------------------------------------------------------
// Locally essential trees
// ---------------------------------------------------------------------------

struct FetchStats {
    int origin = 0;
    int owner = 0;
    std::size_t tree_records = 0;
    std::size_t clusters = 0; // distinct clusters with moments or particles fetched
    std::size_t moments = 0;
    std::size_t particles = 0;
    std::size_t bytes = 0;
};

/// Everything one rank holds about one remote rank after LET construction.
struct RemoteContribution {
    int owner = 0;
    std::vector<Cluster> tree_array;
    InteractionLists lists; // per local batch, indices into tree_array
    std::vector<std::int64_t> moment_slot;   // per remote cluster, -1 if not fetched
    std::vector<std::int64_t> source_offset; // per remote cluster, -1 if not fetched
    std::vector<ClusterMoments> moments;
    std::vector<ClusterGrid> grids;
    Particles sources;
    FetchStats stats;
};

struct LocallyEssentialTree {
    int rank = 0;
    std::vector<RemoteContribution> remotes; // ascending owner rank
};

/// Step one fetches each remote tree array and runs the batch traversal on it;
/// step two fetches exactly the moments and particle ranges those lists name.
LocallyEssentialTree build_let(const RankDomain& domain, const WindowRegistry& registry,
                               const EvalConfig& config);

struct LetAudit {
    std::size_t missing_clusters = 0;    // referenced but not fetched
    std::size_t unused_moments = 0;      // fetched but never approximated
    std::size_t unused_particles = 0;    // fetched but in no direct range
    std::size_t missing_particles = 0;   // referenced but not fetched

    std::size_t violations() const noexcept {
        return missing_clusters + unused_moments + unused_particles + missing_particles;
    }
    LetAudit& operator+=(const LetAudit& o);
};

/// Recomputes the remote lists from the fetched tree arrays and checks the LET
/// holds exactly the data they reference.
LetAudit audit_let(const RankDomain& domain, const LocallyEssentialTree& let,
                   const EvalConfig& config);

/// Local tree first, then remote ranks in ascending order; approximations
/// before direct sums within each. With `full_data` set, remote data is read
/// straight from the windows instead of the LET buffers.
std::vector<double> evaluate_rank(const RankDomain& domain, const LocallyEssentialTree& let,
                                  const EvalConfig& config, const WindowRegistry* full_data = nullptr);

InteractionCounts count_rank_interactions(const RankDomain& domain,
                                          const LocallyEssentialTree& let,
                                          const EvalConfig& config);

struct DistributedResult {
    std::vector<double> potentials; // caller order
    std::vector<std::size_t> rank_counts;
    std::vector<FetchStats> fetch_stats;
    std::vector<PhaseTimes> rank_times;
    PhaseTimes times;
    InteractionCounts counts;
    LetAudit audit;
};

DistributedResult run_distributed(const Particles& particles, int ranks, const EvalConfig& config,
                                  int threads = 0);

} // namespace bltc
