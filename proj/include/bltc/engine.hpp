#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bltc/kernels.hpp"
#include "bltc/moments.hpp"
#include "bltc/tree.hpp"

namespace bltc {

struct EvalConfig {
    double theta = 0.8;
    int degree = 8;
    std::size_t leaf_size = 2000;
    std::size_t batch_size = 2000;
    KernelSpec kernel = KernelSpec::coulomb();

    /// Throws InvalidArgument unless 0 < theta <= 1, degree >= 0 and sizes >= 1.
    void validate() const;
    std::size_t grid_size() const;
};

enum class MacOutcome { Accept, Geometry, Size, Ineligible };

/// Geometry failures are reported ahead of size or eligibility failures.
/// Uses r_B + r_C < theta R, so coincident centers fail on geometry.
MacOutcome mac_accept(const TargetBatch& batch, const Cluster& cluster, const EvalConfig& config);

struct BatchLists {
    std::vector<std::uint32_t> approx;
    std::vector<std::uint32_t> direct;
};

using InteractionLists = std::vector<BatchLists>;

/// Batch-uniform traversal from the root of `clusters`. Works on any flattened
/// tree array, local or fetched from another rank.
BatchLists build_batch_lists(const TargetBatch& batch, std::span<const Cluster> clusters,
                             const EvalConfig& config);

InteractionLists build_interaction_lists(const TargetBatches& batches,
                                         std::span<const Cluster> clusters,
                                         const EvalConfig& config, int threads = 0);

/// Target slice owned by one task.
struct TargetSpan {
    std::span<const double> x, y, z;

    std::size_t size() const noexcept { return x.size(); }
    static TargetSpan of(const Particles& p, IndexRange r);
};

/// Compensated per-target running sums: the potential is sum[i] + carry[i].
struct Accumulator {
    std::span<double> sum;
    std::span<double> carry;

    void add(std::size_t i, double value, double value_carry);
    /// Folds carry into sum and zeroes carry.
    void finish();
};

/// potentials[i] += sum_j G(x_i, y_j) q_j, skipping singular pairs.
void eval_batch_direct(TargetSpan targets, SourceSpan sources, const KernelSpec& kernel,
                       Accumulator potentials);
void eval_batch_direct(TargetSpan targets, SourceSpan sources, const KernelSpec& kernel,
                       std::span<double> potentials);

/// potentials[i] += sum_k G(x_i, s_k) q_hat_k over the tensor grid.
void eval_batch_approx(TargetSpan targets, const ClusterGrid& grid, const ClusterMoments& moments,
                       const KernelSpec& kernel, Accumulator potentials);
void eval_batch_approx(TargetSpan targets, const ClusterGrid& grid, const ClusterMoments& moments,
                       const KernelSpec& kernel, std::span<double> potentials);

struct InteractionCounts {
    std::uint64_t direct_pairs = 0;
    std::uint64_t approx_pairs = 0;

    std::uint64_t total() const noexcept { return direct_pairs + approx_pairs; }
    InteractionCounts& operator+=(const InteractionCounts& o) {
        direct_pairs += o.direct_pairs;
        approx_pairs += o.approx_pairs;
        return *this;
    }
    bool operator==(const InteractionCounts&) const = default;
};

InteractionCounts count_interactions(const TargetBatches& batches, std::span<const Cluster> clusters,
                                     const InteractionLists& lists, const EvalConfig& config);

/// Evaluates every batch (one task each) and returns potentials in the
/// caller's original target order.
std::vector<double> compute_potentials(const TargetBatches& batches, const SourceTree& tree,
                                       const std::vector<ClusterMoments>& moments,
                                       const InteractionLists& lists, const EvalConfig& config,
                                       int threads = 0);

/// Scatters batch-ordered values back to original order.
std::vector<double> unpermute(std::span<const double> permuted,
                              const std::vector<std::size_t>& original_index);

struct PhaseTimes {
    double setup_s = 0.0;
    double precompute_s = 0.0;
    double compute_s = 0.0;
    double total_s = 0.0;
};

struct TreecodeResult {
    std::vector<double> potentials; // original target order
    InteractionCounts counts;
    PhaseTimes times;
    std::size_t num_clusters = 0;
    std::size_t num_batches = 0;
};

/// Full serial-memory pipeline: tree and batches, lists, moments, evaluation.
TreecodeResult run_treecode(const Particles& targets, const Particles& sources,
                            const EvalConfig& config, int threads = 0);

} // namespace bltc
