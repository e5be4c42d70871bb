#pragma once

#include <array>
#include <span>
#include <vector>

#include "bltc/tree.hpp"

namespace bltc {

/// Non-owning view of a contiguous slice of source particles.
struct SourceSpan {
    std::span<const double> x, y, z, q;

    std::size_t size() const noexcept { return x.size(); }
    static SourceSpan of(const Particles& p, IndexRange r);
    static SourceSpan of(const Particles& p) { return of(p, {0, p.size()}); }
};

/// First-stage output: q_tilde[j] = q_j / prod of the non-coincident
/// denominators, and per dimension the index of the node the coordinate
/// coincides with (-1 when none).
struct IntermediateCharges {
    std::vector<double> q_tilde;
    std::vector<std::array<int, 3>> coincident;
};

/// Modified charges on the (n+1)^3 tensor grid, k1 outermost.
struct ClusterMoments {
    int degree = 0;
    std::vector<double> q_hat;

    std::size_t index(int k1, int k2, int k3) const {
        const std::size_t m = static_cast<std::size_t>(degree) + 1;
        return (static_cast<std::size_t>(k1) * m + k2) * m + k3;
    }
    double operator()(int k1, int k2, int k3) const { return q_hat[index(k1, k2, k3)]; }
    bool empty() const noexcept { return q_hat.empty(); }
};

IntermediateCharges compute_intermediate(const ClusterGrid& grid, SourceSpan sources);

/// Throws IneligibleCluster when any grid interval is degenerate.
ClusterMoments compute_modified_charges(const ClusterGrid& grid, SourceSpan sources);

IntermediateCharges compute_intermediate(const SourceTree& tree, std::size_t cluster);
ClusterMoments compute_modified_charges(const SourceTree& tree, std::size_t cluster);

/// Moments for every eligible cluster; ineligible clusters get empty moments.
/// Clusters are processed concurrently on up to `threads` workers.
std::vector<ClusterMoments> compute_all_moments(const SourceTree& tree, int threads = 0);

/// Nominal operation counts of the two stages for one cluster.
struct MomentCost {
    double stage_one = 0.0; // (n+1) N_C
    double stage_two = 0.0; // (n+1)^3 N_C
};
MomentCost moment_cost(int degree, std::size_t num_particles);

} // namespace bltc
