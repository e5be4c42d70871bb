#include "bltc/moments.hpp"

#include <cmath>

#include "bltc/parallel.hpp"

namespace bltc {

SourceSpan SourceSpan::of(const Particles& p, IndexRange r) {
    const std::size_t n = r.size();
    return {std::span<const double>(p.x).subspan(r.begin, n),
            std::span<const double>(p.y).subspan(r.begin, n),
            std::span<const double>(p.z).subspan(r.begin, n),
            std::span<const double>(p.q).subspan(r.begin, n)};
}

namespace {

void require_eligible(const ClusterGrid& grid) {
    for (const auto& g : grid)
        if (g.degenerate())
            throw IneligibleCluster("modified charges requested for a degenerate cluster box");
}

/// Fills `terms` with w_k / (y - s_k) and returns the coincident node index
/// (terms then hold the delta vector) or -1.
int barycentric_terms(const ChebyshevGrid1D& grid, double y, std::span<double> terms,
                      double& denominator) {
    const auto s = grid.points();
    const auto w = grid.weights();
    denominator = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double diff = y - s[k];
        if (std::abs(diff) < kCoincidenceTolerance) {
            std::fill(terms.begin(), terms.end(), 0.0);
            terms[k] = 1.0;
            denominator = 1.0;
            return static_cast<int>(k);
        }
        terms[k] = w[k] / diff;
        denominator += terms[k];
    }
    return -1;
}

struct SourceFactors {
    std::array<std::vector<double>, 3> terms;
    std::array<int, 3> coincident{-1, -1, -1};
    double q_tilde = 0.0;

    explicit SourceFactors(std::size_t m) {
        for (auto& t : terms)
            t.resize(m);
    }

    // Stage one for a single source.
    void load(const ClusterGrid& grid, double x, double y, double z, double q) {
        const std::array<double, 3> coord{x, y, z};
        double product = 1.0;
        for (int d = 0; d < 3; ++d) {
            double denominator = 1.0;
            coincident[d] = barycentric_terms(grid[d], coord[d], terms[d], denominator);
            product *= denominator;
        }
        q_tilde = q / product;
    }
};

} // namespace

IntermediateCharges compute_intermediate(const ClusterGrid& grid, SourceSpan sources) {
    require_eligible(grid);
    const std::size_t m = static_cast<std::size_t>(grid[0].degree()) + 1;
    SourceFactors f(m);
    IntermediateCharges out;
    out.q_tilde.resize(sources.size());
    out.coincident.resize(sources.size());
    for (std::size_t j = 0; j < sources.size(); ++j) {
        f.load(grid, sources.x[j], sources.y[j], sources.z[j], sources.q[j]);
        out.q_tilde[j] = f.q_tilde;
        out.coincident[j] = f.coincident;
    }
    return out;
}

ClusterMoments compute_modified_charges(const ClusterGrid& grid, SourceSpan sources) {
    require_eligible(grid);
    const int degree = grid[0].degree();
    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    ClusterMoments moments;
    moments.degree = degree;
    moments.q_hat.assign(m * m * m, 0.0);

    SourceFactors f(m);
    double* q_hat = moments.q_hat.data();
    for (std::size_t j = 0; j < sources.size(); ++j) {
        f.load(grid, sources.x[j], sources.y[j], sources.z[j], sources.q[j]);
        const double* a1 = f.terms[0].data();
        const double* a2 = f.terms[1].data();
        const double* a3 = f.terms[2].data();
        for (std::size_t k1 = 0; k1 < m; ++k1) {
            const double c1 = a1[k1] * f.q_tilde;
            if (c1 == 0.0)
                continue;
            for (std::size_t k2 = 0; k2 < m; ++k2) {
                const double c12 = c1 * a2[k2];
                double* row = q_hat + (k1 * m + k2) * m;
                for (std::size_t k3 = 0; k3 < m; ++k3)
                    row[k3] += c12 * a3[k3];
            }
        }
    }
    return moments;
}

IntermediateCharges compute_intermediate(const SourceTree& tree, std::size_t cluster) {
    return compute_intermediate(tree.grids.at(cluster),
                                SourceSpan::of(tree.sources, tree.clusters.at(cluster).range));
}

ClusterMoments compute_modified_charges(const SourceTree& tree, std::size_t cluster) {
    if (!tree.clusters.at(cluster).eligible)
        throw IneligibleCluster("cluster is marked ineligible for approximation");
    return compute_modified_charges(tree.grids[cluster],
                                    SourceSpan::of(tree.sources, tree.clusters[cluster].range));
}

std::vector<ClusterMoments> compute_all_moments(const SourceTree& tree, int threads) {
    std::vector<ClusterMoments> all(tree.size());
    parallel_for_each_index(tree.size(), threads, [&](std::size_t c) {
        if (tree.clusters[c].eligible)
            all[c] = compute_modified_charges(tree, c);
    });
    return all;
}

MomentCost moment_cost(int degree, std::size_t num_particles) {
    const double m = degree + 1.0;
    const auto n = static_cast<double>(num_particles);
    return {m * n, m * m * m * n};
}

} // namespace bltc
