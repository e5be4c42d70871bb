#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bltc/decomp.hpp"
#include "bltc/engine.hpp"

namespace bltc {

// ---------------------------------------------------------------------------
// Test systems
// ---------------------------------------------------------------------------

/// Uniform positions in [-1,1]^3 and charges in [-1,1].
///
/// Generator: std::mt19937_64. Positions and charges use two independent
/// streams whose seeds are splitmix64(seed ^ 0x706f73) and
/// splitmix64(seed ^ 0x636867). A draw u maps to 2 * (u >> 11) * 2^-53 - 1, so
/// results are identical across standard libraries.
Particles generate_particles(std::size_t n, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

/// Sorted, distinct indices in [0, n). Returns all indices when m >= n.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed);

/// CSV with header `x,y,z,q`, 17 significant digits.
void write_particles_csv(const std::string& path, const Particles& particles);
Particles read_particles_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Oracle and error metric
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFullOracleLimit = 1'000'000;

/// Brute-force potentials at `targets[indices]` (all targets when empty),
/// summing sources in their given order and skipping singular pairs. Refuses
/// a full evaluation above kFullOracleLimit targets unless `allow_large`.
std::vector<double> direct_sum_oracle(const Particles& targets, const Particles& sources,
                                      const KernelSpec& kernel,
                                      std::span<const std::size_t> indices = {},
                                      int threads = 0, bool allow_large = false);

/// ||reference - approx||_2 / ||reference||_2. Throws ZeroReference.
double relative_error(std::span<const double> reference, std::span<const double> approx);

// ---------------------------------------------------------------------------
// Benchmark records
// ---------------------------------------------------------------------------

struct ErrorEstimate {
    double value = 0.0;
    std::size_t sample_size = 0;
    bool operator==(const ErrorEstimate&) const = default;
};

struct FetchRecord {
    int origin = 0;
    int owner = 0;
    std::size_t clusters = 0;
    std::size_t particles = 0;
    std::size_t moments = 0;
    std::size_t tree_records = 0;
    std::size_t bytes = 0;
    bool operator==(const FetchRecord&) const = default;
};

struct RunRecord {
    std::size_t n_particles = 0;
    std::string kernel = "coulomb";
    double kappa = 0.0;
    double theta = 0.0;
    int degree = 0;
    std::size_t leaf_size = 0;
    std::size_t batch_size = 0;
    int ranks = 1;
    std::uint64_t seed = 0;
    PhaseTimes times;
    std::optional<ErrorEstimate> error;
    InteractionCounts interaction_counts;
    std::optional<std::vector<FetchRecord>> fetch_stats;

    bool operator==(const RunRecord&) const;
};

std::string records_to_json(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_json(std::string_view text);
/// Flattened with dotted column names; fetch_stats is summarized by totals.
std::string records_to_csv(const std::vector<RunRecord>& records);

struct BenchmarkConfig {
    EvalConfig eval;
    std::size_t n_particles = 100000;
    std::uint64_t seed = 1;
    int ranks = 1;
    int threads = 0;
    std::vector<double> thetas;   // empty = eval.theta
    std::vector<int> degrees;     // empty = eval.degree
    std::optional<std::size_t> verify; // oracle sample size
    std::optional<Particles> particles; // overrides generation
};

/// One record per (theta, degree) pair, theta outermost. The sampled oracle is
/// computed once and shared by every record.
std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config);

} // namespace bltc
