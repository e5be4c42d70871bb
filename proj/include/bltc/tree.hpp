#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bltc/interp.hpp"
#include "bltc/types.hpp"

namespace bltc {

/// Extents below this mark a cluster ineligible for approximation.
inline constexpr double kDegenerateExtent = 1e-14;

struct BoundingBox {
    Vec3 min{0.0, 0.0, 0.0};
    Vec3 max{0.0, 0.0, 0.0};

    Vec3 center() const noexcept;
    Vec3 extents() const noexcept;
    /// Half the diagonal.
    double radius() const noexcept;
    bool contains(const Vec3& p) const noexcept;

    /// Minimal box of particles in `range`. Requires a nonempty range.
    static BoundingBox of(const Particles& particles, IndexRange range);
};

/// Bit d of the result is set when dimension d should be split. Throws
/// ZeroExtent when every extent is below kDegenerateExtent.
unsigned split_dimensions(const BoundingBox& box);

inline int split_count(unsigned dims) { return 1 << __builtin_popcount(dims); }

/// One node of the flattened tree. Children of a node are stored contiguously
/// starting at `first_child`. This record is also what remote ranks fetch.
struct Cluster {
    BoundingBox box;
    IndexRange range;
    std::uint32_t first_child = 0;
    std::uint32_t num_children = 0;
    std::uint32_t level = 0;
    bool eligible = true;

    bool is_leaf() const noexcept { return num_children == 0; }
    std::size_t num_particles() const noexcept { return range.size(); }
    Vec3 center() const noexcept { return box.center(); }
    double radius() const noexcept { return box.radius(); }
};

using ClusterGrid = std::array<ChebyshevGrid1D, 3>;

ClusterGrid make_cluster_grid(const BoundingBox& box, int degree);

/// Output of the shared recursive partitioner: flattened nodes over a
/// permuted copy of the particles. `original_index[i]` is the caller's index
/// of permuted particle i.
struct PartitionTree {
    std::vector<Cluster> nodes;
    Particles particles;
    std::vector<std::size_t> original_index;

    std::size_t depth() const;
    std::vector<std::uint32_t> leaves() const;
};

/// Midpoint splits on minimal boxes, aspect-ratio rule, leaves hold at most
/// `max_leaf` particles. Children are ordered by octant index.
PartitionTree partition_particles(const Particles& particles, std::size_t max_leaf);

struct SourceTree {
    std::vector<Cluster> clusters; // clusters[0] is the root
    std::vector<ClusterGrid> grids; // one per cluster, degree `degree`
    Particles sources;             // permuted
    std::vector<std::size_t> original_index;
    std::size_t leaf_size = 0;
    int degree = 0;

    std::size_t size() const noexcept { return clusters.size(); }
    std::size_t depth() const;
    /// original -> permuted
    std::vector<std::size_t> permutation() const;
};

SourceTree build_source_tree(const Particles& sources, std::size_t leaf_size, int degree);

struct TargetBatch {
    IndexRange range;
    Vec3 center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

struct TargetBatches {
    std::vector<TargetBatch> batches;
    Particles targets; // permuted
    std::vector<std::size_t> original_index;

    std::size_t size() const noexcept { return batches.size(); }
};

TargetBatches build_target_batches(const Particles& targets, std::size_t batch_size);

} // namespace bltc
