#pragma once

#include <limits>
#include <span>
#include <vector>

namespace bltc {

/// Nodes within this distance of x are treated as coincident with x (smallest
/// positive normal double).
inline constexpr double kCoincidenceTolerance = std::numeric_limits<double>::min();

/// Chebyshev points of the second kind on [a, b], in native (descending) order.
///
/// Endpoints are pinned to b and a exactly and the middle node of an even
/// degree grid is exactly (a + b) / 2, so particles on a minimal bounding box
/// coincide bitwise with grid nodes.
std::vector<double> chebyshev_points(int degree, double a, double b);

/// w_k = (-1)^k delta_k with delta_k = 1/2 at both ends. Interval independent.
std::vector<double> barycentric_weights(int degree);

class ChebyshevGrid1D {
  public:
    ChebyshevGrid1D() = default;
    ChebyshevGrid1D(int degree, double a, double b);

    int degree() const noexcept { return degree_; }
    double lower() const noexcept { return a_; }
    double upper() const noexcept { return b_; }
    bool degenerate() const noexcept { return !(a_ < b_); }
    std::span<const double> points() const noexcept { return points_; }
    std::span<const double> weights() const noexcept { return weights_; }

    /// Index of the node coinciding with x, or -1.
    int coincident_node(double x) const noexcept;

  private:
    int degree_ = 0;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> points_;
    std::vector<double> weights_;
};

/// Writes L_0(x)..L_n(x) into `out` (size n+1) using the barycentric formula.
/// A coincident x yields the Kronecker delta vector. Throws DegenerateGrid.
void lagrange_basis_all(const ChebyshevGrid1D& grid, double x, std::span<double> out);
std::vector<double> lagrange_basis_all(const ChebyshevGrid1D& grid, double x);

} // namespace bltc
