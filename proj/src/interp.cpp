#include "bltc/interp.hpp"

#include <cmath>
#include <numbers>

#include "bltc/types.hpp"

namespace bltc {

std::vector<double> chebyshev_points(int degree, double a, double b) {
    if (degree < 0)
        throw InvalidArgument("chebyshev_points: negative degree");
    if (degree == 0)
        return {0.5 * (a + b)};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::vector<double> points(static_cast<std::size_t>(degree) + 1);
    for (int k = 0; k <= degree; ++k) {
        // cos(pi k / n) written as sin(pi (n - 2k) / (2n)): odd-symmetric and
        // exactly zero at the middle node.
        const double t = std::sin(std::numbers::pi * (degree - 2 * k) / (2.0 * degree));
        points[k] = center + half * t;
    }
    points.front() = b;
    points.back() = a;
    return points;
}

std::vector<double> barycentric_weights(int degree) {
    if (degree < 0)
        throw InvalidArgument("barycentric_weights: negative degree");
    if (degree == 0)
        return {1.0};
    std::vector<double> w(static_cast<std::size_t>(degree) + 1);
    for (int k = 0; k <= degree; ++k)
        w[k] = (k % 2 == 0) ? 1.0 : -1.0;
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

ChebyshevGrid1D::ChebyshevGrid1D(int degree, double a, double b)
    : degree_(degree), a_(a), b_(b), points_(chebyshev_points(degree, a, b)),
      weights_(barycentric_weights(degree)) {}

int ChebyshevGrid1D::coincident_node(double x) const noexcept {
    for (std::size_t k = 0; k < points_.size(); ++k)
        if (std::abs(x - points_[k]) < kCoincidenceTolerance)
            return static_cast<int>(k);
    return -1;
}

void lagrange_basis_all(const ChebyshevGrid1D& grid, double x, std::span<double> out) {
    if (grid.degenerate())
        throw DegenerateGrid("lagrange_basis_all: grid interval has zero width");
    const auto s = grid.points();
    const auto w = grid.weights();
    if (out.size() != s.size())
        throw InvalidArgument("lagrange_basis_all: output size mismatch");

    double denominator = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double diff = x - s[k];
        if (std::abs(diff) < kCoincidenceTolerance) {
            std::fill(out.begin(), out.end(), 0.0);
            out[k] = 1.0;
            return;
        }
        out[k] = w[k] / diff;
        denominator += out[k];
    }
    for (double& v : out)
        v /= denominator;
}

std::vector<double> lagrange_basis_all(const ChebyshevGrid1D& grid, double x) {
    std::vector<double> out(grid.points().size());
    lagrange_basis_all(grid, x, out);
    return out;
}

} // namespace bltc
