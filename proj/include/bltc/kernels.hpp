#pragma once

#include <cmath>
#include <string_view>

#include "bltc/types.hpp"

#if defined(BLTC_USE_LIBMVEC)
// glibc ships vector variants of exp in libmvec but only advertises them under
// -ffast-math. Declaring the variant lets the tile loops use it without
// relaxing any other floating-point rule.
extern "C" double exp(double) noexcept __attribute__((__simd__("notinbranch")));
#endif

namespace bltc {

enum class KernelKind { Coulomb, Yukawa, TestConstant };

struct KernelSpec {
    KernelKind kind = KernelKind::Coulomb;
    double kappa = 0.0; // inverse Debye length, Yukawa only

    static KernelSpec coulomb() { return {KernelKind::Coulomb, 0.0}; }
    static KernelSpec yukawa(double kappa) { return {KernelKind::Yukawa, kappa}; }
    static KernelSpec test_constant() { return {KernelKind::TestConstant, 0.0}; }
};

/// Pairs closer than this (squared distance) are treated as self-interactions.
inline constexpr double kSingularPairThreshold2 = 1e-28;

std::string_view kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

/// G(x, y). Throws SingularPair for |x - y|^2 < kSingularPairThreshold2.
double eval_kernel(const KernelSpec& kernel, const Vec3& x, const Vec3& y);

// Inner-loop functors, G as a function of the squared separation. They are
// evaluated unconditionally inside tiles and masked afterwards, so r2 == 0 must
// not trap (it yields inf, which the caller discards).
struct CoulombOp {
    double operator()(double r2) const { return 1.0 / std::sqrt(r2); }
};

struct YukawaOp {
    double kappa;
    double operator()(double r2) const {
        const double r = std::sqrt(r2);
        return std::exp(-kappa * r) / r;
    }
};

struct ConstantOp {
    double operator()(double) const { return 1.0; }
};

/// Calls `f` with the functor matching `kernel`. New kernels only need a
/// functor and a case here.
template <class F>
decltype(auto) visit_kernel(const KernelSpec& kernel, F&& f) {
    switch (kernel.kind) {
    case KernelKind::Yukawa:
        return f(YukawaOp{kernel.kappa});
    case KernelKind::TestConstant:
        return f(ConstantOp{});
    case KernelKind::Coulomb:
    default:
        return f(CoulombOp{});
    }
}

} // namespace bltc
