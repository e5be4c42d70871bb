#include "bltc/kernels.hpp"

#include <string>

namespace bltc {

std::string_view kernel_name(KernelKind kind) {
    switch (kind) {
    case KernelKind::Coulomb:
        return "coulomb";
    case KernelKind::Yukawa:
        return "yukawa";
    case KernelKind::TestConstant:
        return "constant";
    }
    return "unknown";
}

KernelKind parse_kernel(std::string_view name) {
    if (name == "coulomb")
        return KernelKind::Coulomb;
    if (name == "yukawa")
        return KernelKind::Yukawa;
    if (name == "constant")
        return KernelKind::TestConstant;
    throw InvalidArgument("unknown kernel '" + std::string(name) + "'");
}

double eval_kernel(const KernelSpec& kernel, const Vec3& x, const Vec3& y) {
    const double dx = x[0] - y[0];
    const double dy = x[1] - y[1];
    const double dz = x[2] - y[2];
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 < kSingularPairThreshold2)
        throw SingularPair("eval_kernel: coincident target and source");
    return visit_kernel(kernel, [r2](const auto& op) { return op(r2); });
}

} // namespace bltc
