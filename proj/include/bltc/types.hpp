#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bltc {

using Vec3 = std::array<double, 3>;

/// Structure-of-arrays particle storage. Targets ignore `q`.
struct Particles {
    std::vector<double> x, y, z, q;

    Particles() = default;
    explicit Particles(std::size_t n) : x(n), y(n), z(n), q(n) {}

    std::size_t size() const noexcept { return x.size(); }
    bool empty() const noexcept { return x.empty(); }

    Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }

    void push_back(const Vec3& p, double charge) {
        x.push_back(p[0]);
        y.push_back(p[1]);
        z.push_back(p[2]);
        q.push_back(charge);
    }

    /// Returns a copy with element i taken from `order[i]`.
    Particles gather(const std::vector<std::size_t>& order) const;
};

/// Half-open index interval into a particle array.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define BLTC_DEFINE_ERROR(Name)                                                                    \
    class Name : public Error {                                                                    \
      public:                                                                                      \
        using Error::Error;                                                                        \
    }

BLTC_DEFINE_ERROR(SingularPair);
BLTC_DEFINE_ERROR(DegenerateGrid);
BLTC_DEFINE_ERROR(ZeroExtent);
BLTC_DEFINE_ERROR(IneligibleCluster);
BLTC_DEFINE_ERROR(WindowNotReady);
BLTC_DEFINE_ERROR(ZeroReference);
BLTC_DEFINE_ERROR(InvalidArgument);

#undef BLTC_DEFINE_ERROR

} // namespace bltc
