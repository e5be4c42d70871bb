#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "bltc/decomp.hpp"
#include "bltc/engine.hpp"
#include "bltc/harness.hpp"
#include "bltc/interp.hpp"

namespace py = pybind11;
using namespace bltc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Particles to_particles(const Array& positions, const Array& charges) {
    if (positions.ndim() != 2 || positions.shape(1) != 3)
        throw InvalidArgument("positions must have shape (N, 3)");
    if (charges.ndim() != 1 || charges.shape(0) != positions.shape(0))
        throw InvalidArgument("charges must have shape (N,)");
    const auto pos = positions.unchecked<2>();
    const auto q = charges.unchecked<1>();
    Particles p;
    for (py::ssize_t i = 0; i < positions.shape(0); ++i)
        p.push_back({pos(i, 0), pos(i, 1), pos(i, 2)}, q(i));
    return p;
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

KernelSpec make_kernel(const std::string& name, double kappa) {
    KernelSpec k{parse_kernel(name), 0.0};
    if (k.kind == KernelKind::Yukawa)
        k = KernelSpec::yukawa(kappa);
    return k;
}

py::dict times_dict(const PhaseTimes& t) {
    py::dict d;
    d["setup_s"] = t.setup_s;
    d["precompute_s"] = t.precompute_s;
    d["compute_s"] = t.compute_s;
    d["total_s"] = t.total_s;
    return d;
}

} // namespace

PYBIND11_MODULE(_bltc, m) {
    m.doc() = "Barycentric Lagrange treecode for Coulomb and Yukawa potentials";

    py::register_exception<Error>(m, "Error");

    m.def(
        "generate_particles",
        [](std::size_t n, std::uint64_t seed) {
            const Particles p = generate_particles(n, seed);
            py::array_t<double> pos({static_cast<py::ssize_t>(n), py::ssize_t{3}});
            auto w = pos.mutable_unchecked<2>();
            for (std::size_t i = 0; i < n; ++i) {
                w(i, 0) = p.x[i];
                w(i, 1) = p.y[i];
                w(i, 2) = p.z[i];
            }
            return py::make_tuple(pos, to_array(p.q));
        },
        py::arg("n"), py::arg("seed") = 1,
        "Uniform positions in [-1,1]^3 and charges in [-1,1]; returns (positions, charges).");

    m.def(
        "direct_sum",
        [](const Array& positions, const Array& charges, const std::string& kernel, double kappa,
           std::optional<std::vector<std::size_t>> indices, int threads) {
            const Particles p = to_particles(positions, charges);
            const KernelSpec k = make_kernel(kernel, kappa);
            const std::vector<std::size_t> idx = indices.value_or(std::vector<std::size_t>{});
            std::vector<double> phi;
            {
                py::gil_scoped_release release;
                phi = direct_sum_oracle(p, p, k, idx, threads);
            }
            return to_array(phi);
        },
        py::arg("positions"), py::arg("charges"), py::arg("kernel") = "coulomb",
        py::arg("kappa") = 0.5, py::arg("indices") = py::none(), py::arg("threads") = 0,
        "Brute-force potentials at every particle, or at `indices` only.");

    m.def(
        "treecode",
        [](const Array& positions, const Array& charges, double theta, int degree,
           std::size_t leaf_size, std::size_t batch_size, const std::string& kernel, double kappa,
           int ranks, int threads) {
            const Particles p = to_particles(positions, charges);
            EvalConfig c;
            c.theta = theta;
            c.degree = degree;
            c.leaf_size = leaf_size;
            c.batch_size = batch_size;
            c.kernel = make_kernel(kernel, kappa);
            std::vector<double> phi;
            InteractionCounts counts;
            PhaseTimes times;
            {
                py::gil_scoped_release release;
                if (ranks == 1) {
                    TreecodeResult r = run_treecode(p, p, c, threads);
                    phi = std::move(r.potentials);
                    counts = r.counts;
                    times = r.times;
                } else {
                    DistributedResult r = run_distributed(p, ranks, c, threads);
                    phi = std::move(r.potentials);
                    counts = r.counts;
                    times = r.times;
                }
            }
            py::dict out;
            out["potentials"] = to_array(phi);
            out["direct_pairs"] = counts.direct_pairs;
            out["approx_pairs"] = counts.approx_pairs;
            out["times"] = times_dict(times);
            return out;
        },
        py::arg("positions"), py::arg("charges"), py::arg("theta") = 0.8, py::arg("degree") = 8,
        py::arg("leaf_size") = 2000, py::arg("batch_size") = 2000, py::arg("kernel") = "coulomb",
        py::arg("kappa") = 0.5, py::arg("ranks") = 1, py::arg("threads") = 0,
        "Treecode potentials with targets equal to sources. ranks > 1 runs the "
        "simulated distributed pipeline.");

    m.def(
        "relative_error",
        [](const Array& reference, const Array& approx) {
            return relative_error(std::span(reference.data(), reference.size()),
                                  std::span(approx.data(), approx.size()));
        },
        py::arg("reference"), py::arg("approx"));

    m.def("sample_indices", &sample_indices, py::arg("n"), py::arg("m"), py::arg("seed"));

    m.def("chebyshev_points", &chebyshev_points, py::arg("degree"), py::arg("a") = -1.0,
          py::arg("b") = 1.0);
    m.def("barycentric_weights", &barycentric_weights, py::arg("degree"));
    m.def(
        "lagrange_basis",
        [](int degree, double a, double b, double x) {
            return lagrange_basis_all(ChebyshevGrid1D(degree, a, b), x);
        },
        py::arg("degree"), py::arg("a"), py::arg("b"), py::arg("x"));
}
