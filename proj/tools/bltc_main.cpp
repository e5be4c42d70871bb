// bltc: run, sweep and verify the barycentric Lagrange treecode on random
// or file-provided particle systems.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "bltc/harness.hpp"

namespace {

struct Options {
    std::size_t n_particles = 100000;
    std::uint64_t seed = 1;
    std::string kernel = "coulomb";
    double kappa = 0.5;
    double theta = 0.8;
    int degree = 8;
    std::size_t leaf_size = 2000;
    std::size_t batch_size = 2000;
    int ranks = 1;
    int threads = 0;
    std::optional<std::size_t> verify;
    std::string particles;
    std::string output;
    std::string format = "json";
    std::vector<double> thetas{0.5, 0.7, 0.9};
    std::vector<int> degrees{1, 3, 5, 7, 9, 11, 13};
    bool allow_full_oracle = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--n-particles", o.n_particles, "Number of random particles")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o.seed, "Seed for particles and oracle sampling");
    cmd->add_option("--kernel", o.kernel, "Interaction kernel")
        ->check(CLI::IsMember({"coulomb", "yukawa"}));
    cmd->add_option("--kappa", o.kappa, "Inverse Debye length (yukawa)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--theta", o.theta, "MAC parameter in (0, 1]");
    cmd->add_option("--degree", o.degree, "Interpolation degree")->check(CLI::NonNegativeNumber);
    cmd->add_option("--leaf-size", o.leaf_size, "Max particles per source leaf (N_L)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", o.batch_size, "Max targets per batch (N_B)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--ranks", o.ranks, "Simulated ranks")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", o.threads, "Worker cap (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--particles", o.particles, "CSV (x,y,z,q) overriding generation")
        ->check(CLI::ExistingFile);
    cmd->add_option("--output", o.output, "Write records here instead of stdout");
    cmd->add_option("--format", o.format, "Record format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--allow-full-oracle", o.allow_full_oracle,
                  "Permit an unsampled oracle above 1e6 particles");
}

bltc::BenchmarkConfig to_config(const Options& o) {
    bltc::BenchmarkConfig c;
    c.eval.theta = o.theta;
    c.eval.degree = o.degree;
    c.eval.leaf_size = o.leaf_size;
    c.eval.batch_size = o.batch_size;
    c.eval.kernel = o.kernel == "yukawa" ? bltc::KernelSpec::yukawa(o.kappa)
                                         : bltc::KernelSpec::coulomb();
    c.n_particles = o.n_particles;
    c.seed = o.seed;
    c.ranks = o.ranks;
    c.threads = o.threads;
    c.verify = o.verify;
    if (!o.particles.empty()) {
        c.particles = bltc::read_particles_csv(o.particles);
        c.n_particles = c.particles->size();
    }
    if (c.verify && *c.verify >= c.n_particles && c.n_particles > bltc::kFullOracleLimit &&
        !o.allow_full_oracle)
        throw bltc::InvalidArgument(
            "--verify would run the full oracle above 1e6 particles; lower M or pass --allow-full-oracle");
    return c;
}

void emit(const Options& o, const std::vector<bltc::RunRecord>& records) {
    const std::string text =
        o.format == "csv" ? bltc::records_to_csv(records) : bltc::records_to_json(records) + "\n";
    if (o.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(o.output);
    if (!out)
        throw bltc::Error("cannot open '" + o.output + "' for writing");
    out << text;
    if (!out)
        throw bltc::Error("write to '" + o.output + "' failed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barycentric Lagrange treecode benchmark and validation harness"};
    app.require_subcommand(1);

    Options o;
    std::size_t verify_m = 0;

    auto* run = app.add_subcommand("run", "Single treecode run");
    add_common(run, o);
    run->add_option("--verify", verify_m, "Oracle sample size for the error estimate");

    auto* sweep = app.add_subcommand("sweep", "Sweep theta x degree");
    add_common(sweep, o);
    sweep->add_option("--verify", verify_m, "Oracle sample size for the error estimate");
    sweep->add_option("--thetas", o.thetas, "MAC values to sweep")->delimiter(',');
    sweep->add_option("--degrees", o.degrees, "Degrees to sweep")->delimiter(',');

    auto* verify = app.add_subcommand("verify", "Single run checked against the direct-sum oracle");
    add_common(verify, o);
    verify->add_option("--verify", verify_m, "Oracle sample size (default min(N, 10000))");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() && run->count("--verify"))
            o.verify = verify_m;
        if (sweep->parsed() && sweep->count("--verify"))
            o.verify = verify_m;
        if (verify->parsed())
            o.verify = verify->count("--verify") ? verify_m : std::min<std::size_t>(o.n_particles, 10000);

        bltc::BenchmarkConfig config = to_config(o);
        if (!sweep->parsed()) {
            config.thetas.clear();
            config.degrees.clear();
        } else {
            config.thetas = o.thetas;
            config.degrees = o.degrees;
        }
        if (verify->parsed() && !verify->count("--verify") && !o.particles.empty())
            config.verify = std::min<std::size_t>(config.n_particles, 10000);
        config.eval.validate();
        emit(o, bltc::run_benchmark(config));
    } catch (const std::exception& e) {
        std::cerr << "bltc: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
