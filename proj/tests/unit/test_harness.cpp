#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "bltc/harness.hpp"
#include "support/oracles.hpp"

using namespace bltc;

TEST_CASE("particle generation") {
    const Particles a = generate_particles(1000, 17);
    const Particles b = generate_particles(1000, 17);
    CHECK(a.x == b.x);
    CHECK(a.q == b.q);
    CHECK(generate_particles(1000, 18).x != a.x);
    CHECK(generate_particles(0, 1).empty());

    const Particles big = generate_particles(1000000, 1);
    for (const auto* v : {&big.x, &big.y, &big.z, &big.q})
        for (double c : *v)
            REQUIRE((c >= -1.0 && c <= 1.0));
    // Positions and charges come from independent streams: a prefix of a
    // larger system is the smaller system.
    const Particles prefix = generate_particles(10, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(prefix.x[i] == big.x[i]);
        CHECK(prefix.q[i] == big.q[i]);
    }
}

TEST_CASE("sample indices") {
    const auto s = sample_indices(100000, 1000, 5);
    CHECK(s.size() == 1000);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 100000);
    CHECK(sample_indices(10, 50, 1).size() == 10);
    CHECK(sample_indices(100000, 1000, 5) == s);
}

TEST_CASE("direct-sum oracle") {
    Particles two;
    two.push_back({0, 0, 0}, 3.0);
    two.push_back({0, 0, 2}, 3.0);
    CHECK(direct_sum_oracle(two, two, KernelSpec::coulomb()) == std::vector<double>{1.5, 1.5});

    const Particles p = generate_particles(5000, 3);
    const auto full = direct_sum_oracle(p, p, KernelSpec::yukawa(0.5));
    const auto idx = sample_indices(p.size(), 300, 9);
    const auto sampled = direct_sum_oracle(p, p, KernelSpec::yukawa(0.5), idx);
    for (std::size_t k = 0; k < idx.size(); ++k)
        CHECK(sampled[k] == full[idx[k]]);

    // Pairwise reference for a few targets.
    for (std::size_t i : {0u, 17u, 4999u}) {
        double phi = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j)
            if (j != i)
                phi += eval_kernel(KernelSpec::yukawa(0.5), p.position(i), p.position(j)) * p.q[j];
        CHECK(std::abs(full[i] - phi) <= 1e-12 * std::abs(phi));
    }
}

TEST_CASE("full oracle is refused above the limit") {
    Particles big(kFullOracleLimit + 1);
    Particles src(1);
    src.x[0] = 5.0;
    CHECK_THROWS_AS(direct_sum_oracle(big, src, KernelSpec::coulomb()), InvalidArgument);
    const std::vector<std::size_t> one{0};
    CHECK(direct_sum_oracle(big, src, KernelSpec::coulomb(), one).size() == 1);
    CHECK(direct_sum_oracle(big, src, KernelSpec::coulomb(), {}, 0, true).size() == big.size());
}

TEST_CASE("relative error") {
    const std::vector<double> ds{1.0, -2.0, 3.0};
    CHECK(relative_error(ds, ds) == 0.0);
    const std::vector<double> scaled{1.1, -2.2, 3.3};
    CHECK(relative_error(ds, scaled) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(relative_error(std::vector<double>{3, 4}, std::vector<double>{3, 3}) ==
          doctest::Approx(0.2).epsilon(1e-15));
    CHECK_THROWS_AS(relative_error(std::vector<double>{0, 0}, std::vector<double>{1, 1}), ZeroReference);
    CHECK_THROWS_AS(relative_error(std::vector<double>{1}, std::vector<double>{1, 1}), InvalidArgument);
}

TEST_CASE("run records round-trip through JSON") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<RunRecord> records;
    for (int i = 0; i < 50; ++i) {
        RunRecord r;
        r.n_particles = rng() % 1000000;
        r.kernel = i % 2 ? "yukawa" : "coulomb";
        r.kappa = u(rng);
        r.theta = u(rng) / 100.0;
        r.degree = static_cast<int>(rng() % 14);
        r.leaf_size = rng() % 5000;
        r.batch_size = rng() % 5000;
        r.ranks = 1 + static_cast<int>(rng() % 32);
        r.seed = rng();
        r.times = {u(rng), u(rng), u(rng), u(rng)};
        r.interaction_counts = {rng() >> 4, rng() >> 4};
        if (i % 3 == 0)
            r.error = ErrorEstimate{std::ldexp(u(rng), -40), rng() % 10000};
        if (i % 4 == 0)
            r.fetch_stats = std::vector<FetchRecord>{{0, 1, 5, 100, 3, 40, 9000}, {1, 0, 6, 90, 2, 41, 8000}};
        records.push_back(std::move(r));
    }
    CHECK(records_from_json(records_to_json(records)) == records);
    CHECK_THROWS(records_from_json("{\"not\": \"an array\"}"));
}

TEST_CASE("CSV flattening") {
    RunRecord r;
    r.n_particles = 10;
    r.error = ErrorEstimate{0.5, 10};
    const std::string csv = records_to_csv({r});
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header.find("times.setup_s") != std::string::npos);
    CHECK(header.find("interaction_counts.direct_pairs") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(csv.begin() + static_cast<std::ptrdiff_t>(header.size()) + 1, csv.end(), ','));
}

TEST_CASE("particle CSV round-trips bit-exactly") {
    const Particles p = generate_particles(500, 77);
    const auto path = (std::filesystem::temp_directory_path() / "bltc_particles_test.csv").string();
    write_particles_csv(path, p);
    const Particles back = read_particles_csv(path);
    CHECK(back.x == p.x);
    CHECK(back.y == p.y);
    CHECK(back.z == p.z);
    CHECK(back.q == p.q);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_particles_csv("/nonexistent/particles.csv"), Error);
}

TEST_CASE("benchmark records") {
    BenchmarkConfig cfg;
    cfg.n_particles = 8000;
    cfg.eval.leaf_size = cfg.eval.batch_size = 300;
    cfg.thetas = {0.5, 0.9};
    cfg.degrees = {2, 4, 6};
    cfg.verify = 400;
    const auto records = run_benchmark(cfg);
    REQUIRE(records.size() == 6);
    CHECK(records[0].theta == 0.5);
    CHECK(records[2].degree == 6);
    CHECK(records[3].theta == 0.9);
    for (const RunRecord& r : records) {
        REQUIRE(r.error.has_value());
        CHECK(r.error->sample_size == 400);
        CHECK(r.error->value < 1e-1);
        CHECK_FALSE(r.fetch_stats.has_value());
        CHECK(r.times.total_s + 1e-6 >= r.times.setup_s + r.times.precompute_s + r.times.compute_s);
    }
    // Error falls with degree on each theta curve.
    CHECK(records[2].error->value < records[0].error->value);
    CHECK(records[5].error->value < records[3].error->value);

    cfg.ranks = 4;
    cfg.thetas = {0.8};
    cfg.degrees = {4};
    const auto distributed = run_benchmark(cfg);
    REQUIRE(distributed.size() == 1);
    REQUIRE(distributed[0].fetch_stats.has_value());
    CHECK(distributed[0].fetch_stats->size() == 12);
    CHECK(distributed[0].error->value < 1e-2);
}
