#include "bltc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "bltc/parallel.hpp"

namespace bltc {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

double symmetric_unit(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

} // namespace

Particles generate_particles(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 positions(splitmix64(seed ^ 0x706f73ULL));
    std::mt19937_64 charges(splitmix64(seed ^ 0x636867ULL));
    Particles p(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.x[i] = symmetric_unit(positions);
        p.y[i] = symmetric_unit(positions);
        p.z[i] = symmetric_unit(positions);
        p.q[i] = symmetric_unit(charges);
    }
    return p;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
    std::vector<std::size_t> out;
    if (m >= n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = i;
        return out;
    }
    // Floyd's algorithm; modulo reduction keeps it library independent.
    std::mt19937_64 rng(splitmix64(seed ^ 0x73616dULL));
    std::unordered_set<std::size_t> chosen;
    for (std::size_t j = n - m; j < n; ++j) {
        const std::size_t t = static_cast<std::size_t>(rng() % (j + 1));
        chosen.insert(chosen.count(t) ? j : t);
    }
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

void write_particles_csv(const std::string& path, const Particles& particles) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    out << "x,y,z,q\n" << std::setprecision(17);
    for (std::size_t i = 0; i < particles.size(); ++i)
        out << particles.x[i] << ',' << particles.y[i] << ',' << particles.z[i] << ','
            << particles.q[i] << '\n';
    if (!out)
        throw Error("write to '" + path + "' failed");
}

Particles read_particles_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,z,q", 0) != 0)
        throw Error("'" + path + "': expected header x,y,z,q");
    Particles p;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::array<double, 4> v{};
        std::size_t pos = 0;
        for (int k = 0; k < 4; ++k) {
            const std::size_t comma = line.find(',', pos);
            const std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                v[k] = std::stod(field);
            } catch (const std::exception&) {
                throw Error("'" + path + "' line " + std::to_string(lineno) + ": bad number");
            }
            if (k < 3 && comma == std::string::npos)
                throw Error("'" + path + "' line " + std::to_string(lineno) + ": expected 4 columns");
            pos = comma + 1;
        }
        p.push_back({v[0], v[1], v[2]}, v[3]);
    }
    return p;
}

std::vector<double> direct_sum_oracle(const Particles& targets, const Particles& sources,
                                      const KernelSpec& kernel, std::span<const std::size_t> indices,
                                      int threads, bool allow_large) {
    const bool full = indices.empty();
    if (full && targets.size() > kFullOracleLimit && !allow_large)
        throw InvalidArgument("full direct-sum oracle refused above 1e6 targets; sample or override");
    const std::size_t m = full ? targets.size() : indices.size();
    std::vector<double> out(m, 0.0);
    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (m + kChunk - 1) / kChunk;
    const double* sx = sources.x.data();
    const double* sy = sources.y.data();
    const double* sz = sources.z.data();
    const double* sq = sources.q.data();
    const std::size_t ns = sources.size();
    visit_kernel(kernel, [&](const auto& op) {
        parallel_for_each_index(chunks, threads, [&](std::size_t c) {
            const std::size_t end = std::min(m, (c + 1) * kChunk);
            for (std::size_t t = c * kChunk; t < end; ++t) {
                const std::size_t i = full ? t : indices[t];
                const double x = targets.x[i], y = targets.y[i], z = targets.z[i];
                // Neumaier summation in source order.
                double phi = 0.0, carry = 0.0;
                for (std::size_t j = 0; j < ns; ++j) {
                    const double dx = x - sx[j], dy = y - sy[j], dz = z - sz[j];
                    const double r2 = dx * dx + dy * dy + dz * dz;
                    if (r2 < kSingularPairThreshold2)
                        continue;
                    const double term = op(r2) * sq[j];
                    const double s = phi + term;
                    carry += std::abs(phi) >= std::abs(term) ? (phi - s) + term : (term - s) + phi;
                    phi = s;
                }
                out[t] = phi + carry;
            }
        });
    });
    return out;
}

double relative_error(std::span<const double> reference, std::span<const double> approx) {
    if (reference.size() != approx.size())
        throw InvalidArgument("relative_error: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference[i] - approx[i];
        num += d * d;
        den += reference[i] * reference[i];
    }
    if (den == 0.0)
        throw ZeroReference("relative_error: reference has zero norm");
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

bool same_times(const PhaseTimes& a, const PhaseTimes& b) {
    return a.setup_s == b.setup_s && a.precompute_s == b.precompute_s &&
           a.compute_s == b.compute_s && a.total_s == b.total_s;
}

json to_json(const RunRecord& r) {
    json j = {
        {"n_particles", r.n_particles},
        {"kernel", r.kernel},
        {"kappa", r.kappa},
        {"theta", r.theta},
        {"degree", r.degree},
        {"leaf_size", r.leaf_size},
        {"batch_size", r.batch_size},
        {"ranks", r.ranks},
        {"seed", r.seed},
        {"times",
         {{"setup_s", r.times.setup_s},
          {"precompute_s", r.times.precompute_s},
          {"compute_s", r.times.compute_s},
          {"total_s", r.times.total_s}}},
        {"interaction_counts",
         {{"direct_pairs", r.interaction_counts.direct_pairs},
          {"approx_pairs", r.interaction_counts.approx_pairs}}},
    };
    if (r.error)
        j["error"] = {{"value", r.error->value}, {"sample_size", r.error->sample_size}};
    if (r.fetch_stats) {
        json arr = json::array();
        for (const FetchRecord& f : *r.fetch_stats)
            arr.push_back({{"origin", f.origin},
                           {"owner", f.owner},
                           {"clusters", f.clusters},
                           {"particles", f.particles},
                           {"moments", f.moments},
                           {"tree_records", f.tree_records},
                           {"bytes", f.bytes}});
        j["fetch_stats"] = std::move(arr);
    }
    return j;
}

RunRecord from_json(const json& j) {
    RunRecord r;
    j.at("n_particles").get_to(r.n_particles);
    j.at("kernel").get_to(r.kernel);
    j.at("kappa").get_to(r.kappa);
    j.at("theta").get_to(r.theta);
    j.at("degree").get_to(r.degree);
    j.at("leaf_size").get_to(r.leaf_size);
    j.at("batch_size").get_to(r.batch_size);
    j.at("ranks").get_to(r.ranks);
    j.at("seed").get_to(r.seed);
    const json& t = j.at("times");
    t.at("setup_s").get_to(r.times.setup_s);
    t.at("precompute_s").get_to(r.times.precompute_s);
    t.at("compute_s").get_to(r.times.compute_s);
    t.at("total_s").get_to(r.times.total_s);
    const json& c = j.at("interaction_counts");
    c.at("direct_pairs").get_to(r.interaction_counts.direct_pairs);
    c.at("approx_pairs").get_to(r.interaction_counts.approx_pairs);
    if (j.contains("error")) {
        ErrorEstimate e;
        j["error"].at("value").get_to(e.value);
        j["error"].at("sample_size").get_to(e.sample_size);
        r.error = e;
    }
    if (j.contains("fetch_stats")) {
        std::vector<FetchRecord> stats;
        for (const json& f : j["fetch_stats"]) {
            FetchRecord rec;
            f.at("origin").get_to(rec.origin);
            f.at("owner").get_to(rec.owner);
            f.at("clusters").get_to(rec.clusters);
            f.at("particles").get_to(rec.particles);
            f.at("moments").get_to(rec.moments);
            f.at("tree_records").get_to(rec.tree_records);
            f.at("bytes").get_to(rec.bytes);
            stats.push_back(rec);
        }
        r.fetch_stats = std::move(stats);
    }
    return r;
}

} // namespace

bool RunRecord::operator==(const RunRecord& o) const {
    return n_particles == o.n_particles && kernel == o.kernel && kappa == o.kappa &&
           theta == o.theta && degree == o.degree && leaf_size == o.leaf_size &&
           batch_size == o.batch_size && ranks == o.ranks && seed == o.seed &&
           same_times(times, o.times) && error == o.error &&
           interaction_counts == o.interaction_counts && fetch_stats == o.fetch_stats;
}

std::string records_to_json(const std::vector<RunRecord>& records) {
    json arr = json::array();
    for (const RunRecord& r : records)
        arr.push_back(to_json(r));
    return arr.dump(2);
}

std::vector<RunRecord> records_from_json(std::string_view text) {
    const json arr = json::parse(text);
    if (!arr.is_array())
        throw Error("run records: expected a JSON array");
    std::vector<RunRecord> out;
    for (const json& j : arr)
        out.push_back(from_json(j));
    return out;
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "n_particles,kernel,kappa,theta,degree,leaf_size,batch_size,ranks,seed,"
           "times.setup_s,times.precompute_s,times.compute_s,times.total_s,"
           "error.value,error.sample_size,interaction_counts.direct_pairs,"
           "interaction_counts.approx_pairs,fetch_stats.clusters,fetch_stats.particles,"
           "fetch_stats.moments,fetch_stats.bytes\n";
    for (const RunRecord& r : records) {
        out << r.n_particles << ',' << r.kernel << ',' << r.kappa << ',' << r.theta << ','
            << r.degree << ',' << r.leaf_size << ',' << r.batch_size << ',' << r.ranks << ','
            << r.seed << ',' << r.times.setup_s << ',' << r.times.precompute_s << ','
            << r.times.compute_s << ',' << r.times.total_s << ',';
        if (r.error)
            out << r.error->value << ',' << r.error->sample_size;
        else
            out << ',';
        out << ',' << r.interaction_counts.direct_pairs << ','
            << r.interaction_counts.approx_pairs << ',';
        if (r.fetch_stats) {
            FetchRecord total;
            for (const FetchRecord& f : *r.fetch_stats) {
                total.clusters += f.clusters;
                total.particles += f.particles;
                total.moments += f.moments;
                total.bytes += f.bytes;
            }
            out << total.clusters << ',' << total.particles << ',' << total.moments << ','
                << total.bytes;
        } else {
            out << ",,,";
        }
        out << '\n';
    }
    return out.str();
}

std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config) {
    const Particles particles =
        config.particles ? *config.particles : generate_particles(config.n_particles, config.seed);
    const std::vector<double> thetas =
        config.thetas.empty() ? std::vector<double>{config.eval.theta} : config.thetas;
    const std::vector<int> degrees =
        config.degrees.empty() ? std::vector<int>{config.eval.degree} : config.degrees;

    std::vector<std::size_t> sample;
    std::vector<double> reference;
    if (config.verify && !particles.empty()) {
        sample = sample_indices(particles.size(), *config.verify, config.seed);
        reference = direct_sum_oracle(particles, particles, config.eval.kernel, sample, config.threads);
    }

    std::vector<RunRecord> records;
    for (double theta : thetas) {
        for (int degree : degrees) {
            EvalConfig eval = config.eval;
            eval.theta = theta;
            eval.degree = degree;

            RunRecord rec;
            rec.n_particles = particles.size();
            rec.kernel = std::string(kernel_name(eval.kernel.kind));
            rec.kappa = eval.kernel.kappa;
            rec.theta = theta;
            rec.degree = degree;
            rec.leaf_size = eval.leaf_size;
            rec.batch_size = eval.batch_size;
            rec.ranks = config.ranks;
            rec.seed = config.seed;

            std::vector<double> potentials;
            if (config.ranks > 1) {
                DistributedResult res = run_distributed(particles, config.ranks, eval, config.threads);
                potentials = std::move(res.potentials);
                rec.times = res.times;
                rec.interaction_counts = res.counts;
                std::vector<FetchRecord> stats;
                for (const FetchStats& f : res.fetch_stats)
                    stats.push_back({f.origin, f.owner, f.clusters, f.particles, f.moments,
                                     f.tree_records, f.bytes});
                rec.fetch_stats = std::move(stats);
            } else {
                TreecodeResult res = run_treecode(particles, particles, eval, config.threads);
                potentials = std::move(res.potentials);
                rec.times = res.times;
                rec.interaction_counts = res.counts;
            }

            if (config.verify && !sample.empty()) {
                std::vector<double> approx(sample.size());
                for (std::size_t k = 0; k < sample.size(); ++k)
                    approx[k] = potentials[sample[k]];
                rec.error = ErrorEstimate{relative_error(reference, approx), sample.size()};
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace bltc
