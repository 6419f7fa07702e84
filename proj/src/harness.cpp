#include "qkr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qkr/parallel.hpp"
#include "qkr/pclassical.hpp"
#include "qkr/philox.hpp"

namespace qkr {

namespace {

enum SeedPurpose : std::uint32_t {
    kInitialPurpose = 0,
    kNoisePurpose = 1,
    kSamplingPurpose = 2,
    kClassicalPurpose = 3,
};

std::uint64_t derive_seed(std::uint64_t master, int shot, SeedPurpose purpose)
{
    const PhiloxCounter ctr{static_cast<std::uint32_t>(shot),
                            static_cast<std::uint32_t>(Stream::shot), purpose, 0};
    const PhiloxKey key{static_cast<std::uint32_t>(master),
                        static_cast<std::uint32_t>(master >> 32)};
    const auto out = philox4x32_10(ctr, key);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string join_doubles(const std::vector<double>& values)
{
    std::vector<std::string> parts;
    parts.reserve(values.size());
    for (double v : values) {
        parts.push_back(format_double(v));
    }
    return join(parts);
}

std::string join_ints(const std::vector<int>& values)
{
    std::vector<std::string> parts;
    parts.reserve(values.size());
    for (int v : values) {
        parts.push_back(std::to_string(v));
    }
    return join(parts);
}

std::vector<double> linspace(double first, double last, long long count)
{
    std::vector<double> out;
    if (count <= 0) {
        return out;
    }
    if (count == 1) {
        return {first};
    }
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        out.push_back(first + (last - first) * static_cast<double>(i) /
                                  static_cast<double>(count - 1));
    }
    // the symmetric grid should hit 0 exactly, not 1e-17
    for (auto& v : out) {
        if (std::abs(v) < 1e-14 * std::max(std::abs(first), std::abs(last))) {
            v = 0.0;
        }
    }
    return out;
}

EnsembleMode parse_ensemble(const std::string& text)
{
    if (text == "theory") {
        return EnsembleMode::theory_uniform;
    }
    if (text == "experiment") {
        return EnsembleMode::experiment_gaussian;
    }
    throw ConfigError("ensemble must be 'theory' or 'experiment', got '" + text + "'");
}

BetaSampling parse_beta_sampling(const std::string& text)
{
    if (text == "random") {
        return BetaSampling::random;
    }
    if (text == "stratified") {
        return BetaSampling::stratified;
    }
    throw ConfigError("beta_sampling must be 'random' or 'stratified', got '" + text + "'");
}

std::size_t checked_size(const Config& config, const std::string& key, std::size_t fallback)
{
    return static_cast<std::size_t>(config.get_unsigned(key, fallback));
}

int checked_int(const Config& config, const std::string& key, int fallback)
{
    const auto v = config.get_integer(key, fallback);
    if (v < -1000000000LL || v > 1000000000LL) {
        throw ConfigError("'" + key + "' out of range");
    }
    return static_cast<int>(v);
}

void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ConfigError(message);
    }
}

void require_finite(double value, const std::string& what)
{
    if (!std::isfinite(value)) {
        throw NumericalError(what + " is not finite");
    }
}

std::string hex16(std::uint64_t value)
{
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

}  // namespace

std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::filesystem::path default_output_dir()
{
    const char* value = std::getenv(kOutputDirVariable);
    if (value != nullptr && *value != '\0') {
        return value;
    }
    return ".";
}

std::string to_string(SweepKind kind)
{
    switch (kind) {
    case SweepKind::epsilon_scan:
        return "epsilon-scan";
    case SweepKind::scaling_collapse:
        return "scaling-collapse";
    case SweepKind::peak_vs_L:
        return "peak-vs-L";
    case SweepKind::phase_portrait:
        return "phase-portrait";
    case SweepKind::quantum_vs_classical:
        return "quantum-vs-classical";
    }
    return "unknown";
}

std::string to_string(Engine engine)
{
    return engine == Engine::quantum ? "quantum" : "pclassical";
}

SweepKind parse_sweep_kind(const std::string& text)
{
    for (auto kind : {SweepKind::epsilon_scan, SweepKind::scaling_collapse,
                      SweepKind::peak_vs_L, SweepKind::phase_portrait,
                      SweepKind::quantum_vs_classical}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw ConfigError("unknown sweep kind '" + text + "'");
}

Engine parse_engine(const std::string& text)
{
    if (text == "quantum") {
        return Engine::quantum;
    }
    if (text == "pclassical") {
        return Engine::pclassical;
    }
    throw ConfigError("engine must be 'quantum' or 'pclassical', got '" + text + "'");
}

SweepSpec SweepSpec::defaults(SweepKind kind)
{
    SweepSpec spec;
    spec.kind = kind;
    switch (kind) {
    case SweepKind::epsilon_scan:
        spec.epsilon = linspace(-0.2, 0.2, 41);
        break;
    case SweepKind::scaling_collapse:
        spec.engine = Engine::pclassical;
        spec.random.points = 200;
        break;
    case SweepKind::peak_vs_L:
        spec.L = {0.0, 0.5, 1.0, 1.5, 2.0};
        break;
    case SweepKind::phase_portrait:
        break;
    case SweepKind::quantum_vs_classical:
        spec.epsilon = {0.005, 0.02, 0.05};
        spec.L = {0.0, 1.5};
        spec.t = {50};
        spec.n_beta = 4000;
        break;
    }
    return spec;
}

const std::vector<std::string>& sweep_config_keys()
{
    static const std::vector<std::string> keys{
        "engine", "k",        "epsilon", "eps_min",      "eps_max",       "eps_count",
        "t",      "L",        "ell",     "points",       "k_min",         "k_max",
        "t_min",  "t_max",    "n_beta",  "n_traj",       "ensemble",      "sigma_p",
        "beta_sampling",      "k_jitter", "shots",       "start_grid",    "seed"};
    return keys;
}

SweepSpec SweepSpec::from_config(SweepKind kind, const Config& config)
{
    SweepSpec spec = defaults(kind);
    if (auto engine = config.find("engine")) {
        spec.engine = parse_engine(*engine);
    }
    spec.k = config.get_doubles("k", spec.k);
    spec.t = config.get_integers("t", spec.t);
    spec.L = config.get_doubles("L", spec.L);
    spec.ell = checked_int(config, "ell", spec.ell);

    spec.random.points = checked_size(config, "points", spec.random.points);
    spec.random.k_min = config.get_double("k_min", spec.random.k_min);
    spec.random.k_max = config.get_double("k_max", spec.random.k_max);
    spec.random.t_min = checked_int(config, "t_min", spec.random.t_min);
    spec.random.t_max = checked_int(config, "t_max", spec.random.t_max);

    const bool random_mode = kind == SweepKind::scaling_collapse && spec.random.points > 0;
    if (random_mode) {
        spec.random.eps_min = config.get_double("eps_min", spec.random.eps_min);
        spec.random.eps_max = config.get_double("eps_max", spec.random.eps_max);
        if (config.has("epsilon") || config.has("eps_count")) {
            throw ConfigError("epsilon lists are not used when points > 0");
        }
    } else if (config.has("epsilon")) {
        if (config.has("eps_min") || config.has("eps_max") || config.has("eps_count")) {
            throw ConfigError("give either 'epsilon' or 'eps_min/eps_max/eps_count'");
        }
        spec.epsilon = config.get_doubles("epsilon", {});
    } else if (config.has("eps_min") || config.has("eps_max") || config.has("eps_count")) {
        const bool have_grid = spec.epsilon.size() > 1;
        const double lo = config.get_double("eps_min", have_grid ? spec.epsilon.front() : -0.2);
        const double hi = config.get_double("eps_max", have_grid ? spec.epsilon.back() : 0.2);
        const auto count = config.get_integer(
            "eps_count", have_grid ? static_cast<long long>(spec.epsilon.size()) : 41);
        require(count >= 0, "eps_count must be >= 0");
        require(hi >= lo, "eps_max must be >= eps_min");
        spec.epsilon = linspace(lo, hi, count);
    }

    spec.n_beta = checked_size(config, "n_beta", spec.n_beta);
    spec.n_traj = checked_size(config, "n_traj", spec.n_traj);
    if (auto mode = config.find("ensemble")) {
        spec.ensemble = parse_ensemble(*mode);
    }
    spec.sigma_p = config.get_double("sigma_p", spec.sigma_p);
    if (auto sampling = config.find("beta_sampling")) {
        spec.beta_sampling = parse_beta_sampling(*sampling);
    }
    spec.k_jitter = config.get_double("k_jitter", spec.k_jitter);
    spec.shots = checked_int(config, "shots", spec.shots);
    spec.start_grid = checked_size(config, "start_grid", spec.start_grid);
    spec.seed = config.get_unsigned("seed", spec.seed);
    spec.validate();
    return spec;
}

void SweepSpec::validate() const
{
    require(kind != SweepKind::phase_portrait,
            "phase-portrait runs are configured with PortraitSpec, not a sweep");
    for (double v : k) {
        require(std::isfinite(v) && v > 0.0, "every k must be positive and finite");
    }
    for (int v : t) {
        require(v >= 1, "every t must be >= 1");
    }
    for (double v : L) {
        require(v >= 0.0 && v <= 2.0, "every L must lie in [0, 2]");
    }
    require(ell >= 1, "ell must be >= 1");
    for (double v : epsilon) {
        require(std::isfinite(v) && kTwoPi * ell + v > 0.0,
                "every epsilon must be finite with tau = 2 pi ell + eps > 0");
    }
    if (random.points > 0) {
        require(kind == SweepKind::scaling_collapse,
                "random sampling is only defined for scaling-collapse sweeps");
        require(random.k_min > 0.0 && random.k_min <= random.k_max &&
                    std::isfinite(random.k_max),
                "need 0 < k_min <= k_max");
        require(random.eps_min > 0.0 && random.eps_min <= random.eps_max &&
                    std::isfinite(random.eps_max),
                "need 0 < eps_min <= eps_max");
        require(random.t_min >= 1 && random.t_min <= random.t_max,
                "need 1 <= t_min <= t_max");
    }
    require(n_beta >= 1, "n_beta must be >= 1");
    require(n_traj >= 1, "n_traj must be >= 1");
    require(std::isfinite(sigma_p) && sigma_p >= 0.0, "sigma_p must be >= 0");
    require(k_jitter >= 0.0 && k_jitter < 2.0, "k_jitter must lie in [0, 2)");
    require(shots >= 1, "shots must be >= 1");
    require(start_grid >= 2 && start_grid <= kMaxGridSize &&
                (start_grid & (start_grid - 1)) == 0,
            "start_grid must be a power of two in [2, " + std::to_string(kMaxGridSize) + "]");
}

std::vector<std::pair<std::string, std::string>> SweepSpec::canonical() const
{
    return {
        {"kind", to_string(kind)},
        {"engine", to_string(engine)},
        {"k", join_doubles(k)},
        {"epsilon", random.points > 0 ? "" : join_doubles(epsilon)},
        {"t", join_ints(t)},
        {"L", join_doubles(L)},
        {"ell", std::to_string(ell)},
        {"points", std::to_string(random.points)},
        {"k_min", format_double(random.k_min)},
        {"k_max", format_double(random.k_max)},
        {"eps_min", format_double(random.eps_min)},
        {"eps_max", format_double(random.eps_max)},
        {"t_min", std::to_string(random.t_min)},
        {"t_max", std::to_string(random.t_max)},
        {"n_beta", std::to_string(n_beta)},
        {"n_traj", std::to_string(n_traj)},
        {"ensemble", to_string(ensemble)},
        {"sigma_p", format_double(sigma_p)},
        {"beta_sampling", to_string(beta_sampling)},
        {"k_jitter", format_double(k_jitter)},
        {"shots", std::to_string(shots)},
        {"start_grid", std::to_string(start_grid)},
        {"seed", std::to_string(seed)},
    };
}

std::string SweepSpec::hash() const
{
    std::string text;
    for (const auto& [key, value] : canonical()) {
        if (key == "seed") {
            continue;
        }
        text += key + " = " + value + "\n";
    }
    return hex16(fnv1a(text));
}

std::vector<SweepPoint> expand_sweep(const SweepSpec& spec)
{
    std::vector<SweepPoint> points;
    if (spec.random.points > 0) {
        const NoiseModel source(0.0, derive_seed(spec.seed, 0, kSamplingPurpose));
        const double log_lo = std::log(spec.random.eps_min);
        const double log_span = std::log(spec.random.eps_max) - log_lo;
        const int t_count = spec.random.t_max - spec.random.t_min + 1;
        std::vector<SweepPoint> triples(spec.random.points);
        for (std::size_t j = 0; j < triples.size(); ++j) {
            const auto [u_k, u_eps] = source.uniform_pair(Stream::sweep_sampling, j, 0);
            const double u_t = source.uniform(Stream::sweep_sampling, j, 1);
            auto& p = triples[j];
            p.k = spec.random.k_min + (spec.random.k_max - spec.random.k_min) * u_k;
            p.epsilon = std::exp(log_lo + log_span * u_eps);
            p.t = spec.random.t_min +
                  std::min(t_count - 1, static_cast<int>(u_t * t_count));
        }
        for (double L : spec.L) {
            for (auto p : triples) {
                p.L = L;
                p.index = points.size();
                points.push_back(p);
            }
        }
        return points;
    }
    for (double L : spec.L) {
        for (double k : spec.k) {
            for (int t : spec.t) {
                for (double eps : spec.epsilon) {
                    points.push_back({points.size(), k, eps, t, L});
                }
            }
        }
    }
    return points;
}

ShotSeeds shot_seeds(std::uint64_t master_seed, int shot)
{
    return {derive_seed(master_seed, shot, kInitialPurpose),
            derive_seed(master_seed, shot, kNoisePurpose)};
}

namespace {

InitialEnsemble ensemble_of(const SweepSpec& spec, std::size_t size)
{
    return {spec.ensemble, size, spec.sigma_p, spec.beta_sampling};
}

MeanError classical_energy(const SweepSpec& spec, const SystemParams& params,
                           const NoiseModel& noise, std::uint64_t ic_seed,
                           std::size_t crn_fibers, double& initial_energy)
{
    const auto ics = sample_initial_conditions(ensemble_of(spec, spec.n_traj), params, ic_seed);
    std::vector<double> e0(ics.size());
    for (std::size_t i = 0; i < ics.size(); ++i) {
        const double p = ics[i].n0 + ics[i].beta;
        e0[i] = 0.5 * p * p;
    }
    initial_energy = mean_and_stderr(e0).mean;

    // noise substream of the quantum fiber whose beta stratum holds the
    // trajectory, so both engines see the same kick sequences
    std::vector<std::uint64_t> ids(ics.size());
    for (std::size_t i = 0; i < ics.size(); ++i) {
        ids[i] = crn_fibers > 0
                     ? std::min<std::uint64_t>(
                           crn_fibers - 1,
                           static_cast<std::uint64_t>(ics[i].beta * static_cast<double>(crn_fibers)))
                     : i;
    }

    if (params.epsilon != 0.0) {
        std::vector<MapState> states;
        states.reserve(ics.size());
        for (const auto& ic : ics) {
            states.push_back({ic.theta0, ic.J0});
        }
        const MapEnsemble ensemble(std::move(states), std::move(ids));
        const auto records = evolve_ensemble(ensemble, params, noise, params.t);
        return ensemble_energy(records, params.epsilon);
    }

    std::vector<double> energies(ics.size());
    parallel_blocks(ics.size(), 1024, [&](std::size_t begin, std::size_t end) {
        std::vector<double> kicks(static_cast<std::size_t>(params.t));
        for (std::size_t i = begin; i < end; ++i) {
            const double k = params.k * noise.k_scale(ids[i]);
            for (int s = 0; s < params.t; ++s) {
                kicks[static_cast<std::size_t>(s)] =
                    k * (1.0 + noise.kick_factor(ids[i], static_cast<std::uint32_t>(s)));
            }
            energies[i] = resonance_limit_energy(ics[i].theta0, ics[i].J0, kicks);
        }
    });
    return mean_and_stderr(energies);
}

void finish_row(ResultRow& row)
{
    const auto& p = row.point;
    const double peak = resonance_peak_energy(p.k, p.t, 0.0);
    row.x = scaling_variable(p.k, p.t, p.epsilon);
    row.R = row.E / peak;
    row.R_std_error = row.E_std_error / peak;
    row.beyond_cutoff = std::abs(p.epsilon) > kPseudoClassicalCutoff;
}

}  // namespace

ResultRow evaluate_point(const SweepSpec& spec, const SweepPoint& point, int shot)
{
    const SystemParams params{point.k, point.t, spec.ell, point.epsilon};
    params.validate();
    ResultRow row;
    row.point = point;
    row.seeds = shot_seeds(spec.seed, shot);
    const NoiseModel noise(point.L, row.seeds.noise, spec.k_jitter);

    const bool quantum =
        spec.kind == SweepKind::quantum_vs_classical || spec.engine == Engine::quantum;
    if (quantum) {
        BetaAverageOptions options;
        options.ensemble = ensemble_of(spec, spec.n_beta);
        options.seed = row.seeds.initial_conditions;
        options.start_grid = spec.start_grid;
        const auto result = beta_average(params, noise, options);
        row.initial_energy = result.initial_energy;
        if (spec.kind == SweepKind::quantum_vs_classical) {
            row.E = result.displacement;
            row.E_std_error = result.displacement_std_error;
            row.E_kinetic = result.energy;
        } else {
            row.E = result.energy;
            row.E_std_error = result.std_error;
        }
    }
    if (spec.kind == SweepKind::quantum_vs_classical) {
        const bool crn = spec.ensemble == EnsembleMode::theory_uniform &&
                         spec.beta_sampling == BetaSampling::stratified;
        double e0 = 0.0;
        const auto classical =
            classical_energy(spec, params, noise,
                             derive_seed(spec.seed, shot, kClassicalPurpose),
                             crn ? spec.n_beta : 0, e0);
        row.E_classical = classical.mean;
        row.E_classical_std_error = classical.std_error;
        require_finite(row.E_classical, "classical energy");
        require_finite(row.E_kinetic, "quantum kinetic energy");
    } else if (!quantum) {
        const auto classical =
            classical_energy(spec, params, noise, row.seeds.initial_conditions, 0,
                             row.initial_energy);
        row.E = classical.mean;
        row.E_std_error = classical.std_error;
    }
    require_finite(row.E, "energy");
    finish_row(row);
    return row;
}

ResultTable run_sweep(const SweepSpec& spec)
{
    spec.validate();
    const auto points = expand_sweep(spec);
    ResultTable table{spec, std::vector<ResultRow>(points.size())};

    auto run_point = [&](std::size_t i) {
        if (spec.shots == 1) {
            table.rows[i] = evaluate_point(spec, points[i], 0);
            return;
        }
        std::vector<ResultRow> shots;
        for (int s = 0; s < spec.shots; ++s) {
            shots.push_back(evaluate_point(spec, points[i], s));
        }
        auto pick = [&](double ResultRow::*field) {
            std::vector<double> values;
            for (const auto& r : shots) {
                values.push_back(r.*field);
            }
            return shot_statistics(values);
        };
        ResultRow row = shots.front();
        const auto E = pick(&ResultRow::E);
        row.E = E.mean;
        row.E_std_error = E.std_error;
        row.initial_energy = pick(&ResultRow::initial_energy).mean;
        if (spec.kind == SweepKind::quantum_vs_classical) {
            row.E_kinetic = pick(&ResultRow::E_kinetic).mean;
            const auto C = pick(&ResultRow::E_classical);
            row.E_classical = C.mean;
            row.E_classical_std_error = C.std_error;
        }
        finish_row(row);
        table.rows[i] = row;
    };

    // Points in parallel when there are enough of them; otherwise each point
    // parallelises internally. Either way every row depends only on its
    // point and the seeds.
    if (worker_count() > 1 && points.size() >= static_cast<std::size_t>(worker_count())) {
        parallel_for(points.size(), run_point);
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) {
            run_point(i);
        }
    }
    return table;
}

ResultTable run_sweep(SweepSpec spec, std::uint64_t seed)
{
    spec.seed = seed;
    return run_sweep(spec);
}

namespace {

const std::vector<std::string>& provenance_columns()
{
    static const std::vector<std::string> columns{
        "kind",     "engine",        "k",        "epsilon", "t",           "L",
        "ell",      "ensemble",      "ensemble_size",       "sigma_p",     "beta_sampling",
        "shots",    "master_seed",   "ic_seed",  "noise_seed"};
    return columns;
}

const std::vector<std::string>& numeric_columns()
{
    static const std::vector<std::string> columns{
        "k", "epsilon", "t", "L", "ell", "ensemble_size", "sigma_p", "shots",
        "master_seed", "ic_seed", "noise_seed", "x", "E", "R"};
    return columns;
}

}  // namespace

void write_result_table(std::ostream& out, const ResultTable& table)
{
    const auto& spec = table.spec;
    const bool qvc = spec.kind == SweepKind::quantum_vs_classical;
    write_meta(out, "format", kSweepFormat);
    write_meta(out, "schema_version", std::to_string(kSchemaVersion));
    write_meta(out, "spec_hash", spec.hash());
    write_meta(out, "seed", std::to_string(spec.seed));
    write_meta(out, "rows", std::to_string(table.rows.size()));
    for (const auto& [key, value] : spec.canonical()) {
        write_meta(out, "spec." + key, value);
    }
    std::vector<std::string> columns{
        "index", "kind", "engine", "k", "epsilon", "t", "L", "ell", "x", "E", "E_std_error",
        "R", "R_std_error", "E0", "beyond_cutoff", "ensemble", "ensemble_size", "sigma_p",
        "beta_sampling", "shots", "master_seed", "ic_seed", "noise_seed"};
    if (qvc) {
        for (const char* c : {"E_kinetic", "E_classical", "E_classical_std_error",
                              "relative_difference", "n_traj"}) {
            columns.emplace_back(c);
        }
    }
    out << join(columns) << '\n';

    const std::string engine = qvc ? "quantum+pclassical" : to_string(spec.engine);
    const std::size_t size =
        qvc || spec.engine == Engine::quantum ? spec.n_beta : spec.n_traj;
    for (const auto& row : table.rows) {
        const auto& p = row.point;
        std::vector<std::string> f{
            std::to_string(p.index),
            to_string(spec.kind),
            engine,
            format_double(p.k),
            format_double(p.epsilon),
            std::to_string(p.t),
            format_double(p.L),
            std::to_string(spec.ell),
            format_double(row.x),
            format_double(row.E),
            format_double(row.E_std_error),
            format_double(row.R),
            format_double(row.R_std_error),
            format_double(row.initial_energy),
            row.beyond_cutoff ? "1" : "0",
            to_string(spec.ensemble),
            std::to_string(size),
            format_double(spec.sigma_p),
            to_string(spec.beta_sampling),
            std::to_string(spec.shots),
            std::to_string(spec.seed),
            std::to_string(row.seeds.initial_conditions),
            std::to_string(row.seeds.noise)};
        if (qvc) {
            f.push_back(format_double(row.E_kinetic));
            f.push_back(format_double(row.E_classical));
            f.push_back(format_double(row.E_classical_std_error));
            f.push_back(format_double((row.E - row.E_classical) / row.E_classical));
            f.push_back(std::to_string(spec.n_traj));
        }
        out << join(f) << '\n';
    }
}

void validate_result_table(const DelimitedText& text)
{
    auto meta = [&](const std::string& key) -> const std::string& {
        auto it = text.meta.find(key);
        if (it == text.meta.end() || it->second.empty()) {
            throw SchemaError("sweep file lacks header entry '" + key + "'");
        }
        return it->second;
    };
    if (meta("format") != kSweepFormat) {
        throw SchemaError("not a sweep file (format '" + meta("format") + "')");
    }
    if (meta("schema_version") != std::to_string(kSchemaVersion)) {
        throw SchemaError("unsupported schema version " + meta("schema_version"));
    }
    const auto& hash = meta("spec_hash");
    if (hash.size() != 16 || hash.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw SchemaError("malformed spec_hash '" + hash + "'");
    }
    const auto& seed = meta("seed");

    for (const auto* list : {&provenance_columns(), &numeric_columns()}) {
        for (const auto& name : *list) {
            if (!text.has_column(name)) {
                throw SchemaError("sweep file lacks column '" + name + "'");
            }
        }
    }
    const auto master = text.column("master_seed");
    for (std::size_t r = 0; r < text.rows.size(); ++r) {
        const auto& row = text.rows[r];
        for (const auto& name : provenance_columns()) {
            if (row[text.column(name)].empty()) {
                throw SchemaError("row " + std::to_string(r) + " lacks provenance '" + name +
                                  "'");
            }
        }
        for (const auto& name : numeric_columns()) {
            try {
                (void)parse_double(row[text.column(name)]);
            } catch (const FormatError&) {
                throw SchemaError("row " + std::to_string(r) + ": bad value in '" + name +
                                  "'");
            }
        }
        if (row[master] != seed) {
            throw SchemaError("row " + std::to_string(r) +
                              " master_seed disagrees with the header seed");
        }
    }
}

DelimitedText read_result_table(std::istream& in)
{
    auto text = read_delimited(in);
    validate_result_table(text);
    return text;
}

MeanError shot_statistics(std::span<const double> shots)
{
    if (shots.size() < 2) {
        throw ParameterError("shot statistics need n >= 2 shots, got " +
                             std::to_string(shots.size()));
    }
    for (double v : shots) {
        if (!std::isfinite(v)) {
            throw NumericalError("non-finite shot value");
        }
    }
    return mean_and_stderr(shots);
}

// ---------------------------------------------------------------------------

void ExperimentRecord::validate() const
{
    if (sigma_p && !(std::isfinite(*sigma_p) && *sigma_p >= 0.0)) {
        throw ParameterError("sigma_p must be finite and >= 0");
    }
    for (const auto& p : points) {
        if (!std::isfinite(p.E) || !std::isfinite(p.epsilon) || !std::isfinite(p.L) ||
            !std::isfinite(p.E_std_error)) {
            throw ParameterError("experiment record holds non-finite values");
        }
    }
}

ExperimentRecord read_experiment_record(std::istream& in)
{
    const auto text = read_delimited(in);
    if (auto it = text.meta.find("format");
        it != text.meta.end() && it->second != kExperimentFormat) {
        throw SchemaError("not an experiment record (format '" + it->second + "')");
    }
    ExperimentRecord record;
    std::optional<int> ell;
    for (const auto& key : text.meta_order) {
        const auto& value = text.meta.at(key);
        if (key == "format" || key == "version") {
            continue;
        }
        if (key == "sigma_p") {
            record.sigma_p = parse_double(value);
        } else if (key == "k") {
            record.k = parse_double(value);
        } else if (key == "k_uncertainty") {
            record.k_uncertainty = parse_double(value);
        } else if (key == "t") {
            record.t = static_cast<int>(parse_integer(value));
        } else if (key == "ell") {
            ell = static_cast<int>(parse_integer(value));
            record.ell = *ell;
        } else {
            record.metadata.emplace_back(key, value);
        }
    }
    const bool has_eps = text.has_column("epsilon");
    if (!has_eps && !text.has_column("tau")) {
        throw SchemaError("experiment record needs an 'epsilon' or 'tau' column");
    }
    const auto c_x = text.column(has_eps ? "epsilon" : "tau");
    const auto c_E = text.column("E");
    for (const auto& row : text.rows) {
        ExperimentPoint p;
        const double v = parse_double(row[c_x]);
        if (has_eps) {
            p.epsilon = v;
        } else {
            const int order = ell ? *ell : static_cast<int>(std::lround(v / kTwoPi));
            p.epsilon = v - kTwoPi * order;
        }
        p.E = parse_double(row[c_E]);
        if (text.has_column("L")) {
            p.L = parse_double(row[text.column("L")]);
        }
        if (text.has_column("E_std_error")) {
            p.E_std_error = parse_double(row[text.column("E_std_error")]);
        }
        if (text.has_column("shots")) {
            p.shots = static_cast<int>(parse_integer(row[text.column("shots")]));
        }
        record.points.push_back(p);
    }
    record.validate();
    return record;
}

void write_experiment_record(std::ostream& out, const ExperimentRecord& record)
{
    write_meta(out, "format", kExperimentFormat);
    write_meta(out, "version", std::to_string(kSchemaVersion));
    if (record.sigma_p) {
        write_meta(out, "sigma_p", format_double(*record.sigma_p));
    }
    write_meta(out, "k", format_double(record.k));
    write_meta(out, "k_uncertainty", format_double(record.k_uncertainty));
    write_meta(out, "t", std::to_string(record.t));
    write_meta(out, "ell", std::to_string(record.ell));
    for (const auto& [key, value] : record.metadata) {
        write_meta(out, key, value);
    }
    out << "epsilon,L,E,E_std_error,shots\n";
    for (const auto& p : record.points) {
        out << format_double(p.epsilon) << ',' << format_double(p.L) << ','
            << format_double(p.E) << ',' << format_double(p.E_std_error) << ',' << p.shots
            << '\n';
    }
}

RescaleResult rescale_experimental(const ExperimentRecord& record, double k, int t,
                                   double peak_reference, const RescaleOptions& options)
{
    if (!record.sigma_p) {
        throw ConfigError(
            "experiment record has no sigma_p; the initial energy cannot be subtracted");
    }
    if (!(peak_reference > 0.0) || !std::isfinite(peak_reference)) {
        throw ParameterError("peak_reference must be positive");
    }
    if (!(k > 0.0) || t < 1) {
        throw ParameterError("rescaling needs k > 0 and t >= 1");
    }
    record.validate();
    const double baseline = 0.25 * *record.sigma_p * *record.sigma_p + options.offset_correction;
    RescaleResult result;
    for (const auto& p : record.points) {
        if (std::abs(p.epsilon) > kPseudoClassicalCutoff) {
            ++result.dropped;
            continue;
        }
        ScaledPoint s;
        s.epsilon = p.epsilon;
        s.L = p.L;
        s.k = k;
        s.t = t;
        s.x = scaling_variable(k, t, p.epsilon);
        s.R = (p.E - baseline) / peak_reference;
        s.R_std_error = p.E_std_error / peak_reference;
        result.points.push_back(s);
    }
    return result;
}

double peak_reference_from_record(const ExperimentRecord& record,
                                  const RescaleOptions& options)
{
    if (!record.sigma_p) {
        throw ConfigError("experiment record has no sigma_p");
    }
    const double baseline = 0.25 * *record.sigma_p * *record.sigma_p + options.offset_correction;
    double peak = -1.0;
    bool found = false;
    for (const auto& p : record.points) {
        if (p.L == 0.0 && std::abs(p.epsilon) <= kPseudoClassicalCutoff) {
            peak = found ? std::max(peak, p.E - baseline) : p.E - baseline;
            found = true;
        }
    }
    if (!found || !(peak > 0.0)) {
        throw ParameterError("no L = 0 point above the initial energy to use as peak reference");
    }
    return peak;
}

void write_scaled_points(std::ostream& out, const RescaleResult& result,
                         const ExperimentRecord& record, double peak_reference,
                         const RescaleOptions& options)
{
    write_meta(out, "format", kScaledFormat);
    write_meta(out, "schema_version", std::to_string(kSchemaVersion));
    write_meta(out, "sigma_p", record.sigma_p ? format_double(*record.sigma_p) : "");
    write_meta(out, "peak_reference", format_double(peak_reference));
    write_meta(out, "offset_correction", format_double(options.offset_correction));
    write_meta(out, "k_uncertainty", format_double(record.k_uncertainty));
    write_meta(out, "dropped_beyond_cutoff", std::to_string(result.dropped));
    for (const auto& [key, value] : record.metadata) {
        write_meta(out, "source." + key, value);
    }
    out << "epsilon,L,k,t,x,R,R_std_error\n";
    for (const auto& p : result.points) {
        out << format_double(p.epsilon) << ',' << format_double(p.L) << ','
            << format_double(p.k) << ',' << p.t << ',' << format_double(p.x) << ','
            << format_double(p.R) << ',' << format_double(p.R_std_error) << '\n';
    }
}

SyntheticExport export_synthetic(const SyntheticOptions& options)
{
    if (!(options.momentum_std > 0.0)) {
        throw ParameterError("momentum_std must be positive");
    }
    SyntheticExport out;
    out.peak_reference = resonance_peak_energy(options.k, options.t, 0.0);
    auto& record = out.record;
    // mean initial energy <p^2>/2 = std^2/2 = sigma_p^2/4
    record.sigma_p = std::sqrt(2.0) * options.momentum_std;
    record.k = options.k;
    record.t = options.t;
    record.ell = options.ell;
    record.metadata = {{"source", "synthetic"},
                       {"momentum_std", format_double(options.momentum_std)},
                       {"n_beta", std::to_string(options.n_beta)},
                       {"seed", std::to_string(options.seed)}};

    const auto seeds = shot_seeds(options.seed, 0);
    const NoiseModel noise(options.L, seeds.noise);
    BetaAverageOptions average;
    average.ensemble = {EnsembleMode::experiment_gaussian, options.n_beta,
                        options.momentum_std, BetaSampling::random};
    average.seed = seeds.initial_conditions;
    for (double eps : options.epsilon) {
        const SystemParams params{options.k, options.t, options.ell, eps};
        const auto r = beta_average(params, noise, average);
        require_finite(r.final_energy, "synthetic energy");
        record.points.push_back({eps, options.L, r.final_energy, r.final_energy_std_error, 1});
        out.internal_R.push_back(r.energy / out.peak_reference);
        out.internal_R_std_error.push_back(r.std_error / out.peak_reference);
    }
    return out;
}

std::vector<ScaledPoint> scaled_points(const ResultTable& table)
{
    std::vector<ScaledPoint> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.push_back({row.point.epsilon, row.point.L, row.point.k, row.point.t, row.x, row.R,
                       row.R_std_error});
    }
    return out;
}

std::vector<ScaledPoint> scaled_points(const DelimitedText& text)
{
    auto it = text.meta.find("format");
    if (it == text.meta.end()) {
        throw SchemaError("table has no format header");
    }
    if (it->second == kSweepFormat) {
        validate_result_table(text);
    } else if (it->second == kScaledFormat) {
        for (const char* key : {"schema_version", "sigma_p", "peak_reference"}) {
            if (text.meta.count(key) == 0 || text.meta.at(key).empty()) {
                throw SchemaError(std::string("scaled file lacks header entry '") + key + "'");
            }
        }
    } else {
        throw SchemaError("cannot compare a '" + it->second + "' table");
    }
    for (const char* name : {"epsilon", "L", "k", "t", "x", "R"}) {
        if (!text.has_column(name)) {
            throw SchemaError(std::string("table lacks column '") + name + "'");
        }
    }
    const bool has_se = text.has_column("R_std_error");
    std::vector<ScaledPoint> out;
    for (const auto& row : text.rows) {
        ScaledPoint p;
        p.epsilon = parse_double(row[text.column("epsilon")]);
        p.L = parse_double(row[text.column("L")]);
        p.k = parse_double(row[text.column("k")]);
        p.t = static_cast<int>(parse_integer(row[text.column("t")]));
        p.x = parse_double(row[text.column("x")]);
        p.R = parse_double(row[text.column("R")]);
        p.R_std_error = has_se ? parse_double(row[text.column("R_std_error")]) : 0.0;
        out.push_back(p);
    }
    return out;
}

ResidualReport compare_to_scaling(std::span<const ScaledPoint> points,
                                  const ScalingFunction& scaling)
{
    ResidualReport report;
    std::map<double, ResidualSummary> summaries;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (std::abs(p.epsilon) > kPseudoClassicalCutoff) {
            ++report.skipped_beyond_cutoff;
            continue;
        }
        if (!scaling.in_range(p.x)) {
            ++report.skipped_out_of_range;
            continue;
        }
        Residual r{i, p.x, p.L, p.R, scaling.H_noisy(p.x, p.L), 0.0};
        r.residual = r.R - r.H;
        auto& s = summaries[p.L];
        s.L = p.L;
        ++s.count;
        s.max_abs = std::max(s.max_abs, std::abs(r.residual));
        s.mean_abs += std::abs(r.residual);
        report.rows.push_back(r);
    }
    for (auto& [L, s] : summaries) {
        s.mean_abs /= static_cast<double>(s.count);
        report.per_L.push_back(s);
    }
    return report;
}

ResidualReport compare_to_scaling(const ResultTable& table, const ScalingTable& scaling)
{
    const auto points = scaled_points(table);
    return compare_to_scaling(points, ScalingFunction(scaling));
}

void write_residual_report(std::ostream& out, const ResidualReport& report,
                           const std::vector<std::pair<std::string, std::string>>& meta)
{
    write_meta(out, "format", kResidualFormat);
    write_meta(out, "schema_version", std::to_string(kSchemaVersion));
    for (const auto& [key, value] : meta) {
        write_meta(out, key, value);
    }
    write_meta(out, "skipped_out_of_range", std::to_string(report.skipped_out_of_range));
    write_meta(out, "skipped_beyond_cutoff", std::to_string(report.skipped_beyond_cutoff));
    for (const auto& s : report.per_L) {
        write_meta(out, "summary.L=" + format_double(s.L),
                   "count=" + std::to_string(s.count) + " max_abs=" + format_double(s.max_abs) +
                       " mean_abs=" + format_double(s.mean_abs));
    }
    out << "index,L,x,R,H,residual\n";
    for (const auto& r : report.rows) {
        out << r.index << ',' << format_double(r.L) << ',' << format_double(r.x) << ','
            << format_double(r.R) << ',' << format_double(r.H) << ','
            << format_double(r.residual) << '\n';
    }
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& portrait_config_keys()
{
    static const std::vector<std::string> keys{
        "k",          "epsilon", "L",    "ell",           "theta_points",
        "J_points",   "iterations",      "seed",          "escape_samples",
        "escape_kicks"};
    return keys;
}

PortraitSpec PortraitSpec::from_config(const Config& config)
{
    PortraitSpec spec;
    spec.params.k = config.get_double("k", spec.params.k);
    spec.params.epsilon = config.get_double("epsilon", spec.params.epsilon);
    spec.params.ell = checked_int(config, "ell", spec.params.ell);
    spec.L = config.get_double("L", spec.L);
    spec.grid.theta_points = checked_int(config, "theta_points", spec.grid.theta_points);
    spec.grid.J_points = checked_int(config, "J_points", spec.grid.J_points);
    spec.grid.iterations = checked_int(config, "iterations", spec.grid.iterations);
    spec.params.t = spec.grid.iterations;
    spec.seed = config.get_unsigned("seed", spec.seed);
    spec.escape_samples = checked_size(config, "escape_samples", spec.escape_samples);
    spec.escape_kicks = checked_int(config, "escape_kicks", spec.escape_kicks);
    spec.validate();
    return spec;
}

void PortraitSpec::validate() const
{
    require(std::isfinite(params.k) && params.k > 0.0, "k must be positive");
    require(std::isfinite(params.epsilon), "epsilon must be finite");
    require(params.ell >= 1, "ell must be >= 1");
    require(L >= 0.0 && L <= 2.0, "L must lie in [0, 2]");
    require(grid.theta_points >= 1 && grid.J_points >= 1,
            "theta_points and J_points must be >= 1");
    require(grid.iterations >= 1, "iterations must be >= 1");
    require(escape_kicks >= 1, "escape_kicks must be >= 1");
    require(escape_samples == 0 || params.epsilon != 0.0,
            "escape statistics need epsilon != 0");
}

}  // namespace qkr
