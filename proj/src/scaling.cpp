#include "qkr/scaling.hpp"

#include <algorithm>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qkr/pclassical.hpp"
#include "qkr/textio.hpp"

namespace qkr {

namespace {

void check_level(double L)
{
    if (!(L >= 0.0 && L <= 2.0)) {
        throw ParameterError("noise level L must lie in [0, 2]");
    }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n)
{
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
}

}  // namespace

double resonance_peak_energy(double k, int t, double L)
{
    check_level(L);
    if (t < 0) {
        throw ParameterError("kick count must be non-negative");
    }
    return 0.25 * k * k * t * (1.0 + L * L / 12.0);
}

double scaling_variable(double k, int t, double epsilon)
{
    return t * std::sqrt(k * std::abs(epsilon));
}

Topology classify_topology(double theta0, double J0, double k, double epsilon)
{
    if (epsilon == 0.0) {
        throw ParameterError("topology is undefined at eps = 0");
    }
    const double kick = k * std::abs(epsilon);
    const double dJ = wrap_angle(J0 + kPi) - kPi;
    const double pendulum = 0.5 * dJ * dJ + kick * std::cos(theta0);
    return pendulum < kick ? Topology::librating : Topology::rotating;
}

double rotating_weight_change(double L)
{
    check_level(L);
    return L / (8.0 * kPi);
}

double ScalingTable::reconstructed(std::size_t i) const
{
    return 1.0 - phi0[i] + 4.0 / (kPi * x[i]) * G[i];
}

ScalingTable tabulate_phi0_G(const TabulationOptions& options)
{
    if (!(options.eps_ref > 0.0) || !(options.k_ref > 0.0)) {
        throw ParameterError("tabulation needs eps_ref > 0 and k_ref > 0");
    }
    if (options.ensemble_size < 1) {
        throw ParameterError("tabulation ensemble must be non-empty");
    }
    auto grid = options.x_grid.empty()
                    ? log_grid(options.x_min, options.x_max, options.grid_points)
                    : options.x_grid;
    std::sort(grid.begin(), grid.end());

    ScalingTable table;
    table.eps_ref = options.eps_ref;
    table.k_ref = options.k_ref;
    table.ell = options.ell;
    table.ensemble_size = options.ensemble_size;
    table.seed = options.seed;

    const double root = std::sqrt(options.k_ref * options.eps_ref);
    SystemParams params{options.k_ref, 0, options.ell, options.eps_ref};
    const InitialEnsemble ensemble{EnsembleMode::theory_uniform, options.ensemble_size,
                                   0.0, BetaSampling::stratified};
    const auto ics = sample_initial_conditions(ensemble, params, options.seed);
    std::vector<bool> librating(ics.size());
    std::vector<double> J0(ics.size());
    std::vector<MapState> current(ics.size());
    for (std::size_t i = 0; i < ics.size(); ++i) {
        librating[i] = classify_topology(ics[i].theta0, ics[i].J0, options.k_ref,
                                         options.eps_ref) == Topology::librating;
        J0[i] = ics[i].J0;
        current[i] = {ics[i].theta0, ics[i].J0};
    }
    const NoiseModel quiet(0.0, options.seed);
    const double scale = 1.0 / (2.0 * options.eps_ref * options.eps_ref);

    // Noise-free, so advancing from the previous grid point is the same as
    // starting over from the initial conditions.
    int previous_t = 0;
    for (const double requested : grid) {
        const auto t = static_cast<int>(std::lround(requested / root));
        if (t < 1) {
            table.warnings.push_back("x = " + format_double(requested) +
                                     " needs fewer than one kick; dropped");
            continue;
        }
        if (t <= previous_t) {
            table.warnings.push_back("x = " + format_double(requested) +
                                     " repeats t = " + std::to_string(t) + "; dropped");
            continue;
        }
        params.t = t - previous_t;
        const auto records =
            evolve_ensemble(MapEnsemble(std::move(current)), params, quiet, params.t);
        current = records.final;
        previous_t = t;

        std::vector<double> energies(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            const double d = current[i].J - J0[i];
            energies[i] = scale * d * d;
        }
        const double norm =
            static_cast<double>(energies.size()) * 0.25 * options.k_ref * options.k_ref * t;
        double rot = 0.0;
        double lib = 0.0;
        for (std::size_t i = 0; i < energies.size(); ++i) {
            (librating[i] ? lib : rot) += energies[i];
        }
        const auto stats = mean_and_stderr(energies);
        const double x = t * root;
        const double resonant = 0.25 * options.k_ref * options.k_ref * t;
        table.x.push_back(x);
        table.kicks.push_back(t);
        table.phi0.push_back(1.0 - rot / norm);
        table.G.push_back(kPi * x / 4.0 * (lib / norm));
        table.ratio.push_back(stats.mean / resonant);
        table.ratio_std_error.push_back(stats.std_error / resonant);
    }
    for (const auto& w : table.warnings) {
        std::clog << "tabulate: " << w << '\n';
    }
    return table;
}

ScalingFunction::ScalingFunction(const ScalingTable& table)
{
    if (table.size() < 2) {
        throw ParameterError("a scaling table needs at least two grid points");
    }
    std::vector<double> log_x(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        log_x[i] = std::log(table.x[i]);
    }
    x_min_ = table.x.front();
    x_max_ = table.x.back();
    phi0_ = MonotoneCubic(log_x, table.phi0);
    G_ = MonotoneCubic(log_x, table.G);
}

namespace {

void check_range(const ScalingFunction& f, double x)
{
    if (!f.in_range(x)) {
        throw RangeError("x = " + format_double(x) + " outside tabulated range [" +
                         format_double(f.x_min()) + ", " + format_double(f.x_max()) +
                         "]");
    }
}

}  // namespace

double ScalingFunction::phi0(double x) const
{
    check_range(*this, x);
    return phi0_(std::log(x));
}

double ScalingFunction::G(double x) const
{
    check_range(*this, x);
    return G_(std::log(x));
}

double ScalingFunction::H(double x) const
{
    return 1.0 - phi0(x) + 4.0 / (kPi * x) * G(x);
}

double ScalingFunction::H_noisy(double x, double L) const
{
    check_level(L);
    return 1.0 + L * L / 12.0 - (1.0 - L / (8.0 * kPi)) * phi0(x) +
           4.0 / (kPi * x) * G(x);
}

double H_of_x(double x, const ScalingTable& table)
{
    return ScalingFunction(table).H(x);
}

double H_noisy(double x, double L, const ScalingTable& table)
{
    return ScalingFunction(table).H_noisy(x, L);
}

void write_scaling_table(std::ostream& out, const ScalingTable& table)
{
    write_meta(out, "format", ScalingTable::kFormat);
    write_meta(out, "version", std::to_string(ScalingTable::kVersion));
    write_meta(out, "eps_ref", format_double(table.eps_ref));
    write_meta(out, "k_ref", format_double(table.k_ref));
    write_meta(out, "ell", std::to_string(table.ell));
    write_meta(out, "ensemble_size", std::to_string(table.ensemble_size));
    write_meta(out, "seed", std::to_string(table.seed));
    out << "x,t,phi0,G,ratio,ratio_std_error\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << format_double(table.x[i]) << ',' << table.kicks[i] << ','
            << format_double(table.phi0[i]) << ',' << format_double(table.G[i]) << ','
            << format_double(table.ratio[i]) << ','
            << format_double(table.ratio_std_error[i]) << '\n';
    }
}

ScalingTable read_scaling_table(std::istream& in)
{
    const auto text = read_delimited(in);
    if (text.require_meta("format") != ScalingTable::kFormat) {
        throw FormatError("not a scaling table");
    }
    if (parse_integer(text.require_meta("version")) != ScalingTable::kVersion) {
        throw FormatError("unsupported scaling table version");
    }
    ScalingTable table;
    table.eps_ref = parse_double(text.require_meta("eps_ref"));
    table.k_ref = parse_double(text.require_meta("k_ref"));
    table.ell = static_cast<int>(parse_integer(text.require_meta("ell")));
    table.ensemble_size =
        static_cast<std::size_t>(parse_integer(text.require_meta("ensemble_size")));
    table.seed = std::stoull(text.require_meta("seed"));
    const auto cx = text.column("x");
    const auto ct = text.column("t");
    const auto cp = text.column("phi0");
    const auto cg = text.column("G");
    const auto cr = text.column("ratio");
    const auto ce = text.column("ratio_std_error");
    for (const auto& row : text.rows) {
        table.x.push_back(parse_double(row[cx]));
        table.kicks.push_back(static_cast<int>(parse_integer(row[ct])));
        table.phi0.push_back(parse_double(row[cp]));
        table.G.push_back(parse_double(row[cg]));
        table.ratio.push_back(parse_double(row[cr]));
        table.ratio_std_error.push_back(parse_double(row[ce]));
    }
    return table;
}

void save_scaling_table(const std::string& path, const ScalingTable& table)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    write_scaling_table(out, table);
}

ScalingTable load_scaling_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    return read_scaling_table(in);
}

}  // namespace qkr
