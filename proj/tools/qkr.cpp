// qkr: command-line driver for resonance scans, noise sweeps, scaling
// collapse, phase portraits and experimental data ingestion.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "qkr/config.hpp"
#include "qkr/harness.hpp"
#include "qkr/parallel.hpp"
#include "qkr/pclassical.hpp"
#include "qkr/phasespace.hpp"
#include "qkr/quantum.hpp"
#include "qkr/scaling.hpp"

namespace fs = std::filesystem;
using namespace qkr;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigFailure = 2,
    kNumericalFailure = 3,
};

/// One subcommand: its config keys become --flags of the same name.
struct Command {
    CLI::App* app = nullptr;
    std::string name;
    std::vector<std::string> keys;
    std::map<std::string, std::string> flags;
    std::string config_file;
    std::function<void(const Config&, const fs::path&)> run;
};

const std::vector<std::string> kCommonKeys{"output", "output_dir"};

Config merged_config(const Command& command)
{
    Config config;
    if (!command.config_file.empty()) {
        config = Config::load(command.config_file);
    }
    for (const auto& [key, value] : config.entries()) {
        const bool known =
            std::find(command.keys.begin(), command.keys.end(), key) != command.keys.end() ||
            std::find(kCommonKeys.begin(), kCommonKeys.end(), key) != kCommonKeys.end();
        if (!known) {
            throw ConfigError("unknown key '" + key + "' for " + command.name);
        }
    }
    for (const auto& [key, value] : command.flags) {
        auto* option = command.app->get_option_no_throw("--" + key);
        if (option != nullptr && option->count() > 0) {
            config.set(key, value);
        }
    }
    return config;
}

fs::path output_path(const Config& config, const std::string& fallback_name)
{
    fs::path file = config.get_string("output", fallback_name);
    if (file.is_relative()) {
        const fs::path dir = config.has("output_dir") ? fs::path(config.get_string("output_dir", "."))
                                                      : default_output_dir();
        file = dir / file;
    }
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    return file;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

std::ifstream open_input(const Config& config, const std::string& key)
{
    const auto path = config.find(key);
    if (!path || path->empty()) {
        throw ConfigError("'" + key + "' is required");
    }
    std::ifstream in(*path);
    if (!in) {
        throw ConfigError("cannot open '" + *path + "'");
    }
    return in;
}

void run_sweep_command(SweepKind kind, const Config& config, const fs::path& path)
{
    const auto spec = SweepSpec::from_config(kind, config);
    const auto table = run_sweep(spec);
    auto out = open_output(path);
    write_result_table(out, table);
    std::size_t flagged = 0;
    for (const auto& row : table.rows) {
        flagged += row.beyond_cutoff ? 1 : 0;
    }
    std::cout << "wrote " << table.rows.size() << " rows to " << path.string();
    if (flagged > 0) {
        std::cout << " (" << flagged << " beyond |eps| = 0.15)";
    }
    std::cout << '\n';
    if (kind == SweepKind::quantum_vs_classical) {
        for (const auto& row : table.rows) {
            std::printf("eps %-8s L %-4s quantum %.5g classical %.5g diff %+.2f%%\n",
                        format_double(row.point.epsilon).c_str(),
                        format_double(row.point.L).c_str(), row.E, row.E_classical,
                        100.0 * (row.E - row.E_classical) / row.E_classical);
        }
    }
}

void run_portrait_command(const Config& config, const fs::path& path)
{
    const auto spec = PortraitSpec::from_config(config);
    const auto portrait = poincare_section(spec.params, spec.L, spec.grid, spec.seed);
    {
        auto out = open_output(path);
        write_portrait(out, portrait);
    }
    auto band_path = path;
    band_path.replace_filename(path.stem().string() + "_band" + path.extension().string());
    {
        auto out = open_output(band_path);
        write_band(out, smeared_band(spec.params.k, spec.params.epsilon, spec.L));
    }
    std::cout << "wrote " << portrait.orbits.size() << " orbits to " << path.string()
              << " and the separatrix band to " << band_path.string() << '\n';
    if (spec.escape_samples > 0) {
        const auto stats = escape_statistics(spec.params.k, spec.params.epsilon, spec.L,
                                             spec.escape_samples, spec.escape_kicks, spec.seed);
        std::printf("librating %zu of %zu, escaped %zu (fraction %.4f +- %.4f) in %d kicks\n",
                    stats.librating, stats.trajectories, stats.escaped, stats.escape_fraction,
                    stats.escape_std_error, spec.escape_kicks);
    }
}

void run_tabulate_command(const Config& config, const fs::path& path)
{
    TabulationOptions options;
    options.eps_ref = config.get_double("eps_ref", options.eps_ref);
    options.k_ref = config.get_double("k_ref", options.k_ref);
    options.ell = static_cast<int>(config.get_integer("ell", options.ell));
    options.ensemble_size = config.get_unsigned("ensemble_size", options.ensemble_size);
    options.grid_points = config.get_unsigned("grid_points", options.grid_points);
    options.x_min = config.get_double("x_min", options.x_min);
    options.x_max = config.get_double("x_max", options.x_max);
    options.seed = config.get_unsigned("seed", options.seed);
    if (!(options.x_min > 0.0 && options.x_max > options.x_min)) {
        throw ConfigError("need 0 < x_min < x_max");
    }
    if (options.grid_points < 2) {
        throw ConfigError("grid_points must be >= 2");
    }
    const auto table = tabulate_phi0_G(options);
    save_scaling_table(path.string(), table);
    std::cout << "wrote " << table.size() << " grid points to " << path.string() << '\n';
}

void run_ingest_command(const Config& config, const fs::path& path)
{
    auto in = open_input(config, "input");
    const auto record = read_experiment_record(in);
    const double k = config.get_double("k", record.k);
    const int t = static_cast<int>(config.get_integer("t", record.t));
    if (!(k > 0.0) || t < 1) {
        throw ConfigError("k and t must come from the record or the command line");
    }
    RescaleOptions options;
    options.offset_correction = config.get_double("offset_correction", 0.0);
    const double peak = config.has("peak_reference")
                            ? config.get_double("peak_reference", 0.0)
                            : peak_reference_from_record(record, options);
    const auto result = rescale_experimental(record, k, t, peak, options);
    auto out = open_output(path);
    write_scaled_points(out, result, record, peak, options);
    std::cout << "wrote " << result.points.size() << " scaled points to " << path.string()
              << "; dropped " << result.dropped << " with |eps| > 0.15\n";
}

void run_synthesize_command(const Config& config, const fs::path& path)
{
    SyntheticOptions options;
    options.k = config.get_double("k", options.k);
    options.t = static_cast<int>(config.get_integer("t", options.t));
    options.ell = static_cast<int>(config.get_integer("ell", options.ell));
    options.epsilon = config.get_doubles("epsilon", {-0.1, -0.05, 0.0, 0.05, 0.1, 0.2});
    options.L = config.get_double("L", options.L);
    options.momentum_std = config.get_double("momentum_std", options.momentum_std);
    options.n_beta = config.get_unsigned("n_beta", options.n_beta);
    options.seed = config.get_unsigned("seed", options.seed);
    if (!(options.k > 0.0) || options.t < 1 || options.ell < 1 || options.n_beta < 1 ||
        !(options.L >= 0.0 && options.L <= 2.0)) {
        throw ConfigError("invalid synthetic experiment parameters");
    }
    const auto synthetic = export_synthetic(options);
    auto out = open_output(path);
    write_experiment_record(out, synthetic.record);
    std::cout << "wrote " << synthetic.record.points.size() << " synthetic points to "
              << path.string() << " (peak reference " << format_double(synthetic.peak_reference)
              << ")\n";
}

void run_compare_command(const Config& config, const fs::path& path)
{
    auto in = open_input(config, "input");
    const auto text = read_delimited(in);
    const auto points = scaled_points(text);
    const auto table_path = config.find("table");
    if (!table_path) {
        throw ConfigError("'table' (a scaling table file) is required");
    }
    const auto table = load_scaling_table(*table_path);
    const auto report = compare_to_scaling(points, ScalingFunction(table));
    auto out = open_output(path);
    write_residual_report(out, report,
                          {{"input", config.get_string("input", "")}, {"table", *table_path}});
    for (const auto& s : report.per_L) {
        std::printf("L %-4s rows %zu max|res| %.4f mean|res| %.4f\n",
                    format_double(s.L).c_str(), s.count, s.max_abs, s.mean_abs);
    }
    std::cout << "skipped " << report.skipped_out_of_range << " out of range and "
              << report.skipped_beyond_cutoff << " beyond |eps| = 0.15; wrote "
              << path.string() << '\n';
}

std::string flag_help(const std::string& key)
{
    static const std::map<std::string, std::string> help{
        {"engine", "quantum or pclassical"},
        {"k", "kick strengths (list)"},
        {"epsilon", "detunings from resonance (list)"},
        {"eps_min", "smallest detuning"},
        {"eps_max", "largest detuning"},
        {"eps_count", "number of evenly spaced detunings"},
        {"t", "kick counts (list)"},
        {"L", "noise levels in [0, 2] (list for sweeps)"},
        {"ell", "resonance order, tau = 2 pi ell + eps"},
        {"points", "random parameter points per noise level"},
        {"n_beta", "quasimomentum samples"},
        {"n_traj", "map trajectories"},
        {"ensemble", "theory or experiment"},
        {"sigma_p", "momentum standard deviation of the experiment ensemble"},
        {"beta_sampling", "random or stratified"},
        {"k_jitter", "width of the per-trajectory kick-strength jitter"},
        {"shots", "independent-seed repetitions per point"},
        {"seed", "master seed"},
        {"input", "input file"},
        {"table", "scaling table file"},
        {"peak_reference", "energy of the L = 0 peak used for rescaling"},
        {"offset_correction", "constant subtracted from measured energies"},
    };
    auto it = help.find(key);
    return it == help.end() ? std::string() : it->second;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Kicked-rotor resonance simulations under amplitude noise"};
    app.require_subcommand(1);
    int workers = 0;
    app.add_option("--workers", workers, "worker threads (0: OpenMP default)")
        ->check(CLI::NonNegativeNumber);

    std::vector<Command> commands;
    commands.reserve(9);
    auto sweep = [](SweepKind kind) {
        return [kind](const Config& c, const fs::path& p) { run_sweep_command(kind, c, p); };
    };
    commands.push_back({nullptr, "resonance-scan", sweep_config_keys(), {}, {},
                        sweep(SweepKind::epsilon_scan)});
    commands.push_back({nullptr, "peak-vs-noise", sweep_config_keys(), {}, {},
                        sweep(SweepKind::peak_vs_L)});
    commands.push_back({nullptr, "scaling-collapse", sweep_config_keys(), {}, {},
                        sweep(SweepKind::scaling_collapse)});
    commands.push_back({nullptr, "quantum-vs-classical", sweep_config_keys(), {}, {},
                        sweep(SweepKind::quantum_vs_classical)});
    commands.push_back({nullptr, "phase-portrait", portrait_config_keys(), {}, {},
                        run_portrait_command});
    commands.push_back({nullptr, "tabulate-scaling",
                        {"eps_ref", "k_ref", "ell", "ensemble_size", "grid_points", "x_min",
                         "x_max", "seed"},
                        {}, {}, run_tabulate_command});
    commands.push_back({nullptr, "ingest-experiment",
                        {"input", "k", "t", "peak_reference", "offset_correction"},
                        {}, {}, run_ingest_command});
    commands.push_back({nullptr, "synthesize-experiment",
                        {"k", "t", "ell", "epsilon", "L", "momentum_std", "n_beta", "seed"},
                        {}, {}, run_synthesize_command});
    commands.push_back({nullptr, "compare", {"input", "table"}, {}, {}, run_compare_command});

    const std::map<std::string, std::string> descriptions{
        {"resonance-scan", "energy versus detuning around a quantum resonance"},
        {"peak-vs-noise", "resonant energy versus noise level"},
        {"scaling-collapse", "rescaled energies over random (k, eps, t)"},
        {"quantum-vs-classical", "beta-averaged quantum against the map ensemble"},
        {"phase-portrait", "Poincare section and separatrix band"},
        {"tabulate-scaling", "tabulate the scaling contributions Phi0 and G"},
        {"ingest-experiment", "rescale measured energies"},
        {"synthesize-experiment", "write a synthetic measured record"},
        {"compare", "residuals of rescaled data against the scaling function"},
    };

    for (auto& command : commands) {
        command.app = app.add_subcommand(command.name, descriptions.at(command.name));
        command.app->add_option("--config", command.config_file, "key = value file")
            ->check(CLI::ExistingFile);
        std::vector<std::string> keys = command.keys;
        keys.insert(keys.end(), kCommonKeys.begin(), kCommonKeys.end());
        command.keys = keys;
        for (const auto& key : keys) {
            command.app->add_option("--" + key, command.flags[key], flag_help(key));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigFailure;
    }
    set_worker_count(workers);

    for (auto& command : commands) {
        if (!command.app->parsed()) {
            continue;
        }
        try {
            const auto config = merged_config(command);
            const auto path = output_path(config, command.name + ".csv");
            command.run(config, path);
            return kOk;
        } catch (const ConfigError& e) {
            std::cerr << "configuration error: " << e.what() << '\n';
            return kConfigFailure;
        } catch (const ParameterError& e) {
            std::cerr << "configuration error: " << e.what() << '\n';
            return kConfigFailure;
        } catch (const RangeError& e) {
            std::cerr << "configuration error: " << e.what() << '\n';
            return kConfigFailure;
        } catch (const FormatError& e) {
            std::cerr << "input error: " << e.what() << '\n';
            return kConfigFailure;
        } catch (const GridOverflowError& e) {
            std::cerr << "numerical guard: " << e.what() << '\n';
            return kNumericalFailure;
        } catch (const NumericalError& e) {
            std::cerr << "numerical guard: " << e.what() << '\n';
            return kNumericalFailure;
        } catch (const ZeroDetuningError& e) {
            std::cerr << "numerical guard: " << e.what() << '\n';
            return kNumericalFailure;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kFailure;
        }
    }
    return kFailure;
}
