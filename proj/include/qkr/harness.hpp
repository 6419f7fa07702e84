#pragma once

// Parameter sweeps over either engine, result tables with full provenance,
// ingestion of measured energies, and residuals against the scaling
// function.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkr/config.hpp"
#include "qkr/model.hpp"
#include "qkr/phasespace.hpp"
#include "qkr/quantum.hpp"
#include "qkr/scaling.hpp"
#include "qkr/stats.hpp"
#include "qkr/textio.hpp"

namespace qkr {

/// A computed quantity came out non-finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A table is missing a required header entry, column or provenance value.
class SchemaError : public FormatError {
public:
    using FormatError::FormatError;
};

inline constexpr int kSchemaVersion = 1;
inline const std::string kSweepFormat = "qkr-sweep";
inline const std::string kScaledFormat = "qkr-scaled";
inline const std::string kExperimentFormat = "qkr-experiment";
inline const std::string kResidualFormat = "qkr-residuals";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirVariable = "QKR_OUTPUT_DIR";

/// $QKR_OUTPUT_DIR if set and non-empty, else the working directory.
std::filesystem::path default_output_dir();

enum class SweepKind {
    epsilon_scan,
    scaling_collapse,
    peak_vs_L,
    phase_portrait,
    quantum_vs_classical,
};

enum class Engine { quantum, pclassical };

std::string to_string(SweepKind kind);
std::string to_string(Engine engine);
SweepKind parse_sweep_kind(const std::string& text);
Engine parse_engine(const std::string& text);

/// Random parameter triples: k and t uniform, eps log-uniform, sign +.
struct RandomSampling {
    std::size_t points = 0;  // per noise level; 0 uses the list product
    double k_min = 1.0;
    double k_max = 10.0;
    double eps_min = 1e-3;
    double eps_max = 0.1;
    int t_min = 2;
    int t_max = 150;
};

struct SweepSpec {
    SweepKind kind = SweepKind::epsilon_scan;
    Engine engine = Engine::quantum;
    std::vector<double> k{2.8};
    std::vector<double> epsilon{0.0};
    std::vector<int> t{20};
    std::vector<double> L{0.0};
    int ell = 2;
    RandomSampling random;

    std::size_t n_beta = 2000;   // quantum fibers
    std::size_t n_traj = 50000;  // map trajectories
    EnsembleMode ensemble = EnsembleMode::theory_uniform;
    double sigma_p = 0.0;  // standard deviation of p in experiment mode
    BetaSampling beta_sampling = BetaSampling::stratified;
    double k_jitter = 0.0;
    int shots = 1;
    std::size_t start_grid = kDefaultGridSize;
    std::uint64_t seed = 1;

    /// Defaults for a sweep kind (e.g. the epsilon-scan grid on [-0.2, 0.2]).
    static SweepSpec defaults(SweepKind kind);
    /// Defaults for `kind` overridden by config keys. Throws ConfigError.
    static SweepSpec from_config(SweepKind kind, const Config& config);

    /// Throws ConfigError for any invalid range.
    void validate() const;

    /// Every field as ordered (key, value) pairs; the input of hash().
    std::vector<std::pair<std::string, std::string>> canonical() const;
    /// 16 hex digits of the FNV-1a hash of the canonical listing.
    std::string hash() const;
};

/// Config keys understood by SweepSpec::from_config.
const std::vector<std::string>& sweep_config_keys();

struct SweepPoint {
    std::size_t index = 0;
    double k = 0.0;
    double epsilon = 0.0;
    int t = 0;
    double L = 0.0;
};

/// Parameter points in output order: L outermost, then k, t, eps. Random
/// mode draws the same (k, eps, t) triples for every L.
std::vector<SweepPoint> expand_sweep(const SweepSpec& spec);

/// Seeds of one shot. Every point of a sweep uses the same seeds, so
/// neighbouring points share their random numbers.
struct ShotSeeds {
    std::uint64_t initial_conditions = 0;
    std::uint64_t noise = 0;
};

ShotSeeds shot_seeds(std::uint64_t master_seed, int shot);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
    SweepPoint point;
    double x = 0.0;
    double E = 0.0;  // mean energy change after t kicks
    double E_std_error = 0.0;
    double R = 0.0;  // E / (k^2 t / 4)
    double R_std_error = 0.0;
    double initial_energy = 0.0;
    bool beyond_cutoff = false;  // |eps| > 0.15
    ShotSeeds seeds;             // of shot 0
    /// quantum-vs-classical only: E is the quantum <(n - n0)^2>/2 and these
    /// hold the kinetic energy change and the map ensemble energy.
    double E_kinetic = kNaN;
    double E_classical = kNaN;
    double E_classical_std_error = kNaN;
};

struct ResultTable {
    SweepSpec spec;
    std::vector<ResultRow> rows;
};

/// Runs every point of a validated spec. Output does not depend on the
/// worker count.
ResultTable run_sweep(const SweepSpec& spec);
ResultTable run_sweep(SweepSpec spec, std::uint64_t seed);

/// Energy of one point with the given seeds; `shot` only labels errors.
ResultRow evaluate_point(const SweepSpec& spec, const SweepPoint& point, int shot = 0);

void write_result_table(std::ostream& out, const ResultTable& table);
/// Reads and schema-checks a sweep file.
DelimitedText read_result_table(std::istream& in);
/// Throws SchemaError unless the header and every provenance cell is present.
void validate_result_table(const DelimitedText& text);

/// Mean and standard error over independent shots; needs >= 2 shots.
MeanError shot_statistics(std::span<const double> shots);

// ---------------------------------------------------------------------------
// Experimental records

struct ExperimentPoint {
    double epsilon = 0.0;
    double L = 0.0;
    double E = 0.0;  // measured mean energy (not a change)
    double E_std_error = 0.0;
    int shots = 0;
};

/// Measured mean energies at fixed k and t. sigma_p is defined by the mean
/// initial energy sigma_p^2 / 4 of the prepared ensemble.
struct ExperimentRecord {
    std::optional<double> sigma_p;
    double k = 0.0;
    double k_uncertainty = 0.0;  // carried through, not applied
    int t = 0;
    int ell = 2;
    std::vector<ExperimentPoint> points;
    /// Other header entries (shot metadata), kept in file order.
    std::vector<std::pair<std::string, std::string>> metadata;

    /// Throws ParameterError for non-finite energies or sigma_p < 0.
    void validate() const;
};

/// Columns epsilon (or tau), L, E and optionally E_std_error, shots; header
/// keys sigma_p, k, k_uncertainty, t, ell. A tau column is converted with
/// eps = tau - 2 pi ell.
ExperimentRecord read_experiment_record(std::istream& in);
void write_experiment_record(std::ostream& out, const ExperimentRecord& record);

struct ScaledPoint {
    double epsilon = 0.0;
    double L = 0.0;
    double k = 0.0;
    int t = 0;
    double x = 0.0;
    double R = 0.0;
    double R_std_error = 0.0;
};

struct RescaleOptions {
    /// Constant subtracted from every measured energy; 0 disables it.
    double offset_correction = 0.0;
};

struct RescaleResult {
    std::vector<ScaledPoint> points;
    std::size_t dropped = 0;  // |eps| > 0.15
};

/// R = (E - sigma_p^2/4 - offset) / peak_reference, x = t sqrt(k |eps|).
/// Throws ConfigError if sigma_p is missing, ParameterError if
/// peak_reference <= 0.
RescaleResult rescale_experimental(const ExperimentRecord& record, double k, int t,
                                   double peak_reference,
                                   const RescaleOptions& options = {});

/// Largest L = 0 energy above the initial energy, for use as peak_reference.
double peak_reference_from_record(const ExperimentRecord& record,
                                  const RescaleOptions& options = {});

void write_scaled_points(std::ostream& out, const RescaleResult& result,
                         const ExperimentRecord& record, double peak_reference,
                         const RescaleOptions& options);

/// Synthetic measurement: the quantum engine run from a gaussian momentum
/// ensemble, written out as absolute energies.
struct SyntheticOptions {
    double k = 2.8;
    int t = 20;
    int ell = 2;
    std::vector<double> epsilon{0.0};
    double L = 0.0;
    double momentum_std = 8.0;  // standard deviation of p
    std::size_t n_beta = 2000;
    std::uint64_t seed = 1;
};

struct SyntheticExport {
    ExperimentRecord record;
    double peak_reference = 0.0;  // k^2 t / 4
    /// The engine's own energy change over peak_reference, per point.
    std::vector<double> internal_R;
    std::vector<double> internal_R_std_error;
};

SyntheticExport export_synthetic(const SyntheticOptions& options);

/// Scaled points from a sweep table (columns epsilon, L, k, t, x, R) or a
/// rescaled experiment file.
std::vector<ScaledPoint> scaled_points(const ResultTable& table);
std::vector<ScaledPoint> scaled_points(const DelimitedText& text);

// ---------------------------------------------------------------------------
// Residuals against the scaling function

struct Residual {
    std::size_t index = 0;  // position in the input
    double x = 0.0;
    double L = 0.0;
    double R = 0.0;
    double H = 0.0;
    double residual = 0.0;  // R - H(x, L)
};

struct ResidualSummary {
    double L = 0.0;
    std::size_t count = 0;
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

struct ResidualReport {
    std::vector<Residual> rows;
    std::vector<ResidualSummary> per_L;  // ascending L
    std::size_t skipped_out_of_range = 0;
    std::size_t skipped_beyond_cutoff = 0;
};

ResidualReport compare_to_scaling(std::span<const ScaledPoint> points,
                                  const ScalingFunction& scaling);
ResidualReport compare_to_scaling(const ResultTable& table, const ScalingTable& scaling);

void write_residual_report(std::ostream& out, const ResidualReport& report,
                           const std::vector<std::pair<std::string, std::string>>& meta);

// ---------------------------------------------------------------------------
// Phase portraits

struct PortraitSpec {
    SystemParams params{2.8, 500, 2, 0.01};
    double L = 0.0;
    PortraitGrid grid;
    std::uint64_t seed = 1;
    std::size_t escape_samples = 0;  // 0 skips the escape count
    int escape_kicks = 100;

    static PortraitSpec from_config(const Config& config);
    void validate() const;
};

const std::vector<std::string>& portrait_config_keys();

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace qkr
