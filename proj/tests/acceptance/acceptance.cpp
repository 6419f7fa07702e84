// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status counts failures outside the --known-red list, plus known-red
// criteria that unexpectedly pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkr/harness.hpp"
#include "qkr/parallel.hpp"
#include "qkr/pclassical.hpp"
#include "qkr/phasespace.hpp"
#include "qkr/quantum.hpp"
#include "qkr/scaling.hpp"

using namespace qkr;

namespace {

// criterion 1
constexpr double kResonanceTolerance = 0.02;
constexpr double kResonanceSecondsPerL = 60.0;
constexpr std::size_t kResonanceFibers = 20000;
// criterion 2
constexpr double kCorrespondenceTolerance = 0.03;
constexpr double kCorrespondenceSeconds = 300.0;
// criterion 3
constexpr std::size_t kCollapsePoints = 200;
constexpr std::size_t kCollapseTrajectories = 50000;
constexpr int kCollapseBins = 70;  // log bins over [1, 30], about 5% wide in x
constexpr double kCollapseSpread = 0.10;
constexpr double kCollapseResidual = 0.10;
// criterion 4
constexpr double kStabilityTolerance = 0.10;
constexpr std::size_t kStabilityTrajectories = 200000;
// criterion 5
constexpr double kIslandTolerance = 0.10;
// criterion 6
constexpr double kEscapeFactor = 2.0;
constexpr std::size_t kEscapeSamples = 1000000;
constexpr int kEscapeKicks = 100;
// criterion 7
constexpr double kUnitarityTolerance = 1e-12;
constexpr double kInversionTolerance = 1e-10;
constexpr double kIdentityTolerance = 1e-10;

const std::vector<double> kLevels{0.0, 0.5, 1.0, 1.5, 2.0};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;
int surprises = 0;
std::vector<int> known_red;

void report(int id, const std::string& name, bool pass, const std::string& detail)
{
    const bool known = std::find(known_red.begin(), known_red.end(), id) != known_red.end();
    std::printf("criterion %d: %s  %s  (%s)%s\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str(), known ? "  [known red]" : "");
    std::fflush(stdout);
    failures += pass ? 0 : 1;
    // a known-red criterion that turns green is also news
    surprises += (pass == known) ? 1 : 0;
}

std::string fmt(const char* format, double a)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, format, a);
    return buffer;
}

// ---------------------------------------------------------------------------

void resonance_law()
{
    const SystemParams params{2.8, 20, 2, 0.0};
    BetaAverageOptions options;
    options.ensemble.size = kResonanceFibers;
    options.seed = 1;
    bool pass = true;
    std::string detail;
    for (double L : kLevels) {
        const auto start = Clock::now();
        const auto r = beta_average(params, NoiseModel(L, 2), options);
        const double elapsed = seconds_since(start);
        const double target = params.k * params.k / 4 * (1 + L * L / 12);
        const double per_kick = r.energy / params.t;
        const double rel = per_kick / target - 1;
        pass = pass && std::fabs(rel) <= kResonanceTolerance && elapsed < kResonanceSecondsPerL;
        std::printf("  L %.1f  E/t %.4f  target %.4f  rel %+.4f  (%.1f s)\n", L, per_kick, target,
                    rel, elapsed);
        detail = "n_beta 20000, |rel| <= 2%, < 60 s per L";
    }
    report(1, "resonance energy law", pass, detail);
}

void correspondence()
{
    auto spec = SweepSpec::defaults(SweepKind::quantum_vs_classical);
    spec.n_traj = 50000;
    const auto start = Clock::now();
    const auto table = run_sweep(spec);
    const double elapsed = seconds_since(start);
    double worst = 0.0;
    for (const auto& row : table.rows) {
        const double rel = (row.E - row.E_classical) / row.E_classical;
        const double se = std::hypot(row.E_std_error, row.E_classical_std_error) / row.E_classical;
        worst = std::max(worst, std::fabs(rel));
        std::printf("  eps %.3f  L %.1f  quantum %.4f  map %.4f  rel %+.4f  (iid se %.4f)\n",
                    row.point.epsilon, row.point.L, row.E, row.E_classical, rel, se);
    }
    const bool pass = worst <= kCorrespondenceTolerance && elapsed < kCorrespondenceSeconds;
    report(2, "quantum / map correspondence", pass,
           "worst |rel| " + fmt("%.4f", worst) + " <= 0.03, " + fmt("%.0f s", elapsed) + " < 300 s");
}

void scaling_collapse(const ScalingFunction& f)
{
    auto spec = SweepSpec::defaults(SweepKind::scaling_collapse);
    spec.random.points = kCollapsePoints;
    spec.n_traj = kCollapseTrajectories;
    spec.L = kLevels;
    spec.seed = 3;
    const auto start = Clock::now();
    const auto table = run_sweep(spec);
    bool pass = true;
    for (double L : kLevels) {
        std::map<int, std::vector<const ResultRow*>> bins;
        for (const auto& row : table.rows) {
            if (row.point.L != L || row.x < 1.0 || row.x > 30.0) {
                continue;
            }
            const int b = std::min(kCollapseBins - 1,
                                   static_cast<int>(std::floor(std::log(row.x) / std::log(30.0) *
                                                               kCollapseBins)));
            bins[b].push_back(&row);
        }
        double squares = 0.0, residual = 0.0, worst = 0.0;
        int dof = 0, used = 0;
        for (const auto& [b, members] : bins) {
            if (members.size() < 2) {
                continue;
            }
            double mean = 0.0, H = 0.0;
            for (const auto* r : members) {
                mean += r->R;
                H += f.H_noisy(r->x, L);
            }
            mean /= static_cast<double>(members.size());
            H /= static_cast<double>(members.size());
            double s = 0.0;
            for (const auto* r : members) {
                s += (r->R - mean) * (r->R - mean);
            }
            squares += s / (mean * mean);
            dof += static_cast<int>(members.size()) - 1;
            worst = std::max(worst, std::sqrt(s / (members.size() - 1)) / mean);
            residual += std::fabs(mean - H);
            ++used;
        }
        const double spread = dof > 0 ? std::sqrt(squares / dof) : INFINITY;
        const double mean_residual = used > 0 ? residual / used : INFINITY;
        pass = pass && spread < kCollapseSpread && mean_residual < kCollapseResidual;
        std::printf("  L %.1f  bins %d  within-bin rel std %.4f (largest single bin %.3f)  "
                    "mean |binned R - H| %.4f\n",
                    L, used, spread, worst, mean_residual);
    }
    report(3, "scaling collapse", pass,
           "pooled within-bin rel std < 0.10, mean residual < 0.10, " +
               fmt("%.0f s", seconds_since(start)));
}

void small_x_stability()
{
    auto spec = SweepSpec::defaults(SweepKind::epsilon_scan);
    spec.engine = Engine::pclassical;
    spec.k = {2.8};
    spec.t = {20};
    spec.L = kLevels;
    spec.n_traj = kStabilityTrajectories;
    spec.epsilon.clear();
    const std::vector<double> xs{0.5, 1.0, 2.0, 3.0, 4.0};
    for (double x : xs) {
        spec.epsilon.push_back(std::pow(x / 20.0, 2) / 2.8);
    }
    const auto table = run_sweep(spec);
    bool pass = true;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t l = 1; l < kLevels.size(); ++l) {
        const double L = kLevels[l];
        std::printf("  L %.1f  ratio to L^2/12:", L);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double shift = table.rows[l * xs.size() + i].R - table.rows[i].R;
            const double ratio = shift / (L * L / 12);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            pass = pass && std::fabs(ratio - 1) <= kStabilityTolerance;
            std::printf(" %.3f", ratio);
        }
        std::printf("\n");
    }
    report(4, "small-x stability", pass,
           "x in {0.5..4}, ratios in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) +
               "], need within 10% of 1");
}

void island_width()
{
    bool pass = true;
    std::string detail;
    for (auto [k, eps] : std::vector<std::pair<double, double>>{{2.8, 0.01}, {1.0, 0.05}, {10.0, 1e-3}}) {
        const double measured = measure_island_half_width(k, eps);
        const double expected = 2 * std::sqrt(k * eps);
        const double rel = measured / expected - 1;
        pass = pass && std::fabs(rel) <= kIslandTolerance;
        std::printf("  k %.1f  eps %g  half-width %.4f  expected %.4f  rel %+.4f\n", k, eps,
                    measured, expected, rel);
    }
    report(5, "island half-width", pass, "within 10% of 2 sqrt(k eps)");
}

void escape_weight()
{
    const double k = 2.8, eps = 0.01;
    const auto base = escape_statistics(k, eps, 0.0, kEscapeSamples, kEscapeKicks, 6);
    bool pass = true;
    double previous = 0.0;
    for (double L : {0.5, 1.0, 1.5, 2.0}) {
        const auto s = escape_statistics(k, eps, L, kEscapeSamples, kEscapeKicks, 6);
        const double change = (s.escape_fraction - base.escape_fraction) / kTwoPi;
        const double expected = rotating_weight_change(L);
        const double ratio = change / expected;
        pass = pass && change > previous && ratio >= 1 / kEscapeFactor && ratio <= kEscapeFactor;
        previous = change;
        std::printf("  L %.1f  escaped %.4f (L=0: %.4f)  weight change %.4f  L/(8 pi) %.4f  "
                    "ratio %.2f\n",
                    L, s.escape_fraction, base.escape_fraction, change, expected, ratio);
    }
    report(6, "escape weight", pass, "monotone in L, within a factor 2 of L/(8 pi), t = 100");
}

// ---------------------------------------------------------------------------

bool unitarity()
{
    double worst = 0.0;
    const NoiseModel noise(2.0, 1);
    for (double beta : {0.0, 0.37, 0.81}) {
        const FloquetPropagator step(4096, beta, 2, 0.05);
        auto s = QuantumState::plane_wave(4096, beta);
        for (std::uint32_t kick = 0; kick < 100; ++kick) {
            step.kick(s, 5.0 * (1 + noise.kick_factor(0, kick)));
            step.free(s);
            worst = std::max(worst, std::fabs(s.norm() - 1));
        }
    }
    std::printf("  unitarity: worst |norm - 1| %.2e\n", worst);
    return worst < kUnitarityTolerance;
}

bool inversion()
{
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 40; ++j) {
            const MapState s0{kTwoPi * (i + 0.5) / 40, 12.0 * (j + 0.5) / 40 - 6.0};
            auto s = s0;
            for (int n = 0; n < 100; ++n) {
                s = map_step(s, 0.5);
            }
            for (int n = 0; n < 100; ++n) {
                s = map_step_inverse(s, 0.5);
            }
            const double dt = std::fabs(s.theta - s0.theta);
            worst = std::max({worst, std::min(dt, kTwoPi - dt), std::fabs(s.J - s0.J)});
        }
    }
    std::printf("  inversion: worst round-trip error %.2e\n", worst);
    return worst < kInversionTolerance;
}

bool noise_moments()
{
    bool pass = true;
    for (double L : {0.5, 1.0, 2.0}) {
        const NoiseModel noise(L, 8);
        const std::size_t n = 2000000;
        double s1 = 0, s2 = 0, s4 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = noise.kick_factor(i / 200, static_cast<std::uint32_t>(i % 200));
            s1 += r;
            s2 += r * r;
            s4 += r * r * r * r;
        }
        const double m1 = s1 / n, m2 = s2 / n;
        const double se1 = L / std::sqrt(12.0 * n);
        const double se2 = std::sqrt((s4 / n - m2 * m2) / n);
        const bool ok = std::fabs(m1) < 4 * se1 && std::fabs(m2 - L * L / 12) < 4 * se2;
        pass = pass && ok;
        std::printf("  noise L %.1f: <R> %+.2e  <R^2> %.6f vs %.6f\n", L, m1, m2, L * L / 12);
    }
    return pass;
}

bool resonance_identity()
{
    double worst = 0.0;
    for (int ell : {2, 4}) {
        const NoiseModel noise(1.5, 4);
        const SystemParams p{1.1, 15, ell, 0.0};
        const auto run = evolve(QuantumState::plane_wave(4096, 0.0), p, noise, 3);
        double total = 0.0;
        for (int s = 0; s < p.t; ++s) {
            total += p.k * (1 + noise.kick_factor(3, static_cast<std::uint32_t>(s)));
        }
        auto single = QuantumState::plane_wave(4096, 0.0);
        kick_operator(single, total);
        for (std::size_t i = 0; i < single.size(); ++i) {
            worst = std::max(worst, std::abs(run.state.amplitudes()[i] - single.amplitudes()[i]));
        }
    }
    std::printf("  resonance identity: worst amplitude difference %.2e\n", worst);
    return worst < kIdentityTolerance;
}

bool noisy_reduces_exactly(const ScalingFunction& f, const ScalingTable& table)
{
    bool exact = true;
    for (double x : table.x) {
        exact = exact && f.H_noisy(x, 0.0) == f.H(x);
    }
    for (int i = 0; i <= 1000; ++i) {
        const double x = f.x_min() * std::pow(f.x_max() / f.x_min(), i / 1000.0);
        if (f.in_range(x)) {
            exact = exact && f.H_noisy(x, 0.0) == f.H(x);
        }
    }
    std::printf("  H(x, 0) == H(x) at every node and 1001 log-spaced x: %s\n",
                exact ? "yes" : "no");
    return exact;
}

bool determinism()
{
    auto serial_and_parallel = [](auto&& produce) {
        set_worker_count(1);
        const auto a = produce();
        set_worker_count(4);
        const auto b = produce();
        set_worker_count(0);
        return a == b;
    };
    auto sweep_text = [](SweepSpec spec) {
        return [spec] {
            std::ostringstream out;
            write_result_table(out, run_sweep(spec));
            return out.str();
        };
    };
    auto collapse = SweepSpec::defaults(SweepKind::scaling_collapse);
    collapse.random.points = 16;
    collapse.n_traj = 5000;
    collapse.L = {0.0, 2.0};
    auto quantum = SweepSpec::defaults(SweepKind::epsilon_scan);
    quantum.epsilon = {-0.05, 0.0, 0.05};
    quantum.L = {1.0};
    quantum.n_beta = 200;
    const bool sweeps = serial_and_parallel(sweep_text(collapse)) &&
                        serial_and_parallel(sweep_text(quantum));
    const bool average = serial_and_parallel([] {
        BetaAverageOptions o;
        o.ensemble.size = 300;
        return beta_average({2.8, 30, 2, 0.02}, NoiseModel(2.0, 9), o).energy_per_kick;
    });
    const bool escape = serial_and_parallel([] {
        return escape_statistics(2.8, 0.01, 1.5, 20000, 100, 2).escaped;
    });
    std::printf("  determinism: sweeps %s, beta average %s, escape counts %s\n",
                sweeps ? "identical" : "DIFFER", average ? "identical" : "DIFFER",
                escape ? "identical" : "DIFFER");
    return sweeps && average && escape;
}

void properties(const ScalingFunction& f, const ScalingTable& table)
{
    const bool u = unitarity();
    const bool i = inversion();
    const bool n = noise_moments();
    const bool r = resonance_identity();
    const bool h = noisy_reduces_exactly(f, table);
    const bool d = determinism();
    report(7, "property suites", u && i && n && r && h && d,
           "unitarity 1e-12, inversion 1e-10, noise moments, resonance identity 1e-10, "
           "H(x,0) = H(x), determinism");
}

ScalingTable scaling_table(const std::string& cache)
{
    if (!cache.empty() && std::filesystem::exists(cache)) {
        std::printf("scaling table: %s\n", cache.c_str());
        return load_scaling_table(cache);
    }
    const auto start = Clock::now();
    auto table = tabulate_phi0_G(TabulationOptions{});
    std::printf("scaling table: tabulated %zu points in %.0f s\n", table.size(),
                seconds_since(start));
    if (!cache.empty()) {
        save_scaling_table(cache, table);
    }
    return table;
}

}  // namespace

int main(int argc, char** argv)
{
    std::string cache;
    std::vector<int> only;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--cache" && a + 1 < argc) {
            cache = argv[++a];
        } else if (arg == "--known-red" && a + 1 < argc) {
            known_red.push_back(std::stoi(argv[++a]));
        } else {
            only.push_back(std::stoi(arg));
        }
    }
    auto wanted = [&](int id) {
        return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
    };

    const auto start = Clock::now();
    const bool need_table = wanted(3) || wanted(7);
    const ScalingTable table = need_table ? scaling_table(cache) : ScalingTable{};
    const auto f = need_table ? std::optional<ScalingFunction>(table) : std::nullopt;

    if (wanted(1)) resonance_law();
    if (wanted(2)) correspondence();
    if (wanted(3)) scaling_collapse(*f);
    if (wanted(4)) small_x_stability();
    if (wanted(5)) island_width();
    if (wanted(6)) escape_weight();
    if (wanted(7)) properties(*f, table);

    std::printf("%d criteria failed; total %.0f s\n", failures, seconds_since(start));
    return surprises;
}
