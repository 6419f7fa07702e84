#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qkr/harness.hpp"

namespace fs = std::filesystem;
using namespace qkr;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox()
        : dir(fs::temp_directory_path() / ("qkr_cli_" + std::to_string(::getpid())))
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    int run(const std::string& args, const std::string& env = "") const
    {
        const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" QKR_CLI_PATH "' " +
                                args + " > '" + (dir / "log.txt").string() + "' 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string log() const { return slurp(dir / "log.txt"); }

    static std::string slurp(const fs::path& p)
    {
        std::ifstream in(p);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }
};

}  // namespace

TEST_CASE("sweep output, environment directory and byte-stability")
{
    Sandbox box;
    const std::string args = "peak-vs-noise --n_beta 200 --L 0,2 --output peak.csv";
    REQUIRE(box.run(args) == 0);
    const auto first = Sandbox::slurp(box.dir / "peak.csv");
    std::istringstream in(first);
    CHECK(read_result_table(in).rows.size() == 2);

    REQUIRE(box.run("--workers 3 " + args + " --output_dir again") == 0);
    CHECK(Sandbox::slurp(box.dir / "again" / "peak.csv") == first);

    REQUIRE(box.run(args, "QKR_OUTPUT_DIR=envdir") == 0);
    CHECK(Sandbox::slurp(box.dir / "envdir" / "peak.csv") == first);
}

TEST_CASE("config file with flag override")
{
    Sandbox box;
    {
        std::ofstream cfg(box.dir / "scan.cfg");
        cfg << "# small scan\nn_beta = 100\nepsilon = -0.05, 0, 0.05\nseed = 4\n";
    }
    REQUIRE(box.run("resonance-scan --config scan.cfg --seed 8 --output scan.csv") == 0);
    std::ifstream in(box.dir / "scan.csv");
    const auto table = read_result_table(in);
    CHECK(table.rows.size() == 3);
    CHECK(table.require_meta("seed") == "8");
    CHECK(table.require_meta("spec.n_beta") == "100");

    REQUIRE(box.run("resonance-scan --eps_count 0 --output empty.csv") == 0);
    std::ifstream empty(box.dir / "empty.csv");
    CHECK(read_result_table(empty).rows.empty());
}

TEST_CASE("exit codes")
{
    Sandbox box;
    CHECK(box.run("peak-vs-noise --L 3") == 2);
    CHECK(box.log().find("L must lie in [0, 2]") != std::string::npos);
    CHECK(box.run("peak-vs-noise --bogus 1") == 2);
    CHECK(box.run("no-such-command") == 2);
    CHECK(box.run("resonance-scan --config missing.cfg") == 2);
    {
        std::ofstream cfg(box.dir / "unknown.cfg");
        cfg << "colour = blue\n";
    }
    CHECK(box.run("resonance-scan --config unknown.cfg") == 2);
    CHECK(box.run("compare --input nothing.csv --table nothing.csv") == 2);
    // probability reaches the edge of the largest grid
    CHECK(box.run("peak-vs-noise --k 40000 --t 1 --L 0 --n_beta 1 --output big.csv") == 3);
    CHECK(box.run("--help") == 0);
}

TEST_CASE("tabulate, collapse and compare")
{
    Sandbox box;
    REQUIRE(box.run("tabulate-scaling --ensemble_size 5000 --grid_points 25 --x_max 50 "
                    "--output table.csv") == 0);
    REQUIRE(box.run("scaling-collapse --points 10 --n_traj 2000 --L 0,1 --t_max 60 "
                    "--output collapse.csv") == 0);
    REQUIRE(box.run("compare --input collapse.csv --table table.csv --output res.csv") == 0);
    const auto report = Sandbox::slurp(box.dir / "res.csv");
    CHECK(report.find("# format = qkr-residuals") != std::string::npos);
    CHECK(report.find("# summary.L=1") != std::string::npos);
}

TEST_CASE("synthetic experiment through ingestion")
{
    Sandbox box;
    REQUIRE(box.run("synthesize-experiment --n_beta 200 --epsilon 0,0.05,0.2 "
                    "--output exp.csv") == 0);
    REQUIRE(box.run("ingest-experiment --input exp.csv --output scaled.csv") == 0);
    CHECK(box.log().find("dropped 1") != std::string::npos);
    const auto scaled = Sandbox::slurp(box.dir / "scaled.csv");
    CHECK(scaled.find("# format = qkr-scaled") != std::string::npos);
    REQUIRE(box.run("ingest-experiment --input exp.csv --peak_reference -1 --output x.csv") == 2);
}

TEST_CASE("phase portrait files")
{
    Sandbox box;
    REQUIRE(box.run("phase-portrait --theta_points 4 --J_points 4 --iterations 30 --L 1.5 "
                    "--escape_samples 2000 --output portrait.csv") == 0);
    CHECK(fs::exists(box.dir / "portrait.csv"));
    CHECK(fs::exists(box.dir / "portrait_band.csv"));
    CHECK(box.log().find("escaped") != std::string::npos);
}
