#include "hatax/cli.hpp"

#include "hatax/artifacts.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace hatax;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(bool(in));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("hatax_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config: defaults, file parsing, overrides, unknown keys") {
    auto cfg = config::Config::defaults();
    CHECK(cfg.get("alpha", 0.0) == 0.36);
    CHECK(cfg.get("sigma", 0.0) == 0.2473);

    auto parsed = config::Config::parse_string("alpha = 0.30 # comment\n\n# full line\n"
                                               "tau_K=0.2\n");
    CHECK(parsed.get("alpha", 0.0) == 0.30);
    CHECK(parsed.get("tau_K", 0.0) == 0.2);
    CHECK(parsed.get("beta", 0.0) == 0.96); // default retained

    CHECK_THROWS_AS(parsed.set("not_a_key", "1"), std::invalid_argument);
    CHECK_THROWS_AS(config::Config::parse_string("alpha 0.3\n"), std::invalid_argument);

    const auto params = config::model_params(parsed);
    CHECK(params.alpha == 0.30);
    const auto targets = config::calibration_targets(parsed);
    CHECK(targets.pi_ew == 0.0192);
}

TEST_CASE("manifest hash: stable and sensitive") {
    cli::RunManifest m;
    m.command = "calibrate";
    const auto cfg = config::Config::defaults();
    const auto h1 = cli::manifest_hash(m, cfg);
    CHECK(h1 == cli::manifest_hash(m, cfg));
    m.seed += 1;
    CHECK(h1 != cli::manifest_hash(m, cfg));
}

TEST_CASE("calibrate command is deterministic byte for byte") {
    cli::RunManifest m;
    m.command = "calibrate";
    const auto d1 = temp_dir("cal1"), d2 = temp_dir("cal2");
    m.out_dir = d1.string();
    CHECK(cli::run(m) == cli::kOk);
    m.out_dir = d2.string();
    CHECK(cli::run(m) == cli::kOk);
    CHECK(slurp(d1 / "ability_process.json") == slurp(d2 / "ability_process.json"));
    // manifest is persisted alongside outputs
    CHECK(fs::exists(d1 / "manifest.json"));
}

TEST_CASE("exit codes: config, solver, infeasible mix") {
    cli::RunManifest m;
    m.command = "calibrate";
    m.out_dir = temp_dir("codes").string();
    m.overrides = {{"definitely_not_a_key", "1"}};
    CHECK(cli::run(m) == cli::kConfigError);

    m.overrides = {{"pi_ew", "0.9"}};
    m.command = "equilibrium";
    CHECK(cli::run(m) == cli::kSolverError);
    CHECK(fs::exists(fs::path(m.out_dir) / "error.json"));

    // revenue already overshoots the baseline target at tau_C = 0
    m.overrides = {{"transition.tau_K", "0.79"}, {"transition.tau_L", "0.30"}};
    m.command = "transition";
    CHECK(cli::run(m) == cli::kInfeasibleMix);

    m.overrides.clear();
    m.command = "plot-data";
    m.args = {{"figure", "fig2a"}}; // artifact missing in a fresh directory
    m.out_dir = temp_dir("nofig").string();
    CHECK(cli::run(m) == cli::kConfigError);
}

TEST_CASE("transition command emits the per-year table and figure panels") {
    cli::RunManifest m;
    m.command = "transition";
    const auto dir = temp_dir("trans");
    m.out_dir = dir.string();
    m.threads = 2;
    // explicit new rates: skip the in-command optimizer
    m.overrides = {{"transition.tau_K", "0.24"}, {"transition.tau_C", "0.31"}};
    REQUIRE(cli::run(m) == cli::kOk);

    artifacts::json j;
    std::ifstream in(dir / "transition.json");
    in >> j;
    CHECK(j["vote"]["all"].get<double>() == doctest::Approx(0.86).epsilon(0.03));
    CHECK(j["max_excess_bond"].get<double>() <= 7e-4);

    // figure panels have exactly horizon + 1 rows
    for (const char* fig : {"fig11a", "fig11d", "fig11f"}) {
        m.command = "plot-data";
        m.args = {{"figure", fig}};
        REQUIRE(cli::run(m) == cli::kOk);
        std::istringstream fin(slurp(dir / (std::string(fig) + ".csv")));
        std::string line;
        int rows = -1; // header line
        while (std::getline(fin, line))
            if (!line.empty() && line[0] != '#') ++rows;
        CHECK(rows == j["horizon"].get<int>() + 1);
    }
}

TEST_CASE("equilibrium artifacts carry the manifest hash and expected fields") {
    cli::RunManifest m;
    m.command = "equilibrium";
    const auto dir = temp_dir("eq");
    m.out_dir = dir.string();
    m.threads = 2;
    REQUIRE(cli::run(m) == cli::kOk);

    artifacts::json j;
    std::ifstream in(dir / "equilibrium.json");
    in >> j;
    CHECK(j.contains("manifest_hash"));
    CHECK(j["prices"]["net_rate_post_tax"].get<double>() ==
          doctest::Approx(0.017).epsilon(0.1));
    CHECK(j["zeta"].get<double>() == doctest::Approx(1.93).epsilon(0.01));

    const std::string csv = slurp(dir / "wealth_distribution.csv");
    CHECK(csv.rfind("# manifest_hash=", 0) == 0);
    CHECK(csv.find("wealth,exceedance_prob,source") != std::string::npos);
    CHECK(csv.find("extrapolation") != std::string::npos);

    // figure projections from stored artifacts
    m.command = "plot-data";
    m.args = {{"figure", "fig2a"}};
    REQUIRE(cli::run(m) == cli::kOk);
    const std::string fig = slurp(dir / "fig2a.csv");
    CHECK(fig.find("wealth,exceedance_prob,source") != std::string::npos);
    m.args = {{"figure", "fig2b"}};
    REQUIRE(cli::run(m) == cli::kOk);

    // exceedance columns are monotone non-increasing in wealth
    std::istringstream fin(slurp(dir / "fig2a.csv"));
    std::string line;
    std::getline(fin, line); // hash
    std::getline(fin, line); // header
    double prev = 2.0;
    bool monotone = true;
    while (std::getline(fin, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double q = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        monotone &= q <= prev + 1e-12;
        prev = q;
    }
    CHECK(monotone);
}
