#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mcfl/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(MCFL_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << j.dump(2);
    return p;
}

const nlohmann::json kShapleyConfig{
    {"scenario", "shapley"},
    {"game", {{"m", {2, 1}}, {"value", {{"kind", "pricing"}}}}}};

} // namespace

TEST_CASE("shipped configs validate") {
    int checked = 0;
    for (const auto& entry : fs::directory_iterator(MCFL_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        const auto cfg = mcfl::load_config(entry.path().string());
        const std::string kind = cfg.at("scenario").get<std::string>();
        CHECK(run_cli(kind + " --config " + entry.path().string() + " --validate-only") == 0);
        ++checked;
    }
    CHECK(checked >= 9); // one per scenario kind
}

TEST_CASE("shapley run emits deterministic, manifest-complete outputs") {
    const fs::path cfg = write_config("mcfl_cli_shapley.json", kShapleyConfig);
    const fs::path out1 = fs::temp_directory_path() / "mcfl_cli_out1";
    const fs::path out2 = fs::temp_directory_path() / "mcfl_cli_out2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    REQUIRE(run_cli("shapley --config " + cfg.string() + " --out " + out1.string()) == 0);
    REQUIRE(run_cli("shapley --config " + cfg.string() + " --out " + out2.string()) == 0);

    const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
    CHECK(manifest["files"].size() >= 2);
    std::size_t on_disk = 0;
    for (const auto& entry : fs::directory_iterator(out1))
        if (entry.path().filename() != "manifest.json") ++on_disk;
    CHECK(on_disk == manifest["files"].size()); // every emitted file is listed

    for (const auto& f : manifest["files"]) {
        const std::string name = f["name"].get<std::string>();
        const std::string bytes = slurp(out1 / name);
        CHECK(mcfl::hex64(mcfl::fnv1a(bytes)) == f["hash"].get<std::string>());
        CHECK(bytes == slurp(out2 / name)); // byte-identical across runs
    }
    CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));

    // payoff table sums to v(3) by budget balance
    const auto summary = nlohmann::json::parse(slurp(out1 / "summary.json"));
    CHECK(std::abs(summary["budget_gap"].get<double>()) < 1e-9);
}

TEST_CASE("validation failures exit with code 2") {
    nlohmann::json bad = kShapleyConfig;
    bad["typo_field"] = 1;
    CHECK(run_cli("shapley --config " +
                  write_config("mcfl_cli_bad1.json", bad).string()) == 2);

    nlohmann::json bad_fl{{"scenario", "fl-run"},
                          {"model", {{"kind", "portfolio"}}},
                          {"sizes", {2, 2}},
                          {"fl", {{"rho", 0.1}, {"T", 5}, {"H", 9}}}};
    CHECK(run_cli("fl-run --config " +
                  write_config("mcfl_cli_bad2.json", bad_fl).string()) == 2); // H > T

    nlohmann::json bad_delta{{"scenario", "efficiency"},
                             {"game", {{"m", {1, 1}}, {"value", {{"kind", "linear"}}}}},
                             {"c", 0.01},
                             {"n_sync", 3},
                             {"guarantee", {{"delta0", 0.0}}}};
    CHECK(run_cli("efficiency --config " +
                  write_config("mcfl_cli_bad3.json", bad_delta).string()) == 2);

    // declared scenario must match the subcommand
    CHECK(run_cli("equilibrium --config " +
                  write_config("mcfl_cli_bad4.json", kShapleyConfig).string()) == 2);
    CHECK(run_cli("shapley --config /nonexistent.json") == 2);
}

TEST_CASE("enumeration cap breaches exit with code 4") {
    nlohmann::json cfg{{"scenario", "shapley"},
                       {"game", {{"m", {3, 3}}, {"value", {{"kind", "linear"}}}}}};
    const fs::path path = write_config("mcfl_cli_cap.json", cfg);
    const fs::path out = fs::temp_directory_path() / "mcfl_cli_cap_out";
    const std::string base = std::string(MCFL_CLI_PATH) + " shapley --config " + path.string() +
                             " --out " + out.string();
    CHECK(WEXITSTATUS(std::system(
              ("MCFL_ENUM_CAP=10 " + base + " > /dev/null 2>&1").c_str())) == 4);
    CHECK(WEXITSTATUS(std::system(
              ("MCFL_ENUM_CAP=100 " + base + " > /dev/null 2>&1").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(
              ("MCFL_ENUM_CAP=bogus " + base + " > /dev/null 2>&1").c_str())) == 2);
}

TEST_CASE("numerical divergence exits with code 3") {
    nlohmann::json cfg{{"scenario", "fl-run"},
                       {"seed", 4},
                       {"model", {{"kind", "portfolio"}}},
                       {"sizes", {2, 2}},
                       {"fl", {{"rho", 1e12}, {"theta0", 1.0}, {"T", 50}, {"H", 50}}}};
    const fs::path out = fs::temp_directory_path() / "mcfl_cli_div_out";
    CHECK(run_cli("fl-run --config " + write_config("mcfl_cli_div.json", cfg).string() +
                  " --out " + out.string()) == 3);
}

TEST_CASE("seed override changes stochastic outputs") {
    nlohmann::json cfg{{"scenario", "fl-run"},
                       {"seed", 1},
                       {"model", {{"kind", "portfolio"}}},
                       {"sizes", {2, 2}},
                       {"fl", {{"rho", 0.05}, {"theta0", 2.0}, {"T", 20}, {"H", 5}}}};
    const fs::path path = write_config("mcfl_cli_seed.json", cfg);
    const fs::path out1 = fs::temp_directory_path() / "mcfl_cli_seed1";
    const fs::path out2 = fs::temp_directory_path() / "mcfl_cli_seed2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    REQUIRE(run_cli("fl-run --config " + path.string() + " --out " + out1.string()) == 0);
    REQUIRE(run_cli("fl-run --config " + path.string() + " --out " + out2.string() +
                    " --seed 2") == 0);
    CHECK(slurp(out1 / "datasets.csv") != slurp(out2 / "datasets.csv"));
    // the manifest records the effective seed
    CHECK(nlohmann::json::parse(slurp(out2 / "manifest.json"))["seed"] == 2);
}
