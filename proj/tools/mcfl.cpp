// mcfl command-line runner: executes a configured scenario and writes its
// artifacts, or validates a config without running it.
//
// Exit codes: 0 success, 2 validation error, 3 numerical divergence,
// 4 enumeration-cap breach.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "mcfl/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mcfl: multi-action collaborative federated learning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool validate_only = false;

    std::vector<CLI::App*> subs;
    for (const auto& kind : mcfl::scenario_kinds()) {
        CLI::App* sub = app.add_subcommand(kind, "run a " + kind + " scenario");
        sub->add_option("--config", config_path, "path to the JSON config")->required();
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "master seed (overrides the config)")
            ->each([&](const std::string&) { has_seed = true; });
        sub->add_flag("--validate-only", validate_only, "validate the config and exit");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        nlohmann::json cfg = mcfl::load_config(config_path);
        const std::string declared = cfg.value("scenario", kind);
        if (declared != kind)
            throw mcfl::validation_error("scenario: config declares '" + declared +
                                         "' but the subcommand is '" + kind + "'");
        cfg["scenario"] = kind;

        if (validate_only) {
            mcfl::validate_config(cfg);
            std::printf("config ok: %s\n", config_path.c_str());
            return 0;
        }

        mcfl::RunOptions opts;
        opts.out_dir = out_dir;
        opts.has_seed_override = has_seed;
        opts.seed_override = seed;
        if (const char* cap_env = std::getenv("MCFL_ENUM_CAP")) {
            try {
                opts.enum_cap = std::stoll(cap_env);
            } catch (const std::exception&) {
                throw mcfl::validation_error("MCFL_ENUM_CAP: not a valid integer");
            }
            if (opts.enum_cap < 1)
                throw mcfl::validation_error("MCFL_ENUM_CAP: must be >= 1");
        }
        mcfl::run_scenario(cfg, opts);
        return 0;
    } catch (const mcfl::enumeration_cap_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const mcfl::divergence_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mcfl::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
