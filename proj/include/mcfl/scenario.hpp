#ifndef MCFL_SCENARIO_HPP
#define MCFL_SCENARIO_HPP

// Config-driven scenario runner behind the CLI: parses and validates JSON
// configs, executes a scenario, and emits deterministic CSV/JSON artifacts
// plus a manifest of everything written.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcfl/decisions.hpp"
#include "mcfl/efficiency.hpp"
#include "mcfl/errors.hpp"
#include "mcfl/fl_sim.hpp"
#include "mcfl/game.hpp"
#include "mcfl/manipulation.hpp"
#include "mcfl/rng.hpp"
#include "mcfl/shapley.hpp"

namespace mcfl {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Fixed-width float formatting for byte-stable CSV output.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Config parsing. Every object is checked against its allowed key set so
// typos fail validation instead of being silently ignored.
// ---------------------------------------------------------------------------

inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& path) {
    if (!j.is_object()) throw validation_error(path + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) throw validation_error(path + ": unknown field '" + key + "'");
    }
}

inline double require_number(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || !j[key].is_number())
        throw validation_error(path + "." + key + ": required number missing");
    return j[key].get<double>();
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw validation_error(std::string(key) + ": expected a number");
    return j[key].get<double>();
}

inline int int_or(const nlohmann::json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw validation_error(std::string(key) + ": expected an integer");
    return j[key].get<int>();
}

inline std::vector<int> require_int_array(const nlohmann::json& j, const char* key,
                                          const std::string& path) {
    if (!j.contains(key) || !j[key].is_array())
        throw validation_error(path + "." + key + ": required integer array missing");
    std::vector<int> out;
    for (const auto& e : j[key]) {
        if (!e.is_number_integer())
            throw validation_error(path + "." + key + ": entries must be integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline GameSpec parse_game(const nlohmann::json& j, const std::string& path) {
    expect_keys(j, {"m", "value"}, path);
    MaxDataVector m(require_int_array(j, "m", path));
    if (!j.contains("value")) throw validation_error(path + ".value: required");
    const auto& v = j["value"];
    expect_keys(v, {"kind", "param", "values", "path"}, path + ".value");
    const std::string kind = v.value("kind", "");
    if (kind == "csv")
        return GameSpec(m, load_value_table_csv(v.value("path", "")));
    if (kind == "explicit") {
        std::vector<double> values;
        for (const auto& e : v.value("values", nlohmann::json::array()))
            values.push_back(e.get<double>());
        return GameSpec(m, make_value_table(ValueTableKind::Explicit, 0.0, m.total(),
                                            std::move(values)));
    }
    ValueTableKind k;
    if (kind == "linear") k = ValueTableKind::Linear;
    else if (kind == "concave_power") k = ValueTableKind::ConcavePower;
    else if (kind == "pricing") k = ValueTableKind::Pricing;
    else throw validation_error(path + ".value.kind: must be one of linear, concave_power, pricing, explicit, csv");
    return GameSpec(m, make_value_table(k, number_or(v, "param", 1.0), m.total()));
}

inline FLConfig parse_fl(const nlohmann::json& j, const std::string& path) {
    expect_keys(j, {"rho", "theta0", "T", "H", "averaging", "output", "record_iterates"},
                path);
    FLConfig cfg;
    cfg.rho = require_number(j, "rho", path);
    cfg.theta0 = number_or(j, "theta0", 0.0);
    cfg.T = int_or(j, "T", 1);
    cfg.H = int_or(j, "H", 1);
    const std::string avg = j.value("averaging", "uniform");
    if (avg == "uniform") cfg.averaging = AveragingMode::Uniform;
    else if (avg == "sample_weighted") cfg.averaging = AveragingMode::SampleWeighted;
    else throw validation_error(path + ".averaging: must be uniform or sample_weighted");
    const std::string out = j.value("output", "sync_average");
    if (out == "sync_average") cfg.output = OutputMode::SyncAverage;
    else if (out == "running_average") cfg.output = OutputMode::RunningAverage;
    else if (out == "last_iterate") cfg.output = OutputMode::LastIterate;
    else throw validation_error(path + ".output: must be sync_average, running_average or last_iterate");
    cfg.record_iterates = j.value("record_iterates", false);
    cfg.validate();
    return cfg;
}

inline GuaranteeParams parse_guarantee(const nlohmann::json& j, const std::string& path) {
    expect_keys(j, {"delta0", "beta1", "beta2", "alpha_rate", "L_rw"}, path);
    GuaranteeParams g;
    g.delta0 = number_or(j, "delta0", g.delta0);
    g.beta1 = number_or(j, "beta1", g.beta1);
    g.beta2 = number_or(j, "beta2", g.beta2);
    g.alpha_rate = number_or(j, "alpha_rate", g.alpha_rate);
    g.L_rw = number_or(j, "L_rw", g.L_rw);
    g.validate();
    return g;
}

/// Model-driven losses: a pooled regression dataset partitioned by identity
/// sizes, one unit of capacity per sample.
struct ModelSpec {
    std::string kind;        // "newsvendor" | "portfolio"
    Eigen::VectorXd theta_star;
    double sigma = 1.0;
    double sigma_x = 1.0;
    NewsvendorParams nv;
    double alpha_risk = 0.5;
};

inline ModelSpec parse_model(const nlohmann::json& j, const std::string& path) {
    expect_keys(j, {"kind", "theta_star", "sigma", "sigma_x", "h", "b", "lambda_reg",
                    "alpha_risk"},
                path);
    ModelSpec m;
    m.kind = j.value("kind", "");
    if (m.kind != "newsvendor" && m.kind != "portfolio")
        throw validation_error(path + ".kind: must be newsvendor or portfolio");
    std::vector<double> theta;
    for (const auto& e : j.value("theta_star", nlohmann::json::array({1.0})))
        theta.push_back(e.get<double>());
    m.theta_star = Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<long>(theta.size()));
    m.sigma = number_or(j, "sigma", 1.0);
    m.sigma_x = number_or(j, "sigma_x", 1.0);
    m.nv.h = number_or(j, "h", 0.1);
    m.nv.b = number_or(j, "b", 0.9);
    m.nv.lambda_reg = number_or(j, "lambda_reg", 0.0);
    m.alpha_risk = number_or(j, "alpha_risk", 0.5);
    if (m.kind == "newsvendor") m.nv.validate();
    if (m.sigma < 0.0 || m.sigma_x <= 0.0)
        throw validation_error(path + ": need sigma >= 0 and sigma_x > 0");
    return m;
}

enum class LossScale { PerSample, CoalitionTotal };

/// Builds identity losses from one pooled dataset split by `sizes`, so the
/// underlying samples are unchanged across different partitions of the pool.
inline std::vector<LocalLoss> make_model_losses(const ModelSpec& model,
                                                const std::vector<int>& sizes,
                                                std::uint64_t seed, LossScale scale,
                                                std::vector<IdentityDataset>* datasets_out =
                                                    nullptr) {
    int total = 0;
    for (int s : sizes) {
        if (s < 1) throw validation_error("identity sizes must be >= 1");
        total += s;
    }
    LinearDemandModel gen{model.theta_star, model.sigma, model.sigma_x};
    const IdentityDataset pool = generate_dataset(gen, total, seed);
    std::vector<IdentityDataset> parts = partition_dataset(pool, sizes);
    std::vector<LocalLoss> losses;
    for (const auto& part : parts) {
        const double sc = scale == LossScale::PerSample ? part.n() : total;
        if (model.kind == "newsvendor") {
            const double share = scale == LossScale::PerSample
                                     ? static_cast<double>(part.n()) / total
                                     : 1.0 / static_cast<double>(sizes.size());
            losses.push_back(nv_local_loss(part, model.nv, share, sc));
        } else {
            losses.push_back(portfolio_local_loss(part, sc));
        }
    }
    if (datasets_out != nullptr) *datasets_out = std::move(parts);
    return losses;
}

// ---------------------------------------------------------------------------
// Output collection and manifest
// ---------------------------------------------------------------------------

class OutputWriter {
public:
    OutputWriter(std::filesystem::path out_dir, std::string config_hash, std::uint64_t seed)
        : dir_(std::move(out_dir)), config_hash_(std::move(config_hash)), seed_(seed) {}

    void add(const std::string& name, const std::string& content) {
        files_.emplace_back(name, content);
    }
    void add_json(const std::string& name, const nlohmann::json& j) {
        add(name, j.dump(2) + "\n");
    }

    /// Writes all collected files plus manifest.json listing them with hashes.
    void flush() {
        std::filesystem::create_directories(dir_);
        nlohmann::json manifest{{"config_hash", config_hash_},
                                {"seed", seed_},
                                {"version", kArtifactVersion}};
        manifest["files"] = nlohmann::json::array();
        for (const auto& [name, content] : files_) {
            write_file(dir_ / name, content);
            manifest["files"].push_back({{"name", name}, {"hash", hex64(fnv1a(content))}});
        }
        write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    static void write_file(const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw validation_error("cannot write output file: " + p.string());
        out << content;
    }

    std::filesystem::path dir_;
    std::string config_hash_;
    std::uint64_t seed_;
    std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Scenario implementations
// ---------------------------------------------------------------------------

inline std::string allocations_csv(const AllocationResult& alloc) {
    std::ostringstream csv;
    csv << "identity,level,payoff\n";
    for (int k = 0; k < alloc.m.num_identities(); ++k)
        for (int i = 1; i <= alloc.m.m[static_cast<std::size_t>(k)]; ++i)
            csv << (k + 1) << ',' << i << ',' << fmt17(alloc.at(k, i)) << '\n';
    return csv.str();
}

inline std::string trace_csv(const FLResult& run) {
    std::ostringstream csv;
    csv << "epoch,identity,component,value\n";
    for (std::size_t t = 0; t < run.global_trace.size(); ++t) {
        const auto& g = run.global_trace[t];
        for (long c = 0; c < g.size(); ++c)
            csv << t << ",0," << (c + 1) << ',' << fmt17(g[c]) << '\n';
        if (!run.local_iterates.empty())
            for (std::size_t k = 0; k < run.local_iterates[t].size(); ++k)
                for (long c = 0; c < run.local_iterates[t][k].size(); ++c)
                    csv << t << ',' << (k + 1) << ',' << (c + 1) << ','
                        << fmt17(run.local_iterates[t][k][c]) << '\n';
    }
    return csv.str();
}

inline std::string distance_csv(const std::vector<double>& distances) {
    std::ostringstream csv;
    csv << "epoch,distance_to_ref\n";
    for (std::size_t t = 0; t < distances.size(); ++t)
        csv << t << ',' << fmt17(distances[t]) << '\n';
    return csv.str();
}

inline void check_cap(const MaxDataVector& m, long long cap) {
    const long long count = m.profile_count();
    if (count > cap)
        throw enumeration_cap_error("profile enumeration of size " + std::to_string(count) +
                                        " exceeds cap " + std::to_string(cap),
                                    count);
}

inline void run_shapley(const nlohmann::json& cfg, OutputWriter& out, long long cap) {
    const GameSpec game = parse_game(cfg.at("game"), "game");
    check_cap(game.m, cap);
    const AllocationResult alloc = allocate_all(game, cap);
    out.add("allocations.csv", allocations_csv(alloc));
    const double v_full = game.v(game.m.total());
    const double budget_sum = agent_surplus_total(alloc, game.m.m);
    out.add_json("summary.json", {{"v_full", v_full},
                                  {"budget_sum", budget_sum},
                                  {"budget_gap", budget_sum - v_full}});
}

inline void run_split_scan(const nlohmann::json& cfg, OutputWriter& out, long long cap) {
    const GameSpec game = parse_game(cfg.at("game"), "game");
    check_cap(game.m, cap);
    const int identity = int_or(cfg, "identity", 1);
    if (identity < 1 || identity > game.m.num_identities())
        throw validation_error("identity: out of range (1-based)");
    const PartitionSearchResult result = best_partition(game.m, identity - 1, game.v, cap);
    const double honest = result.candidates.front().second; // partition [m_k] is first
    std::ostringstream csv;
    csv << "partition,num_identities,total_payoff,gain\n";
    for (const auto& [parts, payoff] : result.candidates) {
        csv << '"';
        for (std::size_t i = 0; i < parts.size(); ++i)
            csv << (i ? "+" : "") << parts[i];
        csv << "\"," << parts.size() << ',' << fmt17(payoff) << ',' << fmt17(payoff - honest)
            << '\n';
    }
    out.add("split_scan.csv", csv.str());
    out.add_json("summary.json", {{"identity", identity},
                                  {"best_partition", result.partition},
                                  {"best_total_payoff", result.total_payoff},
                                  {"honest_payoff", honest},
                                  {"best_gain", result.total_payoff - honest}});
}

inline void run_equilibrium(const nlohmann::json& cfg, OutputWriter& out, long long cap) {
    const GameSpec game = parse_game(cfg.at("game"), "game");
    check_cap(game.m, cap);
    const EquilibriumCertificate cert = equilibrium_profile(game.m, game.v, cap);
    nlohmann::json j{{"profile", cert.profile},
                     {"fully_split_payoffs", cert.fully_split_payoffs},
                     {"is_equilibrium", cert.is_equilibrium},
                     {"is_strict", cert.is_strict}};
    j["deviations"] = nlohmann::json::array();
    for (const auto& d : cert.deviations)
        j["deviations"].push_back({{"agent", d.agent + 1},
                                   {"partition", d.partition},
                                   {"payoff", d.payoff},
                                   {"margin", d.margin}});
    out.add_json("equilibrium.json", j);
}

inline LossScale parse_scale(const nlohmann::json& cfg) {
    const std::string s = cfg.value("scale", "per_sample");
    if (s == "per_sample") return LossScale::PerSample;
    if (s == "coalition_total") return LossScale::CoalitionTotal;
    throw validation_error("scale: must be per_sample or coalition_total");
}

inline void run_fl(const nlohmann::json& cfg, OutputWriter& out, std::uint64_t seed) {
    const ModelSpec model = parse_model(cfg.at("model"), "model");
    const std::vector<int> sizes = require_int_array(cfg, "sizes", "config");
    FLConfig fl = parse_fl(cfg.at("fl"), "fl");
    std::vector<IdentityDataset> datasets;
    const std::vector<LocalLoss> losses =
        make_model_losses(model, sizes, derive_seed(seed, 0), parse_scale(cfg), &datasets);
    const FLResult run = local_gd_run(losses, fl);
    out.add("trace.csv", trace_csv(run));
    out.add("datasets.csv", [&] {
        std::ostringstream csv;
        const int p = datasets[0].p();
        csv << "identity";
        for (int c = 1; c <= p; ++c) csv << ",x_" << c;
        csv << ",response\n";
        for (std::size_t k = 0; k < datasets.size(); ++k)
            for (int j = 0; j < datasets[k].n(); ++j) {
                csv << (k + 1);
                for (int c = 0; c < p; ++c) csv << ',' << fmt17(datasets[k].x(j, c));
                csv << ',' << fmt17(datasets[k].y[j]) << '\n';
            }
        return csv.str();
    }());
    std::vector<double> theta_hat(run.theta_hat.data(),
                                  run.theta_hat.data() + run.theta_hat.size());
    out.add_json("result.json", {{"theta_hat", theta_hat},
                                 {"n_sync", run.n_sync},
                                 {"T", fl.T},
                                 {"H", fl.H}});
}

inline void run_fl_sync_search(const nlohmann::json& cfg, OutputWriter& out,
                               std::uint64_t seed) {
    const ModelSpec model = parse_model(cfg.at("model"), "model");
    const std::vector<int> sizes = require_int_array(cfg, "sizes", "config");
    FLConfig fl = parse_fl(cfg.at("fl"), "fl");
    const double tol = require_number(cfg, "tol", "config");
    const std::vector<LocalLoss> losses =
        make_model_losses(model, sizes, derive_seed(seed, 0), parse_scale(cfg));
    FLConfig dense = fl;
    dense.H = 1;
    const Eigen::VectorXd theta_ref = local_gd_run(losses, dense).theta_hat;
    const auto found = min_sync_search(losses, fl, theta_ref, tol);
    nlohmann::json j{{"tol", tol}, {"found", found.has_value()}};
    if (found) {
        j["H"] = found->H;
        j["n_sync"] = found->n_sync;
        j["achieved_distance"] = found->achieved_distance;
    }
    out.add_json("search.json", j);
}

inline void run_efficiency(const nlohmann::json& cfg, OutputWriter& out, long long cap) {
    const GameSpec game = parse_game(cfg.at("game"), "game");
    check_cap(game.m, cap);
    const double c = require_number(cfg, "c", "config");
    const int n_sync = int_or(cfg, "n_sync", 0);
    const AllocationResult alloc = allocate_all(game, cap);
    const double surplus = agent_surplus_total(alloc, game.m.m);

    nlohmann::json j;
    j["reports"] = nlohmann::json::array();
    j["reports"].push_back(to_json(make_efficiency_report(surplus, c, n_sync, "sync-set")));
    j["reports"].push_back(
        to_json(make_efficiency_report(surplus, c, n_sync + 1, "with-final")));

    if (cfg.contains("guarantee")) {
        const GuaranteeParams g = parse_guarantee(cfg["guarantee"], "guarantee");
        const double eps = epsilon_bound(game.m.total(), g);
        j["epsilon"] = eps;
        j["surplus_gap_bound"] = surplus_gap_bound(eps, g.L_rw);
    }
    if (cfg.contains("bound")) {
        const auto& b = cfg["bound"];
        expect_keys(b, {"theta0_dist", "eps", "L", "mu", "xi", "sigma_sq", "lambda_const",
                        "alpha_rate"},
                    "bound");
        SmoothnessConstants consts;
        consts.L = number_or(b, "L", 1.0);
        consts.mu = number_or(b, "mu", 1.0);
        consts.xi = number_or(b, "xi", 0.0);
        consts.sigma_sq = number_or(b, "sigma_sq", 0.0);
        const double theta0_dist = number_or(b, "theta0_dist", 1.0);
        const double eps = require_number(b, "eps", "bound");
        const double v_full = game.v(game.m.total());
        j["efficiency_upper_bound"] =
            efficiency_upper_bound(v_full, c, consts, theta0_dist, eps);
        if (b.contains("lambda_const"))
            j["efficiency_scaling_bound"] = efficiency_scaling_bound(
                v_full, c, b["lambda_const"].get<double>(), game.m.total(),
                number_or(b, "alpha_rate", 0.5));
    }
    out.add_json("efficiency.json", j);
}

/// Shared pipeline behind reproduce-nv and reproduce-portfolio: run the
/// unsplit game's FL schedule, then search both partitions for the minimal
/// synchronization count reaching the unsplit output within tol.
inline void run_reproduce(const nlohmann::json& cfg, OutputWriter& out, std::uint64_t seed,
                          const char* default_kind) {
    nlohmann::json model_json =
        cfg.contains("model") ? cfg["model"] : nlohmann::json::object();
    if (!model_json.contains("kind")) model_json["kind"] = default_kind;
    const ModelSpec model = parse_model(model_json, "model");
    const std::vector<int> sizes = require_int_array(cfg, "m", "config");
    std::vector<int> split_sizes;
    if (cfg.contains("split_m")) {
        split_sizes = require_int_array(cfg, "split_m", "config");
        int a = 0, b = 0;
        for (int s : sizes) a += s;
        for (int s : split_sizes) b += s;
        if (a != b) throw validation_error("split_m: must repartition the same sample pool");
    } else {
        int total = 0;
        for (int s : sizes) total += s;
        split_sizes.assign(static_cast<std::size_t>(total), 1);
    }
    const FLConfig fl = parse_fl(cfg.at("fl"), "fl");
    const double tol = require_number(cfg, "tol", "config");
    const LossScale scale = parse_scale(cfg);

    const std::uint64_t data_seed = derive_seed(seed, 0);
    const std::vector<LocalLoss> base_losses = make_model_losses(model, sizes, data_seed, scale);
    const std::vector<LocalLoss> split_losses =
        make_model_losses(model, split_sizes, data_seed, scale);

    FLConfig traced = fl;
    traced.record_iterates = false;
    // reference: the densest synchronization schedule on the unsplit data
    FLConfig dense = traced;
    dense.H = 1;
    const Eigen::VectorXd theta_ref = local_gd_run(base_losses, dense).theta_hat;

    FLResult base_trace = local_gd_run(base_losses, traced, &theta_ref);
    FLResult split_trace = local_gd_run(split_losses, traced, &theta_ref);
    out.add("no_split_trace.csv", distance_csv(base_trace.distance_trace));
    out.add("split_fixed_sync_trace.csv", distance_csv(split_trace.distance_trace));

    const auto base_found = min_sync_search(base_losses, fl, theta_ref, tol);
    const auto split_found = min_sync_search(split_losses, fl, theta_ref, tol);

    nlohmann::json j{{"tol", tol},
                     {"m", sizes},
                     {"split_m", split_sizes},
                     {"no_split_found", base_found.has_value()},
                     {"split_found", split_found.has_value()}};
    if (base_found) {
        j["no_split_H"] = base_found->H;
        j["no_split_n_sync"] = base_found->n_sync;
        j["no_split_distance"] = base_found->achieved_distance;
    }
    if (split_found) {
        j["split_H"] = split_found->H;
        j["split_n_sync"] = split_found->n_sync;
        j["split_distance"] = split_found->achieved_distance;
        FLConfig min_cfg = fl;
        min_cfg.H = split_found->H;
        FLResult min_trace = local_gd_run(split_losses, min_cfg, &theta_ref);
        out.add("split_min_sync_trace.csv", distance_csv(min_trace.distance_trace));
    }
    if (base_found && split_found && base_found->n_sync > 0)
        j["n_sync_ratio"] = static_cast<double>(split_found->n_sync) /
                            static_cast<double>(base_found->n_sync);
    out.add_json("comparison.json", j);
}

inline void run_reproduce_pricing(const nlohmann::json& cfg, OutputWriter& out,
                                  std::uint64_t seed) {
    const int n_max = int_or(cfg, "n_max", 16);
    if (n_max < 1) throw validation_error("n_max: must be >= 1");
    const double lambda_rate = number_or(cfg, "lambda", 1.0);
    const long long draws = static_cast<long long>(number_or(cfg, "mc_draws", 100000));
    const double c = number_or(cfg, "c", 1e-3);
    const double lambda_const = number_or(cfg, "lambda_const", 1e-3);
    const double alpha_rate = number_or(cfg, "alpha_rate", 0.5);
    const int curve_n_max = int_or(cfg, "curve_n_max", 10000);

    std::ostringstream csv;
    csv << "n,v_closed,v_mc,v_mc_se,realized_mc,realized_mc_se\n";
    for (int n = 1; n <= n_max; ++n) {
        const auto mc = pricing_value_mc(n, lambda_rate, draws, derive_seed(seed, n));
        const auto realized =
            pricing_realized_revenue_mc(n, lambda_rate, draws, derive_seed(seed, 1000 + n));
        csv << n << ',' << fmt17(pricing_value(n)) << ',' << fmt17(mc.mean) << ','
            << fmt17(mc.standard_error) << ',' << fmt17(realized.mean) << ','
            << fmt17(realized.standard_error) << '\n';
    }
    out.add("pricing_curve.csv", csv.str());

    std::ostringstream eff;
    eff << "n,bound\n";
    int argmax_n = 1;
    double best = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= curve_n_max; ++n) {
        const double bound =
            efficiency_scaling_bound(pricing_value(n), c, lambda_const, n, alpha_rate);
        eff << n << ',' << fmt17(bound) << '\n';
        if (bound > best) {
            best = bound;
            argmax_n = n;
        }
    }
    out.add("efficiency_curve.csv", eff.str());
    out.add_json("summary.json", {{"argmax_n", argmax_n},
                                  {"argmax_bound", best},
                                  {"interior", argmax_n > 1 && argmax_n < curve_n_max}});
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& scenario_kinds() {
    static const std::vector<std::string> kinds{
        "shapley",       "split-scan",   "equilibrium",
        "fl-run",        "fl-sync-search", "efficiency",
        "reproduce-nv",  "reproduce-portfolio", "reproduce-pricing"};
    return kinds;
}

inline void validate_config(const nlohmann::json& cfg) {
    expect_keys(cfg,
                {"scenario", "seed", "out", "enum_cap", "game", "identity", "model", "sizes",
                 "fl", "scale", "tol", "c", "n_sync", "guarantee", "bound", "m", "split_m",
                 "n_max", "lambda", "mc_draws", "lambda_const", "alpha_rate", "curve_n_max"},
                "config");
    const std::string kind = cfg.value("scenario", "");
    bool known = false;
    for (const auto& k : scenario_kinds())
        if (k == kind) known = true;
    if (!known) throw validation_error("scenario: unknown kind '" + kind + "'");
    if (cfg.contains("seed") &&
        (!cfg["seed"].is_number_unsigned() && !cfg["seed"].is_number_integer()))
        throw validation_error("seed: expected an unsigned integer");

    // full dry parse of every referenced section
    if (kind == "shapley" || kind == "split-scan" || kind == "equilibrium" ||
        kind == "efficiency") {
        if (!cfg.contains("game")) throw validation_error("game: required for " + kind);
        parse_game(cfg["game"], "game");
    }
    if (kind == "fl-run" || kind == "fl-sync-search") {
        parse_model(cfg.at("model"), "model");
        require_int_array(cfg, "sizes", "config");
        parse_fl(cfg.at("fl"), "fl");
        parse_scale(cfg);
    }
    if (kind == "fl-sync-search" || kind == "reproduce-nv" || kind == "reproduce-portfolio") {
        if (require_number(cfg, "tol", "config") <= 0.0)
            throw validation_error("tol: must be > 0");
    }
    if (kind == "reproduce-nv" || kind == "reproduce-portfolio") {
        require_int_array(cfg, "m", "config");
        parse_fl(cfg.at("fl"), "fl");
        parse_scale(cfg);
        if (cfg.contains("model")) {
            nlohmann::json m = cfg["model"];
            if (!m.contains("kind"))
                m["kind"] = kind == "reproduce-nv" ? "newsvendor" : "portfolio";
            parse_model(m, "model");
        }
    }
    if (kind == "efficiency") {
        if (require_number(cfg, "c", "config") < 0.0)
            throw validation_error("c: must be >= 0");
        if (cfg.contains("guarantee")) parse_guarantee(cfg["guarantee"], "guarantee");
    }
}

struct RunOptions {
    std::string out_dir;            // empty: use config's "out", else "out"
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;
    long long enum_cap = kDefaultEnumerationCap;
};

inline void run_scenario(const nlohmann::json& cfg, const RunOptions& opts) {
    validate_config(cfg);
    const std::string kind = cfg["scenario"].get<std::string>();
    const std::uint64_t seed =
        opts.has_seed_override ? opts.seed_override : cfg.value("seed", std::uint64_t{0});
    const std::string out_dir =
        !opts.out_dir.empty() ? opts.out_dir : cfg.value("out", std::string("out"));
    long long cap = opts.enum_cap;
    if (cfg.contains("enum_cap")) cap = cfg["enum_cap"].get<long long>();

    // the hash covers the effective inputs, seed/cap overrides included
    nlohmann::json effective = cfg;
    effective["seed"] = seed;
    effective["enum_cap"] = cap;
    effective.erase("out");
    OutputWriter out(out_dir, hex64(fnv1a(effective.dump())), seed);

    if (kind == "shapley") run_shapley(cfg, out, cap);
    else if (kind == "split-scan") run_split_scan(cfg, out, cap);
    else if (kind == "equilibrium") run_equilibrium(cfg, out, cap);
    else if (kind == "fl-run") run_fl(cfg, out, seed);
    else if (kind == "fl-sync-search") run_fl_sync_search(cfg, out, seed);
    else if (kind == "efficiency") run_efficiency(cfg, out, cap);
    else if (kind == "reproduce-nv") run_reproduce(cfg, out, seed, "newsvendor");
    else if (kind == "reproduce-portfolio") run_reproduce(cfg, out, seed, "portfolio");
    else if (kind == "reproduce-pricing") run_reproduce_pricing(cfg, out, seed);
    out.flush();
}

inline nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config: " + path);
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config parse error: ") + e.what());
    }
    return cfg;
}

} // namespace mcfl

#endif
