#ifndef MCFL_EFFICIENCY_HPP
#define MCFL_EFFICIENCY_HPP

// Performance-guarantee bounds, surplus aggregation and system efficiency.

#include <cmath>
#include <string>

#include "mcfl/errors.hpp"
#include "mcfl/fl_sim.hpp"
#include "mcfl/shapley.hpp"

#include <json.hpp>

namespace mcfl {

struct GuaranteeParams {
    double delta0 = 0.05;  // failure probability
    double beta1 = 1.0;    // concentration constants
    double beta2 = 1.0;
    double alpha_rate = 0.5;
    double L_rw = 1.0;     // Lipschitz product carrying estimator error to surplus

    void validate() const {
        if (delta0 <= 0.0 || delta0 >= 1.0)
            throw validation_error("guarantee: delta0 must lie in (0, 1)");
        if (beta1 <= 0.0 || beta2 <= 0.0)
            throw validation_error("guarantee: beta1 and beta2 must be > 0");
        if (alpha_rate <= 0.0) throw validation_error("guarantee: alpha_rate must be > 0");
        if (L_rw < 0.0) throw validation_error("guarantee: L_rw must be >= 0");
    }
};

/// High-probability estimator-error bound beta1 * ln(beta2/delta0) * n^{-alpha}.
inline double epsilon_bound(long long n, const GuaranteeParams& params) {
    params.validate();
    if (n < 1) throw validation_error("epsilon_bound: n must be >= 1");
    return params.beta1 * std::log(params.beta2 / params.delta0) *
           std::pow(static_cast<double>(n), -params.alpha_rate);
}

inline double surplus_gap_bound(double eps, double L_rw) {
    if (eps < 0.0 || L_rw < 0.0)
        throw validation_error("surplus_gap_bound: eps and L_rw must be >= 0");
    return L_rw * eps;
}

/// Sum of per-identity payoffs at the given participation profile. At full
/// participation, budget balance makes this v(|m|).
inline double agent_surplus_total(const AllocationResult& alloc, const Profile& tau) {
    check_conformant(tau, alloc.m);
    double sum = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k)
        sum += alloc.psi[k][static_cast<std::size_t>(tau[k])];
    return sum;
}

inline double system_efficiency(double total_surplus, double c, int n_sync) {
    if (c < 0.0) throw validation_error("system_efficiency: c must be >= 0");
    if (n_sync < 0) throw validation_error("system_efficiency: n_sync must be >= 0");
    return total_surplus - c * static_cast<double>(n_sync);
}

/// Upper bound on achievable efficiency: full-participation surplus minus the
/// synchronization cost of the minimal rounds needed for accuracy eps. Shares
/// min_sync_lower_bound so the two never drift apart.
inline double efficiency_upper_bound(double v_full, double c, const SmoothnessConstants& consts,
                                     double theta0_dist, double eps) {
    if (c < 0.0) throw validation_error("efficiency_upper_bound: c must be >= 0");
    return v_full - c * min_sync_lower_bound(consts, theta0_dist, eps);
}

/// Scaling form of the bound with the constants folded into lambda_const:
/// v_full - c * lambda * n^{3 alpha}.
inline double efficiency_scaling_bound(double v_full, double c, double lambda_const,
                                       long long total_samples, double alpha_rate) {
    if (c < 0.0 || lambda_const < 0.0)
        throw validation_error("efficiency_scaling_bound: c and lambda must be >= 0");
    if (total_samples < 1)
        throw validation_error("efficiency_scaling_bound: total_samples must be >= 1");
    if (alpha_rate <= 0.0)
        throw validation_error("efficiency_scaling_bound: alpha_rate must be > 0");
    return v_full -
           c * lambda_const * std::pow(static_cast<double>(total_samples), 3.0 * alpha_rate);
}

struct EfficiencyReport {
    double surplus = 0.0;
    double c = 0.0;
    int n_sync = 0;
    double pi = 0.0;
    std::string convention = "sync-set"; // "sync-set" (floor((T-1)/H)) or "with-final"
    bool has_bound = false;
    double bound = 0.0;
};

/// Builds the report with pi computed once, so the identity pi = surplus -
/// c * n_sync holds by construction.
inline EfficiencyReport make_efficiency_report(double surplus, double c, int n_sync,
                                               std::string convention = "sync-set") {
    EfficiencyReport r;
    r.surplus = surplus;
    r.c = c;
    r.n_sync = n_sync;
    r.pi = system_efficiency(surplus, c, n_sync);
    r.convention = std::move(convention);
    return r;
}

inline nlohmann::json to_json(const EfficiencyReport& r) {
    nlohmann::json j{{"surplus", r.surplus}, {"c", r.c},           {"n_sync", r.n_sync},
                     {"pi", r.pi},           {"convention", r.convention}};
    j["bound"] = r.has_bound ? nlohmann::json(r.bound) : nlohmann::json(nullptr);
    return j;
}

} // namespace mcfl

#endif
