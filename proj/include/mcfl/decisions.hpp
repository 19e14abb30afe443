#ifndef MCFL_DECISIONS_HPP
#define MCFL_DECISIONS_HPP

// Decision-aware objectives: newsvendor, risk-averse portfolio, and pricing.
// Each provides identity-local losses for the simulator, a plug-in decision
// from an estimate, and true-distribution evaluation of that decision.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcfl/errors.hpp"
#include "mcfl/fl_sim.hpp"
#include "mcfl/game.hpp"
#include "mcfl/rng.hpp"

namespace mcfl {

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double normal_pdf(double z) {
    return 0.3989422804014326779399461 * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// Inverse standard normal CDF: Acklam's rational approximation polished with
/// one Halley step, good to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw validation_error("normal_quantile: p must lie strictly in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// ---------------------------------------------------------------------------
// Data generation
// ---------------------------------------------------------------------------

struct LinearDemandModel {
    Eigen::VectorXd theta_star; // true coefficients
    double sigma = 1.0;         // response noise std
    double sigma_x = 1.0;       // feature std

    void validate() const {
        if (sigma < 0.0) throw validation_error("model: sigma must be >= 0");
        if (sigma_x <= 0.0) throw validation_error("model: sigma_x must be > 0");
        if (theta_star.size() < 1) throw validation_error("model: theta_star must be non-empty");
    }
};

struct IdentityDataset {
    Eigen::MatrixXd x;  // n x p feature rows
    Eigen::VectorXd y;  // responses (demand d or return xi)
    int owner = 0;

    int n() const { return static_cast<int>(x.rows()); }
    int p() const { return static_cast<int>(x.cols()); }
};

/// Features i.i.d. Normal(0, sigma_x^2) per component, response x'theta* +
/// Normal(0, sigma^2) noise; fully determined by the seed.
inline IdentityDataset generate_dataset(const LinearDemandModel& model, int n,
                                        std::uint64_t seed, int owner = 0) {
    model.validate();
    if (n < 1) throw validation_error("generate_dataset: n must be >= 1");
    const int p = static_cast<int>(model.theta_star.size());
    IdentityDataset out;
    out.owner = owner;
    out.x.resize(n, p);
    out.y.resize(n);
    Rng rng(seed);
    for (int j = 0; j < n; ++j) {
        for (int c = 0; c < p; ++c) out.x(j, c) = rng.normal(0.0, model.sigma_x);
        out.y[j] = out.x.row(j).dot(model.theta_star) + rng.normal(0.0, model.sigma);
    }
    return out;
}

inline std::vector<IdentityDataset> partition_dataset(const IdentityDataset& data,
                                                      const std::vector<int>& sizes) {
    int sum = 0;
    for (int s : sizes) sum += s;
    if (sum != data.n()) throw validation_error("partition_dataset: sizes must sum to n");
    std::vector<IdentityDataset> out;
    int row = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        IdentityDataset part;
        part.owner = static_cast<int>(k);
        part.x = data.x.middleRows(row, sizes[k]);
        part.y = data.y.segment(row, sizes[k]);
        row += sizes[k];
        out.push_back(std::move(part));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Newsvendor
// ---------------------------------------------------------------------------

struct NewsvendorParams {
    double h = 0.1;       // unit overstock cost
    double b = 0.9;       // unit understock cost
    double lambda_reg = 0.0;

    void validate() const {
        if (h <= 0.0 || b <= 0.0) throw validation_error("newsvendor: h and b must be > 0");
        if (lambda_reg < 0.0) throw validation_error("newsvendor: lambda_reg must be >= 0");
    }
    double critical_ratio() const { return b / (b + h); }
};

inline double nv_loss(double w, double d, const NewsvendorParams& params) {
    return params.h * std::max(w - d, 0.0) + params.b * std::max(d - w, 0.0);
}

/// Subgradient in w; 0 at the kink so w = d is a fixed point.
inline double nv_subgradient(double w, double d, const NewsvendorParams& params) {
    if (w > d) return params.h;
    if (w < d) return -params.b;
    return 0.0;
}

/// Identity-local newsvendor loss: (sum_j l(x_j'theta, d_j) +
/// reg_share * lambda * |theta|^2) / scale. Callers pick the scale: n_k gives
/// the per-sample mean (partition-invariant under sample-weighted averaging),
/// the coalition total |tau| reproduces the 1/|tau| global objective when the
/// local losses are summed.
inline LocalLoss nv_local_loss(IdentityDataset dataset, const NewsvendorParams& params,
                               double reg_share, double scale) {
    params.validate();
    if (reg_share < 0.0 || reg_share > 1.0)
        throw validation_error("nv_local_loss: reg_share must lie in [0, 1]");
    if (scale <= 0.0) throw validation_error("nv_local_loss: scale must be > 0");
    LocalLoss out;
    out.n_samples = dataset.n();
    out.dim = dataset.p();
    out.eval = [dataset = std::move(dataset), params, reg_share,
                scale](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        if (theta.size() != dataset.p())
            throw validation_error("nv_local_loss: parameter dimension mismatch");
        double value = 0.0;
        grad.setZero();
        for (int j = 0; j < dataset.n(); ++j) {
            const double w = dataset.x.row(j).dot(theta);
            value += nv_loss(w, dataset.y[j], params);
            grad += nv_subgradient(w, dataset.y[j], params) * dataset.x.row(j).transpose();
        }
        value += reg_share * params.lambda_reg * theta.squaredNorm();
        grad += 2.0 * reg_share * params.lambda_reg * theta;
        grad /= scale;
        return value / scale;
    };
    return out;
}

/// Order quantity for Normal(mu, sigma^2) demand: the b/(b+h) quantile.
inline double nv_plugin_decision(double mu, double sigma, const NewsvendorParams& params) {
    params.validate();
    if (sigma < 0.0) throw validation_error("nv_plugin_decision: sigma must be >= 0");
    if (sigma == 0.0) return mu;
    return mu + sigma * normal_quantile(params.critical_ratio());
}

/// Empirical-distribution variant: smallest order statistic with cdf >= b/(b+h).
inline double nv_plugin_decision(std::vector<double> demand_sample,
                                 const NewsvendorParams& params) {
    params.validate();
    if (demand_sample.empty())
        throw validation_error("nv_plugin_decision: empty demand sample");
    std::sort(demand_sample.begin(), demand_sample.end());
    const double q = params.critical_ratio();
    const std::size_t idx = std::min(
        demand_sample.size() - 1,
        static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(demand_sample.size())) - 1.0));
    return demand_sample[idx];
}

/// Expected cost under Normal(mu, sigma^2) demand, via the standard normal
/// loss function.
inline double nv_expected_cost(double w, double mu, double sigma,
                               const NewsvendorParams& params) {
    params.validate();
    if (sigma < 0.0) throw validation_error("nv_expected_cost: sigma must be >= 0");
    if (sigma == 0.0)
        return params.h * std::max(w - mu, 0.0) + params.b * std::max(mu - w, 0.0);
    const double z = (w - mu) / sigma;
    const double expected_over = sigma * (normal_pdf(z) + z * normal_cdf(z));
    const double expected_under = sigma * (normal_pdf(z) - z * (1.0 - normal_cdf(z)));
    return params.h * expected_over + params.b * expected_under;
}

inline MonteCarloEstimate nv_expected_cost_mc(double w, double mu, double sigma,
                                              const NewsvendorParams& params,
                                              long long draws, std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < draws; ++i) {
        const double cost = nv_loss(w, rng.normal(mu, sigma), params);
        sum += cost;
        sumsq += cost * cost;
    }
    const double mean = sum / static_cast<double>(draws);
    const double var = (sumsq - static_cast<double>(draws) * mean * mean) /
                       static_cast<double>(draws - 1);
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(draws)), draws};
}

// ---------------------------------------------------------------------------
// Portfolio
// ---------------------------------------------------------------------------

struct PortfolioParams {
    double alpha_risk = 0.5;
    double sigma = 0.01;
    Eigen::VectorXd theta_star;

    void validate() const {
        if (alpha_risk <= 0.0) throw validation_error("portfolio: alpha_risk must be > 0");
        if (sigma < 0.0) throw validation_error("portfolio: sigma must be >= 0");
    }
};

/// Identity-local squared-error loss (sum_j (x_j'theta - xi_j)^2) / scale.
inline LocalLoss portfolio_local_loss(IdentityDataset dataset, double scale) {
    if (scale <= 0.0) throw validation_error("portfolio_local_loss: scale must be > 0");
    LocalLoss out;
    out.n_samples = dataset.n();
    out.dim = dataset.p();
    out.eval = [dataset = std::move(dataset),
                scale](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        if (theta.size() != dataset.p())
            throw validation_error("portfolio_local_loss: parameter dimension mismatch");
        const Eigen::VectorXd residual = dataset.x * theta - dataset.y;
        grad = 2.0 * dataset.x.transpose() * residual / scale;
        return residual.squaredNorm() / scale;
    };
    return out;
}

struct PortfolioDecision {
    double w = 0.0;
    double w0 = 0.0;
    bool degenerate = false; // sigma = 0: unbounded position flagged, not taken
};

/// Minimizer of E[alpha (w xi - w0)^2 - w xi] for xi ~ Normal(mu, sigma^2):
/// w0* = w* mu removes the mean-tracking term, leaving w* = mu / (2 alpha sigma^2).
inline PortfolioDecision portfolio_plugin_decision(double mu_hat, double sigma,
                                                   double alpha_risk) {
    if (alpha_risk <= 0.0)
        throw validation_error("portfolio_plugin_decision: alpha_risk must be > 0");
    if (sigma < 0.0) throw validation_error("portfolio_plugin_decision: sigma must be >= 0");
    PortfolioDecision d;
    if (sigma == 0.0) {
        d.degenerate = true;
        return d;
    }
    d.w = mu_hat / (2.0 * alpha_risk * sigma * sigma);
    d.w0 = d.w * mu_hat;
    return d;
}

/// Expected profit E[-c] = w mu - alpha ((w mu - w0)^2 + w^2 sigma^2).
inline double portfolio_expected_profit(double w, double w0, double mu, double sigma,
                                        double alpha_risk) {
    const double tracking = w * mu - w0;
    return w * mu - alpha_risk * (tracking * tracking + w * w * sigma * sigma);
}

inline MonteCarloEstimate portfolio_expected_profit_mc(double w, double w0, double mu,
                                                       double sigma, double alpha_risk,
                                                       long long draws, std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < draws; ++i) {
        const double xi = rng.normal(mu, sigma);
        const double profit = w * xi - alpha_risk * (w * xi - w0) * (w * xi - w0);
        sum += profit;
        sumsq += profit * profit;
    }
    const double mean = sum / static_cast<double>(draws);
    const double var = (sumsq - static_cast<double>(draws) * mean * mean) /
                       static_cast<double>(draws - 1);
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(draws)), draws};
}

// ---------------------------------------------------------------------------
// Pricing
// ---------------------------------------------------------------------------

/// Optimal price under an exponential willingness-to-pay with estimated mean
/// theta_hat: p maximizing p exp(-p / theta_hat) is theta_hat itself.
inline double pricing_decision(double theta_hat) {
    if (theta_hat <= 0.0) throw validation_error("pricing_decision: mean estimate must be > 0");
    return theta_hat;
}

inline double pricing_expected_revenue(double price, double lambda_true) {
    if (price <= 0.0 || lambda_true <= 0.0)
        throw validation_error("pricing_expected_revenue: price and rate must be > 0");
    return price * std::exp(-lambda_true * price);
}

/// End-to-end Monte Carlo of the pricing surplus: estimate the mean from n
/// exponential draws, price at the estimate, realize expected revenue under
/// the true rate. Averages to pricing_value(n) when lambda_true = 1.
inline MonteCarloEstimate pricing_realized_revenue_mc(int n, double lambda_true,
                                                      long long replications,
                                                      std::uint64_t seed) {
    if (n < 1) throw validation_error("pricing_realized_revenue_mc: n must be >= 1");
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < replications; ++i) {
        const double theta_hat = rng.erlang(n, lambda_true) / static_cast<double>(n);
        const double rev = pricing_expected_revenue(pricing_decision(theta_hat), lambda_true);
        sum += rev;
        sumsq += rev * rev;
    }
    const double mean = sum / static_cast<double>(replications);
    const double var = (sumsq - static_cast<double>(replications) * mean * mean) /
                       static_cast<double>(replications - 1);
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(replications)),
            replications};
}

// ---------------------------------------------------------------------------
// Dataset CSV round trip: identity,x_1..x_p,response
// ---------------------------------------------------------------------------

inline void save_datasets_csv(const std::vector<IdentityDataset>& datasets,
                              const std::string& path) {
    if (datasets.empty()) throw validation_error("save_datasets_csv: nothing to save");
    const int p = datasets[0].p();
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open for writing: " + path);
    out << "identity";
    for (int c = 1; c <= p; ++c) out << ",x_" << c;
    out << ",response\n";
    char buf[32];
    for (std::size_t k = 0; k < datasets.size(); ++k) {
        const auto& d = datasets[k];
        for (int j = 0; j < d.n(); ++j) {
            out << (k + 1);
            for (int c = 0; c < p; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", d.x(j, c));
                out << ',' << buf;
            }
            std::snprintf(buf, sizeof buf, "%.17g", d.y[j]);
            out << ',' << buf << '\n';
        }
    }
}

inline std::vector<IdentityDataset> load_datasets_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("identity,", 0) != 0)
        throw validation_error("dataset CSV must start with identity,x_1..,response");
    const int p = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
    if (p < 1) throw validation_error("dataset CSV needs at least one feature column");
    std::vector<std::vector<std::pair<std::vector<double>, double>>> rows_by_identity;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const int identity = std::stoi(cell);
        if (identity < 1) throw validation_error("identity indices are 1-based");
        if (static_cast<int>(rows_by_identity.size()) < identity)
            rows_by_identity.resize(static_cast<std::size_t>(identity));
        std::vector<double> features;
        for (int c = 0; c < p; ++c) {
            std::getline(row, cell, ',');
            features.push_back(std::stod(cell));
        }
        std::getline(row, cell, ',');
        rows_by_identity[static_cast<std::size_t>(identity - 1)].emplace_back(
            std::move(features), std::stod(cell));
    }
    std::vector<IdentityDataset> out;
    for (std::size_t k = 0; k < rows_by_identity.size(); ++k) {
        const auto& rows = rows_by_identity[k];
        if (rows.empty()) throw validation_error("dataset CSV has a gap in identity indices");
        IdentityDataset d;
        d.owner = static_cast<int>(k);
        d.x.resize(static_cast<int>(rows.size()), p);
        d.y.resize(static_cast<int>(rows.size()));
        for (std::size_t j = 0; j < rows.size(); ++j) {
            for (int c = 0; c < p; ++c) d.x(static_cast<int>(j), c) = rows[j].first[static_cast<std::size_t>(c)];
            d.y[static_cast<int>(j)] = rows[j].second;
        }
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace mcfl

#endif
