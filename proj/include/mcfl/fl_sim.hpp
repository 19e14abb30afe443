#ifndef MCFL_FL_SIM_HPP
#define MCFL_FL_SIM_HPP

// Deterministic local-gradient-descent simulator over identity-held losses,
// with synchronization accounting and minimal-synchronization search.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcfl/errors.hpp"

namespace mcfl {

/// Deterministic evaluator of one identity's loss: fills the gradient and
/// returns the value.
struct LocalLoss {
    int n_samples = 1;
    int dim = 1;
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> eval;

    double value(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd g(theta.size());
        return eval(theta, g);
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd g(theta.size());
        eval(theta, g);
        return g;
    }
};

enum class AveragingMode { Uniform, SampleWeighted };

enum class OutputMode {
    SyncAverage,    // mean of the synchronized iterates (the algorithm's output)
    RunningAverage, // (1/T) sum of the global iterate held constant between syncs
    LastIterate     // averaged local iterates after the final epoch
};

struct FLConfig {
    double rho = 0.1;
    double theta0 = 0.0; // scalar broadcast to all parameter components
    int T = 1;
    int H = 1;
    AveragingMode averaging = AveragingMode::Uniform;
    OutputMode output = OutputMode::SyncAverage;
    bool record_iterates = false;

    void validate() const {
        if (rho <= 0.0) throw validation_error("fl config: rho must be > 0");
        if (T < 1) throw validation_error("fl config: T must be >= 1");
        if (H < 1 || H > T) throw validation_error("fl config: need 1 <= H <= T");
    }
};

struct SyncSchedule {
    std::set<int> epochs; // {H, 2H, ...} intersected with [1, T-1]
    int n_sync = 0;       // floor((T-1)/H)
};

inline SyncSchedule sync_schedule(int T, int H) {
    if (H < 1 || H > T) throw validation_error("sync_schedule: need 1 <= H <= T");
    SyncSchedule s;
    for (int t = H; t <= T - 1; t += H) s.epochs.insert(t);
    s.n_sync = (T - 1) / H;
    return s;
}

struct FLResult {
    Eigen::VectorXd theta_hat;
    int n_sync = 0;
    std::vector<Eigen::VectorXd> sync_snapshots;          // synchronized global iterates
    std::vector<Eigen::VectorXd> global_trace;            // per-epoch averaged iterate
    std::vector<std::vector<Eigen::VectorXd>> local_iterates; // [epoch][identity], optional
    std::vector<double> distance_trace;                   // per-epoch, if reference given
};

/// Runs the local-GD / FedAvg loop. At each sync epoch t in {H, 2H, ...}
/// up to T-1 the platform averages the local iterates, broadcasts the average
/// as theta^t, and every identity takes its local step from there; between
/// syncs identities step on their own. Averaging before the epoch's step makes
/// the H=1 schedule coincide with centralized descent on the averaged loss
/// exactly, not just to first order in rho.
inline FLResult local_gd_run(const std::vector<LocalLoss>& losses, const FLConfig& cfg,
                             const Eigen::VectorXd* reference = nullptr) {
    cfg.validate();
    if (losses.empty()) throw validation_error("local_gd_run: need at least one identity");
    const int p = losses[0].dim;
    for (const auto& l : losses)
        if (l.dim != p) throw validation_error("local_gd_run: losses disagree on dimension");
    const int K = static_cast<int>(losses.size());

    std::vector<double> weights(static_cast<std::size_t>(K), 1.0 / K);
    if (cfg.averaging == AveragingMode::SampleWeighted) {
        double n_total = 0.0;
        for (const auto& l : losses) n_total += l.n_samples;
        for (int k = 0; k < K; ++k)
            weights[static_cast<std::size_t>(k)] = losses[static_cast<std::size_t>(k)].n_samples / n_total;
    }

    const SyncSchedule schedule = sync_schedule(cfg.T, cfg.H);
    FLResult result;
    result.n_sync = schedule.n_sync;

    std::vector<Eigen::VectorXd> theta(
        static_cast<std::size_t>(K), Eigen::VectorXd::Constant(p, cfg.theta0));
    Eigen::VectorXd global = Eigen::VectorXd::Constant(p, cfg.theta0);
    Eigen::VectorXd running_sum = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd grad(p), averaged(p);

    auto weighted_average = [&](Eigen::VectorXd& out,
                                const std::vector<Eigen::VectorXd>& xs) {
        out.setZero();
        for (int k = 0; k < K; ++k)
            out += weights[static_cast<std::size_t>(k)] * xs[static_cast<std::size_t>(k)];
    };

    for (int t = 0; t < cfg.T; ++t) {
        if (schedule.epochs.count(t) > 0) {
            weighted_average(averaged, theta);
            if (!averaged.allFinite())
                throw divergence_error("non-finite iterate at epoch " + std::to_string(t), t);
            for (auto& th : theta) th = averaged;
            global = averaged; // theta^t, the synchronized iterate
            result.sync_snapshots.push_back(averaged);
        }
        running_sum += global; // global iterate held constant between syncs

        if (cfg.record_iterates) result.local_iterates.push_back(theta);
        weighted_average(averaged, theta);
        result.global_trace.push_back(averaged);
        if (reference != nullptr)
            result.distance_trace.push_back((averaged - *reference).norm());

        for (int k = 0; k < K; ++k) {
            auto& th = theta[static_cast<std::size_t>(k)];
            losses[static_cast<std::size_t>(k)].eval(th, grad);
            th -= cfg.rho * grad;
            if (!th.allFinite())
                throw divergence_error(
                    "non-finite iterate at epoch " + std::to_string(t) + " identity " +
                        std::to_string(k + 1),
                    t);
        }
    }

    Eigen::VectorXd final_avg(p);
    weighted_average(final_avg, theta);
    switch (cfg.output) {
        case OutputMode::SyncAverage:
            if (result.sync_snapshots.empty()) {
                result.theta_hat = final_avg;
            } else {
                Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
                for (const auto& s : result.sync_snapshots) sum += s;
                result.theta_hat = sum / static_cast<double>(result.sync_snapshots.size());
            }
            break;
        case OutputMode::RunningAverage:
            result.theta_hat = running_sum / static_cast<double>(cfg.T);
            break;
        case OutputMode::LastIterate:
            result.theta_hat = final_avg;
            break;
    }
    return result;
}

/// Plain gradient descent on a single loss; the H=1 oracle.
inline std::vector<Eigen::VectorXd> centralized_gd(const LocalLoss& loss, double rho, int T,
                                                   double theta0) {
    if (rho < 0.0) throw validation_error("centralized_gd: rho must be >= 0");
    if (T < 0) throw validation_error("centralized_gd: T must be >= 0");
    std::vector<Eigen::VectorXd> trajectory;
    trajectory.reserve(static_cast<std::size_t>(T) + 1);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(loss.dim, theta0);
    Eigen::VectorXd grad(loss.dim);
    trajectory.push_back(theta);
    for (int t = 0; t < T; ++t) {
        loss.eval(theta, grad);
        theta -= rho * grad;
        if (!theta.allFinite())
            throw divergence_error("non-finite iterate at epoch " + std::to_string(t), t);
        trajectory.push_back(theta);
    }
    return trajectory;
}

/// Mean of the identities' losses; centralized_gd on this reproduces the H=1
/// uniform-averaging trajectory exactly.
inline LocalLoss uniform_mean_loss(const std::vector<LocalLoss>& losses) {
    if (losses.empty()) throw validation_error("uniform_mean_loss: empty loss list");
    LocalLoss out;
    out.dim = losses[0].dim;
    out.n_samples = 0;
    for (const auto& l : losses) out.n_samples += l.n_samples;
    out.eval = [losses](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        grad.setZero();
        Eigen::VectorXd g(theta.size());
        double value = 0.0;
        for (const auto& l : losses) {
            value += l.eval(theta, g);
            grad += g;
        }
        const double inv = 1.0 / static_cast<double>(losses.size());
        grad *= inv;
        return value * inv;
    };
    return out;
}

struct SyncSearchResult {
    int H = 0;
    int n_sync = 0;
    double achieved_distance = 0.0;
    FLResult run;
};

/// Scans H from T down to 1 (synchronization count non-decreasing) and
/// returns the largest H whose output lands within tol of the reference.
inline std::optional<SyncSearchResult> min_sync_search(const std::vector<LocalLoss>& losses,
                                                       const FLConfig& base,
                                                       const Eigen::VectorXd& theta_ref,
                                                       double tol) {
    if (tol <= 0.0) throw validation_error("min_sync_search: tol must be > 0");
    if (!theta_ref.allFinite()) throw validation_error("min_sync_search: reference not finite");
    for (int H = base.T; H >= 1; --H) {
        FLConfig cfg = base;
        cfg.H = H;
        FLResult run = local_gd_run(losses, cfg);
        const double dist = (run.theta_hat - theta_ref).norm();
        if (dist <= tol)
            return SyncSearchResult{H, run.n_sync, dist, std::move(run)};
    }
    return std::nullopt;
}

/// Interval and step size from the asymptotic schedule H = T^{1/4} |m|^{-3/4},
/// rho = sqrt(|m|) / (4 L sqrt(T)); H is rounded and clamped to [1, T].
inline std::pair<int, double> theoretical_schedule(int T, int total_samples, double L) {
    if (T < 1 || total_samples < 1 || L <= 0.0)
        throw validation_error("theoretical_schedule: need T, |m| >= 1 and L > 0");
    const double raw =
        std::pow(static_cast<double>(T), 0.25) * std::pow(static_cast<double>(total_samples), -0.75);
    int H = static_cast<int>(std::lround(raw));
    H = std::max(1, std::min(H, T));
    const double rho = std::sqrt(static_cast<double>(total_samples)) /
                       (4.0 * L * std::sqrt(static_cast<double>(T)));
    return {H, rho};
}

/// Curvature and gradient-scale constants of the global loss, estimated
/// numerically for guarantee reporting.
struct SmoothnessConstants {
    double L = 1.0;       // smoothness (largest Hessian eigenvalue)
    double mu = 1.0;      // strong convexity (smallest Hessian eigenvalue)
    double xi = 0.0;      // gradient-norm bound over the probe box
    double sigma_sq = 0.0; // (1/|m|) sum_k ||grad L_k(theta*)||^2
    bool convex = true;
};

/// Lower bound on the synchronizations needed to reach accuracy eps:
/// ((64 L d0^2 / mu + 12 sigma^2 / (L mu))^{1/2} + xi / (4L))^3 * eps^{-3}.
inline double min_sync_lower_bound(const SmoothnessConstants& c, double theta0_dist,
                                   double eps) {
    if (eps <= 0.0 || c.mu <= 0.0 || c.L <= 0.0)
        throw validation_error("min_sync_lower_bound: need eps, mu, L > 0");
    const double inner = std::sqrt(64.0 * c.L * theta0_dist * theta0_dist / c.mu +
                                   12.0 * c.sigma_sq / (c.L * c.mu)) +
                         c.xi / (4.0 * c.L);
    return inner * inner * inner / (eps * eps * eps);
}

/// Estimates SmoothnessConstants at the global minimizer: L and mu from the
/// extreme eigenvalues of a central-difference Hessian of sum_k L_k, xi as the
/// max sampled gradient norm over the probe box, sigma^2 by its definition.
inline SmoothnessConstants estimate_constants(const std::vector<LocalLoss>& losses,
                                              const Eigen::VectorXd& theta_star,
                                              double probe_radius = 1.0,
                                              int probe_points_per_dim = 5) {
    if (losses.empty()) throw validation_error("estimate_constants: empty loss list");
    const int p = losses[0].dim;
    auto global_grad = [&](const Eigen::VectorXd& theta) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd g(p);
        for (const auto& l : losses) {
            l.eval(theta, g);
            sum += g;
        }
        return sum;
    };

    const double h = 1e-5 * std::max(1.0, theta_star.norm());
    Eigen::MatrixXd hess(p, p);
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd plus = theta_star, minus = theta_star;
        plus[j] += h;
        minus[j] -= h;
        hess.col(j) = (global_grad(plus) - global_grad(minus)) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    SmoothnessConstants out;
    out.L = eig.eigenvalues().maxCoeff();
    out.mu = eig.eigenvalues().minCoeff();
    out.convex = out.mu > -1e-8;

    int total_samples = 0;
    Eigen::VectorXd g(p);
    for (const auto& l : losses) {
        l.eval(theta_star, g);
        out.sigma_sq += g.squaredNorm();
        total_samples += l.n_samples;
    }
    out.sigma_sq /= static_cast<double>(total_samples);

    // grid probe of per-identity gradient norms around theta_star
    const int grid = std::max(2, probe_points_per_dim);
    Eigen::VectorXd probe(p);
    std::vector<int> idx(static_cast<std::size_t>(p), 0);
    for (;;) {
        for (int j = 0; j < p; ++j)
            probe[j] = theta_star[j] - probe_radius +
                       2.0 * probe_radius * idx[static_cast<std::size_t>(j)] / (grid - 1);
        for (const auto& l : losses) {
            l.eval(probe, g);
            out.xi = std::max(out.xi, g.norm());
        }
        int j = p - 1;
        while (j >= 0 && idx[static_cast<std::size_t>(j)] == grid - 1)
            idx[static_cast<std::size_t>(j--)] = 0;
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
    }
    return out;
}

} // namespace mcfl

#endif
