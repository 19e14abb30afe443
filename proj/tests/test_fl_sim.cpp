#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcfl/fl_sim.hpp"
#include "mcfl/rng.hpp"

using namespace mcfl;

namespace {

/// 0.5 (theta - a)' diag(d) (theta - a) with n_samples attached.
LocalLoss quadratic(const Eigen::VectorXd& d, const Eigen::VectorXd& a, int n_samples = 1) {
    LocalLoss out;
    out.dim = static_cast<int>(d.size());
    out.n_samples = n_samples;
    out.eval = [d, a](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        grad = d.cwiseProduct(theta - a);
        return 0.5 * (theta - a).dot(grad);
    };
    return out;
}

std::vector<LocalLoss> random_quadratics(Rng& rng, int K, int p) {
    std::vector<LocalLoss> losses;
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd d(p), a(p);
        for (int c = 0; c < p; ++c) {
            d[c] = 0.2 + rng.uniform01();
            a[c] = rng.normal();
        }
        losses.push_back(quadratic(d, a));
    }
    return losses;
}

} // namespace

TEST_CASE("sync schedule") {
    const auto s = sync_schedule(55, 10);
    CHECK(s.epochs == std::set<int>{10, 20, 30, 40, 50});
    CHECK(s.n_sync == 5);
    CHECK(sync_schedule(5, 5).epochs.empty());
    CHECK(sync_schedule(5, 5).n_sync == 0);
    const auto dense = sync_schedule(10, 1);
    CHECK(dense.n_sync == 9);
    CHECK(*dense.epochs.begin() == 1);
    CHECK(*dense.epochs.rbegin() == 9);
    CHECK_THROWS_AS(sync_schedule(4, 5), validation_error);

    for (int T = 1; T <= 200; ++T)
        for (int H = 1; H <= T; ++H) {
            const auto sch = sync_schedule(T, H);
            CHECK(static_cast<int>(sch.epochs.size()) == (T - 1) / H);
            CHECK(sch.n_sync == (T - 1) / H);
        }
}

TEST_CASE("single-identity quadratic converges in one exact step") {
    // L = (theta-1)^2/2, rho = 1, theta0 = 0, T = 2, H = 1
    const LocalLoss loss =
        quadratic(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    FLConfig cfg;
    cfg.rho = 1.0;
    cfg.theta0 = 0.0;
    cfg.T = 2;
    cfg.H = 1;
    cfg.output = OutputMode::LastIterate;
    const FLResult run = local_gd_run({loss}, cfg);
    CHECK(run.theta_hat[0] == 1.0);
    CHECK(run.n_sync == 1);
}

TEST_CASE("identical identities behave like a single one") {
    Rng rng(3);
    const auto single = random_quadratics(rng, 1, 2);
    const std::vector<LocalLoss> both{single[0], single[0]};
    for (int H : {1, 3, 7}) {
        FLConfig cfg;
        cfg.rho = 0.3;
        cfg.theta0 = 1.5;
        cfg.T = 20;
        cfg.H = H;
        const auto a = local_gd_run(single, cfg);
        const auto b = local_gd_run(both, cfg);
        CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("H=1 equals centralized descent on the uniform mean loss") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const auto losses = random_quadratics(rng, 3, 2);
        FLConfig cfg;
        cfg.rho = 0.4;
        cfg.theta0 = 2.0;
        cfg.T = 30;
        cfg.H = 1;
        cfg.output = OutputMode::LastIterate;
        const FLResult run = local_gd_run(losses, cfg);
        const auto traj = centralized_gd(uniform_mean_loss(losses), 0.4, 30, 2.0);
        CHECK((run.theta_hat - traj.back()).lpNorm<Eigen::Infinity>() <= 1e-12);
        // synchronized iterates reproduce the centralized trajectory
        REQUIRE(run.sync_snapshots.size() == 29);
        for (std::size_t t = 0; t < run.sync_snapshots.size(); ++t)
            CHECK((run.sync_snapshots[t] - traj[t + 1]).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("splitting an identity is invisible at H=1 with sample weighting") {
    // one 2-sample identity holding the per-sample mean of two quadratics,
    // versus the two samples as singleton identities
    const Eigen::VectorXd d1 = Eigen::VectorXd::Constant(2, 1.0);
    const Eigen::VectorXd d2 = Eigen::VectorXd::Constant(2, 3.0);
    Eigen::VectorXd a1(2), a2(2);
    a1 << 1.0, -2.0;
    a2 << 0.5, 4.0;
    LocalLoss merged;
    merged.dim = 2;
    merged.n_samples = 2;
    merged.eval = [=](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        grad = 0.5 * (d1.cwiseProduct(theta - a1) + d2.cwiseProduct(theta - a2));
        return 0.25 * (theta - a1).dot(d1.cwiseProduct(theta - a1)) +
               0.25 * (theta - a2).dot(d2.cwiseProduct(theta - a2));
    };
    const LocalLoss other = quadratic(Eigen::VectorXd::Constant(2, 2.0),
                                      Eigen::VectorXd::Constant(2, -1.0), 1);

    FLConfig cfg;
    cfg.rho = 0.2;
    cfg.theta0 = 2.0;
    cfg.T = 25;
    cfg.H = 1;
    cfg.averaging = AveragingMode::SampleWeighted;
    const auto unsplit = local_gd_run({merged, other}, cfg);
    const auto split = local_gd_run({quadratic(d1, a1), quadratic(d2, a2), other}, cfg);
    CHECK((unsplit.theta_hat - split.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-10);
    for (std::size_t t = 0; t < unsplit.global_trace.size(); ++t)
        CHECK((unsplit.global_trace[t] - split.global_trace[t]).lpNorm<Eigen::Infinity>() <=
              1e-10);

    // at H > 1 local drift makes the two runs diverge
    cfg.H = 5;
    const auto unsplit_h = local_gd_run({merged, other}, cfg);
    const auto split_h = local_gd_run({quadratic(d1, a1), quadratic(d2, a2), other}, cfg);
    CHECK((unsplit_h.theta_hat - split_h.theta_hat).norm() > 1e-6);
}

TEST_CASE("distance to the minimizer shrinks at successive sync points") {
    // identities share the minimizer but not the curvature, so local phases
    // contract toward theta_star for every H
    Rng rng(17);
    Eigen::VectorXd theta_star(3);
    theta_star << 0.4, -1.2, 2.0;
    std::vector<LocalLoss> losses;
    for (int k = 0; k < 4; ++k) {
        Eigen::VectorXd d(3);
        for (int c = 0; c < 3; ++c) d[c] = 0.2 + rng.uniform01();
        losses.push_back(quadratic(d, theta_star));
    }

    for (int H : {1, 2, 5}) {
        FLConfig cfg;
        cfg.rho = 0.5; // <= 1/L for these spectra
        cfg.theta0 = 3.0;
        cfg.T = 40;
        cfg.H = H;
        const auto run = local_gd_run(losses, cfg);
        double prev = (Eigen::VectorXd::Constant(3, cfg.theta0) - theta_star).norm();
        for (const auto& snap : run.sync_snapshots) {
            const double cur = (snap - theta_star).norm();
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("output modes") {
    Rng rng(29);
    const auto losses = random_quadratics(rng, 2, 1);
    FLConfig cfg;
    cfg.rho = 0.3;
    cfg.theta0 = 1.0;
    cfg.T = 12;
    cfg.H = 4;
    cfg.output = OutputMode::SyncAverage;
    const auto sync_avg = local_gd_run(losses, cfg);
    REQUIRE(sync_avg.sync_snapshots.size() == 2); // t = 4, 8
    Eigen::VectorXd mean = 0.5 * (sync_avg.sync_snapshots[0] + sync_avg.sync_snapshots[1]);
    CHECK((sync_avg.theta_hat - mean).norm() == 0.0);

    cfg.output = OutputMode::RunningAverage;
    const auto running = local_gd_run(losses, cfg);
    // theta^t is theta0 for t < 4, snapshot0 for 4 <= t < 8, snapshot1 after
    Eigen::VectorXd expect = (4.0 * Eigen::VectorXd::Constant(1, cfg.theta0) +
                              4.0 * sync_avg.sync_snapshots[0] +
                              4.0 * sync_avg.sync_snapshots[1]) /
                             12.0;
    CHECK((running.theta_hat - expect).lpNorm<Eigen::Infinity>() <= 1e-12);

    cfg.output = OutputMode::LastIterate;
    cfg.H = 12; // no syncs at all
    const auto last = local_gd_run(losses, cfg);
    CHECK(last.n_sync == 0);
    CHECK(last.sync_snapshots.empty());
}

TEST_CASE("divergence is reported with its epoch") {
    const LocalLoss loss =
        quadratic(Eigen::VectorXd::Constant(1, 1e8), Eigen::VectorXd::Zero(1));
    FLConfig cfg;
    cfg.rho = 1e8;
    cfg.theta0 = 1.0;
    cfg.T = 400;
    cfg.H = 400;
    CHECK_THROWS_AS(local_gd_run({loss}, cfg), divergence_error);
}

TEST_CASE("determinism of repeated runs") {
    Rng rng(31);
    const auto losses = random_quadratics(rng, 3, 2);
    FLConfig cfg;
    cfg.rho = 0.25;
    cfg.theta0 = -1.0;
    cfg.T = 17;
    cfg.H = 3;
    cfg.record_iterates = true;
    const auto a = local_gd_run(losses, cfg);
    const auto b = local_gd_run(losses, cfg);
    CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(a.global_trace.size() == b.global_trace.size());
    for (std::size_t t = 0; t < a.global_trace.size(); ++t)
        CHECK((a.global_trace[t] - b.global_trace[t]).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("min sync search") {
    Rng rng(37);
    const auto losses = random_quadratics(rng, 3, 2);
    FLConfig cfg;
    cfg.rho = 0.3;
    cfg.theta0 = 2.0;
    cfg.T = 30;
    cfg.H = 1;
    const Eigen::VectorXd theta_ref = local_gd_run(losses, cfg).theta_hat;

    // an enormous tolerance is met without any synchronization
    const auto loose = min_sync_search(losses, cfg, theta_ref, 100.0);
    REQUIRE(loose.has_value());
    CHECK(loose->H == 30);
    CHECK(loose->n_sync == 0);

    const auto tight = min_sync_search(losses, cfg, theta_ref, 1e-3);
    REQUIRE(tight.has_value());
    CHECK(tight->achieved_distance <= 1e-3);
    if (tight->H < 30) {
        FLConfig next = cfg;
        next.H = tight->H + 1;
        CHECK((local_gd_run(losses, next).theta_hat - theta_ref).norm() > 1e-3);
    }

    CHECK_FALSE(min_sync_search(losses, cfg, theta_ref + Eigen::VectorXd::Constant(2, 50.0),
                                1e-6)
                    .has_value());
    CHECK_THROWS_AS(min_sync_search(losses, cfg, theta_ref, 0.0), validation_error);
}

TEST_CASE("theoretical schedule") {
    const auto [H, rho] = theoretical_schedule(16, 16, 1.0);
    CHECK(H == 1); // raw value 0.25 clamps up to 1
    CHECK(rho == 0.25);
    const auto [H2, rho2] = theoretical_schedule(64, 64, 2.0);
    CHECK(rho2 == 1.0 / 8.0); // T = |m|: rho = 1/(4L)
    for (int T : {1, 7, 40})
        for (int n : {1, 5, 100}) {
            const auto [h, r] = theoretical_schedule(T, n, 1.0);
            CHECK(h >= 1);
            CHECK(h <= T);
            CHECK(r > 0.0);
        }
}

TEST_CASE("minimum synchronization lower bound") {
    SmoothnessConstants c;
    c.L = 1.0;
    c.mu = 1.0;
    c.xi = 0.0;
    c.sigma_sq = 0.0;
    CHECK(min_sync_lower_bound(c, 1.0, 1.0) == 512.0); // 64^{3/2}
    CHECK(min_sync_lower_bound(c, 1.0, 2.0) == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(min_sync_lower_bound(c, 2.0, 1.0) > min_sync_lower_bound(c, 1.0, 1.0));
    CHECK(min_sync_lower_bound(c, 1.0, 0.5) > min_sync_lower_bound(c, 1.0, 1.0));
    CHECK_THROWS_AS(min_sync_lower_bound(c, 1.0, 0.0), validation_error);
}

TEST_CASE("constants estimation on quadratics") {
    const LocalLoss iso = quadratic(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2));
    const auto c1 = estimate_constants({iso}, Eigen::VectorXd::Zero(2));
    CHECK(c1.L == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c1.mu == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c1.convex);

    Eigen::VectorXd d(2);
    d << 1.0, 4.0;
    const LocalLoss scaled = quadratic(d, Eigen::VectorXd::Zero(2));
    const auto c2 = estimate_constants({scaled}, Eigen::VectorXd::Zero(2));
    CHECK(c2.L == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(c2.mu == doctest::Approx(1.0).epsilon(1e-6));

    // symmetric pair around the origin: sigma^2 = mean squared local gradient
    Eigen::VectorXd a(2);
    a << 1.0, 0.0;
    const auto c3 = estimate_constants(
        {quadratic(Eigen::VectorXd::Ones(2), a), quadratic(Eigen::VectorXd::Ones(2), -a)},
        Eigen::VectorXd::Zero(2));
    CHECK(c3.sigma_sq == doctest::Approx(1.0).epsilon(1e-9)); // each gradient has norm 1

    // concave direction is flagged, not fatal
    Eigen::VectorXd neg(2);
    neg << 1.0, -0.5;
    const auto c4 = estimate_constants({quadratic(neg, Eigen::VectorXd::Zero(2))},
                                       Eigen::VectorXd::Zero(2));
    CHECK_FALSE(c4.convex);
}
