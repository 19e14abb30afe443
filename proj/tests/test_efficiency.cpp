#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcfl/efficiency.hpp"
#include "mcfl/rng.hpp"

using namespace mcfl;

TEST_CASE("epsilon bound") {
    GuaranteeParams g;
    g.delta0 = 0.05;
    g.beta1 = 1.0;
    g.beta2 = 0.05; // log(beta2/delta0) = 0
    CHECK(epsilon_bound(10, g) == 0.0);

    g.beta1 = 2.0;
    g.beta2 = 0.05 * std::exp(1.0); // log = 1
    g.alpha_rate = 0.5;
    CHECK(epsilon_bound(4, g) == doctest::Approx(1.0).epsilon(1e-12)); // 2 * 4^{-1/2}
    CHECK(epsilon_bound(16, g) == doctest::Approx(0.5 * epsilon_bound(4, g)).epsilon(1e-12));

    CHECK_THROWS_AS(epsilon_bound(0, g), validation_error);
    GuaranteeParams bad;
    bad.delta0 = 1.0;
    CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("surplus gap bound") {
    CHECK(surplus_gap_bound(0.0, 5.0) == 0.0);
    CHECK(surplus_gap_bound(0.3, 1.0) == 0.3);
    CHECK(surplus_gap_bound(0.3, 2.0) == 2.0 * surplus_gap_bound(0.3, 1.0));
    CHECK_THROWS_AS(surplus_gap_bound(-1.0, 1.0), validation_error);
}

TEST_CASE("agent surplus totals") {
    const GameSpec game(MaxDataVector({2, 1}),
                        make_value_table(ValueTableKind::Pricing, 0.0, 3));
    const AllocationResult alloc = allocate_all(game);
    CHECK(agent_surplus_total(alloc, {2, 1}) ==
          doctest::Approx(pricing_value(3)).epsilon(1e-9)); // budget balance
    CHECK(agent_surplus_total(alloc, {0, 0}) == 0.0);
    CHECK_THROWS_AS(agent_surplus_total(alloc, {3, 0}), validation_error);

    const GameSpec sole(MaxDataVector({3}), make_value_table(ValueTableKind::Linear, 2.0, 3));
    CHECK(agent_surplus_total(allocate_all(sole), {3}) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("system efficiency") {
    CHECK(system_efficiency(1.0, 0.0, 50) == 1.0);
    CHECK(system_efficiency(1.0, 0.01, 19) == doctest::Approx(0.81).epsilon(1e-15));
    CHECK(system_efficiency(1.0, 0.01, 20) < system_efficiency(1.0, 0.01, 19));
    CHECK_THROWS_AS(system_efficiency(1.0, -0.1, 1), validation_error);
}

TEST_CASE("efficiency upper bound shares the sync lower bound") {
    SmoothnessConstants c;
    c.L = 1.0;
    c.mu = 1.0;
    CHECK(efficiency_upper_bound(1.0, 0.0, c, 1.0, 1.0) == 1.0);
    CHECK(efficiency_upper_bound(1.0, 1e-3, c, 1.0, 1.0) ==
          doctest::Approx(1.0 - 0.512).epsilon(1e-15));
    Rng rng(61);
    for (int rep = 0; rep < 20; ++rep) {
        SmoothnessConstants r;
        r.L = 0.5 + rng.uniform01();
        r.mu = 0.1 + 0.3 * rng.uniform01();
        r.xi = rng.uniform01();
        r.sigma_sq = rng.uniform01();
        const double d0 = rng.uniform01() * 3.0;
        const double eps = 0.1 + rng.uniform01();
        const double cc = rng.uniform01();
        // exact identity, no recomputation drift
        CHECK(efficiency_upper_bound(2.0, cc, r, d0, eps) ==
              2.0 - cc * min_sync_lower_bound(r, d0, eps));
        // cubic homogeneity in 1/eps
        CHECK(std::abs(min_sync_lower_bound(r, d0, eps) /
                           min_sync_lower_bound(r, d0, 2.0 * eps) -
                       8.0) < 1e-12);
    }
}

TEST_CASE("scaling bound power law") {
    // alpha = 1/2: doubling the samples scales the subtracted term by 2^{3/2}
    const double t1 = 1.0 - efficiency_scaling_bound(1.0, 0.01, 0.5, 100, 0.5);
    const double t2 = 1.0 - efficiency_scaling_bound(1.0, 0.01, 0.5, 200, 0.5);
    CHECK(t2 / t1 == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
    CHECK(efficiency_scaling_bound(1.0, 0.0, 0.5, 100, 0.5) == 1.0);
    CHECK_THROWS_AS(efficiency_scaling_bound(1.0, 0.01, 0.5, 0, 0.5), validation_error);
}

TEST_CASE("pricing efficiency curve has an interior argmax") {
    const double c = 1e-3, lambda = 1e-3;
    int argmax_n = 1;
    double best = -1e100;
    for (int n = 1; n <= 10000; ++n) {
        const double val = efficiency_scaling_bound(pricing_value(n), c, lambda, n, 0.5);
        if (val > best) {
            best = val;
            argmax_n = n;
        }
    }
    CHECK(argmax_n > 1);
    CHECK(argmax_n < 10000);
    // beyond the argmax an extra observation hurts
    CHECK(efficiency_scaling_bound(pricing_value(argmax_n + 1), c, lambda, argmax_n + 1, 0.5) <
          best);
}

TEST_CASE("efficiency report identity and serialization") {
    const EfficiencyReport r = make_efficiency_report(0.75, 0.02, 7, "sync-set");
    CHECK(r.pi == 0.75 - 0.02 * 7); // exact by construction
    const nlohmann::json j = to_json(r);
    CHECK(j["surplus"] == 0.75);
    CHECK(j["c"] == 0.02);
    CHECK(j["n_sync"] == 7);
    CHECK(j["pi"] == r.pi);
    CHECK(j["convention"] == "sync-set");
    CHECK(j["bound"].is_null());

    EfficiencyReport with_bound = make_efficiency_report(1.0, 0.0, 0, "with-final");
    with_bound.has_bound = true;
    with_bound.bound = 0.488;
    CHECK(to_json(with_bound)["bound"] == 0.488);
}
