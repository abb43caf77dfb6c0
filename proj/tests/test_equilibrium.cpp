#include "hatax/equilibrium.hpp"

#include "hatax/numerics.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace hatax;
using namespace hatax::equilibrium;
using testutil::baseline_ability;
using testutil::baseline_params;
using testutil::baseline_targets;

namespace {

const StationaryEquilibrium& baseline_eq() {
    static const auto eq = [] {
        EqOptions opts;
        opts.with_zeta = true;
        return solve_equilibrium(baseline_params(), baseline_ability(), opts);
    }();
    return eq;
}

} // namespace

TEST_CASE("baseline stationary equilibrium reproduces the calibrated prices") {
    const auto& eq = baseline_eq();
    CHECK(eq.prices().R - 1.0 == doctest::Approx(0.017).epsilon(0.001 / 0.017));
    CHECK((eq.prices().R - 1.0) / (1.0 - eq.params().tau_K) ==
          doctest::Approx(0.029).epsilon(0.0015 / 0.029));
    CHECK(eq.prices().omega == doctest::Approx(1.27).epsilon(0.01 / 1.27));
    CHECK(eq.h() == doctest::Approx(22.9).epsilon(0.1 / 22.9));
    CHECK(*eq.zeta == doctest::Approx(1.93).epsilon(0.01 / 1.93));
    CHECK(std::abs(eq.agg.EB) < 1e-8);
    CHECK(std::abs(eq.agg.EL - 1.0) < 1e-8);
    CHECK(eq.ent_regime == household::Regime::strictly_binding);
    CHECK(eq.diag.roots.size() == 1);
}

TEST_CASE("aggregate demands match the decision-rule composition state by state") {
    const auto& eq = baseline_eq();
    const auto [EB, EL] = aggregate_demands(eq.ctx, eq.policy);
    // compose from conditional means m_n and the linear rules
    double EB2 = 0.0, EL2 = 0.0;
    const double bu = eq.params().beta / eq.params().upsilon;
    for (int n = 0; n < 6; ++n) {
        EB2 += -eq.h() / eq.prices().R * eq.ctx.ability.stationary_dist(n) +
               bu * (1.0 - eq.policy.theta_star(n)) * eq.agg.m(n);
        EL2 += bu * eq.policy.theta_star(n) * eq.ctx.returns.ell(n) * eq.agg.m(n);
    }
    CHECK(std::abs(EB - EB2) < 1e-10);
    CHECK(std::abs(EL - EL2) < 1e-10);
}

TEST_CASE("conditional Mellin moments agree with the m-vector") {
    const auto& eq = baseline_eq();
    const auto me = make_mellin(eq);
    for (int n = 0; n < 6; ++n) {
        const double ESn = me.mellin_conditional(1.0, n).real();
        CHECK(eq.agg.m(n) ==
              doctest::Approx(ESn * eq.ctx.ability.stationary_dist(n)).epsilon(1e-10));
    }
}

TEST_CASE("an all-worker economy cannot clear the labor market") {
    auto t = baseline_targets();
    t.pi_we = 1e-10; // essentially no entrepreneurs ever
    const auto ability = calib::make_ability_process(t, baseline_params().upsilon);
    CHECK_THROWS_AS(solve_equilibrium(baseline_params(), ability), EquilibriumNotFound);
}

TEST_CASE("too-frequent firm exit destroys equilibrium existence") {
    // equilibria still exist (with much lower wages) up to pi_ew ~ 0.7; the
    // labor market can no longer clear anywhere in the box by 0.9
    auto t = baseline_targets();
    t.pi_ew = 0.5;
    auto ability = calib::make_ability_process(t, baseline_params().upsilon);
    const auto eq_mid = solve_equilibrium(baseline_params(), ability);
    CHECK(eq_mid.prices().omega < 0.5);

    t.pi_ew = 0.9;
    ability = calib::make_ability_process(t, baseline_params().upsilon);
    CHECK_THROWS_AS(solve_equilibrium(baseline_params(), ability), EquilibriumNotFound);
}

TEST_CASE("doubling productivity rescales the wage and keeps an equilibrium") {
    auto ability = baseline_ability();
    ability.productivities *= 2.0;
    const auto eq = solve_equilibrium(baseline_params(), ability);
    CHECK(eq.prices().omega > 1.8 * baseline_eq().prices().omega);
    CHECK(std::abs(eq.agg.EB) < 1e-8);
    CHECK(std::abs(eq.agg.EL - 1.0) < 1e-8);
}

TEST_CASE("welfare formula: degenerate newborn state and gamma continuity") {
    const auto& eq = baseline_eq();
    for (int n = 0; n < 6; ++n) {
        Vec e = Vec::Zero(6);
        e(n) = 1.0;
        CHECK(welfare(eq.policy, eq.h(), e, eq.params().gamma) ==
              doctest::Approx(eq.policy.a_star(n) * eq.h()).epsilon(1e-12));
    }
    const double w1 = welfare(eq.policy, eq.h(), eq.ctx.ability.newborn_dist, 1.0);
    for (double g : {1.0 - 1e-6, 1.0 + 1e-6}) {
        const double wg = welfare(eq.policy, eq.h(), eq.ctx.ability.newborn_dist, g);
        CHECK(wg == doctest::Approx(w1).epsilon(1e-5));
    }
}

TEST_CASE("tax revenue components") {
    const auto& eq = baseline_eq();
    CHECK(eq.revenue.consumption == 0.0); // tau_C = 0 at baseline
    CHECK(eq.revenue.labor == doctest::Approx(0.248 * eq.prices().omega).epsilon(1e-14));
    CHECK(eq.revenue.total ==
          doctest::Approx(eq.revenue.labor + eq.revenue.capital).epsilon(1e-14));

    // consumption-tax linearity in E(S) at a positive rate (prices held fixed)
    const auto params_c = baseline_params().with_taxes(0.248, 0.398, 0.3);
    const auto eqc = evaluate_at(params_c, baseline_ability(), eq.prices());
    const auto me = make_mellin(eqc);
    const double expect = 0.3 / 1.3 * (1.0 - 0.96) * me.mellin(1.0).real();
    CHECK(eqc.revenue.consumption == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("revenue rises in each tax rate holding prices fixed") {
    const auto& eq = baseline_eq();
    const auto base = evaluate_at(baseline_params(), baseline_ability(), eq.prices());
    auto bump = [&](double dl, double dk, double dc) {
        const auto p = baseline_params().with_taxes(0.248 + dl, 0.398 + dk, 0.0 + dc);
        return evaluate_at(p, baseline_ability(), eq.prices()).revenue.total;
    };
    CHECK(bump(0.02, 0.0, 0.0) > base.revenue.total);
    CHECK(bump(0.0, 0.02, 0.0) > base.revenue.total);
    CHECK(bump(0.0, 0.0, 0.02) > base.revenue.total);
}

TEST_CASE("group aggregates partition the totals") {
    const auto& eq = baseline_eq();
    CHECK(eq.agg.C_workers + eq.agg.C_entrepreneurs == doctest::Approx(eq.agg.EC).epsilon(1e-10));
    CHECK(eq.agg.B_workers + eq.agg.B_entrepreneurs == doctest::Approx(eq.agg.EB).epsilon(1e-8));
    // consumption absorbs the unit-EIS share of total wealth
    CHECK(eq.agg.EC * (1.0 + eq.params().tau_C) / eq.agg.ES ==
          doctest::Approx(1.0 - eq.params().beta).epsilon(1e-12));
}

TEST_CASE("stationary accounting identity ties wealth to capital and profits") {
    // E(W) = K_inplace + (1-tau_K) * P_pre, the goods-side Walras check that
    // holds exactly under market clearing and stationarity
    const auto& eq = baseline_eq();
    const Vec pi_r = eq.ctx.ability.transition * eq.ctx.returns.r;
    double capital = 0.0, posttax_profit = 0.0;
    for (int n = 0; n < 6; ++n) {
        capital += eq.params().beta * eq.policy.theta_star(n) * eq.agg.m(n);
        posttax_profit += eq.params().beta * eq.policy.theta_star(n) * pi_r(n) * eq.agg.m(n);
    }
    CHECK(std::abs(eq.agg.EW - capital - posttax_profit) < 1e-6 * eq.agg.EW);
    CHECK(capital == doctest::Approx(eq.agg.EK).epsilon(1e-12));
}

TEST_CASE("warm starts land on the same equilibrium") {
    const auto& eq = baseline_eq();
    EqOptions opts;
    opts.warm = Prices(eq.prices().R + 0.002, eq.prices().omega * 1.01);
    opts.x0_policy = eq.policy.a_star.array().log();
    const auto eq2 = solve_equilibrium(baseline_params(), baseline_ability(), opts);
    CHECK(eq2.prices().R == doctest::Approx(eq.prices().R).epsilon(1e-9));
    CHECK(eq2.prices().omega == doctest::Approx(eq.prices().omega).epsilon(1e-9));
}
