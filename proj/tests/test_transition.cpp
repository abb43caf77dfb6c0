#include "hatax/transition.hpp"

#include "hatax/numerics.hpp"
#include "hatax/tax_optimizer.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace hatax;
using namespace hatax::transition;
using testutil::baseline_ability;
using testutil::baseline_params;

namespace {

const equilibrium::StationaryEquilibrium& old_eq() {
    static const auto eq =
        equilibrium::solve_equilibrium(baseline_params(), baseline_ability());
    return eq;
}

// published reform: labor tax eliminated, capital 0.24, consumption 0.31
const equilibrium::StationaryEquilibrium& new_eq() {
    static const auto eq = [] {
        equilibrium::EqOptions eo;
        eo.warm = old_eq().prices();
        return equilibrium::solve_equilibrium(
            baseline_params().with_taxes(0.0, 0.24, 0.31), baseline_ability(), eo);
    }();
    return eq;
}

Vec constant_path(double v, int T) { return Vec::Constant(T + 1, v); }

} // namespace

TEST_CASE("stationary prices are a fixed point of the backward recursion") {
    const int T = 40;
    const auto& eq = new_eq();
    const Vec R = constant_path(eq.prices().R, T);
    const Vec w = constant_path(eq.prices().omega, T);
    const auto bw = backward_value_path(R, w, eq);
    for (int t = 1; t <= T; ++t) {
        CHECK((bw.a_path.row(t).transpose() - eq.policy.a_star).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((bw.theta_path.row(t).transpose() - eq.policy.theta_star).cwiseAbs().maxCoeff() <
              1e-9);
        CHECK(bw.h_path(t) == doctest::Approx(eq.h()).epsilon(1e-12));
    }
}

TEST_CASE("untaxed wages raise year-one human wealth above the baseline level") {
    const int T = 100;
    const auto bw = backward_value_path(constant_path(new_eq().prices().R, T),
                                        constant_path(new_eq().prices().omega, T), new_eq());
    CHECK(bw.h_path(1) > old_eq().h());
}

TEST_CASE("a wage perturbation at year t only moves earlier human wealth") {
    const int T = 60;
    const auto& eq = new_eq();
    Vec R = constant_path(eq.prices().R, T);
    Vec w = constant_path(eq.prices().omega, T);
    const auto base = backward_value_path(R, w, eq);
    const int t_shock = 30;
    w(t_shock) += 1e-4;
    const auto bumped = backward_value_path(R, w, eq);
    for (int t = 1; t <= T; ++t) {
        const double dh = std::abs(bumped.h_path(t) - base.h_path(t));
        if (t <= t_shock)
            CHECK(dh > 0.0);
        else
            CHECK(dh == 0.0);
    }
}

TEST_CASE("stationary moments are a fixed point of the forward recursion") {
    const int T = 40;
    const auto& eq = new_eq();
    const Vec R = constant_path(eq.prices().R, T);
    const Vec w = constant_path(eq.prices().omega, T);
    const auto bw = backward_value_path(R, w, eq);
    // start from the new equilibrium's own stationary cross-section
    Mat m = forward_moments(eq, eq, bw, R, w);
    for (int t = 1; t <= T; ++t)
        CHECK((m.row(t) - eq.agg.m.transpose()).cwiseAbs().maxCoeff() <
              1e-10 * eq.agg.ES);

    // and the implied excess demands vanish every year
    Vec eb, el;
    excess_demand_path(eq, bw, m, R, w, eb, el);
    for (int t = 1; t <= T; ++t) {
        CHECK(std::abs(eb(t)) < 1e-8);
        CHECK(std::abs(el(t)) < 1e-8);
    }
}

TEST_CASE("initial moments carry financial wealth and revalue human wealth") {
    const double h1 = 30.0;
    const Vec m1 = initial_moments(old_eq(), h1);
    const Vec& p = baseline_ability().stationary_dist;
    CHECK(m1.sum() == doctest::Approx(old_eq().agg.ES - old_eq().h() + h1).epsilon(1e-12));
    for (int n = 0; n < 6; ++n)
        CHECK(m1(n) == doctest::Approx(old_eq().agg.m(n) - p(n) * (old_eq().h() - h1))
                           .epsilon(1e-12));
}

TEST_CASE("labor excess responds smoothly to tiny wage-path perturbations") {
    const int T = 30;
    const auto& eq = new_eq();
    Vec R = constant_path(eq.prices().R, T);
    Vec w = constant_path(eq.prices().omega, T);
    const auto bw = backward_value_path(R, w, eq);
    Mat m = forward_moments(eq, eq, bw, R, w);
    Vec eb0, el0, eb1, el1;
    excess_demand_path(eq, bw, m, R, w, eb0, el0);
    Vec w2 = w;
    for (int t = 1; t <= T; ++t) w2(t) += 1e-6;
    const auto bw2 = backward_value_path(R, w2, eq);
    Mat m2 = forward_moments(eq, eq, bw2, R, w2);
    excess_demand_path(eq, bw2, m2, R, w2, eb1, el1);
    for (int t = 1; t <= T; ++t) CHECK(std::abs(el1(t) - el0(t)) < 1e-4);
}

TEST_CASE("solved transition: clearing quality and terminal consistency") {
    TransitionOptions topt;
    const auto path = solve_transition(old_eq(), new_eq(), topt);

    double maxb = 0.0, maxl = 0.0;
    for (int t = 1; t <= path.horizon; ++t) {
        maxb = std::max(maxb, std::abs(path.excess_bond(t)));
        maxl = std::max(maxl, std::abs(path.excess_labor(t)));
    }
    CHECK(maxb <= 7e-4);
    CHECK(maxl <= 2.4e-3);

    // objective never worsens across knot-refinement stages
    for (std::size_t s = 1; s < path.stage_objectives.size(); ++s)
        CHECK(path.stage_objectives[s] <= path.stage_objectives[s - 1] * (1.0 + 1e-9));

    // terminal values pinned to the new stationary equilibrium
    CHECK(path.R_path(path.horizon) == new_eq().prices().R);
    CHECK(path.omega_path(path.horizon) == new_eq().prices().omega);
    CHECK(path.h_path(path.horizon) == new_eq().h());
    CHECK((path.a_path.row(path.horizon).transpose() - new_eq().policy.a_star)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    // forward moments equilibrate to the new stationary cross-section
    CHECK((path.moments.row(path.horizon).transpose() - new_eq().agg.m).cwiseAbs().maxCoeff() <
          1e-4 * new_eq().agg.ES);

    // year-one macro responses
    const double dCw = path.consumption_workers(1) / path.consumption_workers(0) - 1.0;
    const double dCe =
        path.consumption_entrepreneurs(1) / path.consumption_entrepreneurs(0) - 1.0;
    CHECK(dCw == doctest::Approx(-0.023).epsilon(0.15));
    CHECK(dCe == doctest::Approx(-0.10).epsilon(0.01 / 0.10));
    int rec_w = -1, rec_tot = -1;
    bool ent_recovers = false;
    for (int t = 1; t <= path.horizon; ++t) {
        if (rec_w < 0 && path.consumption_workers(t) >= path.consumption_workers(0)) rec_w = t;
        if (rec_tot < 0 && path.consumption_total(t) >= path.consumption_total(0)) rec_tot = t;
        ent_recovers |=
            path.consumption_entrepreneurs(t) >= path.consumption_entrepreneurs(0);
    }
    CHECK(rec_w >= 1);
    CHECK(rec_w <= 6);
    CHECK(rec_tot <= 10);
    CHECK(!ent_recovers);

    // votes against the old regime's conditional wealth distributions
    const auto me = equilibrium::make_mellin(old_eq());
    const auto dist = wealth::invert_distribution(me);
    const auto vote = vote_analysis(path, old_eq(), dist);
    CHECK(vote.all == doctest::Approx(0.86).epsilon(0.02 / 0.86));
    CHECK(vote.workers == doctest::Approx(0.93).epsilon(0.02 / 0.93));
    CHECK(vote.entrepreneurs == doctest::Approx(0.26).epsilon(0.03 / 0.26));

    // identical regimes: everyone is indifferent and ties vote no
    const auto null_path = solve_transition(old_eq(), old_eq(), topt);
    const auto null_vote = vote_analysis(null_path, old_eq(), dist);
    CHECK(null_vote.all == 0.0);
    CHECK(null_vote.indifferent == doctest::Approx(1.0).epsilon(1e-9));

    // dominance: better coefficient and richer endowment carries every agent
    TransitionPath dom = path;
    dom.a_path.row(1) = (old_eq().policy.a_star * 1.01).transpose();
    dom.h_path(1) = old_eq().h() * 1.01;
    const auto dom_vote = vote_analysis(dom, old_eq(), dist);
    CHECK(dom_vote.all == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("forward moments agree with a Monte Carlo transition panel") {
    TransitionOptions topt;
    const auto path = solve_transition(old_eq(), new_eq(), topt);

    // simulate 10^6 agents through the first 40 years of the solved path
    const int n_agents = 1000000, T_sim = 40;
    const auto& ab = baseline_ability();
    const auto me_old = equilibrium::make_mellin(old_eq());
    auto panel = wealth::stationary_panel(me_old, n_agents, 20240817);
    const double ups = baseline_params().upsilon;

    std::vector<double> pi_cum(36), varpi_cum(6);
    for (int i = 0; i < 6; ++i) {
        double acc = 0;
        for (int j = 0; j < 6; ++j) pi_cum[i * 6 + j] = (acc += ab.transition(i, j));
    }
    {
        double acc = 0;
        for (int j = 0; j < 6; ++j) varpi_cum[j] = (acc += ab.newborn_dist(j));
    }

    // revalue human wealth at the announcement
    for (auto& w : panel.wealth) w += path.h_path(1) - old_eq().h();

    const auto& pnew = new_eq().params();
    num::Rng rng(991);
    std::vector<double> wealth = panel.wealth;
    std::vector<int> state = panel.state;
    Mat sums = Mat::Zero(T_sim + 1, 6), sq = Mat::Zero(T_sim + 1, 6);
    for (int i = 0; i < n_agents; ++i) {
        sums(1, state[i]) += wealth[i];
        sq(1, state[i]) += wealth[i] * wealth[i];
    }
    for (int t = 1; t < T_sim; ++t) {
        const auto ctx = household::make_context(pnew, ab,
                                                 Prices(path.R_path(t), path.omega_path(t + 1)));
        for (int i = 0; i < n_agents; ++i) {
            if (rng.next_double() < ups) {
                const int jn = rng.next_categorical(&pi_cum[state[i] * 6], 6);
                const double growth =
                    pnew.beta * (ctx.base + ctx.excess(jn) * path.theta_path(t, state[i]));
                wealth[i] *= growth;
                state[i] = jn;
            } else {
                wealth[i] = path.h_path(t + 1);
                state[i] = rng.next_categorical(varpi_cum.data(), 6);
            }
            sums(t + 1, state[i]) += wealth[i];
            sq(t + 1, state[i]) += wealth[i] * wealth[i];
        }
    }
    // aggregate consumption per year within 3 standard errors
    for (int t = 1; t <= T_sim; ++t) {
        const double M_mc = sums.row(t).sum() / n_agents;
        double var = 0.0;
        const double mean_all = M_mc;
        var = sq.row(t).sum() / n_agents - mean_all * mean_all;
        const double se = std::sqrt(var / n_agents);
        const double M_model = path.moments.row(t).sum();
        CHECK(std::abs(M_mc - M_model) < 3.0 * se + 1e-9);
    }
}
