#include "hatax/wealth_law.hpp"

#include "hatax/equilibrium.hpp"
#include "hatax/numerics.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hatax;
using namespace hatax::wealth;

namespace {

const equilibrium::StationaryEquilibrium& baseline_eq() {
    static const auto eq = [] {
        equilibrium::EqOptions opts;
        return equilibrium::solve_equilibrium(testutil::baseline_params(),
                                              testutil::baseline_ability(), opts);
    }();
    return eq;
}

const MellinEvaluator& baseline_mellin() {
    static const MellinEvaluator me = equilibrium::make_mellin(baseline_eq());
    return me;
}

const WealthDistribution& baseline_dist() {
    static const WealthDistribution d = invert_distribution(baseline_mellin());
    return d;
}

} // namespace

TEST_CASE("A(0) is the survival-scaled transition matrix") {
    const auto& me = baseline_mellin();
    const Mat A0 = me.build_A_real(0.0);
    CHECK((A0 - 0.975 * testutil::baseline_ability().transition).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(me.spectral_radius(0.0) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("A(1) entries compose survival, transition and growth") {
    const auto& me = baseline_mellin();
    const auto& eq = baseline_eq();
    const Mat A1 = me.build_A_real(1.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(A1(i, j) == doctest::Approx(0.975 *
                                              testutil::baseline_ability().transition(i, j) *
                                              eq.policy.growth(i, j)).epsilon(1e-14));
}

TEST_CASE("A(it) matches the elementwise complex-power oracle") {
    const auto& me = baseline_mellin();
    const CMat A = me.build_A(Complex(0.0, 1.0));
    const auto& eq = baseline_eq();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const Complex oracle = 0.975 * testutil::baseline_ability().transition(i, j) *
                                   std::exp(Complex(0.0, 1.0) * std::log(eq.policy.growth(i, j)));
            CHECK(std::abs(A(i, j) - oracle) < 1e-14);
        }
}

TEST_CASE("Pareto exponent: baseline value and scalar closed form") {
    CHECK(baseline_mellin().pareto_exponent() == doctest::Approx(1.93).epsilon(0.01 / 1.93));

    // single-state chain with reset: zeta solves ups * G^zeta = 1
    const double G = 1.06, ups = 0.975;
    MellinEvaluator scalar(Mat::Constant(1, 1, G), Mat::Ones(1, 1), ups, Vec::Ones(1),
                           Vec::Ones(1), 1.0);
    CHECK(scalar.pareto_exponent() == doctest::Approx(-std::log(ups) / std::log(G)).epsilon(1e-9));

    // contracting chain has no Pareto tail
    MellinEvaluator shrink(Mat::Constant(1, 1, 0.99), Mat::Ones(1, 1), ups, Vec::Ones(1),
                           Vec::Ones(1), 1.0);
    CHECK_THROWS_AS(shrink.pareto_exponent(), NonConvergence);
}

TEST_CASE("spectral radius is midpoint-convex in z") {
    const auto& me = baseline_mellin();
    num::Rng rng(31);
    for (int i = 0; i < 20; ++i) {
        const double z1 = -1.0 + 3.0 * rng.next_double();
        const double z2 = -1.0 + 3.0 * rng.next_double();
        const double mid = me.spectral_radius(0.5 * (z1 + z2));
        CHECK(mid <= 0.5 * (me.spectral_radius(z1) + me.spectral_radius(z2)) + 1e-10);
    }
}

TEST_CASE("Mellin transform: normalization, conditional aggregation, strip errors") {
    const auto& me = baseline_mellin();
    CHECK(std::abs(me.mellin(Complex(0, 0)) - 1.0) < 1e-13);
    for (int n = 0; n < 6; ++n)
        CHECK(std::abs(me.mellin_conditional(Complex(0, 0), n) - 1.0) < 1e-12);

    const Vec& p = me.state_dist();
    Complex agg(0, 0);
    for (int n = 0; n < 6; ++n) agg += p(n) * me.mellin_conditional(1.0, n);
    CHECK(std::abs(agg - me.mellin(1.0)) < 1e-10);

    CHECK_THROWS_AS(me.mellin(Complex(2.5, 0.0)), DivergentMoment); // beyond zeta=1.93
}

TEST_CASE("resolvent solve residual stays at machine precision across the imaginary line") {
    const auto& me = baseline_mellin();
    for (double t : {0.1, 1.0, 10.0, 100.0, 2000.0, 15000.0}) {
        const Complex z(0.0, t);
        const CVec u = me.resolvent_row(z);
        const CMat M = CMat::Identity(6, 6) - me.build_A(z);
        const CVec resid = M.transpose() * u - testutil::baseline_ability().newborn_dist.cast<Complex>();
        CHECK(resid.cwiseAbs().maxCoeff() / u.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("inverted distribution: masses, median, aggregation") {
    const auto& d = baseline_dist();

    // exactly the newborn atom sits at W = 0
    CHECK(d.mass_at_reset() == doctest::Approx(0.025).epsilon(1e-12));
    // a further ~3% hold negative financial wealth
    CHECK(d.prob_below_reset() == doctest::Approx(0.030).epsilon(0.003 / 0.030));
    // P(W <= 0) >= 1 - upsilon
    CHECK(d.cdf_at(std::log(d.h)) >= 0.025);

    const double med = d.quantile(0.5);
    CHECK(d.cdf_at(std::log(med)) == doctest::Approx(0.5).epsilon(1e-6));

    double worst = 0.0;
    for (int m = 0; m < d.log_grid.size(); m += 17) {
        double agg = 0.0;
        for (int n = 0; n < 6; ++n) agg += d.p(n) * d.cdf_by_state(n, m);
        worst = std::max(worst, std::abs(agg - d.cdf(m)));
    }
    CHECK(worst < 1e-6);

    // CDFs are monotone within [0, 1]
    for (int m = 1; m < d.log_grid.size(); ++m) {
        CHECK(d.cdf(m) >= d.cdf(m - 1));
        CHECK(d.cdf(m) <= 1.0);
    }
}

TEST_CASE("mean wealth from the distribution matches the Mellin moment") {
    const auto& d = baseline_dist();
    const double ES = baseline_mellin().mellin(1.0).real();
    CHECK(d.mean_financial() + d.h == doctest::Approx(ES).epsilon(1e-4));
}

TEST_CASE("tail extrapolation: slope, splice continuity, coverage") {
    auto d = baseline_dist();
    tail_extrapolate(d, 1e6);
    CHECK(d.extrapolation_max == 1e6);

    const double s_thr = d.extrapolation_threshold;
    // slope of the extension is exactly -zeta
    const double q1 = d.exceedance(2.0 * s_thr), q2 = d.exceedance(8.0 * s_thr);
    CHECK(std::log(q2 / q1) / std::log(4.0) == doctest::Approx(-d.zeta).epsilon(1e-12));
    // continuity at the splice
    CHECK(d.exceedance(s_thr * (1 + 1e-9)) ==
          doctest::Approx(d.exceedance(s_thr * (1 - 1e-9))).epsilon(1e-6));
    // pre-splice slope within 5% of -zeta
    const int i = d.threshold_index;
    const double slope = -(std::log1p(-d.cdf(i)) - std::log1p(-d.cdf(i - 150))) /
                         (d.log_grid(i) - d.log_grid(i - 150));
    CHECK(slope == doctest::Approx(d.zeta).epsilon(0.05));
    // the extension reaches past the top 1e-9 quantile
    CHECK(d.exceedance(1e6) < 1e-9);
    CHECK(d.exceedance(d.extrapolation_threshold) > 1e-10);
}

TEST_CASE("wealth shares reproduce the calibrated economy") {
    const auto& d = baseline_dist();
    const auto t = wealth_shares(d, {0.01}, {0.5});
    CHECK(t.rows[0].share * 100 == doctest::Approx(35.7).epsilon(0.5 / 35.7));
    CHECK(t.rows[1].share * 100 == doctest::Approx(3.5).epsilon(0.3 / 3.5));

    // partition: top q and bottom 1-q shares sum to one
    for (double q : {0.01, 0.1, 0.37}) {
        const auto s = wealth_shares(d, {q}, {1.0 - q});
        CHECK(s.rows[0].share + s.rows[1].share == doctest::Approx(1.0).epsilon(0.001));
    }
}

TEST_CASE("panel simulator: degenerate no-growth process stays at the reset level") {
    const Mat G = Mat::Ones(2, 2);
    Mat Pi(2, 2);
    Pi << 0.7, 0.3, 0.4, 0.6;
    Vec varpi(2);
    varpi << 0.5, 0.5;
    const auto panel = simulate_panel(G, Pi, varpi, 22.9, 1.0, 2000, 50, 99);
    for (double w : panel.wealth) CHECK(w == 22.9);
}

TEST_CASE("stationary panel agrees with the analytic law") {
    const auto& me = baseline_mellin();
    const int n_agents = 2000000;
    const auto panel = stationary_panel(me, n_agents, 77);

    // state frequencies within 3 standard errors
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(6);
    for (int s : panel.state) freq(s) += 1.0;
    freq /= double(n_agents);
    for (int n = 0; n < 6; ++n) {
        const double p = me.state_dist()(n);
        const double se = std::sqrt(p * (1.0 - p) / n_agents);
        CHECK(std::abs(freq(n) - p) < 3.0 * se);
    }

    // mean wealth within 3 (sample) standard errors of the Mellin moment
    double mean = 0.0;
    for (double w : panel.wealth) mean += w;
    mean /= n_agents;
    double var = 0.0;
    for (double w : panel.wealth) var += (w - mean) * (w - mean);
    var /= double(n_agents) - 1.0;
    const double se = std::sqrt(var / n_agents);
    CHECK(std::abs(mean - baseline_mellin().mellin(1.0).real()) < 3.0 * se);
}

TEST_CASE("Gil-Pelaez CDF vs empirical CDF of a large panel") {
    const auto& d = baseline_dist();
    const auto panel = stationary_panel(baseline_mellin(), 10000000, 20240817);
    std::vector<double> logw(panel.wealth.size());
    for (std::size_t i = 0; i < panel.wealth.size(); ++i) logw[i] = std::log(panel.wealth[i]);
    std::sort(logw.begin(), logw.end());
    double ks = 0.0;
    for (int m = 0; m < d.log_grid.size(); ++m) {
        const auto cnt = std::upper_bound(logw.begin(), logw.end(), d.log_grid(m) + 1e-12) -
                         logw.begin();
        ks = std::max(ks, std::abs(double(cnt) / double(logw.size()) - d.cdf(m)));
    }
    CHECK(ks < 4e-4);
}

TEST_CASE("Monte Carlo tail slope brackets zeta") {
    const auto panel = stationary_panel(baseline_mellin(), 10000000, 4242);
    std::vector<double> w(panel.wealth);
    std::sort(w.begin(), w.end());
    // log-log regression of the exceedance over the top 0.1%
    const std::size_t n = w.size();
    const std::size_t i0 = std::size_t(n * 0.999);
    std::vector<double> xs, ys;
    for (std::size_t i = i0; i < n - 100; i += 50) {
        xs.push_back(std::log(w[i]));
        ys.push_back(std::log(double(n - i) / double(n)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= double(xs.size());
    my /= double(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(std::abs(-slope - baseline_mellin().pareto_exponent()) < 0.05);
}

TEST_CASE("financial and total wealth share the same tail exponent") {
    const auto& d = baseline_dist();
    // W = S - h: beyond the threshold the shift is negligible relative to s
    const double s = 4.0 * d.extrapolation_threshold;
    const double qW = d.exceedance_financial(s);
    const double qS = d.exceedance(s);
    // identical laws shifted by h: exceedance_financial(w) = exceedance(w + h)
    CHECK(qW == doctest::Approx(d.exceedance(s + d.h)).epsilon(1e-12));
    const double local_slope =
        std::log(d.exceedance_financial(2 * s) / qW) / std::log((2 * s + d.h) / (s + d.h));
    CHECK(local_slope == doctest::Approx(-d.zeta).epsilon(1e-6));
    (void)qS;
}
