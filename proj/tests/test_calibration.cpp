#include "hatax/calibration.hpp"

#include "hatax/numerics.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace hatax;
using calib::CalibrationTargets;
using testutil::baseline_targets;

namespace {

// Standardized sample moments of (log_A, p_A).
struct Moments {
    double mean, sd, skew, kurt;
};

Moments sample_moments(const Vec& x, const Vec& p) {
    Moments m{};
    m.mean = p.dot(x);
    const Vec d = x.array() - m.mean;
    const double var = p.dot(d.array().square().matrix());
    m.sd = std::sqrt(var);
    m.skew = p.dot(d.array().cube().matrix()) / (var * m.sd);
    m.kurt = p.dot(d.array().pow(4).matrix()) / (var * var);
    return m;
}

// Direct constrained solution: with five support points, the simplex slice cut
// out by the four moment constraints is a single point, the solution of the
// Vandermonde system. Entirely independent of the entropy dual.
Vec vandermonde_oracle(const CalibrationTargets& t) {
    const int m = 5;
    const double hw = std::sqrt(10.0);
    Vec y(m);
    for (int i = 0; i < m; ++i) y(i) = -hw + 2.0 * hw * i / (m - 1);
    Mat V(m, m);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) V(k, i) = std::pow(y(i), k);
    Vec b(m);
    b << 1.0, 0.0, 1.0, t.skewness, t.kurtosis;
    return V.partialPivLu().solve(b);
}

} // namespace

TEST_CASE("zero skewness yields a symmetric distribution") {
    // (unit-variance targets on the fixed +-sqrt(10) support admit kurtosis in
    // (2.5, 10); the five-point-uniform value 1.7 lies outside that window)
    auto t = baseline_targets();
    t.skewness = 0.0;
    for (double kurt : {2.6, 3.0, 6.22, 9.0}) {
        t.kurtosis = kurt;
        const auto d = calib::discretize_productivity(t);
        for (int i = 0; i < 5; ++i)
            CHECK(d.p_A(i) == doctest::Approx(d.p_A(4 - i)).epsilon(1e-9));
    }
}

TEST_CASE("baseline targets are matched to 1e-8") {
    const auto t = baseline_targets();
    const auto d = calib::discretize_productivity(t);
    CHECK(d.p_A.minCoeff() > 0.0);
    CHECK(d.p_A.sum() == doctest::Approx(1.0).epsilon(1e-14));
    const auto m = sample_moments(d.log_A, d.p_A);
    CHECK(std::abs(m.mean) < 1e-8);
    CHECK(m.sd == doctest::Approx(t.sigma).epsilon(1e-8));
    CHECK(m.skew == doctest::Approx(t.skewness).epsilon(1e-7));
    CHECK(m.kurt == doctest::Approx(t.kurtosis).epsilon(1e-8));
    // support endpoints at +-sqrt(10)*sigma
    CHECK(d.log_A(0) == doctest::Approx(-std::sqrt(10.0) * t.sigma).epsilon(1e-14));
    CHECK(d.log_A(4) == doctest::Approx(std::sqrt(10.0) * t.sigma).epsilon(1e-14));
}

TEST_CASE("max-entropy solution agrees with the direct constrained oracle") {
    const auto t = baseline_targets();
    const auto d = calib::discretize_productivity(t);
    const Vec oracle = vandermonde_oracle(t);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(d.p_A(i) - oracle(i)) < 1e-6);
}

TEST_CASE("probabilities are invariant to rescaling sigma") {
    auto t = baseline_targets();
    const auto d1 = calib::discretize_productivity(t);
    t.sigma *= 3.7;
    const auto d2 = calib::discretize_productivity(t);
    for (int i = 0; i < 5; ++i) CHECK(d1.p_A(i) == doctest::Approx(d2.p_A(i)).epsilon(1e-10));
    CHECK(d2.log_A(4) == doctest::Approx(3.7 * d1.log_A(4)).epsilon(1e-12));
}

TEST_CASE("infeasible moments make the dual diverge") {
    auto t = baseline_targets();
    t.kurtosis = 20.0; // above the maximum attainable on the fixed support
    CHECK_THROWS_AS(calib::discretize_productivity(t), InfeasibleMoments);
}

TEST_CASE("combined transition matrix structure") {
    const auto t = baseline_targets();
    const auto d = calib::discretize_productivity(t);
    const auto proc = calib::build_ability_process(t, d.log_A, d.p_A);
    CHECK(proc.n_states == 6);
    CHECK(proc.productivities(0) == 0.0);
    for (int i = 0; i < 6; ++i)
        CHECK(std::abs(proc.transition.row(i).sum() - 1.0) < 1e-14);
    // entrepreneur -> worker probability in every entrepreneurial row
    for (int i = 1; i < 6; ++i)
        CHECK(proc.transition(i, 0) == doctest::Approx(0.0192).epsilon(1e-14));
    // i.i.d. productivity: entrepreneurial rows coincide
    for (int i = 2; i < 6; ++i)
        CHECK((proc.transition.row(i) - proc.transition.row(1)).cwiseAbs().maxCoeff() == 0.0);
    // stationary entrepreneur mass
    CHECK(proc.newborn_dist.tail(5).sum() == doctest::Approx(0.115).epsilon(1e-6));
    // varpi is stationary for Pi
    CHECK((proc.transition.transpose() * proc.newborn_dist - proc.newborn_dist)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("mortality-adjusted stationary distribution") {
    const auto t = baseline_targets();
    const auto d = calib::discretize_productivity(t);
    const auto proc = calib::build_ability_process(t, d.log_A, d.p_A);

    // upsilon -> 1 limit recovers the stationary law of Pi
    const Vec p_nolimit = calib::mortality_adjusted_stationary(proc, 1.0 - 1e-9);
    const Vec p_pi = num::stationary_distribution(proc.transition);
    CHECK((p_nolimit - p_pi).cwiseAbs().maxCoeff() < 1e-8);

    // varpi already stationary implies p = varpi
    const Vec p = calib::mortality_adjusted_stationary(proc, 0.975);
    CHECK((p - proc.newborn_dist).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(p.minCoeff() > 0.0);
}

TEST_CASE("stationary law matches a long reset-chain simulation") {
    const auto proc = testutil::baseline_ability();
    const double ups = 0.975;
    const Vec p = proc.stationary_dist;

    const int T = 10000000;
    num::Rng rng(20240817);
    std::vector<double> pi_cum(36), varpi_cum(6);
    for (int i = 0; i < 6; ++i) {
        double acc = 0;
        for (int j = 0; j < 6; ++j) pi_cum[i * 6 + j] = (acc += proc.transition(i, j));
    }
    double acc = 0;
    for (int j = 0; j < 6; ++j) varpi_cum[j] = (acc += proc.newborn_dist(j));

    int state = rng.next_categorical(varpi_cum.data(), 6);
    // batch means to get serial-correlation-consistent standard errors
    const int n_batches = 1000, batch_len = T / n_batches;
    Mat batch_freq = Mat::Zero(n_batches, 6);
    for (int b = 0; b < n_batches; ++b) {
        for (int t = 0; t < batch_len; ++t) {
            batch_freq(b, state) += 1.0;
            if (rng.next_double() < ups)
                state = rng.next_categorical(&pi_cum[state * 6], 6);
            else
                state = rng.next_categorical(varpi_cum.data(), 6);
        }
        batch_freq.row(b) /= double(batch_len);
    }
    for (int n = 0; n < 6; ++n) {
        const double freq = batch_freq.col(n).mean();
        const double var_b =
            (batch_freq.col(n).array() - freq).square().sum() / (n_batches - 1);
        const double se = std::sqrt(var_b / n_batches);
        CHECK(std::abs(freq - p(n)) < 3.0 * se);
    }
}

TEST_CASE("target validation") {
    auto t = baseline_targets();
    t.sigma = 0.0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = baseline_targets();
    t.kurtosis = 0.9;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = baseline_targets();
    t.pi_ew = 0.0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}
