#include "hatax/numerics.hpp"

#include <doctest.h>

#include <cmath>

using namespace hatax;

TEST_CASE("brent finds simple roots") {
    auto f = [](double x) { return x * x * x - 2.0; };
    const double r = num::brent_root(f, 0.0, 2.0);
    CHECK(std::abs(r - std::cbrt(2.0)) < 1e-12);
}

TEST_CASE("golden section maximizes a concave function") {
    auto f = [](double x) { return -(x - 0.3) * (x - 0.3); };
    CHECK(std::abs(num::golden_max(f, 0.0, 1.0, 1e-12) - 0.3) < 1e-9);
}

TEST_CASE("decreasing_root respects boundaries") {
    auto df = [](double x) { return 0.5 - x; };
    CHECK(std::abs(num::decreasing_root(df, 0.0, 1.0) - 0.5) < 1e-11);
    auto all_neg = [](double) { return -1.0; };
    CHECK(num::decreasing_root(all_neg, 0.0, 1.0) == 0.0);
    auto all_pos = [](double) { return 1.0; };
    CHECK(num::decreasing_root(all_pos, 0.0, 1.0) == 1.0);
}

TEST_CASE("perron root of a stochastic matrix is one") {
    Mat P(3, 3);
    P << 0.5, 0.25, 0.25,
         0.1, 0.8, 0.1,
         0.3, 0.3, 0.4;
    CHECK(std::abs(num::perron_root(P) - 1.0) < 1e-11);
    const Vec pi = num::stationary_distribution(P);
    CHECK(std::abs(pi.sum() - 1.0) < 1e-12);
    CHECK((P.transpose() * pi - pi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fft matches a direct DFT") {
    std::vector<std::complex<double>> a(16);
    num::Rng rng(7);
    for (auto& z : a) z = {rng.next_double() - 0.5, rng.next_double() - 0.5};
    auto b = a;
    num::fft(b, false);
    for (int m = 0; m < 16; ++m) {
        std::complex<double> s{0, 0};
        for (int j = 0; j < 16; ++j)
            s += a[j] * std::polar(1.0, -2.0 * M_PI * j * m / 16.0);
        CHECK(std::abs(s - b[m]) < 1e-12);
    }
}

TEST_CASE("cubic spline interpolates its nodes") {
    std::vector<double> x{0, 1, 2.5, 4, 7};
    std::vector<double> y{1, -1, 0.5, 2, 0};
    num::CubicSpline s(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(s(x[i]) - y[i]) < 1e-12);
}

TEST_CASE("levenberg_marquardt solves a small least squares problem") {
    auto resid = [](const Vec& x) {
        Vec r(3);
        r << x(0) - 1.0, x(1) + 2.0, 0.5 * (x(0) * x(1) + 2.0);
        return r;
    };
    Vec x0 = Vec::Zero(2);
    auto res = num::levenberg_marquardt(resid, x0);
    CHECK(res.objective < 1e-16);
}

TEST_CASE("rng categorical sampling matches probabilities") {
    num::Rng rng(123);
    double cum[3] = {0.2, 0.5, 1.0};
    int counts[3] = {0, 0, 0};
    const int n = 200000;
    for (int i = 0; i < n; ++i) ++counts[rng.next_categorical(cum, 3)];
    CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.005);
    CHECK(std::abs(counts[1] / double(n) - 0.3) < 0.005);
}
