#pragma once

#include "hatax/common.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace hatax::num {

// ---------------------------------------------------------------------------
// Scalar root finding and maximization
// ---------------------------------------------------------------------------

struct RootOptions {
    double xtol = 1e-14;
    double ftol = 0.0;
    int max_iter = 200;
};

// Brent's method on a bracketing interval [a, b] with f(a)*f(b) <= 0.
double brent_root(const std::function<double(double)>& f, double a, double b,
                  RootOptions opts = {});

// Expands/scans [lo, hi] for a sign change of f; returns false if none found.
bool bracket_root(const std::function<double(double)>& f, double lo, double hi,
                  int scan_points, double& a, double& b, double& fa, double& fb);

// Golden-section maximization of a unimodal function on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double xtol = 1e-10, int max_iter = 400);

// Root of a strictly decreasing function on [a, b] via safeguarded Newton
// (secant update clipped to a shrinking bisection bracket). Assumes
// df(a) >= 0 >= df(b).
double decreasing_root(const std::function<double(double)>& df, double a, double b,
                       double xtol = 1e-12, int max_iter = 200);

// ---------------------------------------------------------------------------
// Nonnegative matrices
// ---------------------------------------------------------------------------

// Perron root of an (entrywise nonnegative) matrix by power iteration,
// falling back to a dense eigensolve if the iteration stalls.
double perron_root(const Mat& A, double tol = 1e-12, int max_iter = 20000);

// Stationary distribution of a row-stochastic matrix (left Perron vector,
// normalized to sum to one).
Vec stationary_distribution(const Mat& P, double tol = 1e-14, int max_iter = 200000);

// Reachability-based irreducibility test on the positive pattern of P.
bool is_irreducible(const Mat& P);

// ---------------------------------------------------------------------------
// FFT (iterative radix-2, in place)
// ---------------------------------------------------------------------------

void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// ---------------------------------------------------------------------------
// Natural cubic spline through (x_i, y_i), x strictly increasing
// ---------------------------------------------------------------------------

class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_, y_, m_; // m_: second derivatives
};

// ---------------------------------------------------------------------------
// Dense least squares: Levenberg-Marquardt with forward-difference Jacobian
// ---------------------------------------------------------------------------

struct LMOptions {
    int max_iter = 200;
    double ftol = 1e-12;      // stop when relative objective decrease stalls
    double gtol = 1e-12;
    double fd_step = 1e-6;    // relative forward-difference step
    double lambda0 = 1e-3;
    int n_threads = 1;        // parallel finite-difference columns; residual fn
                              // must be thread-safe when > 1
};

struct LMResult {
    Vec x;
    double objective = 0.0; // sum of squared residuals
    int iterations = 0;
    bool stalled = false;
};

LMResult levenberg_marquardt(const std::function<Vec(const Vec&)>& residuals,
                             const Vec& x0, LMOptions opts = {});

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64 seeding + xoshiro256**)
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);

class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double next_double();                 // uniform on [0, 1)
    int next_categorical(const double* cum, int n); // cum: inclusive cumulative sums

private:
    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Parallel helper: static partition of [0, n) over a fixed worker count.
// Deterministic: work is split by index, not by scheduling order.
// ---------------------------------------------------------------------------

void parallel_for(int n, int n_threads, const std::function<void(int)>& body);

int default_threads();
void set_default_threads(int n);

} // namespace hatax::num
