#include "hatax/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace hatax::num {

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

double brent_root(const std::function<double(double)>& f, double a, double b,
                  RootOptions opts) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("brent_root: interval does not bracket a root");

    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * opts.xtol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0 || std::abs(fb) <= opts.ftol) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic / secant step
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d; d = p / q;
            } else {
                d = xm; e = d;
            }
        } else {
            d = xm; e = d;
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = b - a; e = d; }
    }
    return b;
}

bool bracket_root(const std::function<double(double)>& f, double lo, double hi,
                  int scan_points, double& a, double& b, double& fa, double& fb) {
    double xprev = lo, fprev = f(lo);
    if (fprev == 0.0) { a = b = lo; fa = fb = 0.0; return true; }
    for (int i = 1; i <= scan_points; ++i) {
        const double x = lo + (hi - lo) * double(i) / scan_points;
        const double fx = f(x);
        if (std::isfinite(fx) && std::isfinite(fprev) && fprev * fx <= 0.0) {
            a = xprev; b = x; fa = fprev; fb = fx;
            return true;
        }
        xprev = x; fprev = fx;
    }
    return false;
}

double golden_max(const std::function<double(double)>& f, double a, double b,
                  double xtol, int max_iter) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double decreasing_root(const std::function<double(double)>& df, double a, double b,
                       double xtol, int max_iter) {
    double fa = df(a), fb = df(b);
    if (fa <= 0.0) return a;
    if (fb >= 0.0) return b;
    double lo = a, hi = b, flo = fa, fhi = fb;
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        // secant through the bracket endpoints, clipped to stay inside
        double xs = lo + (hi - lo) * flo / (flo - fhi);
        if (!(xs > lo + 0.1 * xtol && xs < hi - 0.1 * xtol)) xs = 0.5 * (lo + hi);
        // alternate with bisection to guarantee bracket shrinkage
        x = (i % 2 == 0) ? xs : 0.5 * (lo + hi);
        const double fx = df(x);
        if (fx == 0.0) return x;
        if (fx > 0.0) { lo = x; flo = fx; } else { hi = x; fhi = fx; }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Nonnegative matrices
// ---------------------------------------------------------------------------

double perron_root(const Mat& A, double tol, int max_iter) {
    const int n = int(A.rows());
    if (n == 1) return std::abs(A(0, 0));
    Vec v = Vec::Ones(n) / std::sqrt(double(n));
    double lambda = 0.0;
    for (int i = 0; i < max_iter; ++i) {
        Vec w = A * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        w /= nw;
        const double lam = w.dot(A * w);
        if (std::abs(lam - lambda) < tol * std::max(1.0, std::abs(lam))) return lam;
        lambda = lam;
        v = w;
    }
    // Stalled (e.g. near-degenerate dominant pair): full eigensolve.
    Eigen::EigenSolver<Mat> es(A, false);
    double rho = 0.0;
    for (int i = 0; i < n; ++i) rho = std::max(rho, std::abs(es.eigenvalues()(i)));
    return rho;
}

Vec stationary_distribution(const Mat& P, double tol, int max_iter) {
    const int n = int(P.rows());
    Vec p = Vec::Ones(n) / double(n);
    bool converged = false;
    for (int i = 0; i < max_iter; ++i) {
        Vec q = P.transpose() * p;
        q /= q.sum();
        const double diff = (q - p).cwiseAbs().maxCoeff();
        p = q;
        if (diff < tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NonConvergence("stationary_distribution: power iteration did not converge",
                             0.0, max_iter);
    // polish to machine precision: solve (P' - I) p = 0 with the normalization
    // row replacing the redundant equation
    Mat M = P.transpose() - Mat::Identity(n, n);
    M.row(0).setOnes();
    Vec rhs = Vec::Zero(n);
    rhs(0) = 1.0;
    const Vec q = M.partialPivLu().solve(rhs);
    if (q.minCoeff() >= 0.0 && std::abs(q.sum() - 1.0) < 1e-9) p = q / q.sum();
    return p;
}

bool is_irreducible(const Mat& P) {
    const int n = int(P.rows());
    // strongly connected <=> from every state all states are reachable
    for (int s = 0; s < n; ++s) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{s};
        seen[s] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                if (!seen[v] && P(u, v) > 0.0) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        if (count != n) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / double(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= double(n);
}

// ---------------------------------------------------------------------------
// Cubic spline
// ---------------------------------------------------------------------------

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const int n = int(x_.size());
    if (n < 2 || y_.size() != x_.size())
        throw std::invalid_argument("CubicSpline: need at least two nodes");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // tridiagonal solve for natural second derivatives
    std::vector<double> c(n, 0.0), diag(n, 0.0), rhs(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
        const double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (hl + hr);
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
    }
    for (int i = 1; i < n - 1; ++i) {
        const double hl = x_[i] - x_[i - 1];
        double piv = diag[i] - (i > 1 ? hl * c[i - 1] : 0.0);
        c[i] = (x_[i + 1] - x_[i]) / piv;
        rhs[i] = (rhs[i] - (i > 1 ? hl * rhs[i - 1] : 0.0)) / piv;
    }
    for (int i = n - 2; i >= 1; --i) m_[i] = rhs[i] - c[i] * m_[i + 1];
}

double CubicSpline::operator()(double t) const {
    const int n = int(x_.size());
    int lo = 0, hi = n - 1;
    if (t <= x_.front()) { lo = 0; hi = 1; }
    else if (t >= x_.back()) { lo = n - 2; hi = n - 1; }
    else {
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (x_[mid] <= t) lo = mid; else hi = mid;
        }
    }
    const double h = x_[hi] - x_[lo];
    const double a = (x_[hi] - t) / h, b = (t - x_[lo]) / h;
    return a * y_[lo] + b * y_[hi] +
           ((a * a * a - a) * m_[lo] + (b * b * b - b) * m_[hi]) * h * h / 6.0;
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt
// ---------------------------------------------------------------------------

LMResult levenberg_marquardt(const std::function<Vec(const Vec&)>& residuals,
                             const Vec& x0, LMOptions opts) {
    LMResult out;
    Vec x = x0;
    Vec r = residuals(x);
    double obj = r.squaredNorm();
    double lambda = opts.lambda0;
    const int m = int(r.size()), n = int(x.size());

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // forward-difference Jacobian
        Mat J(m, n);
        parallel_for(n, opts.n_threads, [&](int j) {
            const double h = opts.fd_step * std::max(1e-4, std::abs(x(j)));
            Vec xp = x;
            xp(j) += h;
            J.col(j) = (residuals(xp) - r) / h;
        });
        const Vec g = J.transpose() * r;
        if (g.cwiseAbs().maxCoeff() < opts.gtol) break;
        const Mat JtJ = J.transpose() * J;

        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            Mat A = JtJ;
            A.diagonal().array() += lambda * (JtJ.diagonal().array() + 1e-12);
            const Vec dx = A.ldlt().solve(-g);
            const Vec xn = x + dx;
            const Vec rn = residuals(xn);
            const double on = rn.squaredNorm();
            if (on < obj) {
                const double rel = (obj - on) / std::max(obj, 1e-300);
                x = xn; r = rn; obj = on;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel < opts.ftol) iter = opts.max_iter; // converged
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped) { out.stalled = true; break; }
        ++out.iterations;
    }
    out.x = x;
    out.objective = obj;
    return out;
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_double() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::next_categorical(const double* cum, int n) {
    const double u = next_double() * cum[n - 1];
    int lo = 0, hi = n - 1;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (cum[mid] > u) hi = mid; else lo = mid + 1;
    }
    return lo;
}

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

namespace {
std::atomic<int> g_default_threads{0};
}

int default_threads() {
    int n = g_default_threads.load();
    if (n > 0) return n;
    n = int(std::thread::hardware_concurrency());
    return n > 0 ? n : 1;
}

void set_default_threads(int n) { g_default_threads.store(n); }

void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
    if (n_threads <= 0) n_threads = default_threads();
    n_threads = std::min(n_threads, n);
    if (n_threads <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    std::exception_ptr err;
    std::mutex err_mutex;
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (err) std::rethrow_exception(err);
}

} // namespace hatax::num
