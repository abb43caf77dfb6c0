#include "hatax/wealth_law.hpp"

#include "hatax/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace hatax::wealth {

// ---------------------------------------------------------------------------
// MellinEvaluator
// ---------------------------------------------------------------------------

MellinEvaluator::MellinEvaluator(const Mat& growth, const Mat& transition, double upsilon,
                                 const Vec& newborn_dist, const Vec& stationary_dist,
                                 double reset_level)
    : n_(int(growth.rows())), growth_(growth), pi_(transition), ups_(upsilon),
      h_(reset_level), varpi_(newborn_dist), p_(stationary_dist) {
    if (growth_.minCoeff() <= 0.0)
        throw std::invalid_argument("MellinEvaluator: growth matrix must be strictly positive");
    log_growth_ = growth_.array().log();
}

MellinEvaluator::MellinEvaluator(const household::PolicySolution& policy,
                                 const AbilityProcess& ability, double upsilon)
    : MellinEvaluator(policy.growth, ability.transition, upsilon, ability.newborn_dist,
                      ability.stationary_dist, policy.returns.h) {}

CMat MellinEvaluator::build_A(Complex z) const {
    CMat A(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            A(i, j) = ups_ * pi_(i, j) * std::exp(z * log_growth_(i, j));
    return A;
}

Mat MellinEvaluator::build_A_real(double z) const {
    return (ups_ * pi_.array() * (z * log_growth_.array()).exp()).matrix();
}

double MellinEvaluator::spectral_radius(double z) const {
    return num::perron_root(build_A_real(z));
}

bool MellinEvaluator::moment_finite(double re_z) const {
    return spectral_radius(re_z) < 1.0;
}

double MellinEvaluator::pareto_exponent(double z_max, double tol) const {
    auto f = [&](double z) { return spectral_radius(z) - 1.0; };
    if (f(0.0) >= 0.0)
        throw std::runtime_error("pareto_exponent: rho(A(0)) >= 1, reset chain ill-posed");
    double a, b, fa, fb;
    if (!num::bracket_root(f, 0.0, z_max, 200, a, b, fa, fb))
        throw NonConvergence("pareto_exponent: no Pareto tail detected on (0, z_max]",
                             f(z_max), 0);
    num::RootOptions opts;
    opts.xtol = tol;
    return num::brent_root(f, a, b, opts);
}

CVec MellinEvaluator::resolvent_row(Complex z) const {
    CMat M = CMat::Identity(n_, n_) - build_A(z);
    return M.transpose().partialPivLu().solve(varpi_.cast<Complex>());
}

Complex MellinEvaluator::mellin(Complex z) const {
    const double rho = spectral_radius(z.real());
    if (rho >= 1.0)
        throw DivergentMoment("mellin: Re(z) outside the convergence strip (E(S^z) is infinite)", rho);
    const CVec u = resolvent_row(z);
    return (1.0 - ups_) * std::exp(z * std::log(h_)) * u.sum();
}

Complex MellinEvaluator::mellin_conditional(Complex z, int state) const {
    const double rho = spectral_radius(z.real());
    if (rho >= 1.0)
        throw DivergentMoment("mellin_conditional: Re(z) outside the convergence strip", rho);
    if (p_(state) <= 0.0)
        throw std::domain_error("mellin_conditional: state has zero stationary mass");
    const CVec u = resolvent_row(z);
    return (1.0 - ups_) / p_(state) * std::exp(z * std::log(h_)) * u(state);
}

// ---------------------------------------------------------------------------
// Exact atom enumeration
//
// A stationary draw has age k with probability (1-upsilon)*upsilon^k; given
// the age, the state path follows Pi from a birth state drawn from varpi and
// log(S/h) is the accumulated log growth. Path classes are enumerated exactly
// (collapsed by (state, log growth)) until their death-slice mass falls below
// the prune threshold; everything not enumerated stays in the remainder
// measure handled by quadrature.
// ---------------------------------------------------------------------------

namespace {

struct AtomSet {
    std::vector<Atom> atoms;        // sorted by x after peeling
    std::vector<double> state_mass; // total peeled mass per state
    double total_mass = 0.0;
};

AtomSet peel_atoms(const MellinEvaluator& me, double prune) {
    const int N = me.n_states();
    const double ups = me.upsilon();
    const Mat& pi = me.transition();
    Mat logG = me.growth().array().log();

    AtomSet out;
    out.state_mass.assign(N, 0.0);

    // frontier key: quantized x * N + state
    constexpr double kScale = double(1LL << 44);
    auto pack = [&](double x, int n) -> long long {
        return llround(x * kScale) * N + n;
    };

    std::unordered_map<long long, double> frontier;
    frontier.reserve(1024);
    for (int n = 0; n < N; ++n)
        if (me.newborn_dist()(n) > 0.0) frontier[pack(0.0, n)] = me.newborn_dist()(n);

    double age_weight = 1.0 - ups; // (1-ups) * ups^t
    std::unordered_map<long long, double> next;
    for (int age = 0; age <= 100000 && !frontier.empty(); ++age) {
        // death slices of the retained classes become exact atoms
        for (const auto& [key, f] : frontier) {
            const int n = int(((key % N) + N) % N);
            const double x = double((key - n) / N) / kScale;
            const double mass = age_weight * f;
            out.atoms.push_back({x, mass, n});
            out.state_mass[n] += mass;
            out.total_mass += mass;
        }
        // expand one step, prune classes whose future slices are negligible
        next.clear();
        const double next_weight = age_weight * ups;
        for (const auto& [key, f] : frontier) {
            const int n = int(((key % N) + N) % N);
            const double x = double((key - n) / N) / kScale;
            for (int j = 0; j < N; ++j) {
                const double pf = f * pi(n, j);
                if (next_weight * pf < prune) continue;
                next[pack(x + logG(n, j), j)] += pf;
            }
        }
        frontier.swap(next);
        age_weight = next_weight;
        if (out.atoms.size() > 200000)
            throw std::runtime_error("peel_atoms: atom budget exceeded; raise the prune threshold");
    }
    std::sort(out.atoms.begin(), out.atoms.end(),
              [](const Atom& a, const Atom& b) { return a.x < b.x; });
    return out;
}

// In-place complex Gaussian elimination with partial pivoting (small N).
inline void solve_small(int n, Complex* M, Complex* b) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::norm(M[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::norm(M[r * n + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (piv != col) {
            for (int c = col; c < n; ++c) std::swap(M[col * n + c], M[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const Complex inv = 1.0 / M[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const Complex factor = M[r * n + col] * inv;
            if (factor == Complex(0.0, 0.0)) continue;
            for (int c = col + 1; c < n; ++c) M[r * n + c] -= factor * M[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        Complex s = b[r];
        for (int c = r + 1; c < n; ++c) s -= M[r * n + c] * b[c];
        b[r] = s / M[r * n + r];
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Gil-Pelaez inversion of the remainder measure
//
// CDF(y) = M/2 - (1/pi) Int_0^inf Im(e^{-ity} phi(t)) / t dt, discretized on
// midpoint nodes t_j = (j+1/2)*dt with a Gaussian damping factor, folded into
// an FFT of length L (dt * dy = 2*pi/L), so all grid nodes share one pass of
// resolvent evaluations.
// ---------------------------------------------------------------------------

WealthDistribution invert_distribution(const MellinEvaluator& me, GridSpec spec) {
    const int N = me.n_states();
    const double ups = me.upsilon();
    const double h = me.reset_level();
    const double log_h = std::log(h);
    const Vec& p = me.state_dist();
    const Mat& pi = me.transition();
    Mat logG = me.growth().array().log();

    const int M = spec.points;
    const int L = spec.fft_size;
    const long J = long(spec.node_factor) * L;
    const double lo = spec.lo_offset, hi = spec.hi_offset;
    const double dy = (hi - lo) / double(M - 1);
    const double dt = 2.0 * M_PI / (double(L) * dy);
    const double eps = spec.damping;

    const AtomSet atoms = peel_atoms(me, spec.atom_prune);
    const int n_atoms = int(atoms.atoms.size());

    // remainder masses
    Vec rem_mass(N);
    for (int n = 0; n < N; ++n) rem_mass(n) = p(n) - atoms.state_mass[n];

    // quadrature accumulation, chunked for determinism and parallelism
    const int n_chunks = 8;
    const long chunk_len = (J + n_chunks - 1) / n_chunks;
    std::vector<std::vector<std::vector<Complex>>> chunk_bins(
        n_chunks, std::vector<std::vector<Complex>>(N, std::vector<Complex>(L, Complex(0, 0))));
    // snapshot of the first half of the nodes (for the tail error estimate)
    std::vector<std::vector<std::vector<Complex>>> chunk_bins_half(
        n_chunks, std::vector<std::vector<Complex>>(N, std::vector<Complex>(L, Complex(0, 0))));

    num::parallel_for(n_chunks, 0, [&](int c) {
        const long j0 = c * chunk_len;
        const long j1 = std::min(J, j0 + chunk_len);
        if (j0 >= j1) return;

        auto& bins = chunk_bins[c];
        auto& bins_half = chunk_bins_half[c];

        std::vector<Complex> rotG(N * N), stepG(N * N);
        std::vector<Complex> rotA(n_atoms), stepA(n_atoms);
        Complex rotY, stepY;
        std::vector<Complex> Mbuf(N * N), ubuf(N);

        auto reinit = [&](long j) {
            const double t = (double(j) + 0.5) * dt;
            for (int i = 0; i < N * N; ++i) {
                rotG[i] = std::polar(1.0, t * logG.data()[i]);
                stepG[i] = std::polar(1.0, dt * logG.data()[i]);
            }
            for (int a = 0; a < n_atoms; ++a) {
                rotA[a] = std::polar(1.0, t * atoms.atoms[a].x);
                stepA[a] = std::polar(1.0, dt * atoms.atoms[a].x);
            }
            rotY = std::polar(1.0, -t * lo);
            stepY = std::polar(1.0, -dt * lo);
        };

        for (long j = j0; j < j1; ++j) {
            if ((j - j0) % 2048 == 0) reinit(j);
            const double t = (double(j) + 0.5) * dt;
            const double damp = std::exp(-0.5 * eps * eps * t * t);
            // (I - A(it))^T and the resolvent row; rotG is in Eigen's
            // column-major data order, so entry (row=cc, col=r) sits at r*N+cc
            for (int r = 0; r < N; ++r)
                for (int cc = 0; cc < N; ++cc)
                    Mbuf[r * N + cc] = (r == cc ? Complex(1, 0) : Complex(0, 0)) -
                                       ups * pi(cc, r) * rotG[r * N + cc];
            for (int n = 0; n < N; ++n) ubuf[n] = me.newborn_dist()(n);
            solve_small(N, Mbuf.data(), ubuf.data());

            // peel the enumerated atoms from each state's cf
            static thread_local std::vector<Complex> asum;
            asum.assign(N, Complex(0, 0));
            for (int a = 0; a < n_atoms; ++a)
                asum[atoms.atoms[a].state] += atoms.atoms[a].mass * rotA[a];

            const Complex w0 = rotY * (dt * damp / t);
            const int bin = int(j & (L - 1));
            for (int n = 0; n < N; ++n) {
                const Complex phi_rem = (1.0 - ups) * ubuf[n] - asum[n];
                bins[n][bin] += w0 * phi_rem;
                if (j < J / 2) bins_half[n][bin] += w0 * phi_rem;
            }
            for (int i = 0; i < N * N; ++i) rotG[i] *= stepG[i];
            for (int a = 0; a < n_atoms; ++a) rotA[a] *= stepA[a];
            rotY *= stepY;
        }
    });

    // merge chunks in fixed order
    std::vector<std::vector<Complex>> bins(N, std::vector<Complex>(L, Complex(0, 0)));
    std::vector<std::vector<Complex>> bins_half(N, std::vector<Complex>(L, Complex(0, 0)));
    for (int c = 0; c < n_chunks; ++c)
        for (int n = 0; n < N; ++n)
            for (int b = 0; b < L; ++b) {
                bins[n][b] += chunk_bins[c][n][b];
                bins_half[n][b] += chunk_bins_half[c][n][b];
            }
    chunk_bins.clear();
    chunk_bins_half.clear();

    // FFT per state (full and half), plus the unconditional sums
    auto gp_values = [&](std::vector<Complex> f, double mass_half) -> Vec {
        num::fft(f, false);
        Vec vals(M);
        for (int m = 0; m < M; ++m) {
            const Complex phase = std::polar(1.0, -M_PI * double(m) / double(L));
            vals(m) = mass_half - (1.0 / M_PI) * (phase * f[m]).imag();
        }
        return vals;
    };

    Mat smooth(N, M), smooth_half(N, M);
    std::vector<Complex> tot(L, Complex(0, 0)), tot_half(L, Complex(0, 0));
    for (int n = 0; n < N; ++n) {
        smooth.row(n) = gp_values(bins[n], 0.5 * rem_mass(n)).transpose();
        smooth_half.row(n) = gp_values(bins_half[n], 0.5 * rem_mass(n)).transpose();
        for (int b = 0; b < L; ++b) {
            tot[b] += bins[n][b];
            tot_half[b] += bins_half[n][b];
        }
    }
    const double rem_total = rem_mass.sum();
    Vec smooth_tot = gp_values(tot, 0.5 * rem_total);
    Vec smooth_tot_half = gp_values(tot_half, 0.5 * rem_total);

    // isotonic clip of the smooth parts
    auto clip = [](Vec& v, double mass) {
        double run = 0.0;
        for (int m = 0; m < v.size(); ++m) {
            run = std::max(run, std::min(v(m), mass));
            v(m) = run;
        }
    };
    clip(smooth_tot, rem_total);
    for (int n = 0; n < N; ++n) {
        Vec row = smooth.row(n).transpose();
        clip(row, rem_mass(n));
        smooth.row(n) = row.transpose();
    }

    WealthDistribution dist;
    dist.h = h;
    dist.p = p;
    dist.atoms = atoms.atoms;
    dist.log_grid.resize(M);
    for (int m = 0; m < M; ++m) dist.log_grid(m) = log_h + lo + m * dy;

    // staircase of peeled atoms evaluated at nodes (x-coordinates)
    auto staircase = [&](int state_filter) -> Vec {
        Vec stair = Vec::Zero(M);
        int a = 0;
        double acc = 0.0;
        for (int m = 0; m < M; ++m) {
            const double x_m = lo + m * dy;
            while (a < n_atoms && atoms.atoms[a].x <= x_m + 1e-15) {
                if (state_filter < 0 || atoms.atoms[a].state == state_filter)
                    acc += atoms.atoms[a].mass;
                ++a;
            }
            stair(m) = acc;
        }
        return stair;
    };

    dist.cdf = smooth_tot + staircase(-1);
    dist.cdf_by_state.resize(N, M);
    for (int n = 0; n < N; ++n)
        dist.cdf_by_state.row(n) =
            ((smooth.row(n).transpose() + staircase(n)) / p(n)).transpose();

    // final safety clamp
    for (int m = 0; m < M; ++m) {
        dist.cdf(m) = std::clamp(dist.cdf(m), 0.0, 1.0);
        if (m > 0) dist.cdf(m) = std::max(dist.cdf(m), dist.cdf(m - 1));
        for (int n = 0; n < N; ++n) {
            double v = std::clamp(dist.cdf_by_state(n, m), 0.0, 1.0);
            if (m > 0) v = std::max(v, dist.cdf_by_state(n, m - 1));
            dist.cdf_by_state(n, m) = v;
        }
    }

    // tail error estimate and Pareto splice
    dist.est_error.resize(M);
    for (int m = 0; m < M; ++m)
        dist.est_error(m) =
            std::max(std::abs(smooth_tot(m) - std::clamp(smooth_tot_half(m), 0.0, rem_total)),
                     spec.error_floor);

    dist.zeta = me.pareto_exponent();
    int m_thr = M - 1;
    for (int m = M / 2; m < M; ++m) {
        const double q = 1.0 - dist.cdf(m);
        if (dist.est_error(m) > spec.tail_error_ratio * std::max(q, 1e-300)) {
            m_thr = m;
            break;
        }
    }
    dist.threshold_index = m_thr;
    dist.extrapolation_threshold = std::exp(dist.log_grid(m_thr));
    dist.extrapolation_max = dist.extrapolation_threshold;

    // replace nodes beyond the splice by the Pareto extension (continuous there)
    const double q_thr = 1.0 - dist.cdf(m_thr);
    Vec q_thr_state(N);
    for (int n = 0; n < N; ++n) q_thr_state(n) = 1.0 - dist.cdf_by_state(n, m_thr);
    for (int m = m_thr + 1; m < M; ++m) {
        const double decay = std::exp(-dist.zeta * (dist.log_grid(m) - dist.log_grid(m_thr)));
        dist.cdf(m) = 1.0 - q_thr * decay;
        for (int n = 0; n < N; ++n)
            dist.cdf_by_state(n, m) = 1.0 - q_thr_state(n) * decay;
    }

    return dist;
}

void tail_extrapolate(WealthDistribution& dist, double s_max) {
    dist.extrapolation_max = std::max(dist.extrapolation_threshold, s_max);
}

// ---------------------------------------------------------------------------
// WealthDistribution queries
// ---------------------------------------------------------------------------

namespace {
double interp_nodes(const Vec& grid, const Vec& vals, double y) {
    const int M = int(grid.size());
    if (y <= grid(0)) return y == grid(0) ? vals(0) : 0.0;
    if (y >= grid(M - 1)) return vals(M - 1);
    const double step = grid(1) - grid(0);
    const int i = std::min(M - 2, int((y - grid(0)) / step));
    const double w = (y - grid(i)) / (grid(i + 1) - grid(i));
    return vals(i) * (1.0 - w) + vals(i + 1) * w;
}
} // namespace

double WealthDistribution::cdf_at(double log_s) const {
    if (log_s >= log_grid(threshold_index))
        return 1.0 - exceedance(std::exp(log_s));
    return interp_nodes(log_grid, cdf, log_s);
}

double WealthDistribution::cdf_conditional_at(int state, double log_s) const {
    Vec row = cdf_by_state.row(state).transpose();
    if (log_s >= log_grid(threshold_index)) {
        const double q_thr = 1.0 - row(threshold_index);
        return 1.0 - q_thr * std::exp(-zeta * (log_s - log_grid(threshold_index)));
    }
    return interp_nodes(log_grid, row, log_s);
}

double WealthDistribution::exceedance(double s) const {
    if (s <= 0.0) return 1.0;
    const double y = std::log(s);
    const double y_thr = log_grid(threshold_index);
    if (y >= y_thr) {
        const double q_thr = 1.0 - cdf(threshold_index);
        return q_thr * std::exp(-zeta * (y - y_thr));
    }
    return 1.0 - interp_nodes(log_grid, cdf, y);
}

double WealthDistribution::exceedance_conditional(int state, double s) const {
    return 1.0 - cdf_conditional_at(state, std::log(std::max(s, 1e-300)));
}

double WealthDistribution::quantile(double prob) const {
    const int M = int(log_grid.size());
    prob = std::clamp(prob, 0.0, 1.0);
    const double q_thr = 1.0 - cdf(threshold_index);
    if (1.0 - prob < q_thr * std::exp(-zeta * (log_grid(M - 1) - log_grid(threshold_index)))) {
        // beyond the grid: invert the Pareto tail
        return std::exp(log_grid(threshold_index) - std::log((1.0 - prob) / q_thr) / zeta);
    }
    // binary search on the node CDF, linear interpolation inside the cell
    int lo_i = 0, hi_i = M - 1;
    if (prob <= cdf(0)) return std::exp(log_grid(0));
    while (hi_i - lo_i > 1) {
        const int mid = (lo_i + hi_i) / 2;
        if (cdf(mid) < prob) lo_i = mid; else hi_i = mid;
    }
    const double c0 = cdf(lo_i), c1 = cdf(hi_i);
    const double w = (c1 > c0) ? (prob - c0) / (c1 - c0) : 1.0;
    return std::exp(log_grid(lo_i) + w * (log_grid(hi_i) - log_grid(lo_i)));
}

double WealthDistribution::mass_at_reset() const {
    double m = 0.0;
    for (const auto& a : atoms)
        if (std::abs(a.x) < 1e-14) m += a.mass;
    return m;
}

double WealthDistribution::prob_below_reset() const {
    // CDF just left of the reset atom: node interpolation is unreliable within
    // an atom's cell, so rebuild from atoms strictly below plus the local
    // smooth level (itself atom-free and continuous).
    const double log_h = std::log(h);
    double below = 0.0;
    for (const auto& a : atoms)
        if (a.x < -1e-14) below += a.mass;
    // smooth part at log h: subtract the staircase at the node and re-add
    const int M = int(log_grid.size());
    const double step = log_grid(1) - log_grid(0);
    const int i = std::clamp(int((log_h - log_grid(0)) / step), 0, M - 2);
    auto stair_at = [&](double y) {
        double acc = 0.0;
        for (const auto& a : atoms)
            if (a.x <= y - log_h + 1e-15) acc += a.mass;
        return acc;
    };
    const double s0 = cdf(i) - stair_at(log_grid(i));
    const double s1 = cdf(i + 1) - stair_at(log_grid(i + 1));
    const double w = (log_h - log_grid(i)) / step;
    const double smooth_at_h = s0 * (1.0 - w) + s1 * w;
    return below + smooth_at_h;
}

double WealthDistribution::partial_mean_financial(double w) const {
    const int M = int(log_grid.size());
    const double a = w + h;
    if (!(zeta > 1.0))
        throw DivergentMoment("partial_mean_financial: zeta <= 1, E(S) diverges", zeta);
    const double y_a = std::log(std::max(a, std::exp(log_grid(0))));
    const double y_thr = log_grid(threshold_index);
    const double q_thr = 1.0 - cdf(threshold_index);
    const double s_thr = std::exp(y_thr);

    double integral = 0.0; // integral of Q(s) ds from a upward
    if (y_a < y_thr) {
        // exact integral of the piecewise-linear-in-log exceedance:
        // on [y0,y1], Q(y) = q0 + b (y-y0) and Int Q e^y dy = (Q - b) e^y |.
        const double step = log_grid(1) - log_grid(0);
        int i = std::clamp(int((y_a - log_grid(0)) / step), 0, threshold_index - 1);
        double y_start = y_a;
        for (; i < threshold_index; ++i) {
            const double y0 = log_grid(i), y1 = log_grid(i + 1);
            if (y1 <= y_a) continue;
            const double q0 = 1.0 - cdf(i), q1 = 1.0 - cdf(i + 1);
            const double b = (q1 - q0) / (y1 - y0);
            const double ys = std::max(y0, y_start);
            const double q_ys = q0 + b * (ys - y0);
            integral += (q1 - b) * std::exp(y1) - (q_ys - b) * std::exp(ys);
            y_start = y1;
        }
        integral += q_thr * s_thr / (zeta - 1.0); // Pareto tail, closed form
    } else {
        // a in the Pareto region
        const double q_a = q_thr * std::exp(-zeta * (y_a - y_thr));
        integral = q_a * a / (zeta - 1.0);
    }
    const double q_at_a = exceedance(a);
    return w * q_at_a + integral;
}

double WealthDistribution::mean_financial() const {
    return partial_mean_financial(std::exp(log_grid(0)) - h);
}

ShareTable wealth_shares(const WealthDistribution& dist, const std::vector<double>& top_cuts,
                         const std::vector<double>& bottom_cuts) {
    ShareTable out;
    out.mean_financial = dist.mean_financial();
    for (double q : top_cuts) {
        const double s_q = dist.quantile(1.0 - q);
        out.rows.push_back({q, true, dist.partial_mean_financial(s_q - dist.h) / out.mean_financial});
    }
    for (double b : bottom_cuts) {
        const double s_b = dist.quantile(b);
        out.rows.push_back(
            {b, false, 1.0 - dist.partial_mean_financial(s_b - dist.h) / out.mean_financial});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle
// ---------------------------------------------------------------------------

namespace {
struct ChainTables {
    std::vector<double> pi_cum;    // N rows of inclusive cumulative sums
    std::vector<double> varpi_cum;
    int N;
};

ChainTables make_tables(const Mat& pi, const Vec& varpi) {
    ChainTables t;
    t.N = int(pi.rows());
    t.pi_cum.resize(t.N * t.N);
    for (int i = 0; i < t.N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < t.N; ++j) {
            acc += pi(i, j);
            t.pi_cum[i * t.N + j] = acc;
        }
    }
    t.varpi_cum.resize(t.N);
    double acc = 0.0;
    for (int j = 0; j < t.N; ++j) {
        acc += varpi(j);
        t.varpi_cum[j] = acc;
    }
    return t;
}
} // namespace

PanelSample simulate_panel(const Mat& growth, const Mat& transition, const Vec& newborn_dist,
                           double h, double upsilon, int n_agents, int n_periods,
                           std::uint64_t seed, int n_threads) {
    const ChainTables tab = make_tables(transition, newborn_dist);
    PanelSample out;
    out.wealth.resize(n_agents);
    out.state.resize(n_agents);
    const int n_shards = 256;
    num::parallel_for(n_shards, n_threads, [&](int shard) {
        const int lo = int(std::int64_t(shard) * n_agents / n_shards);
        const int hi = int(std::int64_t(shard + 1) * n_agents / n_shards);
        for (int i = lo; i < hi; ++i) {
            std::uint64_t s0 = seed;
            std::uint64_t mix = (s0 ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t(i) + 1)));
            num::Rng rng(mix);
            int j = rng.next_categorical(tab.varpi_cum.data(), tab.N);
            double S = h;
            for (int t = 0; t < n_periods; ++t) {
                if (rng.next_double() < upsilon) {
                    const int jn = rng.next_categorical(&tab.pi_cum[j * tab.N], tab.N);
                    S *= growth(j, jn);
                    j = jn;
                } else {
                    S = h;
                    j = rng.next_categorical(tab.varpi_cum.data(), tab.N);
                }
            }
            out.wealth[i] = S;
            out.state[i] = j;
        }
    });
    return out;
}

PanelSample simulate_panel(const MellinEvaluator& me, int n_agents, int n_periods,
                           std::uint64_t seed, int n_threads) {
    return simulate_panel(me.growth(), me.transition(), me.newborn_dist(), me.reset_level(),
                          me.upsilon(), n_agents, n_periods, seed, n_threads);
}

PanelSample stationary_panel(const MellinEvaluator& me, int n_agents, std::uint64_t seed,
                             int n_threads) {
    const ChainTables tab = make_tables(me.transition(), me.newborn_dist());
    const double log_ups = std::log(me.upsilon());
    PanelSample out;
    out.wealth.resize(n_agents);
    out.state.resize(n_agents);
    const int n_shards = 256;
    num::parallel_for(n_shards, n_threads, [&](int shard) {
        const int lo = int(std::int64_t(shard) * n_agents / n_shards);
        const int hi = int(std::int64_t(shard + 1) * n_agents / n_shards);
        for (int i = lo; i < hi; ++i) {
            std::uint64_t mix = (seed ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t(i) + 1)));
            num::Rng rng(mix);
            // stationary age is geometric with survival upsilon
            double u = rng.next_double();
            if (u <= 0.0) u = 0x1.0p-53;
            int age = std::min(int(std::log(u) / log_ups), 4000);
            int j = rng.next_categorical(tab.varpi_cum.data(), tab.N);
            double S = me.reset_level();
            for (int t = 0; t < age; ++t) {
                const int jn = rng.next_categorical(&tab.pi_cum[j * tab.N], tab.N);
                S *= me.growth()(j, jn);
                j = jn;
            }
            out.wealth[i] = S;
            out.state[i] = j;
        }
    });
    return out;
}

} // namespace hatax::wealth
