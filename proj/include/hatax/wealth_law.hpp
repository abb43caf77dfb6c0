#pragma once

#include "hatax/household.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hatax::wealth {

// E(S^z) machinery for the Markov multiplicative wealth process with reset.
// A(z) has entries upsilon * pi(n,n') * G(n,n')^z.
class MellinEvaluator {
public:
    MellinEvaluator(const Mat& growth, const Mat& transition, double upsilon,
                    const Vec& newborn_dist, const Vec& stationary_dist, double reset_level);
    MellinEvaluator(const household::PolicySolution& policy, const AbilityProcess& ability,
                    double upsilon);

    int n_states() const { return n_; }
    double reset_level() const { return h_; }
    double upsilon() const { return ups_; }
    const Mat& growth() const { return growth_; }
    const Vec& state_dist() const { return p_; }
    const Vec& newborn_dist() const { return varpi_; }
    const Mat& transition() const { return pi_; }

    CMat build_A(Complex z) const;
    Mat build_A_real(double z) const;
    double spectral_radius(double z) const;     // rho(A(z)) for real z
    bool moment_finite(double re_z) const;      // Re z in the convergence strip

    // Unique positive root of rho(A(z)) = 1. Throws if no Pareto tail is
    // detected on (0, z_max].
    double pareto_exponent(double z_max = 50.0, double tol = 1e-10) const;

    // E(S^z) and E(S^z | J = n); throws DivergentMoment outside the strip.
    Complex mellin(Complex z) const;
    Complex mellin_conditional(Complex z, int state) const;

    // u' = varpi' (I - A(z))^{-1}; shared building block.
    CVec resolvent_row(Complex z) const;

private:
    int n_;
    Mat growth_, log_growth_, pi_;
    double ups_, h_;
    Vec varpi_, p_;
};

// Exact atoms peeled out of the inversion: x = log(S/h), death-state, mass.
struct Atom {
    double x;
    double mass;
    int state;
};

struct GridSpec {
    int points = 1 << 12;        // log-wealth grid nodes
    double lo_offset = -2.0;     // grid spans [log h + lo, log h + hi]
    double hi_offset = 14.0;
    double damping = 5e-4;       // Gaussian smoothing applied to the remainder cf
    int fft_size = 1 << 15;      // folding length of the quadrature
    int node_factor = 10;        // quadrature nodes = node_factor * fft_size
    double atom_prune = 2e-4;    // peel atoms of at least this mass
    double error_floor = 1e-10;  // quadrature noise allowance in the tail error estimate
    double tail_error_ratio = 0.1; // splice where est. error exceeds this fraction of Q
};

// Gridded stationary distribution of log total wealth. Node values are
// right-continuous and include the peeled atoms; between nodes the CDF is
// interpolated linearly. Beyond extrapolation_threshold the exceedance follows
// the Pareto tail with exponent zeta, spliced continuously.
struct WealthDistribution {
    Vec log_grid;              // log S at nodes
    Vec cdf;                   // unconditional CDF at nodes
    Mat cdf_by_state;          // one row per state
    Vec est_error;             // tail error estimate per node (unconditional)
    std::vector<Atom> atoms;
    double zeta = 0.0;
    double extrapolation_threshold = 0.0; // in units of S
    int threshold_index = 0;
    double h = 0.0;
    double extrapolation_max = 0.0; // upper S reached by tail_extrapolate
    Vec p;                     // stationary state masses

    double cdf_at(double log_s) const;                  // atom-aware, interpolated
    double cdf_conditional_at(int state, double log_s) const;
    double exceedance(double s) const;                  // P(S > s), tail-extrapolated
    double exceedance_financial(double w) const { return exceedance(w + h); }
    double exceedance_conditional(int state, double s) const;
    double quantile(double prob) const;                 // F^{-1} on the grid/tail
    double mass_at_reset() const;                       // P(S = h) exactly
    double prob_below_reset() const;                    // P(S < h) exactly at the atom

    // E[(S-h) 1{S-h > w}] by exact piecewise integration of the exceedance.
    double partial_mean_financial(double w) const;
    double mean_financial() const;
};

WealthDistribution invert_distribution(const MellinEvaluator& mellin, GridSpec spec = {});

// Extends the stored tail out to wealth level s_max (bookkeeping only: queries
// beyond the threshold already follow the Pareto law).
void tail_extrapolate(WealthDistribution& dist, double s_max);

struct ShareRow {
    double cut;        // population fraction
    bool top;          // top-`cut` share if true, bottom-`cut` share otherwise
    double share;      // fraction of aggregate financial wealth
};

struct ShareTable {
    std::vector<ShareRow> rows;
    double mean_financial = 0.0;
};

// Financial-wealth shares held above/below population quantiles.
ShareTable wealth_shares(const WealthDistribution& dist, const std::vector<double>& top_cuts,
                         const std::vector<double>& bottom_cuts);

// ---------------------------------------------------------------------------
// Monte Carlo oracle (verification only; nothing downstream consumes it)
// ---------------------------------------------------------------------------

struct PanelSample {
    std::vector<double> wealth; // S
    std::vector<int> state;
};

// Forward simulation of S_{t+1} = G(J_t, J_{t+1}) S_t with survival
// probability upsilon and reset to (h, J ~ varpi).
PanelSample simulate_panel(const Mat& growth, const Mat& transition, const Vec& newborn_dist,
                           double h, double upsilon, int n_agents, int n_periods,
                           std::uint64_t seed, int n_threads = 0);

PanelSample simulate_panel(const MellinEvaluator& mellin, int n_agents, int n_periods,
                           std::uint64_t seed, int n_threads = 0);

// Exact draw from the stationary law via the renewal representation
// (geometric age, then walk the chain from birth).
PanelSample stationary_panel(const MellinEvaluator& mellin, int n_agents, std::uint64_t seed,
                             int n_threads = 0);

} // namespace hatax::wealth
