#pragma once

#include "hatax/calibration.hpp"
#include "hatax/equilibrium.hpp"

#include <string>
#include <vector>

namespace hatax::taxopt {

struct Rates {
    double tau_L = 0.0;
    double tau_K = 0.0;
    double tau_C = 0.0;
};

struct TaxRegimePoint {
    Rates rates;
    equilibrium::StationaryEquilibrium eq;
    double welfare = 0.0;
    double revenue_gap = 0.0; // total revenue minus target
    household::Regime regime = household::Regime::slack;
};

struct OptimizerConfig {
    double revenue_tol_rel = 1e-6;  // |gap| <= tol * target at accepted points
    double coarse_step = 0.01;      // frontier grid step in tau_K
    double coarse_step_full = 0.02; // 2-D grid step
    double rate_tol = 1e-4;         // refinement tolerance on rates
    double tau_K_max = 0.8;
    double tau_L_max = 0.98;
    double tau_C_max = 3.0;
    int n_threads = 0;
};

enum class RateId { labor, capital, consumption };

// Shared problem instance: base parameters, ability process, revenue target.
// Carries a warm-start chain so neighboring solves are cheap.
class Problem {
public:
    Problem(ModelParams base, AbilityProcess ability, double revenue_target,
            OptimizerConfig cfg = {});

    // Equilibrium at the given rates, warm-started from the previous call.
    TaxRegimePoint at(const Rates& rates);

    // Solves for the rate making total revenue hit the target, the other two
    // held at the values in `rates`. Throws InfeasibleTaxMix if no rate in the
    // legal range works. On success returns the completed point.
    TaxRegimePoint revenue_preserving(RateId solve_for, Rates rates);

    double target() const { return target_; }
    const ModelParams& base() const { return base_; }
    const AbilityProcess& ability() const { return ability_; }
    const OptimizerConfig& config() const { return cfg_; }
    void reset_warm();

private:
    ModelParams base_;
    AbilityProcess ability_;
    double target_;
    OptimizerConfig cfg_;
    std::optional<Prices> warm_prices_;
    Vec warm_x_;
};

// Revenue at the baseline rates: the target all Section-4 experiments preserve.
double baseline_revenue(const ModelParams& params, const AbilityProcess& ability);

struct FrontierPoint {
    double tau_K;
    double tau_L;
    TaxRegimePoint point;
};

struct FrontierResult {
    std::vector<FrontierPoint> grid;   // revenue-preserving (tau_K, tau_L) frontier
    TaxRegimePoint optimum;
    double kink_tau_K = 0.0;           // regime boundary along the frontier
};

// Welfare maximization over tau_K with tau_L implied and tau_C = 0.
FrontierResult optimize_no_consumption_tax(Problem& prob);

struct FullOptimum {
    TaxRegimePoint optimum;            // global optimum over (tau_L, tau_K), tau_C implied
    std::vector<TaxRegimePoint> grid;  // coarse feasible grid (for surface exports)
    std::vector<TaxRegimePoint> candidates; // refined local optima, best first
};

FullOptimum optimize_full(Problem& prob);

// Local re-optimization used by parameter sweeps (warm-started pattern search
// around a known optimum).
TaxRegimePoint optimize_full_local(Problem& prob, Rates guess, double radius = 0.06);
TaxRegimePoint optimize_no_consumption_tax_local(Problem& prob, double tau_K_guess,
                                                 double radius = 0.08);

enum class SweepParam { gamma, sigma };
enum class TaxMode { full, no_consumption_tax };

struct SweepPoint {
    double param = 0.0;
    double target = 0.0;
    Rates rates;
    double welfare = 0.0;
    double R = 0.0, omega = 0.0;
    double theta_unconstrained = 0.0; // entrepreneur leverage absent the constraint
    household::Regime regime = household::Regime::slack;
    bool failed = false;
    std::string error;
};

struct RegimeBoundary {
    double lo = 0.0, hi = 0.0;          // parameter interval bracketing the change
    household::Regime from = household::Regime::slack, to = household::Regime::slack;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<RegimeBoundary> boundaries;
};

// Re-calibrates (for sigma), re-targets revenue at the baseline rates, and
// re-optimizes taxes at every grid value; regime boundaries are refined by
// bisection on the regime flag to 1e-3 in the parameter. At a sweep optimum
// the constraint margin is measured by the unconstrained leverage (the 1e-8
// derivative rule cannot separate "barely" from its neighbors at the
// optimizer's rate precision): strictly binding if theta_u > 1 + tol, slack
// if theta_u < 1 - tol, barely binding inside the band (tol = barely_tol).
SweepResult sweep(SweepParam which, const std::vector<double>& grid, TaxMode mode,
                  const ModelParams& base, const calib::CalibrationTargets& targets,
                  OptimizerConfig cfg = {}, const Rates* seed = nullptr);

double sweep_barely_tol();

} // namespace hatax::taxopt
