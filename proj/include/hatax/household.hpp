#pragma once

#include "hatax/model.hpp"
#include "hatax/types.hpp"

#include <vector>

namespace hatax::household {

// Everything the agent problem needs at fixed prices. Immutable once built.
struct HouseholdContext {
    ModelParams params;
    AbilityProcess ability;
    Prices prices;
    StateReturns returns;

    // derived quantities for the portfolio objective
    Vec excess;                 // (1 + r_n - R)/upsilon per destination state
    double base = 0.0;          // R/upsilon
    std::vector<int> row_rep;   // representative state with an identical Pi row
};

HouseholdContext make_context(const ModelParams& params, const AbilityProcess& ability,
                              const Prices& prices);

enum class Regime { strictly_binding, barely_binding, slack };

const char* regime_name(Regime r);

// Solved agent problem: value-coefficient vector a*, portfolio weights, and
// the induced wealth-growth matrix G(n,n') = beta * R_{n'}(theta*_n).
struct PolicySolution {
    Vec a_star;
    Vec theta_star;
    Vec kappa;
    Mat growth;
    StateReturns returns;
    std::vector<Regime> regime;
    int iterations = 0;
    double residual = 0.0;
};

// g_n(theta; a) = sum_n' pi(n,n') nu_gamma(a_n' R_n'(theta)); concave in theta.
double portfolio_objective(int n, double theta, const Vec& a, const HouseholdContext& ctx);
double portfolio_objective_deriv(int n, double theta, const Vec& a, const HouseholdContext& ctx);

// Unique maximizer of g_n on [0,1]. Interior solutions satisfy |g_n'| <= 1e-10;
// the degenerate riskless case returns 0 by convention.
double optimal_theta(int n, const Vec& a, const HouseholdContext& ctx);

// Maximizer of g_n with the borrowing constraint removed (theta may exceed 1
// up to the domain edge where some continuation wealth hits zero). Measures
// how much leverage the agent would choose absent the constraint.
double unconstrained_theta(int n, const Vec& a, const HouseholdContext& ctx);

// One application of the log-space coefficient map x -> T x. Optionally
// reports the maximizing weights and certainty equivalents.
Vec bellman_map(const HouseholdContext& ctx, const Vec& x, Vec* theta = nullptr,
                Vec* kappa = nullptr);

struct SolveOptions {
    double tol = 1e-12;      // sup-norm change in log a
    int max_iter = 10000;
    bool accelerate = true;  // Anderson steps guarded by residual monotonicity
    Vec x0;                  // optional initial log a
};

// Fixed point of the log-space Bellman coefficient map (a contraction with
// modulus beta). Throws NonConvergence if the iteration cap is hit.
PolicySolution solve_value_coefficients(const HouseholdContext& ctx, SolveOptions opts = {});

struct DecisionRules {
    double C, K, L, B;
};

// Linear decision rules in total wealth s > 0.
DecisionRules decision_rules(double s, int n, const PolicySolution& sol,
                             const HouseholdContext& ctx);

// Borrowing-regime classification per state. For theta* = 1 the one-sided
// derivative g'(1)/|g(1)| decides strictly vs. barely binding at tolerance 1e-8.
std::vector<Regime> classify_regime(const PolicySolution& sol, const HouseholdContext& ctx,
                                    double tol = 1e-8);

// Shared entrepreneur regime (identical across states 2..N with i.i.d.
// productivity); returns slack if there is no entrepreneur state.
Regime entrepreneur_regime(const PolicySolution& sol);

} // namespace hatax::household
