#pragma once

#include "hatax/household.hpp"
#include "hatax/wealth_law.hpp"

#include <optional>

namespace hatax::equilibrium {

struct Aggregates {
    Vec m;                 // m_n = p_n E(S | J = n)
    double ES = 0.0;       // aggregate total wealth
    double EW = 0.0;       // aggregate financial wealth, ES - h
    double EB = 0.0;       // aggregate bond demand
    double EL = 0.0;       // aggregate labor demand
    double EK = 0.0;       // physical capital in place, beta * sum theta_n m_n
    double EC = 0.0;       // aggregate consumption
    double output = 0.0;   // production of the installed capital
    double C_workers = 0.0, C_entrepreneurs = 0.0;
    double K_workers = 0.0, K_entrepreneurs = 0.0;
    double B_workers = 0.0, B_entrepreneurs = 0.0;
};

struct Revenue {
    double labor = 0.0;
    double consumption = 0.0;
    double capital = 0.0;
    double total = 0.0;
};

struct SolveDiagnostics {
    int outer_evals = 0;
    int inner_evals = 0;
    double residual_bond = 0.0;
    double residual_labor = 0.0;
    std::vector<Prices> roots; // all distinct clearing pairs found by the scan
};

struct StationaryEquilibrium {
    household::HouseholdContext ctx; // params, ability, prices, returns
    household::PolicySolution policy;
    Aggregates agg;
    Revenue revenue;
    double welfare = 0.0;
    std::optional<double> zeta;
    household::Regime ent_regime = household::Regime::slack;
    SolveDiagnostics diag;

    const Prices& prices() const { return ctx.prices; }
    const ModelParams& params() const { return ctx.params; }
    double h() const { return ctx.returns.h; }
};

// Closed-form aggregate bond and labor demands at given prices and policy.
// Throws DivergentMoment if rho(A(1)) >= 1.
std::pair<double, double> aggregate_demands(const household::HouseholdContext& ctx,
                                            const household::PolicySolution& policy);

// Newborn certainty-equivalent welfare.
double welfare(const household::PolicySolution& policy, double h, const Vec& newborn_dist,
               double gamma);

struct EqOptions {
    double R_margin = 1e-7;       // inner search starts at upsilon + margin
    double R_box_factor = 1.5;    // inner search capped at R_box_factor / beta
    double omega_lo = 0.1;
    double omega_hi = 10.0;
    double bond_tol = 1e-10;
    double labor_tol = 1e-10;
    bool with_zeta = false;
    bool scan_all_roots = false;  // full-box scan even with a warm start
    std::optional<Prices> warm;
    Vec x0_policy;                // warm start for the value-coefficient solve
};

// Finds (R, omega) zeroing both excess demands by a nested bracketed search:
// bonds cleared in R given omega (inner), labor cleared in omega (outer).
// Throws EquilibriumNotFound when no clearing pair exists in the box.
StationaryEquilibrium solve_equilibrium(const ModelParams& params, const AbilityProcess& ability,
                                        EqOptions opts = {});

// Revenue components in stationary equilibrium.
Revenue tax_revenue(const household::HouseholdContext& ctx,
                    const household::PolicySolution& policy, const Aggregates& agg);

// Occupation-level splits of consumption, capital and bonds.
void group_aggregates(const household::HouseholdContext& ctx,
                      const household::PolicySolution& policy, Aggregates& agg);

// Rebuilds dependent quantities (aggregates, revenue, welfare) at given prices;
// used by tests that probe off-equilibrium points.
StationaryEquilibrium evaluate_at(const ModelParams& params, const AbilityProcess& ability,
                                  const Prices& prices, const Vec& x0_policy = {});

wealth::MellinEvaluator make_mellin(const StationaryEquilibrium& eq);

} // namespace hatax::equilibrium
