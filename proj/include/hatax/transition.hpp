#pragma once

#include "hatax/equilibrium.hpp"
#include "hatax/wealth_law.hpp"

namespace hatax::transition {

// Perfect-foresight transition from the old stationary equilibrium to the new
// one after an unanticipated permanent tax change in year 1.
//
// Conventions: year 0 is the old stationary state; the new rates apply from
// year 1 on. R_path[t] is the gross rate earned on savings made in year t
// (paid in t+1); omega_path[t] is the year-t wage. Year T is pinned to the
// new stationary equilibrium. Financial wealth carries over the announcement;
// human wealth is revalued, so year-1 total wealth is W + h_1.

struct BackwardResult {
    Mat a_path;      // (T+1) x N value coefficients; rows 1..T meaningful
    Mat theta_path;  // (T+1) x N portfolio weights
    Vec h_path;      // human wealth per year; h_path[0] is the old value
};

struct VoteShares {
    double all = 0.0;
    double workers = 0.0;
    double entrepreneurs = 0.0;
    double indifferent = 0.0;
};

struct TransitionPath {
    int horizon = 0;
    Vec R_path, omega_path, h_path;
    Mat a_path, theta_path;
    Mat moments;                 // (T+1) x N state-conditional first moments of S
    Vec excess_bond, excess_labor; // per year, 1..T (entry 0 is zero)
    // per-year aggregates (row 0 = old stationary values)
    Vec consumption_total, consumption_workers, consumption_entrepreneurs;
    Vec capital;                 // physical capital chosen in year t
    Vec bonds_workers, bonds_entrepreneurs;
    Vec revenue_total, revenue_labor, revenue_consumption, revenue_capital;
    VoteShares vote;
    double objective = 0.0;      // final sum of squared excess demands
    std::vector<double> stage_objectives;
    std::vector<int> final_knots;
};

struct TransitionOptions {
    int horizon = 100;
    std::vector<int> initial_knots = {1, 5, 10, 20, 50, 100};
    int lm_max_iter = 60;
    double lm_ftol = 1e-12;
    int n_threads = 0;           // 0: library default
    bool refine_knots = true;    // sequential knot additions after the first stage
};

// One backward pass of the Bellman coefficient recursion along given price
// paths, terminal condition at the new stationary equilibrium.
BackwardResult backward_value_path(const Vec& R_path, const Vec& omega_path,
                                   const equilibrium::StationaryEquilibrium& new_eq);

// Year-1 state-conditional first moments: financial wealth from the old
// stationary distribution plus the revalued human wealth h1.
Vec initial_moments(const equilibrium::StationaryEquilibrium& old_eq, double h1);

// Forward recursion of the state-conditional first moments under the solved
// decision rules; rows 1..T filled, row 0 holds the old stationary moments.
Mat forward_moments(const equilibrium::StationaryEquilibrium& old_eq,
                    const equilibrium::StationaryEquilibrium& new_eq, const BackwardResult& bw,
                    const Vec& R_path, const Vec& omega_path);

// Per-year excess demands implied by the moments and decision rules.
void excess_demand_path(const equilibrium::StationaryEquilibrium& new_eq,
                        const BackwardResult& bw, const Mat& moments, const Vec& R_path,
                        const Vec& omega_path, Vec& excess_bond, Vec& excess_labor);

// Full solve: staged cubic-spline least squares on the price paths.
TransitionPath solve_transition(const equilibrium::StationaryEquilibrium& old_eq,
                                const equilibrium::StationaryEquilibrium& new_eq,
                                TransitionOptions opts = {});

// Year-one vote: share of agents whose value function rises under the reform,
// from the old regime's conditional wealth distributions.
VoteShares vote_analysis(const TransitionPath& path,
                         const equilibrium::StationaryEquilibrium& old_eq,
                         const wealth::WealthDistribution& old_dist);

} // namespace hatax::transition
