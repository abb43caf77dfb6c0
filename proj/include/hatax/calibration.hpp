#pragma once

#include "hatax/types.hpp"

namespace hatax::calib {

// Moment targets for entrepreneurial log-productivity plus the occupation
// switching probabilities.
struct CalibrationTargets {
    double sigma = 0.2473;    // std. dev. of log productivity
    double skewness = -0.08;  // third standardized moment
    double kurtosis = 6.22;   // fourth standardized moment
    double pi_ew = 0.0192;    // entrepreneur -> worker
    double pi_we = 0.0024949152542372881; // worker -> entrepreneur
    int n_productivity_states = 5;

    void validate() const;
};

struct Discretization {
    Vec log_A; // evenly spaced on [-sqrt(10)*sigma, +sqrt(10)*sigma]
    Vec p_A;   // maximum-entropy probabilities matching the four moments
    Vec dual;  // Lagrange multipliers of the entropy dual (diagnostics)
};

// Maximum-entropy discretization of log productivity on a fixed evenly spaced
// support, matching mean 0 and the targeted variance, skewness and kurtosis.
// Solved through the convex dual over the four multipliers; gradient
// tolerance 1e-10. Throws InfeasibleMoments if the dual diverges.
Discretization discretize_productivity(const CalibrationTargets& targets);

// Combined occupation-productivity chain on N = 1 + n_productivity_states
// states. Row 1: [1-pi_we, pi_we*p_A'], rows 2..N: [pi_ew, (1-pi_ew)*p_A'].
// varpi is set to the stationary distribution of Pi; stationary_dist is left
// empty until mortality adjustment.
AbilityProcess build_ability_process(const CalibrationTargets& targets,
                                     const Vec& log_A, const Vec& p_A);

// Stationary distribution of the mortality-reset chain
// upsilon*Pi + (1-upsilon)*1*varpi'.
Vec mortality_adjusted_stationary(const AbilityProcess& process, double upsilon);

// Full pipeline: discretize, assemble, mortality-adjust, validate.
AbilityProcess make_ability_process(const CalibrationTargets& targets, double upsilon);

} // namespace hatax::calib
