#pragma once

#include "hatax/calibration.hpp"
#include "hatax/numerics.hpp"
#include "hatax/types.hpp"

#include <cmath>

namespace testutil {

inline hatax::ModelParams baseline_params() {
    hatax::ModelParams p;
    p.alpha = 0.36;
    p.delta = 0.08;
    p.beta = 0.96;
    p.gamma = 3.0;
    p.upsilon = 0.975;
    p.tau_K = 0.398;
    p.tau_L = 0.248;
    p.tau_C = 0.0;
    return p;
}

inline hatax::calib::CalibrationTargets baseline_targets() {
    hatax::calib::CalibrationTargets t;
    t.sigma = 0.2473;
    t.skewness = -0.08;
    t.kurtosis = 6.22;
    t.pi_ew = 0.0192;
    t.pi_we = 0.0192 * 0.115 / 0.885; // entrepreneur share 0.115
    t.n_productivity_states = 5;
    return t;
}

inline const hatax::AbilityProcess& baseline_ability() {
    static const hatax::AbilityProcess proc =
        hatax::calib::make_ability_process(baseline_targets(), baseline_params().upsilon);
    return proc;
}

} // namespace testutil
