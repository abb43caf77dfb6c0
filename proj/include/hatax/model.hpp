#pragma once

#include "hatax/types.hpp"

#include <functional>
#include <utility>

namespace hatax::model {

// Profit-maximizing labor input and post-tax net return per unit of capital
// for Cobb-Douglas technology F(k,l) = A k^alpha l^(1-alpha):
//   ell = ((1-alpha) A / omega)^(1/alpha)
//   r   = (1-tau_K) (alpha A ell^(1-alpha) - delta)
// A = 0 is the pure-worker state: (0, -(1-tau_K)*delta).
std::pair<double, double> labor_demand_and_return(double A, const ModelParams& params,
                                                  double omega);

// Numeric fallback for a general constant-returns technology given as
// F1(l) = F(1, l). Golden-section maximization of F1(l) - delta - omega*l.
// Used as the oracle for the closed form.
std::pair<double, double> labor_demand_and_return_numeric(
    const std::function<double(double)>& F1, const ModelParams& params, double omega,
    double ell_hi = 64.0);

// Natural borrowing limit b_bar = -(1-tau_L)*omega / (R - upsilon), requires R > upsilon.
double borrowing_limit(const ModelParams& params, const Prices& prices);

// Box-Cox transformation nu_gamma and its inverse. Continuous in gamma at 1.
double box_cox(double c, double gamma);
double box_cox_inv(double v, double gamma);

// Per-state returns, labor demands, and the (h, b_bar) pair at given prices.
// h is computed as -R*b_bar so the identity holds exactly.
StateReturns state_returns(const ModelParams& params, const AbilityProcess& ability,
                           const Prices& prices);

// Gross return on total wealth: R_n(theta) = ((1+r_n)theta + R(1-theta)) / upsilon.
double gross_total_return(int n, double theta, const StateReturns& returns,
                          const ModelParams& params, const Prices& prices);

} // namespace hatax::model
