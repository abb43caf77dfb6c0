#include "hatax/model.hpp"

#include "hatax/numerics.hpp"

#include <cmath>

namespace hatax::model {

std::pair<double, double> labor_demand_and_return(double A, const ModelParams& params,
                                                  double omega) {
    if (!(omega > 0.0)) throw std::domain_error("labor_demand_and_return: omega must be positive");
    if (A < 0.0) throw std::domain_error("labor_demand_and_return: A must be nonnegative");
    if (A == 0.0) return {0.0, -(1.0 - params.tau_K) * params.delta};
    const double alpha = params.alpha;
    const double ell = std::pow((1.0 - alpha) * A / omega, 1.0 / alpha);
    const double r = (1.0 - params.tau_K) *
                     (alpha * A * std::pow(ell, 1.0 - alpha) - params.delta);
    return {ell, r};
}

std::pair<double, double> labor_demand_and_return_numeric(
    const std::function<double(double)>& F1, const ModelParams& params, double omega,
    double ell_hi) {
    if (!(omega > 0.0)) throw std::domain_error("labor_demand_and_return_numeric: omega must be positive");
    auto profit = [&](double ell) { return F1(ell) - params.delta - omega * ell; };
    // Expand the bracket until the Inada condition pulls profit down.
    double hi = ell_hi;
    while (profit(hi) > profit(0.7 * hi) && hi < 1e12) hi *= 4.0;
    const double ell = num::golden_max(profit, 0.0, hi, 1e-13 * std::max(1.0, hi), 600);
    return {ell, (1.0 - params.tau_K) * profit(ell)};
}

double borrowing_limit(const ModelParams& params, const Prices& prices) {
    if (!(prices.R > params.upsilon))
        throw std::domain_error("borrowing_limit: ill-posed, requires R > upsilon");
    return -(1.0 - params.tau_L) * prices.omega / (prices.R - params.upsilon);
}

double box_cox(double c, double gamma) {
    if (!(c > 0.0)) throw std::domain_error("box_cox: argument must be positive");
    if (gamma == 1.0) return std::log(c);
    // expm1 keeps the gamma -> 1 limit exact to machine precision
    return std::expm1((1.0 - gamma) * std::log(c)) / (1.0 - gamma);
}

double box_cox_inv(double v, double gamma) {
    if (gamma == 1.0) return std::exp(v);
    const double u = (1.0 - gamma) * v;
    if (u <= -1.0) throw std::domain_error("box_cox_inv: value outside the range of nu_gamma");
    return std::exp(std::log1p(u) / (1.0 - gamma));
}

StateReturns state_returns(const ModelParams& params, const AbilityProcess& ability,
                           const Prices& prices) {
    prices.validate(params.upsilon);
    const int n = ability.n_states;
    StateReturns out;
    out.r.resize(n);
    out.ell.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto [ell, r] = labor_demand_and_return(ability.productivities(i), params, prices.omega);
        out.ell(i) = ell;
        out.r(i) = r;
    }
    out.b_bar = borrowing_limit(params, prices);
    out.h = -prices.R * out.b_bar; // exact identity h + R*b_bar = 0
    return out;
}

double gross_total_return(int n, double theta, const StateReturns& returns,
                          const ModelParams& params, const Prices& prices) {
    return ((1.0 + returns.r(n)) * theta + prices.R * (1.0 - theta)) / params.upsilon;
}

} // namespace hatax::model
