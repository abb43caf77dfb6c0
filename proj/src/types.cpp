#include "hatax/types.hpp"

#include "hatax/numerics.hpp"

#include <cmath>
#include <sstream>

namespace hatax {

namespace {
void fail(std::ostringstream& msg) {
    throw std::invalid_argument(msg.str());
}
} // namespace

void ModelParams::validate() const {
    std::ostringstream msg;
    msg << "ModelParams: ";
    bool bad = false;
    auto check = [&](bool ok, const char* what) {
        if (!ok) {
            if (bad) msg << "; ";
            msg << what;
            bad = true;
        }
    };
    check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    check(delta >= 0.0 && delta <= 1.0, "delta must lie in [0,1]");
    check(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
    check(gamma > 0.0, "gamma must be positive");
    check(upsilon > 0.0 && upsilon < 1.0, "upsilon must lie in (0,1)");
    check(tau_K >= 0.0 && tau_K < 1.0, "tau_K must lie in [0,1)");
    check(tau_L >= 0.0 && tau_L < 1.0, "tau_L must lie in [0,1)");
    check(tau_C >= 0.0 && std::isfinite(tau_C), "tau_C must be nonnegative");
    if (bad) fail(msg);
}

void AbilityProcess::validate(double upsilon) const {
    std::ostringstream msg;
    msg << "AbilityProcess: ";
    const int n = n_states;
    if (n < 1 || productivities.size() != n || transition.rows() != n ||
        transition.cols() != n || newborn_dist.size() != n || stationary_dist.size() != n) {
        msg << "inconsistent dimensions";
        fail(msg);
    }
    if (productivities.minCoeff() < 0.0) {
        msg << "productivities must be nonnegative";
        fail(msg);
    }
    if (transition.minCoeff() < 0.0 || newborn_dist.minCoeff() < 0.0 ||
        stationary_dist.minCoeff() < 0.0) {
        msg << "probabilities must be nonnegative";
        fail(msg);
    }
    for (int i = 0; i < n; ++i) {
        if (std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
            msg << "row " << i << " of Pi does not sum to 1 within 1e-12";
            fail(msg);
        }
    }
    if (std::abs(newborn_dist.sum() - 1.0) > 1e-12) {
        msg << "varpi does not sum to 1 within 1e-12";
        fail(msg);
    }
    if (std::abs(stationary_dist.sum() - 1.0) > 1e-12) {
        msg << "p does not sum to 1 within 1e-12";
        fail(msg);
    }
    if (!num::is_irreducible(transition)) {
        msg << "Pi is reducible";
        fail(msg);
    }
    // p must be stationary for the mortality-reset chain upsilon*Pi + (1-upsilon)*1*varpi'
    const Mat reset = upsilon * transition +
                      (1.0 - upsilon) * Vec::Ones(n) * newborn_dist.transpose();
    const Vec residual = reset.transpose() * stationary_dist - stationary_dist;
    if (residual.cwiseAbs().maxCoeff() > 1e-10) {
        msg << "p is not stationary for the mortality-reset chain";
        fail(msg);
    }
}

Prices::Prices(double R_, double omega_) : R(R_), omega(omega_) {}

void Prices::validate(double upsilon) const {
    std::ostringstream msg;
    msg << "Prices: ";
    if (!(R > upsilon)) {
        msg << "R must exceed upsilon for the borrowing limit to be well-defined";
        fail(msg);
    }
    if (!(omega > 0.0)) {
        msg << "omega must be positive";
        fail(msg);
    }
}

} // namespace hatax
