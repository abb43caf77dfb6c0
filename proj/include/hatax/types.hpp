#pragma once

#include "hatax/common.hpp"

namespace hatax {

// Preference, technology, demography and tax-rate primitives.
// All range constraints are enforced at construction.
struct ModelParams {
    double alpha = 0.36;     // capital share, in (0,1)
    double delta = 0.08;     // depreciation, in [0,1]
    double beta = 0.96;      // discount factor, in (0,1)
    double gamma = 3.0;      // relative risk aversion, > 0
    double upsilon = 0.975;  // survival probability, in (0,1)
    double tau_K = 0.398;    // capital income tax, in [0,1)
    double tau_L = 0.248;    // labor income tax, in [0,1)
    double tau_C = 0.0;      // consumption tax, in [0,inf)

    void validate() const;

    ModelParams with_taxes(double tL, double tK, double tC) const {
        ModelParams p = *this;
        p.tau_L = tL;
        p.tau_K = tK;
        p.tau_C = tC;
        p.validate();
        return p;
    }
};

// N-state ability process: state 1 is the pure worker (A_1 = 0), the rest are
// entrepreneurial productivity levels drawn i.i.d. conditional on remaining an
// entrepreneur.
struct AbilityProcess {
    int n_states = 0;
    Vec productivities;   // A_1..A_N, A_1 = 0
    Mat transition;       // Pi, row-stochastic, irreducible
    Vec newborn_dist;     // varpi
    Vec stationary_dist;  // p: stationary law of upsilon*Pi + (1-upsilon)*1*varpi'

    void validate(double upsilon) const;
};

// Equilibrium price pair. R is the post-tax gross risk-free rate.
struct Prices {
    double R = 1.0;
    double omega = 1.0;

    Prices() = default;
    Prices(double R_, double omega_);
    void validate(double upsilon) const;
};

// Per-state returns and the human-wealth / borrowing-limit pair at given prices.
struct StateReturns {
    Vec r;          // post-tax net capital return by state
    Vec ell;        // labor demand per unit of capital by state
    double h = 0;   // human wealth; h = -R*b_bar exactly
    double b_bar = 0; // natural borrowing limit, <= 0
};

} // namespace hatax
