#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace hatax {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Iterative solver gave up before reaching its tolerance.
struct NonConvergence : std::runtime_error {
    double residual;
    int iterations;
    NonConvergence(const std::string& what, double res, int iters)
        : std::runtime_error(what), residual(res), iterations(iters) {}
};

// Requested moment does not exist: rho(A(Re z)) >= 1.
struct DivergentMoment : std::runtime_error {
    double rho;
    explicit DivergentMoment(const std::string& what, double rho_)
        : std::runtime_error(what), rho(rho_) {}
};

// No market-clearing prices found inside the admissible search box.
struct EquilibriumNotFound : std::runtime_error {
    std::string diagnostic;
    EquilibriumNotFound(const std::string& what, std::string diag)
        : std::runtime_error(what), diagnostic(std::move(diag)) {}
};

// No tax rate in its legal range can generate the revenue target.
struct InfeasibleTaxMix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Moment targets are not attainable on the fixed support: the entropy dual diverges.
struct InfeasibleMoments : std::runtime_error {
    double dual_norm;
    InfeasibleMoments(const std::string& what, double norm)
        : std::runtime_error(what), dual_norm(norm) {}
};

} // namespace hatax
