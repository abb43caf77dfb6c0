#include "hatax/calibration.hpp"

#include "hatax/numerics.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace hatax::calib {

void CalibrationTargets::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("CalibrationTargets: sigma must be positive");
    if (!(kurtosis >= 1.0 + skewness * skewness))
        throw std::invalid_argument("CalibrationTargets: kurtosis must be >= 1 + skewness^2");
    if (!(pi_ew > 0.0 && pi_ew < 1.0) || !(pi_we > 0.0 && pi_we < 1.0))
        throw std::invalid_argument("CalibrationTargets: switching probabilities must lie in (0,1)");
    if (n_productivity_states < 2)
        throw std::invalid_argument("CalibrationTargets: need at least two productivity states");
}

Discretization discretize_productivity(const CalibrationTargets& targets) {
    targets.validate();
    const int m = targets.n_productivity_states;

    // Work with the standardized variable y = log(A)/sigma. The support is
    // evenly spaced on [-sqrt(10), sqrt(10)] and the probabilities depend only
    // on the standardized moments, so the solution is invariant to sigma.
    const double half_width = std::sqrt(10.0);
    Vec y(m);
    for (int i = 0; i < m; ++i)
        y(i) = -half_width + 2.0 * half_width * double(i) / double(m - 1);

    // Moment deviations Delta_i = T(y_i) - Tbar with T = (y, y^2, y^3, y^4),
    // scaled to O(1) features so the 1e-10 gradient tolerance is meaningful
    // (raw moments are then matched far inside the 1e-8 contract).
    const Eigen::Vector4d tbar(0.0, 1.0, targets.skewness, targets.kurtosis);
    Eigen::Vector4d scale;
    for (int k = 0; k < 4; ++k) scale(k) = std::pow(half_width, k + 1);
    Eigen::Matrix<double, Eigen::Dynamic, 4> delta(m, 4);
    for (int i = 0; i < m; ++i) {
        const double y2 = y(i) * y(i);
        delta.row(i) << (y(i) - tbar(0)) / scale(0), (y2 - tbar(1)) / scale(1),
            (y2 * y(i) - tbar(2)) / scale(2), (y2 * y2 - tbar(3)) / scale(3);
    }

    // Dual: minimize D(lambda) = log sum_i exp(lambda . Delta_i), a smooth
    // convex function whose gradient is the moment mismatch under p(lambda).
    Eigen::Vector4d lambda = Eigen::Vector4d::Zero();
    Vec p(m);
    auto eval = [&](const Eigen::Vector4d& lam, Eigen::Vector4d& grad,
                    Eigen::Matrix4d& hess) -> double {
        Vec e = delta * lam;
        const double shift = e.maxCoeff();
        Vec w = (e.array() - shift).exp();
        const double W = w.sum();
        p = w / W;
        grad = delta.transpose() * p;
        hess.setZero();
        for (int i = 0; i < m; ++i)
            hess += p(i) * delta.row(i).transpose() * delta.row(i);
        hess -= grad * grad.transpose();
        return std::log(W) + shift;
    };

    Eigen::Vector4d grad;
    Eigen::Matrix4d hess;
    double D = eval(lambda, grad, hess);
    bool converged = false;
    for (int iter = 0; iter < 500; ++iter) {
        if (grad.cwiseAbs().maxCoeff() < 1e-10) {
            converged = true;
            break;
        }
        Eigen::Matrix4d H = hess;
        H.diagonal().array() += 1e-14;
        Eigen::Vector4d step = H.ldlt().solve(-grad);
        // backtracking line search on the dual
        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::Vector4d cand = lambda + t * step;
            Eigen::Vector4d g2;
            Eigen::Matrix4d h2;
            const double D2 = eval(cand, g2, h2);
            if (D2 < D + 1e-4 * t * grad.dot(step)) {
                lambda = cand;
                D = D2;
                grad = g2;
                hess = h2;
                break;
            }
            t *= 0.5;
            if (ls == 59) t = 0.0;
        }
        if (t == 0.0 && grad.cwiseAbs().maxCoeff() < 1e-9) {
            converged = true; // dual value at its floating-point floor
            break;
        }
        if (t == 0.0 || lambda.norm() > 1e3) {
            throw InfeasibleMoments(
                "discretize_productivity: entropy dual diverged; the moment targets are "
                "not attainable on the fixed support",
                lambda.norm());
        }
    }
    if (!converged)
        throw InfeasibleMoments("discretize_productivity: entropy dual failed to converge",
                                lambda.norm());

    Discretization out;
    out.log_A = targets.sigma * y;
    out.p_A = p;
    out.dual = Vec(4);
    for (int k = 0; k < 4; ++k) out.dual(k) = lambda(k);
    return out;
}

AbilityProcess build_ability_process(const CalibrationTargets& targets,
                                     const Vec& log_A, const Vec& p_A) {
    const int m = int(p_A.size());
    const int n = m + 1;
    AbilityProcess proc;
    proc.n_states = n;
    proc.productivities = Vec::Zero(n);
    for (int i = 0; i < m; ++i) proc.productivities(i + 1) = std::exp(log_A(i));

    proc.transition = Mat::Zero(n, n);
    proc.transition(0, 0) = 1.0 - targets.pi_we;
    proc.transition.row(0).tail(m) = targets.pi_we * p_A.transpose();
    for (int i = 1; i < n; ++i) {
        proc.transition(i, 0) = targets.pi_ew;
        proc.transition.row(i).tail(m) = (1.0 - targets.pi_ew) * p_A.transpose();
    }

    // Stationary distribution of Pi in closed form: the occupation margin is a
    // two-state chain and productivity is i.i.d. conditional on entrepreneurship.
    const double ent_mass = targets.pi_we / (targets.pi_we + targets.pi_ew);
    proc.newborn_dist = Vec::Zero(n);
    proc.newborn_dist(0) = 1.0 - ent_mass;
    proc.newborn_dist.tail(m) = ent_mass * p_A;

    proc.stationary_dist = proc.newborn_dist; // placeholder until mortality adjustment
    return proc;
}

Vec mortality_adjusted_stationary(const AbilityProcess& process, double upsilon) {
    const int n = process.n_states;
    const Mat reset = upsilon * process.transition +
                      (1.0 - upsilon) * Vec::Ones(n) * process.newborn_dist.transpose();
    return num::stationary_distribution(reset);
}

AbilityProcess make_ability_process(const CalibrationTargets& targets, double upsilon) {
    const Discretization d = discretize_productivity(targets);
    AbilityProcess proc = build_ability_process(targets, d.log_A, d.p_A);
    proc.stationary_dist = mortality_adjusted_stationary(proc, upsilon);
    proc.validate(upsilon);
    return proc;
}

} // namespace hatax::calib
