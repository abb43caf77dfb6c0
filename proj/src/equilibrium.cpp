#include "hatax/equilibrium.hpp"

#include "hatax/numerics.hpp"

#include <cmath>
#include <sstream>

namespace hatax::equilibrium {

namespace {

// m_n = p_n E(S|J=n) = (1-ups) h [varpi' (I - A(1))^{-1}]_n from the growth matrix.
// Returns false when rho(A(1)) >= 1.
bool wealth_moments(const household::HouseholdContext& ctx,
                    const household::PolicySolution& policy, Vec& m, double* rho_out) {
    const int N = ctx.ability.n_states;
    const double ups = ctx.params.upsilon;
    const Mat A1 = ups * ctx.ability.transition.cwiseProduct(policy.growth);
    const double rho = num::perron_root(A1);
    if (rho_out) *rho_out = rho;
    if (rho >= 1.0) return false;
    const Mat M = Mat::Identity(N, N) - A1;
    const Vec v = M.transpose().partialPivLu().solve(ctx.ability.newborn_dist);
    m = (1.0 - ups) * ctx.returns.h * v;
    return true;
}

} // namespace

std::pair<double, double> aggregate_demands(const household::HouseholdContext& ctx,
                                            const household::PolicySolution& policy) {
    Vec m;
    double rho = 0.0;
    if (!wealth_moments(ctx, policy, m, &rho))
        throw DivergentMoment("aggregate_demands: rho(A(1)) >= 1, E(S) is infinite", rho);
    const double bu = ctx.params.beta / ctx.params.upsilon;
    double EB = -ctx.returns.h / ctx.prices.R;
    double EL = 0.0;
    for (int n = 0; n < ctx.ability.n_states; ++n) {
        EB += bu * (1.0 - policy.theta_star(n)) * m(n);
        EL += bu * policy.theta_star(n) * ctx.returns.ell(n) * m(n);
    }
    return {EB, EL};
}

double welfare(const household::PolicySolution& policy, double h, const Vec& newborn_dist,
               double gamma) {
    if (gamma == 1.0)
        return h * std::exp(newborn_dist.dot(policy.a_star.array().log().matrix()));
    const double mean_pow = newborn_dist.dot(policy.a_star.array().pow(1.0 - gamma).matrix());
    return h * std::exp(std::log(mean_pow) / (1.0 - gamma));
}

Revenue tax_revenue(const household::HouseholdContext& ctx,
                    const household::PolicySolution& policy, const Aggregates& agg) {
    const auto& pr = ctx.params;
    Revenue rev;
    rev.labor = pr.tau_L * ctx.prices.omega;
    rev.consumption = pr.tau_C / (1.0 + pr.tau_C) * (1.0 - pr.beta) * agg.ES;
    const Vec pi_r = ctx.ability.transition * ctx.returns.r;
    double capital = 0.0;
    for (int n = 0; n < ctx.ability.n_states; ++n)
        capital += policy.theta_star(n) * pi_r(n) * agg.m(n);
    rev.capital = pr.tau_K / (1.0 - pr.tau_K) * pr.beta * capital;
    rev.total = rev.labor + rev.consumption + rev.capital;
    return rev;
}

void group_aggregates(const household::HouseholdContext& ctx,
                      const household::PolicySolution& policy, Aggregates& agg) {
    const auto& pr = ctx.params;
    const double bu = pr.beta / pr.upsilon;
    const double cshare = (1.0 - pr.beta) / (1.0 + pr.tau_C);
    agg.C_workers = agg.C_entrepreneurs = 0.0;
    agg.K_workers = agg.K_entrepreneurs = 0.0;
    agg.B_workers = agg.B_entrepreneurs = 0.0;
    agg.EK = 0.0;
    agg.output = 0.0;
    const Vec& p = ctx.ability.stationary_dist;
    for (int n = 0; n < ctx.ability.n_states; ++n) {
        const bool worker = ctx.ability.productivities(n) == 0.0;
        const double c = cshare * agg.m(n);
        const double k = bu * policy.theta_star(n) * agg.m(n);
        const double b = -ctx.returns.h / ctx.prices.R * p(n) +
                         bu * (1.0 - policy.theta_star(n)) * agg.m(n);
        (worker ? agg.C_workers : agg.C_entrepreneurs) += c;
        (worker ? agg.K_workers : agg.K_entrepreneurs) += k;
        (worker ? agg.B_workers : agg.B_entrepreneurs) += b;
        agg.EK += pr.beta * policy.theta_star(n) * agg.m(n); // in place next period
    }
    agg.EC = cshare * agg.ES;
    // output of the installed capital, destination-weighted
    Vec y(ctx.ability.n_states);
    for (int n = 0; n < ctx.ability.n_states; ++n)
        y(n) = ctx.ability.productivities(n) *
               std::pow(ctx.returns.ell(n), 1.0 - pr.alpha);
    const Vec pi_y = ctx.ability.transition * y;
    for (int n = 0; n < ctx.ability.n_states; ++n)
        agg.output += pr.beta * policy.theta_star(n) * pi_y(n) * agg.m(n);
}

namespace {

struct PointEval {
    household::HouseholdContext ctx;
    household::PolicySolution policy;
    Vec m;
    double EB = 0.0, EL = 0.0, rho1 = 0.0;
    bool finite = false;
};

class NestedSolver {
public:
    NestedSolver(const ModelParams& params, const AbilityProcess& ability, const EqOptions& opts)
        : params_(params), ability_(ability), opts_(opts) {
        if (opts.x0_policy.size() == ability.n_states) x_warm_ = opts.x0_policy;
    }

    PointEval eval(double R, double omega) {
        PointEval pe;
        pe.ctx = household::make_context(params_, ability_, Prices(R, omega));
        household::SolveOptions so;
        so.x0 = x_warm_;
        pe.policy = household::solve_value_coefficients(pe.ctx, so);
        x_warm_ = pe.policy.a_star.array().log();
        ++inner_evals_;
        pe.finite = wealth_moments(pe.ctx, pe.policy, pe.m, &pe.rho1);
        if (!pe.finite) return pe;
        const double bu = params_.beta / params_.upsilon;
        pe.EB = -pe.ctx.returns.h / R;
        pe.EL = 0.0;
        for (int n = 0; n < ability_.n_states; ++n) {
            pe.EB += bu * (1.0 - pe.policy.theta_star(n)) * pe.m(n);
            pe.EL += bu * pe.policy.theta_star(n) * pe.ctx.returns.ell(n) * pe.m(n);
        }
        return pe;
    }

    // Bond-clearing R at fixed omega; empty if no root in the box.
    std::optional<double> clear_bonds(double omega) {
        const double R_lo = params_.upsilon + opts_.R_margin;
        const double R_box = opts_.R_box_factor / params_.beta;
        auto f = [&](double R) {
            const PointEval pe = eval(R, omega);
            return pe.finite ? pe.EB : 1e12; // divergence means unbounded bond demand
        };
        num::RootOptions ro;
        ro.xtol = 1e-13;
        ro.ftol = opts_.bond_tol;

        // continuation: expand a bracket around the previously cleared rate
        if (R_hint_ > R_lo) {
            double half = 2e-3;
            for (int k = 0; k < 3; ++k, half *= 8.0) {
                const double a = std::max(R_lo, R_hint_ - half);
                const double b = std::min(R_box, R_hint_ + half);
                const double fa = f(a), fb = f(b);
                if (std::isfinite(fa) && fa < 1e11 && std::isfinite(fb) && fb < 1e11 &&
                    fa * fb <= 0.0) {
                    R_hint_ = num::brent_root(f, a, b, ro);
                    return R_hint_;
                }
            }
        }

        // cold path: locate the divergence boundary rho(A(1)) = 1 first
        double hi = R_box;
        {
            double lo = R_lo;
            PointEval pe = eval(R_box, omega);
            if (!pe.finite) {
                double bad = R_box;
                for (int i = 0; i < 60 && bad - lo > 1e-10; ++i) {
                    const double mid = 0.5 * (lo + bad);
                    pe = eval(mid, omega);
                    (pe.finite ? lo : bad) = mid;
                }
                hi = lo;
            }
        }
        double a, b, fa, fb;
        if (!num::bracket_root(f, R_lo, hi, 24, a, b, fa, fb)) return std::nullopt;
        R_hint_ = num::brent_root(f, a, b, ro);
        return R_hint_;
    }

    // residual of labor clearing at omega, solving bonds internally
    double labor_residual(double omega, double* R_out = nullptr) {
        const auto R = clear_bonds(omega);
        if (!R) return std::numeric_limits<double>::quiet_NaN();
        if (R_out) *R_out = *R;
        const PointEval pe = eval(*R, omega);
        ++outer_evals_;
        return pe.EL - 1.0;
    }

    int inner_evals_ = 0;
    int outer_evals_ = 0;

    void set_hint(double R) { R_hint_ = R; }

private:
    ModelParams params_;
    AbilityProcess ability_;
    EqOptions opts_;
    Vec x_warm_;
    double R_hint_ = 0.0;
};

StationaryEquilibrium finalize(const ModelParams& params, const AbilityProcess& ability,
                               const Prices& prices, const Vec& x0, const EqOptions& opts) {
    StationaryEquilibrium eq;
    eq.ctx = household::make_context(params, ability, prices);
    household::SolveOptions so;
    so.x0 = x0;
    eq.policy = household::solve_value_coefficients(eq.ctx, so);
    if (eq.policy.residual > 1e-9)
        throw NonConvergence("equilibrium: value coefficients at the clearing prices did not "
                             "reach tolerance",
                             eq.policy.residual, eq.policy.iterations);
    double rho = 0.0;
    if (!wealth_moments(eq.ctx, eq.policy, eq.agg.m, &rho))
        throw DivergentMoment("equilibrium: rho(A(1)) >= 1 at the clearing prices", rho);
    eq.agg.ES = eq.agg.m.sum();
    eq.agg.EW = eq.agg.ES - eq.ctx.returns.h;
    std::tie(eq.agg.EB, eq.agg.EL) = aggregate_demands(eq.ctx, eq.policy);
    group_aggregates(eq.ctx, eq.policy, eq.agg);
    eq.revenue = tax_revenue(eq.ctx, eq.policy, eq.agg);
    eq.welfare = welfare(eq.policy, eq.ctx.returns.h, ability.newborn_dist, params.gamma);
    eq.ent_regime = household::entrepreneur_regime(eq.policy);
    if (opts.with_zeta)
        eq.zeta = wealth::MellinEvaluator(eq.policy, ability, params.upsilon).pareto_exponent();
    return eq;
}

} // namespace

StationaryEquilibrium solve_equilibrium(const ModelParams& params, const AbilityProcess& ability,
                                        EqOptions opts) {
    params.validate();
    ability.validate(params.upsilon);
    NestedSolver solver(params, ability, opts);
    if (opts.warm) solver.set_hint(opts.warm->R);

    auto g = [&](double omega) { return solver.labor_residual(omega); };

    std::vector<std::pair<double, double>> brackets; // omega intervals with sign change

    // Aggregate labor demand explodes as omega approaches the feasibility edge
    // rho(A(1)) = 1 from the finite side, so an edge adjacent to a finite point
    // with negative residual brackets a root.
    auto edge_bracket = [&](double om_bad, double om_good, double g_good) {
        if (!(g_good < 0.0)) return;
        double bad = om_bad, good = om_good, g_edge = g_good;
        for (int i = 0; i < 30 && std::abs(good - bad) > 1e-4 * good; ++i) {
            const double mid = std::sqrt(bad * good);
            const double gm = g(mid);
            if (std::isfinite(gm)) {
                good = mid;
                g_edge = gm;
                if (g_edge > 0.0) break;
            } else {
                bad = mid;
            }
        }
        if (g_edge > 0.0)
            brackets.emplace_back(std::min(good, om_good), std::max(good, om_good));
    };

    auto scan = [&](double lo, double hi, int points) {
        double xprev = lo, fprev = g(lo);
        for (int i = 1; i <= points; ++i) {
            const double x = lo * std::pow(hi / lo, double(i) / points);
            const double fx = g(x);
            if (std::isfinite(fprev) && std::isfinite(fx) && fprev * fx <= 0.0)
                brackets.emplace_back(xprev, x);
            else if (!std::isfinite(fprev) && std::isfinite(fx))
                edge_bracket(xprev, x, fx);
            else if (std::isfinite(fprev) && !std::isfinite(fx))
                edge_bracket(x, xprev, fprev);
            xprev = x;
            fprev = fx;
        }
    };

    if (opts.warm && !opts.scan_all_roots) {
        const double w = opts.warm->omega;
        scan(std::max(opts.omega_lo, 0.9 * w), std::min(opts.omega_hi, 1.1 * w), 4);
        if (brackets.empty())
            scan(std::max(opts.omega_lo, 0.6 * w), std::min(opts.omega_hi, 1.6 * w), 8);
    }
    if (brackets.empty()) scan(opts.omega_lo, opts.omega_hi, 13);

    if (brackets.empty()) {
        std::ostringstream diag;
        diag << "{\"reason\":\"labor market cannot clear\",\"omega_lo\":" << opts.omega_lo
             << ",\"omega_hi\":" << opts.omega_hi << "}";
        throw EquilibriumNotFound("solve_equilibrium: no clearing prices in the search box",
                                  diag.str());
    }

    std::vector<Prices> roots;
    for (const auto& [lo, hi] : brackets) {
        num::RootOptions ro;
        ro.xtol = 1e-13;
        ro.ftol = opts.labor_tol;
        double R_at = 0.0;
        auto resid = [&](double omega) { return solver.labor_residual(omega, &R_at); };
        const double omega_star = num::brent_root(resid, lo, hi, ro);
        resid(omega_star); // refresh R_at at the root
        roots.emplace_back(R_at, omega_star);
    }

    // primary root: nearest to the warm start if given, otherwise the first
    std::size_t pick = 0;
    if (opts.warm) {
        double best = 1e300;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const double d = std::abs(roots[i].omega - opts.warm->omega);
            if (d < best) { best = d; pick = i; }
        }
    }

    StationaryEquilibrium eq = finalize(params, ability, roots[pick], Vec(), opts);
    eq.diag.roots = roots;
    eq.diag.inner_evals = solver.inner_evals_;
    eq.diag.outer_evals = solver.outer_evals_;
    eq.diag.residual_bond = eq.agg.EB;
    eq.diag.residual_labor = eq.agg.EL - 1.0;
    return eq;
}

StationaryEquilibrium evaluate_at(const ModelParams& params, const AbilityProcess& ability,
                                  const Prices& prices, const Vec& x0_policy) {
    EqOptions opts;
    return finalize(params, ability, prices, x0_policy, opts);
}

wealth::MellinEvaluator make_mellin(const StationaryEquilibrium& eq) {
    return wealth::MellinEvaluator(eq.policy, eq.ctx.ability, eq.params().upsilon);
}

} // namespace hatax::equilibrium
