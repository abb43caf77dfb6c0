#include "hatax/household.hpp"

#include "hatax/numerics.hpp"

#include <cmath>
#include <sstream>

namespace hatax::household {

namespace {

// nu_gamma'(c) = c^(-gamma); small integer gamma is the common case.
inline double pow_neg_gamma(double c, double gamma) {
    const int gi = int(gamma);
    if (double(gi) == gamma && gi >= 1 && gi <= 8) {
        const double inv = 1.0 / c;
        double out = inv;
        for (int k = 1; k < gi; ++k) out *= inv;
        return out;
    }
    return std::pow(c, -gamma);
}

} // namespace

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::strictly_binding: return "strictly_binding";
        case Regime::barely_binding: return "barely_binding";
        case Regime::slack: return "slack";
    }
    return "?";
}

HouseholdContext make_context(const ModelParams& params, const AbilityProcess& ability,
                              const Prices& prices) {
    params.validate();
    if (ability.n_states > 64)
        throw std::invalid_argument("make_context: more than 64 ability states");
    HouseholdContext ctx;
    ctx.params = params;
    ctx.ability = ability;
    ctx.prices = prices;
    ctx.returns = model::state_returns(params, ability, prices);
    const int n = ability.n_states;
    ctx.excess.resize(n);
    for (int i = 0; i < n; ++i)
        ctx.excess(i) = (1.0 + ctx.returns.r(i) - prices.R) / params.upsilon;
    ctx.base = prices.R / params.upsilon;

    // rows of Pi that coincide share one portfolio problem
    ctx.row_rep.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        int rep = i;
        for (int j = 0; j < i; ++j) {
            if ((ability.transition.row(i) - ability.transition.row(j)).cwiseAbs().maxCoeff() == 0.0) {
                rep = ctx.row_rep[j];
                break;
            }
        }
        ctx.row_rep[i] = rep;
    }
    return ctx;
}

double portfolio_objective(int n, double theta, const Vec& a, const HouseholdContext& ctx) {
    const double gamma = ctx.params.gamma;
    const auto& pi = ctx.ability.transition;
    const int N = ctx.ability.n_states;
    double g = 0.0;
    for (int j = 0; j < N; ++j) {
        const double p = pi(n, j);
        if (p == 0.0) continue;
        const double cr = a(j) * (ctx.base + ctx.excess(j) * theta);
        if (!(cr > 0.0))
            throw std::domain_error("portfolio_objective: nonpositive certainty-equivalent argument");
        g += p * model::box_cox(cr, gamma);
    }
    return g;
}

double portfolio_objective_deriv(int n, double theta, const Vec& a, const HouseholdContext& ctx) {
    const double gamma = ctx.params.gamma;
    const auto& pi = ctx.ability.transition;
    const int N = ctx.ability.n_states;
    double d = 0.0;
    for (int j = 0; j < N; ++j) {
        const double p = pi(n, j);
        if (p == 0.0 || ctx.excess(j) == 0.0) continue;
        const double cr = a(j) * (ctx.base + ctx.excess(j) * theta);
        d += p * pow_neg_gamma(cr, gamma) * a(j) * ctx.excess(j);
    }
    return d;
}

double optimal_theta(int n, const Vec& a, const HouseholdContext& ctx) {
    auto dg = [&](double t) { return portfolio_objective_deriv(n, t, a, ctx); };
    const double d0 = dg(0.0);
    if (d0 <= 0.0) return 0.0; // includes the degenerate riskless case
    const double d1 = dg(1.0);
    if (d1 >= 0.0) return 1.0;
    return num::decreasing_root(dg, 0.0, 1.0, 1e-12);
}

double unconstrained_theta(int n, const Vec& a, const HouseholdContext& ctx) {
    auto dg = [&](double t) { return portfolio_objective_deriv(n, t, a, ctx); };
    if (dg(0.0) <= 0.0) return 0.0;
    // domain edge: smallest theta > 0 at which some reachable continuation
    // wealth R_j(theta) hits zero
    double edge = 1e6;
    for (int j = 0; j < ctx.ability.n_states; ++j) {
        if (ctx.ability.transition(n, j) > 0.0 && ctx.excess(j) < 0.0)
            edge = std::min(edge, -ctx.base / ctx.excess(j));
    }
    const double hi = 0.999999 * edge;
    if (dg(hi) >= 0.0) return hi;
    return num::decreasing_root(dg, 0.0, hi, 1e-12);
}

namespace {

// log of the Kreps-Porteus certainty equivalent in power-mean form:
// 1 + (1-gamma) g_n(theta; a) telescopes to sum_j pi(n,j) (a_j R_j(theta))^(1-gamma),
// which is free of the cancellation that plagues the nu/nu^{-1} composition
// when continuation wealth gets large.
double log_certainty_equivalent(int n, double theta, const Vec& log_a,
                                const HouseholdContext& ctx) {
    const double gamma = ctx.params.gamma;
    const auto& pi = ctx.ability.transition;
    const int N = ctx.ability.n_states;
    if (gamma == 1.0) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) {
            const double p = pi(n, j);
            if (p == 0.0) continue;
            s += p * (log_a(j) + std::log(ctx.base + ctx.excess(j) * theta));
        }
        return s;
    }
    // log-sum-exp of (1-gamma) log c_j
    double emax = -std::numeric_limits<double>::infinity();
    double e[64];
    for (int j = 0; j < N; ++j) {
        e[j] = (pi(n, j) == 0.0)
                   ? -std::numeric_limits<double>::infinity()
                   : (1.0 - gamma) * (log_a(j) + std::log(ctx.base + ctx.excess(j) * theta));
        emax = std::max(emax, e[j]);
    }
    double W = 0.0;
    for (int j = 0; j < N; ++j) {
        const double p = pi(n, j);
        if (p == 0.0) continue;
        W += p * std::exp(e[j] - emax);
    }
    return (std::log(W) + emax) / (1.0 - gamma);
}

// One application of the log-space coefficient map; also reports kappa and theta.
void apply_T(const HouseholdContext& ctx, const Vec& x, Vec& Tx, Vec& theta, Vec& kappa) {
    const int N = ctx.ability.n_states;
    const double beta = ctx.params.beta;
    const double cons = (1.0 - beta) * std::log((1.0 - beta) / (1.0 + ctx.params.tau_C)) +
                        beta * std::log(beta);
    const Vec a = x.array().exp();
    for (int i = 0; i < N; ++i) {
        const int rep = ctx.row_rep[i];
        if (rep < i) {
            Tx(i) = Tx(rep);
            theta(i) = theta(rep);
            kappa(i) = kappa(rep);
            continue;
        }
        const double th = optimal_theta(i, a, ctx);
        const double log_k = log_certainty_equivalent(i, th, x, ctx);
        theta(i) = th;
        kappa(i) = std::exp(log_k);
        Tx(i) = cons + beta * log_k;
    }
}

} // namespace

Vec bellman_map(const HouseholdContext& ctx, const Vec& x, Vec* theta, Vec* kappa) {
    const int N = ctx.ability.n_states;
    Vec Tx(N), th(N), ka(N);
    apply_T(ctx, x, Tx, th, ka);
    if (theta) *theta = th;
    if (kappa) *kappa = ka;
    return Tx;
}

PolicySolution solve_value_coefficients(const HouseholdContext& ctx, SolveOptions opts) {
    const int N = ctx.ability.n_states;
    Vec x = (opts.x0.size() == N) ? opts.x0 : Vec::Zero(N);
    Vec Tx(N), theta(N), kappa(N);

    apply_T(ctx, x, Tx, theta, kappa);
    Vec f = Tx - x;
    double res = f.cwiseAbs().maxCoeff();
    int iter = 0;

    // Anderson history (difference form), window 3
    constexpr int window = 3;
    std::vector<Vec> dx_hist, df_hist;

    // the sup-norm change stops being representable once the map's own
    // floating-point noise dominates; accept stagnation at that floor.
    // Above the floor the plain contraction halves the residual within
    // ~log(0.5)/log(beta) iterations, so a long halving drought means the
    // floor has been reached.
    double halving_ref = res;
    int since_halving = 0;

    while (res >= opts.tol && iter < opts.max_iter) {
        if (res <= 0.5 * halving_ref) {
            halving_ref = res;
            since_halving = 0;
        } else if (++since_halving > 300) {
            // the solution is stored with its achieved residual; genuinely bad
            // stagnation is rejected, precision loss at extreme price points
            // (where only the residual's sign structure matters) is accepted
            if (res < 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
            throw NonConvergence("solve_value_coefficients: stagnated above tolerance", res,
                                 iter);
        }
        Vec x_new;
        bool plain = true;
        if (opts.accelerate && !dx_hist.empty()) {
            const int k = int(dx_hist.size());
            Mat dF(N, k);
            for (int j = 0; j < k; ++j) dF.col(j) = df_hist[j];
            const Vec gamma = dF.colPivHouseholderQr().solve(f);
            Vec cand = x + f;
            for (int j = 0; j < k; ++j) cand -= (dx_hist[j] + df_hist[j]) * gamma(j);
            // trust region: a beta-contraction moves at most ~res/(1-beta)
            const double step_cap =
                60.0 * res / (1.0 - ctx.params.beta) + 1e-3;
            if ((cand - x).cwiseAbs().maxCoeff() <= step_cap) {
                try {
                    Vec Tc(N), th_c(N), ka_c(N);
                    apply_T(ctx, cand, Tc, th_c, ka_c);
                    const Vec fc = Tc - cand;
                    const double rc = fc.cwiseAbs().maxCoeff();
                    // accept only clear progress; marginal improvements can
                    // limit-cycle below the plain contraction rate
                    if (rc < 0.5 * res) {
                        dx_hist.push_back(cand - x);
                        df_hist.push_back(fc - f);
                        x_new = cand;
                        Tx = Tc; theta = th_c; kappa = ka_c;
                        f = fc; res = rc;
                        plain = false;
                    }
                } catch (const std::exception&) {
                    // candidate left the numerically representable domain
                }
            }
        }
        if (plain) {
            x_new = Tx; // plain contraction step
            Vec Tn(N), th_n(N), ka_n(N);
            apply_T(ctx, x_new, Tn, th_n, ka_n);
            const Vec fn = Tn - x_new;
            dx_hist.push_back(x_new - x);
            df_hist.push_back(fn - f);
            Tx = Tn; theta = th_n; kappa = ka_n;
            f = fn;
            res = f.cwiseAbs().maxCoeff();
        }
        if (int(dx_hist.size()) > window) {
            dx_hist.erase(dx_hist.begin());
            df_hist.erase(df_hist.begin());
        }
        x = x_new;
        ++iter;
    }
    if (res >= opts.tol && iter >= opts.max_iter)
        throw NonConvergence("solve_value_coefficients: iteration cap exceeded", res, iter);

    PolicySolution sol;
    sol.a_star = x.array().exp();
    sol.theta_star = theta;
    sol.kappa = kappa;
    sol.returns = ctx.returns;
    sol.iterations = iter;
    sol.residual = res;
    sol.growth.resize(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            sol.growth(i, j) = ctx.params.beta * (ctx.base + ctx.excess(j) * theta(i));
    sol.regime = classify_regime(sol, ctx);
    return sol;
}

DecisionRules decision_rules(double s, int n, const PolicySolution& sol,
                             const HouseholdContext& ctx) {
    if (!(s > 0.0)) throw std::domain_error("decision_rules: total wealth must be positive");
    const double beta = ctx.params.beta, ups = ctx.params.upsilon;
    const double th = sol.theta_star(n);
    DecisionRules d;
    d.C = (1.0 - beta) * s / (1.0 + ctx.params.tau_C);
    d.K = beta / ups * th * s;
    d.L = beta / ups * th * ctx.returns.ell(n) * s;
    d.B = -ctx.returns.h / ctx.prices.R + beta / ups * (1.0 - th) * s;
    return d;
}

std::vector<Regime> classify_regime(const PolicySolution& sol, const HouseholdContext& ctx,
                                    double tol) {
    const int N = ctx.ability.n_states;
    std::vector<Regime> out(N, Regime::slack);
    for (int i = 0; i < N; ++i) {
        if (sol.theta_star(i) < 1.0) continue;
        const double g1 = portfolio_objective(i, 1.0, sol.a_star, ctx);
        const double d1 = portfolio_objective_deriv(i, 1.0, sol.a_star, ctx);
        const double scale = std::max(std::abs(g1), 1e-12);
        out[i] = (d1 / scale > tol) ? Regime::strictly_binding : Regime::barely_binding;
    }
    return out;
}

Regime entrepreneur_regime(const PolicySolution& sol) {
    return sol.regime.size() > 1 ? sol.regime[1] : Regime::slack;
}

} // namespace hatax::household
