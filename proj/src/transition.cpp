#include "hatax/transition.hpp"

#include "hatax/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace hatax::transition {

namespace {

// context for the step t -> t+1: wage of t+1 and the rate on year-t savings
household::HouseholdContext step_context(const equilibrium::StationaryEquilibrium& new_eq,
                                         double R_t, double omega_next) {
    return household::make_context(new_eq.params(), new_eq.ctx.ability,
                                   Prices(R_t, omega_next));
}

} // namespace

BackwardResult backward_value_path(const Vec& R_path, const Vec& omega_path,
                                   const equilibrium::StationaryEquilibrium& new_eq) {
    const int T = int(R_path.size()) - 1;
    const int N = new_eq.ctx.ability.n_states;
    const auto& pnew = new_eq.params();

    BackwardResult out;
    out.a_path.resize(T + 1, N);
    out.theta_path.resize(T + 1, N);
    out.h_path.resize(T + 1);

    out.a_path.row(T) = new_eq.policy.a_star.transpose();
    out.theta_path.row(T) = new_eq.policy.theta_star.transpose();
    out.h_path(T) = new_eq.h();
    out.h_path(0) = 0.0; // year 0 belongs to the old regime; set by the caller

    Vec x = new_eq.policy.a_star.array().log();
    for (int t = T - 1; t >= 1; --t) {
        const auto ctx = step_context(new_eq, R_path(t), omega_path(t + 1));
        Vec theta(N), kappa(N);
        const Vec Tx = household::bellman_map(ctx, x, &theta, &kappa);
        out.a_path.row(t) = Tx.array().exp().transpose();
        // theta chosen in year t against year-(t+1) returns and values
        out.theta_path.row(t) = theta.transpose();
        out.h_path(t) = (1.0 - pnew.tau_L) * omega_path(t) +
                        pnew.upsilon / R_path(t) * out.h_path(t + 1);
        x = Tx;
    }
    return out;
}

Vec initial_moments(const equilibrium::StationaryEquilibrium& old_eq, double h1) {
    const Vec& p = old_eq.ctx.ability.stationary_dist;
    return old_eq.agg.m - (old_eq.h() - h1) * p;
}

Mat forward_moments(const equilibrium::StationaryEquilibrium& old_eq,
                    const equilibrium::StationaryEquilibrium& new_eq, const BackwardResult& bw,
                    const Vec& R_path, const Vec& omega_path) {
    const int T = int(R_path.size()) - 1;
    const int N = new_eq.ctx.ability.n_states;
    const auto& pnew = new_eq.params();
    const Mat& pi = new_eq.ctx.ability.transition;
    const Vec& varpi = new_eq.ctx.ability.newborn_dist;

    Mat m(T + 1, N);
    m.row(0) = old_eq.agg.m.transpose();
    m.row(1) = initial_moments(old_eq, bw.h_path(1)).transpose();
    for (int t = 1; t < T; ++t) {
        const auto ctx = step_context(new_eq, R_path(t), omega_path(t + 1));
        const double h_next = bw.h_path(t + 1);
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
                const double growth =
                    pnew.beta * (ctx.base + ctx.excess(j) * bw.theta_path(t, n));
                acc += pi(n, j) * growth * m(t, n);
            }
            m(t + 1, j) = pnew.upsilon * acc + (1.0 - pnew.upsilon) * varpi(j) * h_next;
        }
    }
    return m;
}

void excess_demand_path(const equilibrium::StationaryEquilibrium& new_eq,
                        const BackwardResult& bw, const Mat& moments, const Vec& R_path,
                        const Vec& omega_path, Vec& excess_bond, Vec& excess_labor) {
    const int T = int(R_path.size()) - 1;
    const int N = new_eq.ctx.ability.n_states;
    const auto& pnew = new_eq.params();
    const double bu = pnew.beta / pnew.upsilon;

    excess_bond = Vec::Zero(T + 1);
    excess_labor = Vec::Zero(T + 1);
    for (int t = 1; t <= T; ++t) {
        const double h_next = t < T ? bw.h_path(t + 1) : new_eq.h();
        double EB = -h_next / R_path(t);
        double EL = 0.0;
        for (int n = 0; n < N; ++n) {
            EB += bu * (1.0 - bw.theta_path(t, n)) * moments(t, n);
            const double ell =
                model::labor_demand_and_return(new_eq.ctx.ability.productivities(n), pnew,
                                               omega_path(t))
                    .first;
            EL += bu * bw.theta_path(t, n) * ell * moments(t, n);
        }
        excess_bond(t) = EB;
        excess_labor(t) = EL - 1.0;
    }
}

namespace {

struct PathEval {
    BackwardResult bw;
    Mat moments;
    Vec excess_bond, excess_labor;
    bool valid = false;
};

PathEval evaluate_paths(const equilibrium::StationaryEquilibrium& old_eq,
                        const equilibrium::StationaryEquilibrium& new_eq, const Vec& R_path,
                        const Vec& omega_path) {
    PathEval ev;
    const double ups = new_eq.params().upsilon;
    for (int t = 1; t < R_path.size(); ++t) {
        if (!(R_path(t) > ups + 1e-8) || !(R_path(t) < 2.0) || !(omega_path(t) > 0.02) ||
            !(omega_path(t) < 50.0))
            return ev;
    }
    ev.bw = backward_value_path(R_path, omega_path, new_eq);
    ev.bw.h_path(0) = old_eq.h();
    ev.moments = forward_moments(old_eq, new_eq, ev.bw, R_path, omega_path);
    excess_demand_path(new_eq, ev.bw, ev.moments, R_path, omega_path, ev.excess_bond,
                       ev.excess_labor);
    ev.valid = true;
    return ev;
}

// target knot years: every year to 25, every 5 to 50, every 10 to 100
std::vector<int> target_knots(int T) {
    std::vector<int> k;
    for (int t = 1; t <= std::min(25, T); ++t) k.push_back(t);
    for (int t = 30; t <= std::min(50, T); t += 5) k.push_back(t);
    for (int t = 60; t <= T; t += 10) k.push_back(t);
    if (k.empty() || k.back() != T) k.push_back(T);
    return k;
}

struct SplineParam {
    std::vector<int> knots; // sorted, last = T (pinned)
    double R_final, omega_final;
    int T;

    int n_free() const { return 2 * (int(knots.size()) - 1); }

    void build(const Vec& x, Vec& R_path, Vec& omega_path) const {
        const int nk = int(knots.size());
        std::vector<double> ky(nk), rv(nk), wv(nk);
        for (int i = 0; i < nk; ++i) ky[i] = knots[i];
        for (int i = 0; i < nk - 1; ++i) {
            rv[i] = x(i);
            wv[i] = x(nk - 1 + i);
        }
        rv[nk - 1] = R_final;
        wv[nk - 1] = omega_final;
        num::CubicSpline sr(ky, rv), sw(ky, wv);
        R_path.resize(T + 1);
        omega_path.resize(T + 1);
        R_path(0) = omega_path(0) = 0.0; // year 0 set by the caller
        for (int t = 1; t <= T; ++t) {
            R_path(t) = sr(t);
            omega_path(t) = sw(t);
        }
        R_path(T) = R_final;
        omega_path(T) = omega_final;
    }

    Vec pack(const Vec& R_path, const Vec& omega_path) const {
        const int nk = int(knots.size());
        Vec x(n_free());
        for (int i = 0; i < nk - 1; ++i) {
            x(i) = R_path(knots[i]);
            x(nk - 1 + i) = omega_path(knots[i]);
        }
        return x;
    }
};

} // namespace

TransitionPath solve_transition(const equilibrium::StationaryEquilibrium& old_eq,
                                const equilibrium::StationaryEquilibrium& new_eq,
                                TransitionOptions opts) {
    const int T = opts.horizon;
    const int n_threads = opts.n_threads > 0 ? opts.n_threads : num::default_threads();

    SplineParam sp;
    sp.knots = opts.initial_knots;
    std::sort(sp.knots.begin(), sp.knots.end());
    if (sp.knots.back() != T)
        throw std::invalid_argument("solve_transition: final knot must equal the horizon");
    sp.R_final = new_eq.prices().R;
    sp.omega_final = new_eq.prices().omega;
    sp.T = T;

    auto residuals = [&](const SplineParam& par, const Vec& x) -> Vec {
        Vec R_path, omega_path;
        par.build(x, R_path, omega_path);
        const auto ev = evaluate_paths(old_eq, new_eq, R_path, omega_path);
        Vec r(2 * T);
        if (!ev.valid) {
            r.setConstant(1e3);
            return r;
        }
        for (int t = 1; t <= T; ++t) {
            r(2 * (t - 1)) = ev.excess_bond(t);
            r(2 * (t - 1) + 1) = ev.excess_labor(t);
        }
        return r;
    };

    // seed: linear paths between the stationary equilibria
    Vec R_lin(T + 1), w_lin(T + 1);
    for (int t = 0; t <= T; ++t) {
        const double s = double(t) / T;
        R_lin(t) = old_eq.prices().R + s * (new_eq.prices().R - old_eq.prices().R);
        w_lin(t) = old_eq.prices().omega + s * (new_eq.prices().omega - old_eq.prices().omega);
    }
    Vec x = sp.pack(R_lin, w_lin);

    TransitionPath out;
    out.horizon = T;

    num::LMOptions lo;
    lo.max_iter = opts.lm_max_iter;
    lo.ftol = opts.lm_ftol;
    lo.n_threads = n_threads;
    lo.fd_step = 1e-7;

    auto run_stage = [&](const Vec& x0) {
        auto fn = [&](const Vec& v) { return residuals(sp, v); };
        return num::levenberg_marquardt(fn, x0, lo);
    };

    auto stage = run_stage(x);
    x = stage.x;
    out.stage_objectives.push_back(stage.objective);

    if (opts.refine_knots) {
        const auto targets = target_knots(T);
        for (int year : targets) {
            if (std::find(sp.knots.begin(), sp.knots.end(), year) != sp.knots.end()) continue;
            // warm start: evaluate the current spline, add the knot, repack
            Vec R_path, omega_path;
            sp.build(x, R_path, omega_path);
            sp.knots.push_back(year);
            std::sort(sp.knots.begin(), sp.knots.end());
            x = sp.pack(R_path, omega_path);
            stage = run_stage(x);
            // warm start guarantees non-worsening stages
            x = stage.x;
            out.stage_objectives.push_back(stage.objective);
            if (stage.objective < 1e-14) break;
        }
    }
    out.objective = stage.objective;
    out.final_knots = sp.knots;

    // assemble the solved path
    sp.build(x, out.R_path, out.omega_path);
    out.R_path(0) = old_eq.prices().R;
    out.omega_path(0) = old_eq.prices().omega;
    const auto ev = evaluate_paths(old_eq, new_eq, out.R_path, out.omega_path);
    if (!ev.valid) throw NonConvergence("solve_transition: solved path left the domain", 0, 0);
    out.h_path = ev.bw.h_path;
    out.a_path = ev.bw.a_path;
    out.theta_path = ev.bw.theta_path;
    out.a_path.row(0) = old_eq.policy.a_star.transpose();
    out.theta_path.row(0) = old_eq.policy.theta_star.transpose();
    out.moments = ev.moments;
    out.excess_bond = ev.excess_bond;
    out.excess_labor = ev.excess_labor;

    // aggregates per year
    const int N = new_eq.ctx.ability.n_states;
    const auto& pnew = new_eq.params();
    const auto& pold = old_eq.params();
    const Vec& p = new_eq.ctx.ability.stationary_dist;
    out.consumption_total.resize(T + 1);
    out.consumption_workers.resize(T + 1);
    out.consumption_entrepreneurs.resize(T + 1);
    out.capital.resize(T + 1);
    out.bonds_workers.resize(T + 1);
    out.bonds_entrepreneurs.resize(T + 1);
    out.revenue_total.resize(T + 1);
    out.revenue_labor.resize(T + 1);
    out.revenue_consumption.resize(T + 1);
    out.revenue_capital.resize(T + 1);

    for (int t = 0; t <= T; ++t) {
        const ModelParams& pr = (t == 0) ? pold : pnew;
        const double cshare = (1.0 - pr.beta) / (1.0 + pr.tau_C);
        const double bu = pr.beta / pr.upsilon;
        double cw = 0.0, ce = 0.0, cap = 0.0, bw_ = 0.0, be = 0.0;
        double h_over_R;
        if (t == 0) {
            h_over_R = old_eq.h() / old_eq.prices().R;
        } else {
            const double h_next = (t < T) ? out.h_path(t + 1) : new_eq.h();
            h_over_R = h_next / out.R_path(t);
        }
        for (int n = 0; n < N; ++n) {
            const bool worker = new_eq.ctx.ability.productivities(n) == 0.0;
            const double c = cshare * out.moments(t, n);
            const double th = out.theta_path(t, n);
            (worker ? cw : ce) += c;
            cap += pr.beta * th * out.moments(t, n);
            const double b = -h_over_R * p(n) + bu * (1.0 - th) * out.moments(t, n);
            (worker ? bw_ : be) += b;
        }
        out.consumption_total(t) = cw + ce;
        out.consumption_workers(t) = cw;
        out.consumption_entrepreneurs(t) = ce;
        out.capital(t) = cap;
        out.bonds_workers(t) = bw_;
        out.bonds_entrepreneurs(t) = be;

        // revenue: labor and consumption from year-t objects, capital income
        // from capital installed in t-1 and operated at year-t prices
        if (t == 0) {
            out.revenue_labor(t) = old_eq.revenue.labor;
            out.revenue_consumption(t) = old_eq.revenue.consumption;
            out.revenue_capital(t) = old_eq.revenue.capital;
        } else {
            out.revenue_labor(t) = pnew.tau_L * out.omega_path(t);
            out.revenue_consumption(t) =
                pnew.tau_C / (1.0 + pnew.tau_C) * (1.0 - pnew.beta) * out.moments.row(t).sum();
            Vec r_t(N);
            for (int n = 0; n < N; ++n)
                r_t(n) = model::labor_demand_and_return(
                             new_eq.ctx.ability.productivities(n), pnew, out.omega_path(t))
                             .second;
            const Vec pi_r = new_eq.ctx.ability.transition * r_t;
            double cap_rev = 0.0;
            for (int n = 0; n < N; ++n)
                cap_rev += pnew.beta * out.theta_path(t - 1, n) * pi_r(n) *
                           out.moments(t - 1, n);
            out.revenue_capital(t) = pnew.tau_K / (1.0 - pnew.tau_K) * cap_rev;
        }
        out.revenue_total(t) =
            out.revenue_labor(t) + out.revenue_consumption(t) + out.revenue_capital(t);
    }
    return out;
}

VoteShares vote_analysis(const TransitionPath& path,
                         const equilibrium::StationaryEquilibrium& old_eq,
                         const wealth::WealthDistribution& old_dist) {
    const int N = old_eq.ctx.ability.n_states;
    const Vec& p = old_eq.ctx.ability.stationary_dist;
    const double h_old = old_eq.h();
    const double h1 = path.h_path(1);

    VoteShares out;
    double ent_mass = 0.0, ent_yes = 0.0;
    for (int n = 0; n < N; ++n) {
        const double a_old = old_eq.policy.a_star(n);
        const double a_new = path.a_path(1, n);
        double yes;
        if (std::abs(a_new - a_old) < 1e-9 * a_old && std::abs(h1 - h_old) < 1e-9 * h_old) {
            yes = 0.0; // ties vote no; the mass is reported as indifferent
            out.indifferent += p(n);
        } else if (std::abs(a_new - a_old) < 1e-12 * a_old) {
            yes = h1 > h_old ? 1.0 : 0.0;
        } else {
            // threshold in financial wealth where the new value overtakes
            const double w_bar = (a_old * h_old - a_new * h1) / (a_new - a_old);
            const double s_bar = w_bar + h_old; // position in the old S distribution
            double F;
            if (s_bar <= 0.0)
                F = 0.0;
            else
                F = old_dist.cdf_conditional_at(n, std::log(s_bar));
            yes = (a_new > a_old) ? 1.0 - F : F;
        }
        out.all += p(n) * yes;
        if (old_eq.ctx.ability.productivities(n) == 0.0)
            out.workers = yes;
        else {
            ent_mass += p(n);
            ent_yes += p(n) * yes;
        }
    }
    out.entrepreneurs = ent_mass > 0.0 ? ent_yes / ent_mass : 0.0;
    return out;
}

} // namespace hatax::transition
