#include "hatax/tax_optimizer.hpp"

#include "hatax/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hatax::taxopt {

namespace {

Rates with_rate(Rates r, RateId id, double v) {
    switch (id) {
        case RateId::labor: r.tau_L = v; break;
        case RateId::capital: r.tau_K = v; break;
        case RateId::consumption: r.tau_C = v; break;
    }
    return r;
}

} // namespace

Problem::Problem(ModelParams base, AbilityProcess ability, double revenue_target,
                 OptimizerConfig cfg)
    : base_(base), ability_(std::move(ability)), target_(revenue_target), cfg_(cfg) {}

void Problem::reset_warm() {
    warm_prices_.reset();
    warm_x_ = Vec();
}

TaxRegimePoint Problem::at(const Rates& rates) {
    const ModelParams p = base_.with_taxes(rates.tau_L, rates.tau_K, rates.tau_C);
    equilibrium::EqOptions opts;
    opts.warm = warm_prices_;
    opts.x0_policy = warm_x_;
    auto eq = equilibrium::solve_equilibrium(p, ability_, opts);
    warm_prices_ = eq.prices();
    warm_x_ = eq.policy.a_star.array().log();
    TaxRegimePoint pt;
    pt.rates = rates;
    pt.welfare = eq.welfare;
    pt.revenue_gap = eq.revenue.total - target_;
    pt.regime = eq.ent_regime;
    pt.eq = std::move(eq);
    return pt;
}

TaxRegimePoint Problem::revenue_preserving(RateId solve_for, Rates rates) {
    const double hi_cap = solve_for == RateId::consumption ? cfg_.tau_C_max
                          : solve_for == RateId::labor     ? cfg_.tau_L_max
                                                           : cfg_.tau_K_max;
    TaxRegimePoint last;
    bool have_last = false;
    auto gap = [&](double v) {
        last = at(with_rate(rates, solve_for, v));
        have_last = true;
        return last.revenue_gap;
    };

    double g0;
    try {
        g0 = gap(0.0);
    } catch (const std::exception& e) {
        throw InfeasibleTaxMix(std::string("revenue_preserving: equilibrium failed at the "
                                           "zero rate: ") + e.what());
    }
    const double tol = cfg_.revenue_tol_rel * std::abs(target_);
    if (std::abs(g0) <= tol) return last;
    if (g0 > 0.0)
        throw InfeasibleTaxMix("revenue_preserving: revenue already exceeds the target at a "
                               "zero rate; no legal rate clears the gap");

    // expand upward until the revenue target is bracketed
    double lo = 0.0, glo = g0, hi = 0.0, ghi = 0.0;
    bool bracketed = false;
    for (double step = 0.05; !bracketed;) {
        hi = std::min(hi_cap, lo + step);
        double gh;
        try {
            gh = gap(hi);
        } catch (const std::exception&) {
            // equilibrium lost before reaching the target
            throw InfeasibleTaxMix("revenue_preserving: equilibrium ceased to exist before "
                                   "the revenue target was reached");
        }
        if (gh >= 0.0) {
            ghi = gh;
            bracketed = true;
        } else {
            lo = hi;
            glo = gh;
            if (hi >= hi_cap)
                throw InfeasibleTaxMix("revenue_preserving: no rate in the legal range "
                                       "reaches the revenue target");
            step *= 2.0;
        }
    }
    (void)glo;
    (void)ghi;

    num::RootOptions ro;
    ro.xtol = 1e-12;
    ro.ftol = tol;
    const double root = num::brent_root([&](double v) { return gap(v); }, lo, hi, ro);
    if (!have_last || std::abs(last.revenue_gap) > tol) gap(root);
    return last;
}

double baseline_revenue(const ModelParams& params, const AbilityProcess& ability) {
    return equilibrium::solve_equilibrium(params, ability).revenue.total;
}

// ---------------------------------------------------------------------------
// Frontier without a consumption tax
// ---------------------------------------------------------------------------

FrontierResult optimize_no_consumption_tax(Problem& prob) {
    const auto& cfg = prob.config();
    const int n_pts = int(std::round(cfg.tau_K_max / cfg.coarse_step)) + 1;

    // coarse frontier, chunked so each thread chains its own warm starts
    std::vector<FrontierPoint> grid(n_pts);
    std::vector<char> ok(n_pts, 0);
    const int n_workers = std::min(num::default_threads(), 4);
    num::parallel_for(n_workers, n_workers, [&](int w) {
        Problem local = prob;
        local.reset_warm();
        const int lo = w * n_pts / n_workers, hi = (w + 1) * n_pts / n_workers;
        for (int i = lo; i < hi; ++i) {
            const double tau_K = i * cfg.coarse_step;
            try {
                auto pt = local.revenue_preserving(RateId::labor, Rates{0.0, tau_K, 0.0});
                grid[i] = FrontierPoint{tau_K, pt.rates.tau_L, std::move(pt)};
                ok[i] = 1;
            } catch (const std::exception&) {
                ok[i] = 0;
            }
        }
    });

    FrontierResult out;
    int best = -1;
    for (int i = 0; i < n_pts; ++i) {
        if (!ok[i]) continue;
        if (best < 0 || grid[i].point.welfare > grid[best].point.welfare) best = i;
        out.grid.push_back(grid[i]);
    }
    if (best < 0) throw InfeasibleTaxMix("optimize_no_consumption_tax: empty frontier");

    // golden-section refinement of welfare(tau_K) around the best grid point
    const double lo = std::max(0.0, grid[best].tau_K - cfg.coarse_step);
    const double hi = std::min(cfg.tau_K_max, grid[best].tau_K + cfg.coarse_step);
    auto weval = [&](double tk) {
        return prob.revenue_preserving(RateId::labor, Rates{0.0, tk, 0.0}).welfare;
    };
    const double tk_star = num::golden_max(weval, lo, hi, cfg.rate_tol);
    out.optimum = prob.revenue_preserving(RateId::labor, Rates{0.0, tk_star, 0.0});

    // regime boundary along the frontier, bisected on the flag
    using household::Regime;
    out.kink_tau_K = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < out.grid.size(); ++i) {
        const Regime a = out.grid[i - 1].point.regime;
        const Regime b = out.grid[i].point.regime;
        const bool a_bind = a == Regime::strictly_binding;
        const bool b_bind = b == Regime::strictly_binding;
        if (a_bind == b_bind) continue;
        double lo_k = out.grid[i - 1].tau_K, hi_k = out.grid[i].tau_K;
        bool lo_bind = a_bind;
        while (hi_k - lo_k > 1e-3) {
            const double mid = 0.5 * (lo_k + hi_k);
            const auto pt = prob.revenue_preserving(RateId::labor, Rates{0.0, mid, 0.0});
            const bool mid_bind = pt.regime == Regime::strictly_binding;
            if (mid_bind == lo_bind)
                lo_k = mid;
            else
                hi_k = mid;
        }
        out.kink_tau_K = 0.5 * (lo_k + hi_k);
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full three-tax problem
// ---------------------------------------------------------------------------

namespace {

TaxRegimePoint pattern_search(Problem& prob, Rates start, double step0, double tol,
                              double tau_L_cap, double tau_K_cap) {
    auto eval = [&](double tl, double tk) {
        return prob.revenue_preserving(RateId::consumption, Rates{tl, tk, 0.0});
    };
    TaxRegimePoint best = eval(start.tau_L, start.tau_K);
    double step = step0;
    while (step > tol) {
        bool improved = false;
        const double tl = best.rates.tau_L, tk = best.rates.tau_K;
        const double cand[4][2] = {{tl + step, tk},
                                   {tl - step, tk},
                                   {tl, tk + step},
                                   {tl, tk - step}};
        for (auto& c : cand) {
            const double l = std::clamp(c[0], 0.0, tau_L_cap);
            const double k = std::clamp(c[1], 0.0, tau_K_cap);
            if (l == best.rates.tau_L && k == best.rates.tau_K) continue;
            try {
                auto pt = eval(l, k);
                if (pt.welfare > best.welfare) {
                    best = std::move(pt);
                    improved = true;
                }
            } catch (const InfeasibleTaxMix&) {
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

} // namespace

FullOptimum optimize_full(Problem& prob) {
    const auto& cfg = prob.config();
    const double step = cfg.coarse_step_full;
    const int nl = int(std::round(cfg.tau_L_max / step)) + 1;
    const int nk = int(std::round(cfg.tau_K_max / step)) + 1;

    // row-parallel coarse grid; each row chains warm starts in tau_K and stops
    // once the income taxes alone overshoot the revenue target
    std::vector<std::vector<TaxRegimePoint>> rows(nl);
    std::vector<char> row_feasible(nl, 1);
    num::parallel_for(nl, cfg.n_threads, [&](int il) {
        const double tau_L = il * step;
        Problem local = prob;
        local.reset_warm();
        auto& row = rows[il];
        for (int ik = 0; ik < nk; ++ik) {
            const double tau_K = ik * step;
            try {
                row.push_back(local.revenue_preserving(RateId::consumption,
                                                       Rates{tau_L, tau_K, 0.0}));
            } catch (const InfeasibleTaxMix&) {
                break; // revenue is increasing in tau_K: the rest of the row is infeasible
            } catch (const std::exception&) {
                break;
            }
        }
        if (row.empty()) row_feasible[il] = 0;
    });

    FullOptimum out;
    for (int il = 0; il < nl; ++il) {
        if (!row_feasible[il]) break; // higher tau_L rows cannot be feasible either
        for (auto& pt : rows[il]) out.grid.push_back(pt);
    }
    if (out.grid.empty()) throw InfeasibleTaxMix("optimize_full: empty feasible set");

    // refinement starts: best grid points, kept pairwise distinct
    std::vector<const TaxRegimePoint*> sorted;
    for (const auto& pt : out.grid) sorted.push_back(&pt);
    std::sort(sorted.begin(), sorted.end(),
              [](const TaxRegimePoint* a, const TaxRegimePoint* b) {
                  return a->welfare > b->welfare;
              });
    std::vector<Rates> starts;
    for (const auto* pt : sorted) {
        bool close = false;
        for (const auto& s : starts)
            close |= std::abs(s.tau_L - pt->rates.tau_L) < 3 * step &&
                     std::abs(s.tau_K - pt->rates.tau_K) < 3 * step;
        if (!close) starts.push_back(pt->rates);
        if (starts.size() >= 3) break;
    }

    std::vector<TaxRegimePoint> refined(starts.size());
    num::parallel_for(int(starts.size()), cfg.n_threads, [&](int i) {
        Problem local = prob;
        local.reset_warm();
        refined[i] = pattern_search(local, starts[i], step, cfg.rate_tol, cfg.tau_L_max,
                                    cfg.tau_K_max);
    });
    std::sort(refined.begin(), refined.end(),
              [](const TaxRegimePoint& a, const TaxRegimePoint& b) {
                  return a.welfare > b.welfare;
              });
    out.candidates = refined;
    out.optimum = refined.front();
    return out;
}

TaxRegimePoint optimize_full_local(Problem& prob, Rates guess, double radius) {
    return pattern_search(prob, guess, radius, prob.config().rate_tol,
                          prob.config().tau_L_max, prob.config().tau_K_max);
}

TaxRegimePoint optimize_no_consumption_tax_local(Problem& prob, double tau_K_guess,
                                                 double radius) {
    const auto& cfg = prob.config();
    double lo = std::max(0.0, tau_K_guess - radius);
    double hi = std::min(cfg.tau_K_max, tau_K_guess + radius);
    auto weval = [&](double tk) {
        return prob.revenue_preserving(RateId::labor, Rates{0.0, tk, 0.0}).welfare;
    };
    // expand the bracket if the maximizer sits on its edge
    for (int tries = 0; tries < 6; ++tries) {
        const double tk = num::golden_max(weval, lo, hi, cfg.rate_tol);
        const bool at_lo = tk - lo < 2 * cfg.rate_tol && lo > 0.0;
        const bool at_hi = hi - tk < 2 * cfg.rate_tol && hi < cfg.tau_K_max;
        if (!at_lo && !at_hi) return prob.revenue_preserving(RateId::labor, Rates{0.0, tk, 0.0});
        if (at_lo) lo = std::max(0.0, lo - 2 * radius);
        if (at_hi) hi = std::min(cfg.tau_K_max, hi + 2 * radius);
    }
    const double tk = num::golden_max(weval, lo, hi, cfg.rate_tol);
    return prob.revenue_preserving(RateId::labor, Rates{0.0, tk, 0.0});
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

namespace {

struct PointSetup {
    ModelParams params;
    AbilityProcess ability;
};

PointSetup setup_point(SweepParam which, double value, const ModelParams& base,
                       const calib::CalibrationTargets& targets) {
    PointSetup s;
    s.params = base;
    auto t = targets;
    if (which == SweepParam::gamma)
        s.params.gamma = value;
    else
        t.sigma = value;
    s.ability = calib::make_ability_process(t, s.params.upsilon);
    return s;
}

constexpr double kBarelyTol = 1e-3;

SweepPoint solve_point(SweepParam which, double value, TaxMode mode, const ModelParams& base,
                       const calib::CalibrationTargets& targets, const OptimizerConfig& cfg,
                       const Rates* warm_rates) {
    SweepPoint out;
    out.param = value;
    try {
        const auto s = setup_point(which, value, base, targets);
        out.target = baseline_revenue(s.params, s.ability);
        Problem prob(s.params, s.ability, out.target, cfg);
        TaxRegimePoint opt;
        if (mode == TaxMode::no_consumption_tax) {
            if (warm_rates)
                opt = optimize_no_consumption_tax_local(prob, warm_rates->tau_K);
            else
                opt = optimize_no_consumption_tax(prob).optimum;
        } else {
            if (warm_rates)
                opt = optimize_full_local(prob, *warm_rates);
            else
                opt = optimize_full(prob).optimum;
        }
        out.rates = opt.rates;
        out.welfare = opt.welfare;
        out.R = opt.eq.prices().R;
        out.omega = opt.eq.prices().omega;
        // regime from the unconstrained entrepreneur leverage at the optimum
        out.theta_unconstrained =
            household::unconstrained_theta(1, opt.eq.policy.a_star, opt.eq.ctx);
        if (out.theta_unconstrained > 1.0 + kBarelyTol)
            out.regime = household::Regime::strictly_binding;
        else if (out.theta_unconstrained < 1.0 - kBarelyTol)
            out.regime = household::Regime::slack;
        else
            out.regime = household::Regime::barely_binding;
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

} // namespace

double sweep_barely_tol() { return kBarelyTol; }

SweepResult sweep(SweepParam which, const std::vector<double>& grid, TaxMode mode,
                  const ModelParams& base, const calib::CalibrationTargets& targets,
                  OptimizerConfig cfg, const Rates* seed) {
    SweepResult out;
    out.points.reserve(grid.size());
    const Rates* warm = seed;
    Rates last_rates;
    for (double v : grid) {
        auto pt = solve_point(which, v, mode, base, targets, cfg, warm);
        if (!pt.failed) {
            last_rates = pt.rates;
            warm = &last_rates;
        }
        out.points.push_back(std::move(pt));
    }

    // refine regime boundaries between adjacent successful points
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const auto& a = out.points[i - 1];
        const auto& b = out.points[i];
        if (a.failed || b.failed || a.regime == b.regime) continue;
        double lo = a.param, hi = b.param;
        household::Regime lo_reg = a.regime;
        Rates guess = a.rates;
        while (hi - lo > 1e-3) {
            const double mid = 0.5 * (lo + hi);
            auto pm = solve_point(which, mid, mode, base, targets, cfg, &guess);
            if (pm.failed) break;
            guess = pm.rates;
            if (pm.regime == lo_reg)
                lo = mid;
            else
                hi = mid;
        }
        out.boundaries.push_back({lo, hi, a.regime, b.regime});
    }
    return out;
}

} // namespace hatax::taxopt
