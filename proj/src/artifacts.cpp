#include "hatax/artifacts.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace hatax::artifacts {

namespace {

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
    return rows;
}

} // namespace

json equilibrium_summary(const equilibrium::StationaryEquilibrium& eq) {
    json j;
    j["prices"] = {{"R", eq.prices().R},
                   {"omega", eq.prices().omega},
                   {"net_rate_post_tax", eq.prices().R - 1.0},
                   {"net_rate_pre_tax", (eq.prices().R - 1.0) / (1.0 - eq.params().tau_K)}};
    j["taxes"] = {{"tau_L", eq.params().tau_L},
                  {"tau_K", eq.params().tau_K},
                  {"tau_C", eq.params().tau_C}};
    j["human_wealth"] = eq.h();
    j["borrowing_limit"] = eq.ctx.returns.b_bar;
    j["aggregates"] = {{"total_wealth", eq.agg.ES},
                       {"financial_wealth", eq.agg.EW},
                       {"capital", eq.agg.EK},
                       {"consumption", eq.agg.EC},
                       {"bond_demand", eq.agg.EB},
                       {"labor_demand", eq.agg.EL},
                       {"output", eq.agg.output},
                       {"consumption_workers", eq.agg.C_workers},
                       {"consumption_entrepreneurs", eq.agg.C_entrepreneurs}};
    j["revenue"] = {{"labor", eq.revenue.labor},
                    {"consumption", eq.revenue.consumption},
                    {"capital", eq.revenue.capital},
                    {"total", eq.revenue.total}};
    j["welfare"] = eq.welfare;
    if (eq.zeta) j["zeta"] = *eq.zeta;
    j["regime"] = household::regime_name(eq.ent_regime);
    j["theta"] = vec_to_json(eq.policy.theta_star);
    j["a_star"] = vec_to_json(eq.policy.a_star);
    j["conditional_mean_wealth"] = vec_to_json(
        (eq.agg.m.array() / eq.ctx.ability.stationary_dist.array()).matrix());
    j["diagnostics"] = {{"policy_iterations", eq.policy.iterations},
                        {"policy_residual", eq.policy.residual},
                        {"inner_evals", eq.diag.inner_evals},
                        {"roots_found", eq.diag.roots.size()}};
    return j;
}

json ability_process(const AbilityProcess& proc, const calib::Discretization& disc) {
    json j;
    j["n_states"] = proc.n_states;
    j["productivities"] = vec_to_json(proc.productivities);
    j["log_productivity_support"] = vec_to_json(disc.log_A);
    j["productivity_probabilities"] = vec_to_json(disc.p_A);
    j["entropy_dual_multipliers"] = vec_to_json(disc.dual);
    j["transition"] = mat_to_json(proc.transition);
    j["newborn_dist"] = vec_to_json(proc.newborn_dist);
    j["stationary_dist"] = vec_to_json(proc.stationary_dist);
    return j;
}

json optimum_summary(const taxopt::FullOptimum& full,
                     const equilibrium::StationaryEquilibrium& baseline) {
    json j;
    auto rates = [](const taxopt::Rates& r) {
        return json{{"tau_L", r.tau_L}, {"tau_K", r.tau_K}, {"tau_C", r.tau_C}};
    };
    j["optimum"] = rates(full.optimum.rates);
    j["welfare"] = full.optimum.welfare;
    j["welfare_gain_vs_baseline"] = full.optimum.welfare / baseline.welfare - 1.0;
    j["capital_gain_vs_baseline"] = full.optimum.eq.agg.EK / baseline.agg.EK - 1.0;
    j["consumption_gain_vs_baseline"] = full.optimum.eq.agg.EC / baseline.agg.EC - 1.0;
    j["worker_consumption_gain"] =
        full.optimum.eq.agg.C_workers / baseline.agg.C_workers - 1.0;
    j["entrepreneur_consumption_gain"] =
        full.optimum.eq.agg.C_entrepreneurs / baseline.agg.C_entrepreneurs - 1.0;
    j["regime"] = household::regime_name(full.optimum.regime);
    j["equilibrium"] = equilibrium_summary(full.optimum.eq);
    json cands = json::array();
    for (const auto& c : full.candidates)
        cands.push_back({{"rates", rates(c.rates)}, {"welfare", c.welfare}});
    j["candidates"] = cands;
    return j;
}

json frontier_summary(const taxopt::FrontierResult& fr) {
    json j;
    j["optimum"] = {{"tau_K", fr.optimum.rates.tau_K},
                    {"tau_L", fr.optimum.rates.tau_L},
                    {"welfare", fr.optimum.welfare}};
    j["kink_tau_K"] = fr.kink_tau_K;
    j["points"] = fr.grid.size();
    return j;
}

json sweep_summary(const taxopt::SweepResult& sr) {
    json j;
    json pts = json::array();
    for (const auto& p : sr.points) {
        json e = {{"param", p.param},
                  {"tau_L", p.rates.tau_L},
                  {"tau_K", p.rates.tau_K},
                  {"tau_C", p.rates.tau_C},
                  {"welfare", p.welfare},
                  {"R", p.R},
                  {"omega", p.omega},
                  {"theta_unconstrained", p.theta_unconstrained},
                  {"regime", household::regime_name(p.regime)},
                  {"failed", p.failed}};
        if (p.failed) e["error"] = p.error;
        pts.push_back(e);
    }
    j["points"] = pts;
    json bounds = json::array();
    for (const auto& b : sr.boundaries)
        bounds.push_back({{"lo", b.lo},
                          {"hi", b.hi},
                          {"from", household::regime_name(b.from)},
                          {"to", household::regime_name(b.to)}});
    j["regime_boundaries"] = bounds;
    return j;
}

json transition_summary(const transition::TransitionPath& path) {
    json j;
    j["horizon"] = path.horizon;
    j["objective"] = path.objective;
    j["stage_objectives"] = path.stage_objectives;
    j["final_knots"] = path.final_knots;
    double maxb = 0, maxl = 0;
    for (int t = 1; t <= path.horizon; ++t) {
        maxb = std::max(maxb, std::abs(path.excess_bond(t)));
        maxl = std::max(maxl, std::abs(path.excess_labor(t)));
    }
    j["max_excess_bond"] = maxb;
    j["max_excess_labor"] = maxl;
    j["vote"] = {{"all", path.vote.all},
                 {"workers", path.vote.workers},
                 {"entrepreneurs", path.vote.entrepreneurs},
                 {"indifferent", path.vote.indifferent}};
    j["year1"] = {{"consumption_workers_change",
                   path.consumption_workers(1) / path.consumption_workers(0) - 1.0},
                  {"consumption_entrepreneurs_change",
                   path.consumption_entrepreneurs(1) / path.consumption_entrepreneurs(0) - 1.0},
                  {"revenue_change", path.revenue_total(1) / path.revenue_total(0) - 1.0}};
    return j;
}

json share_table(const wealth::ShareTable& shares) {
    json rows = json::array();
    for (const auto& r : shares.rows)
        rows.push_back({{"cut", r.cut}, {"top", r.top}, {"share", r.share}});
    return json{{"mean_financial_wealth", shares.mean_financial}, {"rows", rows}};
}

// ---------------------------------------------------------------------------
// writers
// ---------------------------------------------------------------------------

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::string& manifest_hash,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) throw std::runtime_error("cannot open " + path);
    impl_->out << "# manifest_hash=" << manifest_hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        impl_->out << header[i] << (i + 1 < header.size() ? "," : "\n");
    impl_->out << std::setprecision(17);
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        impl_->out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        impl_->out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

void write_json(const std::string& path, const json& j, const std::string& manifest_hash) {
    json wrapped = j;
    wrapped["manifest_hash"] = manifest_hash;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << wrapped.dump(2) << "\n";
}

void write_distribution_csv(const std::string& path, const wealth::WealthDistribution& dist,
                            const std::string& manifest_hash, double s_max, bool conditionals) {
    std::vector<std::string> header = {"wealth", "exceedance_prob", "source"};
    if (conditionals) header.insert(header.begin(), "state");
    CsvWriter csv(path, manifest_hash, header);
    const int M = int(dist.log_grid.size());
    auto emit = [&](int state) {
        for (int m = 0; m < M; ++m) {
            const double s = std::exp(dist.log_grid(m));
            const double q = state < 0 ? 1.0 - dist.cdf(m) : 1.0 - dist.cdf_by_state(state, m);
            const char* src = m <= dist.threshold_index ? "inversion" : "extrapolation";
            std::vector<std::string> row;
            if (state >= 0) row.push_back(std::to_string(state + 1));
            row.push_back(std::to_string(s - dist.h));
            std::ostringstream qv;
            qv << std::setprecision(12) << q;
            row.push_back(qv.str());
            row.push_back(src);
            csv.row_mixed(row);
        }
        // extrapolated extension beyond the grid
        const double s_top = std::exp(dist.log_grid(M - 1));
        for (double s = s_top * 1.3; s <= s_max; s *= 1.3) {
            std::vector<std::string> row;
            if (state >= 0) row.push_back(std::to_string(state + 1));
            row.push_back(std::to_string(s - dist.h));
            std::ostringstream qv;
            qv << std::setprecision(12)
               << (state < 0 ? dist.exceedance(s)
                             : dist.exceedance_conditional(state, s));
            row.push_back(qv.str());
            row.push_back("extrapolation");
            csv.row_mixed(row);
        }
    };
    if (conditionals)
        for (int n = 0; n < dist.cdf_by_state.rows(); ++n) emit(n);
    else
        emit(-1);
}

void write_frontier_csv(const std::string& path, const taxopt::FrontierResult& fr,
                        const std::string& manifest_hash) {
    CsvWriter csv(path, manifest_hash,
                  {"tau_K", "tau_L", "welfare", "capital", "consumption", "R_post",
                   "omega_pre", "omega_post", "regime_strictly_binding"});
    for (const auto& g : fr.grid) {
        csv.row({g.tau_K, g.tau_L, g.point.welfare, g.point.eq.agg.EK, g.point.eq.agg.EC,
                 g.point.eq.prices().R, g.point.eq.prices().omega,
                 (1.0 - g.tau_L) * g.point.eq.prices().omega,
                 g.point.regime == household::Regime::strictly_binding ? 1.0 : 0.0});
    }
}

void write_surface_csv(const std::string& path, const taxopt::FullOptimum& full,
                       const std::string& manifest_hash) {
    CsvWriter csv(path, manifest_hash,
                  {"tau_L", "tau_K", "tau_C", "welfare", "capital", "consumption", "R_post",
                   "omega_pre", "regime_strictly_binding"});
    for (const auto& pt : full.grid) {
        csv.row({pt.rates.tau_L, pt.rates.tau_K, pt.rates.tau_C, pt.welfare, pt.eq.agg.EK,
                 pt.eq.agg.EC, pt.eq.prices().R, pt.eq.prices().omega,
                 pt.regime == household::Regime::strictly_binding ? 1.0 : 0.0});
    }
}

void write_sweep_csv(const std::string& path, const taxopt::SweepResult& sr,
                     const std::string& manifest_hash) {
    CsvWriter csv(path, manifest_hash,
                  {"parameter", "tau_L_opt", "tau_K_opt", "tau_C_opt", "welfare", "R", "omega",
                   "theta_unconstrained", "regime"});
    for (const auto& p : sr.points) {
        std::ostringstream a;
        a << std::setprecision(12) << p.param;
        std::vector<std::string> row = {a.str()};
        auto num = [](double v) {
            std::ostringstream o;
            o << std::setprecision(12) << v;
            return o.str();
        };
        row.push_back(num(p.rates.tau_L));
        row.push_back(num(p.rates.tau_K));
        row.push_back(num(p.rates.tau_C));
        row.push_back(num(p.welfare));
        row.push_back(num(p.R));
        row.push_back(num(p.omega));
        row.push_back(num(p.theta_unconstrained));
        row.push_back(p.failed ? "failed" : household::regime_name(p.regime));
        csv.row_mixed(row);
    }
}

void write_transition_csv(const std::string& path, const transition::TransitionPath& tr,
                          const std::string& manifest_hash) {
    CsvWriter csv(path, manifest_hash,
                  {"t", "R", "omega", "h", "consumption_total", "consumption_workers",
                   "consumption_entrepreneurs", "capital", "bonds_workers",
                   "bonds_entrepreneurs", "revenue_total", "revenue_labor",
                   "revenue_consumption", "revenue_capital", "excess_bond", "excess_labor"});
    for (int t = 0; t <= tr.horizon; ++t) {
        csv.row({double(t), tr.R_path(t), tr.omega_path(t), tr.h_path(t),
                 tr.consumption_total(t), tr.consumption_workers(t),
                 tr.consumption_entrepreneurs(t), tr.capital(t), tr.bonds_workers(t),
                 tr.bonds_entrepreneurs(t), tr.revenue_total(t), tr.revenue_labor(t),
                 tr.revenue_consumption(t), tr.revenue_capital(t), tr.excess_bond(t),
                 tr.excess_labor(t)});
    }
}

} // namespace hatax::artifacts
