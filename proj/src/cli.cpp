#include "hatax/cli.hpp"

#include "hatax/artifacts.hpp"
#include "hatax/numerics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hatax::cli {

namespace fs = std::filesystem;
using artifacts::json;

namespace {

std::string fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Workspace {
    RunManifest manifest;
    config::Config cfg;
    std::string hash;
    fs::path out;

    ModelParams params() const { return config::model_params(cfg); }
    calib::CalibrationTargets targets() const { return config::calibration_targets(cfg); }

    wealth::GridSpec grid_spec() const {
        wealth::GridSpec g;
        g.points = cfg.get_int("inversion.points", g.points);
        g.lo_offset = cfg.get("inversion.lo_offset", g.lo_offset);
        g.hi_offset = cfg.get("inversion.hi_offset", g.hi_offset);
        g.damping = cfg.get("inversion.damping", g.damping);
        g.atom_prune = cfg.get("inversion.atom_prune", g.atom_prune);
        g.error_floor = cfg.get("inversion.error_floor", g.error_floor);
        return g;
    }

    taxopt::OptimizerConfig opt_cfg() const {
        taxopt::OptimizerConfig oc;
        oc.coarse_step = cfg.get("optimizer.coarse_step", oc.coarse_step);
        oc.coarse_step_full = cfg.get("optimizer.coarse_step_full", oc.coarse_step_full);
        oc.rate_tol = cfg.get("optimizer.rate_tol", oc.rate_tol);
        oc.revenue_tol_rel = cfg.get("optimizer.revenue_tol_rel", oc.revenue_tol_rel);
        oc.tau_K_max = cfg.get("optimizer.tau_K_max", oc.tau_K_max);
        oc.tau_C_max = cfg.get("optimizer.tau_C_max", oc.tau_C_max);
        return oc;
    }

    std::string arg(const std::string& key, const std::string& fallback = "") const {
        for (const auto& [k, v] : manifest.args)
            if (k == key) return v;
        return fallback;
    }

    fs::path file(const std::string& name) const { return out / name; }
};

json manifest_json(const Workspace& ws) {
    json j;
    j["command"] = ws.manifest.command;
    j["config_path"] = ws.manifest.config_path;
    j["out_dir"] = ws.manifest.out_dir;
    j["seed"] = ws.manifest.seed;
    j["threads"] = ws.manifest.threads;
    j["version"] = ws.manifest.version;
    json ov = json::array();
    for (const auto& [k, v] : ws.manifest.overrides) ov.push_back(k + "=" + v);
    j["overrides"] = ov;
    json ar = json::array();
    for (const auto& [k, v] : ws.manifest.args) ar.push_back(k + "=" + v);
    j["args"] = ar;
    j["config"] = ws.cfg.canonical();
    return j;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_calibrate(const Workspace& ws) {
    const auto targets = ws.targets();
    const auto disc = calib::discretize_productivity(targets);
    auto proc = calib::build_ability_process(targets, disc.log_A, disc.p_A);
    proc.stationary_dist = calib::mortality_adjusted_stationary(proc, ws.params().upsilon);
    proc.validate(ws.params().upsilon);
    artifacts::write_json(ws.file("ability_process.json"), artifacts::ability_process(proc, disc),
                          ws.hash);
    std::printf("calibrate: %d states, entrepreneur mass %.6f\n", proc.n_states,
                proc.newborn_dist.tail(proc.n_states - 1).sum());
    return kOk;
}

int cmd_equilibrium(const Workspace& ws) {
    const auto params = ws.params();
    const auto ability = calib::make_ability_process(ws.targets(), params.upsilon);
    equilibrium::EqOptions eo;
    eo.with_zeta = true;
    const auto eq = equilibrium::solve_equilibrium(params, ability, eo);
    auto summary = artifacts::equilibrium_summary(eq);

    const auto me = equilibrium::make_mellin(eq);
    auto dist = wealth::invert_distribution(me, ws.grid_spec());
    wealth::tail_extrapolate(dist, 1e6);
    const auto shares = wealth::wealth_shares(
        dist, {0.0001, 0.001, 0.005, 0.01, 0.05, 0.10},
        {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1});
    summary["wealth_shares"] = artifacts::share_table(shares);
    summary["distribution"] = {{"zeta", dist.zeta},
                               {"extrapolation_threshold_financial",
                                dist.extrapolation_threshold - dist.h},
                               {"mass_at_zero_financial", dist.mass_at_reset()},
                               {"mass_negative_financial", dist.prob_below_reset()}};
    artifacts::write_json(ws.file("equilibrium.json"), summary, ws.hash);
    artifacts::write_distribution_csv(ws.file("wealth_distribution.csv"), dist, ws.hash);
    artifacts::write_distribution_csv(ws.file("wealth_distribution_conditional.csv"), dist,
                                      ws.hash, 1e6, true);
    std::printf("equilibrium: R-1=%.6f omega=%.6f h=%.4f zeta=%.4f\n", eq.prices().R - 1.0,
                eq.prices().omega, eq.h(), *eq.zeta);
    return kOk;
}

int cmd_frontier(const Workspace& ws) {
    const auto params = ws.params();
    const auto ability = calib::make_ability_process(ws.targets(), params.upsilon);
    const double target = taxopt::baseline_revenue(params, ability);
    taxopt::Problem prob(params, ability, target, ws.opt_cfg());
    const auto fr = taxopt::optimize_no_consumption_tax(prob);
    auto summary = artifacts::frontier_summary(fr);
    summary["revenue_target"] = target;
    artifacts::write_json(ws.file("frontier.json"), summary, ws.hash);
    artifacts::write_frontier_csv(ws.file("frontier.csv"), fr, ws.hash);
    std::printf("frontier: optimum tau_K=%.4f tau_L=%.4f kink=%.4f\n", fr.optimum.rates.tau_K,
                fr.optimum.rates.tau_L, fr.kink_tau_K);
    return kOk;
}

int cmd_optimize(const Workspace& ws) {
    const auto params = ws.params();
    const auto ability = calib::make_ability_process(ws.targets(), params.upsilon);
    const double target = taxopt::baseline_revenue(params, ability);
    taxopt::Problem prob(params, ability, target, ws.opt_cfg());
    const auto baseline = equilibrium::solve_equilibrium(params, ability);
    const auto full = taxopt::optimize_full(prob);
    auto summary = artifacts::optimum_summary(full, baseline);
    summary["revenue_target"] = target;
    artifacts::write_json(ws.file("optimum.json"), summary, ws.hash);
    artifacts::write_surface_csv(ws.file("surface.csv"), full, ws.hash);

    // wealth distributions under both regimes (for the comparison figure)
    const auto me_base = equilibrium::make_mellin(baseline);
    auto dist_base = wealth::invert_distribution(me_base, ws.grid_spec());
    artifacts::write_distribution_csv(ws.file("wealth_distribution_baseline.csv"), dist_base,
                                      ws.hash);
    const auto me_opt = equilibrium::make_mellin(full.optimum.eq);
    auto dist_opt = wealth::invert_distribution(me_opt, ws.grid_spec());
    artifacts::write_distribution_csv(ws.file("wealth_distribution_optimal.csv"), dist_opt,
                                      ws.hash);
    std::printf("optimize: (tau_L, tau_K, tau_C) = (%.4f, %.4f, %.4f), welfare gain %.4f\n",
                full.optimum.rates.tau_L, full.optimum.rates.tau_K, full.optimum.rates.tau_C,
                full.optimum.welfare / baseline.welfare - 1.0);
    return kOk;
}

int cmd_sweep(const Workspace& ws) {
    const std::string param = ws.arg("param");
    if (param != "gamma" && param != "sigma")
        throw std::invalid_argument("sweep: --param must be gamma or sigma");
    const double from = std::stod(ws.arg("from", param == "gamma" ? "1.0" : "0.15"));
    const double to = std::stod(ws.arg("to", param == "gamma" ? "5.0" : "0.35"));
    const double step = std::stod(ws.arg("step", param == "gamma" ? "0.25" : "0.01"));
    const std::string mode_s = ws.cfg.get_str("sweep.mode", ws.arg("mode", "full"));
    const auto mode = mode_s == "no_consumption_tax" ? taxopt::TaxMode::no_consumption_tax
                                                     : taxopt::TaxMode::full;
    std::vector<double> grid;
    for (double v = from; v <= to + 1e-12; v += step) grid.push_back(v);
    const auto which =
        param == "gamma" ? taxopt::SweepParam::gamma : taxopt::SweepParam::sigma;
    const auto sr = taxopt::sweep(which, grid, mode, ws.params(), ws.targets(), ws.opt_cfg());
    artifacts::write_json(ws.file("sweep.json"), artifacts::sweep_summary(sr), ws.hash);
    artifacts::write_sweep_csv(ws.file("sweep.csv"), sr, ws.hash);
    std::printf("sweep: %zu points, %zu regime boundaries\n", sr.points.size(),
                sr.boundaries.size());
    return kOk;
}

int cmd_transition(const Workspace& ws) {
    const auto params = ws.params();
    const auto ability = calib::make_ability_process(ws.targets(), params.upsilon);
    const auto old_eq = equilibrium::solve_equilibrium(params, ability);

    // new regime: explicit rates if configured, else the computed optimum
    double tau_L = ws.cfg.get("transition.tau_L", 0.0);
    double tau_K = ws.cfg.get("transition.tau_K", -1.0);
    double tau_C = ws.cfg.get("transition.tau_C", -1.0);
    equilibrium::StationaryEquilibrium new_eq;
    if (tau_K < 0.0) {
        taxopt::Problem prob(params, ability, old_eq.revenue.total, ws.opt_cfg());
        const auto full = taxopt::optimize_full(prob);
        new_eq = full.optimum.eq;
    } else if (tau_C < 0.0) {
        taxopt::Problem prob(params, ability, old_eq.revenue.total, ws.opt_cfg());
        new_eq = prob.revenue_preserving(taxopt::RateId::consumption,
                                         {tau_L, tau_K, 0.0}).eq;
    } else {
        equilibrium::EqOptions eo;
        eo.warm = old_eq.prices();
        new_eq = equilibrium::solve_equilibrium(params.with_taxes(tau_L, tau_K, tau_C),
                                                ability, eo);
    }

    transition::TransitionOptions topt;
    topt.horizon = ws.cfg.get_int("transition.horizon", topt.horizon);
    topt.lm_max_iter = ws.cfg.get_int("transition.lm_max_iter", topt.lm_max_iter);
    auto path = transition::solve_transition(old_eq, new_eq, topt);
    const auto me = equilibrium::make_mellin(old_eq);
    const auto dist = wealth::invert_distribution(me, ws.grid_spec());
    path.vote = transition::vote_analysis(path, old_eq, dist);

    artifacts::write_json(ws.file("transition.json"), artifacts::transition_summary(path),
                          ws.hash);
    artifacts::write_transition_csv(ws.file("transition.csv"), path, ws.hash);
    std::printf("transition: objective %.3e, vote all/workers/entrepreneurs = "
                "%.3f/%.3f/%.3f\n",
                path.objective, path.vote.all, path.vote.workers, path.vote.entrepreneurs);
    return kOk;
}

int cmd_verify(const Workspace& ws) {
    const auto params = ws.params();
    const auto ability = calib::make_ability_process(ws.targets(), params.upsilon);
    equilibrium::EqOptions eo;
    eo.with_zeta = true;
    const auto eq = equilibrium::solve_equilibrium(params, ability, eo);
    const auto me = equilibrium::make_mellin(eq);
    const auto dist = wealth::invert_distribution(me, ws.grid_spec());

    const int n_agents = ws.cfg.get_int("verify.agents", 1000000);
    const auto panel = wealth::stationary_panel(me, n_agents, ws.manifest.seed);

    json checks = json::array();
    bool all_ok = true;
    auto record = [&](const std::string& name, double value, double bound, bool ok) {
        checks.push_back({{"check", name}, {"value", value}, {"bound", bound}, {"pass", ok}});
        std::printf("[%s] %-32s value=%.6g bound=%.6g\n", ok ? "PASS" : "FAIL", name.c_str(),
                    value, bound);
        all_ok &= ok;
    };

    // mean wealth vs the Mellin moment (3 sample standard errors)
    double mean = 0.0;
    for (double w : panel.wealth) mean += w;
    mean /= double(n_agents);
    double var = 0.0;
    for (double w : panel.wealth) var += (w - mean) * (w - mean);
    var /= double(n_agents) - 1;
    const double se = std::sqrt(var / n_agents);
    const double ES = me.mellin(1.0).real();
    record("mean_wealth_vs_mellin", std::abs(mean - ES), 3.0 * se,
           std::abs(mean - ES) < 3.0 * se);

    // state frequencies
    Vec freq = Vec::Zero(ability.n_states);
    for (int s : panel.state) freq(s) += 1.0;
    freq /= double(n_agents);
    double worst_z = 0.0;
    for (int n = 0; n < ability.n_states; ++n) {
        const double p = ability.stationary_dist(n);
        worst_z = std::max(worst_z,
                           std::abs(freq(n) - p) / std::sqrt(p * (1.0 - p) / n_agents));
    }
    record("state_frequencies_z", worst_z, 3.0, worst_z < 3.0);

    // Kolmogorov distance of the inverted CDF vs the panel
    std::vector<double> logw(panel.wealth.size());
    for (std::size_t i = 0; i < panel.wealth.size(); ++i) logw[i] = std::log(panel.wealth[i]);
    std::sort(logw.begin(), logw.end());
    double ks = 0.0;
    for (int m = 0; m < dist.log_grid.size(); ++m) {
        const auto cnt =
            std::upper_bound(logw.begin(), logw.end(), dist.log_grid(m) + 1e-12) - logw.begin();
        ks = std::max(ks, std::abs(double(cnt) / double(logw.size()) - dist.cdf(m)));
    }
    const double ks_bound = n_agents >= 10000000 ? 4e-4 : 4e-4 * std::sqrt(1e7 / n_agents);
    record("gil_pelaez_vs_empirical_ks", ks, ks_bound, ks < ks_bound);

    // tail slope over the top 0.1%
    {
        std::vector<double> w(panel.wealth);
        std::sort(w.begin(), w.end());
        const std::size_t n = w.size(), i0 = std::size_t(double(n) * 0.999);
        double mx = 0, my = 0, sxy = 0, sxx = 0;
        std::vector<double> xs, ys;
        for (std::size_t i = i0; i < n - 30; i += 20) {
            xs.push_back(std::log(w[i]));
            ys.push_back(std::log(double(n - i) / double(n)));
        }
        for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
        mx /= double(xs.size());
        my /= double(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double slope = -sxy / sxx;
        const double tol = n_agents >= 10000000 ? 0.05 : 0.05 * std::sqrt(1e7 / n_agents);
        record("tail_slope_vs_zeta", std::abs(slope - *eq.zeta), tol,
               std::abs(slope - *eq.zeta) < tol);
    }

    artifacts::write_json(ws.file("verify.json"), json{{"checks", checks}, {"pass", all_ok}},
                          ws.hash);
    return all_ok ? kOk : kSolverError;
}

// figure re-emission from stored artifacts
int cmd_plot_data(const Workspace& ws);

int dispatch(const Workspace& ws) {
    const std::string& cmd = ws.manifest.command;
    if (cmd == "calibrate") return cmd_calibrate(ws);
    if (cmd == "equilibrium") return cmd_equilibrium(ws);
    if (cmd == "frontier") return cmd_frontier(ws);
    if (cmd == "optimize") return cmd_optimize(ws);
    if (cmd == "sweep") return cmd_sweep(ws);
    if (cmd == "transition") return cmd_transition(ws);
    if (cmd == "verify") return cmd_verify(ws);
    if (cmd == "plot-data") return cmd_plot_data(ws);
    throw std::invalid_argument("unknown command: " + cmd);
}

// ---------------------------------------------------------------------------
// plot data
// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const fs::path& path,
                                               std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("plot-data: missing artifact " + path.string());
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            header = cells;
            have_header = true;
        } else {
            rows.push_back(cells);
        }
    }
    return rows;
}

int col_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return int(i);
    throw std::invalid_argument("plot-data: column not found: " + name);
}

void project_csv(const fs::path& src, const fs::path& dst, const std::string& hash,
                 const std::vector<std::string>& cols,
                 const std::vector<std::string>& out_names = {}) {
    std::vector<std::string> header;
    const auto rows = read_csv(src, header);
    std::vector<int> idx;
    for (const auto& c : cols) idx.push_back(col_index(header, c));
    artifacts::CsvWriter csv(dst.string(), hash, out_names.empty() ? cols : out_names);
    for (const auto& r : rows) {
        std::vector<std::string> out;
        for (int i : idx) out.push_back(r[i]);
        csv.row_mixed(out);
    }
}

int cmd_plot_data(const Workspace& ws) {
    const std::string fig = ws.arg("figure");
    if (fig.empty()) throw std::invalid_argument("plot-data: --figure required");
    const auto dst = ws.file(fig + ".csv");

    if (fig == "fig2a") {
        project_csv(ws.file("wealth_distribution.csv"), dst, ws.hash,
                    {"wealth", "exceedance_prob", "source"});
    } else if (fig == "fig2b") {
        // top shares against the population fraction
        std::ifstream in(ws.file("equilibrium.json"));
        if (!in) throw std::invalid_argument("plot-data: missing artifact equilibrium.json");
        json j;
        in >> j;
        artifacts::CsvWriter csv(dst.string(), ws.hash, {"top_fraction", "share"});
        for (const auto& row : j["wealth_shares"]["rows"])
            if (row["top"].get<bool>())
                csv.row({row["cut"].get<double>(), row["share"].get<double>()});
    } else if (fig == "fig4a") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash, {"tau_K", "tau_L"});
    } else if (fig == "fig4b") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash,
                    {"tau_K", "welfare", "regime_strictly_binding"},
                    {"tau_K", "welfare", "kink_marker"});
    } else if (fig == "fig4c") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash, {"tau_K", "capital"});
    } else if (fig == "fig4d") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash, {"tau_K", "consumption"});
    } else if (fig == "fig4e") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash, {"tau_K", "R_post"});
    } else if (fig == "fig4f") {
        project_csv(ws.file("frontier.csv"), dst, ws.hash,
                    {"tau_K", "omega_pre", "omega_post"});
    } else if (fig == "fig5" || fig == "fig6" || fig == "fig9" || fig == "fig10") {
        project_csv(ws.file("sweep.csv"), dst, ws.hash,
                    {"parameter", "tau_L_opt", "tau_K_opt", "tau_C_opt", "R", "omega",
                     "regime"});
    } else if (fig == "fig7a") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "tau_C"});
    } else if (fig == "fig7b") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "welfare"});
    } else if (fig == "fig7c") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "capital"});
    } else if (fig == "fig7d") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "consumption"});
    } else if (fig == "fig7e") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "R_post"});
    } else if (fig == "fig7f") {
        project_csv(ws.file("surface.csv"), dst, ws.hash, {"tau_L", "tau_K", "omega_pre"});
    } else if (fig == "fig8") {
        std::vector<std::string> h1, h2;
        const auto base = read_csv(ws.file("wealth_distribution_baseline.csv"), h1);
        const auto opt = read_csv(ws.file("wealth_distribution_optimal.csv"), h2);
        artifacts::CsvWriter csv(dst.string(), ws.hash,
                                 {"wealth_baseline", "exceedance_baseline", "wealth_optimal",
                                  "exceedance_optimal"});
        const std::size_t n = std::min(base.size(), opt.size());
        for (std::size_t i = 0; i < n; ++i)
            csv.row_mixed({base[i][0], base[i][1], opt[i][0], opt[i][1]});
    } else if (fig.rfind("fig11", 0) == 0) {
        static const std::map<std::string, std::vector<std::string>> panels = {
            {"fig11a", {"t", "R"}},
            {"fig11b", {"t", "omega"}},
            {"fig11c", {"t", "capital"}},
            {"fig11d",
             {"t", "consumption_total", "consumption_workers", "consumption_entrepreneurs"}},
            {"fig11e", {"t", "bonds_workers", "bonds_entrepreneurs"}},
            {"fig11f",
             {"t", "revenue_total", "revenue_labor", "revenue_consumption",
              "revenue_capital"}}};
        const auto it = panels.find(fig);
        if (it == panels.end()) throw std::invalid_argument("plot-data: unknown figure " + fig);
        project_csv(ws.file("transition.csv"), dst, ws.hash, it->second);
    } else {
        throw std::invalid_argument("plot-data: unknown figure " + fig);
    }
    std::printf("plot-data: wrote %s\n", dst.string().c_str());
    return kOk;
}

} // namespace

std::string manifest_hash(const RunManifest& manifest, const config::Config& cfg) {
    std::string blob = "command=" + manifest.command + "\n";
    blob += "seed=" + std::to_string(manifest.seed) + "\n";
    blob += "version=" + std::string(manifest.version) + "\n";
    for (const auto& [k, v] : manifest.args) blob += "arg:" + k + "=" + v + "\n";
    blob += cfg.canonical();
    return fnv1a(blob);
}

int run(const RunManifest& manifest) {
    Workspace ws;
    ws.manifest = manifest;
    try {
        ws.cfg = manifest.config_path.empty() ? config::Config::defaults()
                                              : config::Config::parse_file(manifest.config_path);
        for (const auto& [k, v] : manifest.overrides) ws.cfg.set(k, v);
        ws.out = manifest.out_dir.empty() ? "." : manifest.out_dir;
        std::error_code ec;
        fs::create_directories(ws.out, ec);
        if (!fs::exists(ws.out) || !fs::is_directory(ws.out))
            throw std::invalid_argument("output directory is not writable: " + ws.out.string());
        ws.hash = manifest_hash(manifest, ws.cfg);
        num::set_default_threads(manifest.threads > 0
                                     ? manifest.threads
                                     : ws.cfg.get_int("threads", 0));
        artifacts::write_json(ws.file("manifest.json"), manifest_json(ws), ws.hash);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    }

    try {
        return dispatch(ws);
    } catch (const InfeasibleTaxMix& e) {
        std::fprintf(stderr, "infeasible tax mix: %s\n", e.what());
        artifacts::write_json(ws.file("error.json"),
                              json{{"error", "infeasible_tax_mix"}, {"what", e.what()}},
                              ws.hash);
        return kInfeasibleMix;
    } catch (const EquilibriumNotFound& e) {
        artifacts::write_json(
            ws.file("error.json"),
            json{{"error", "equilibrium_not_found"}, {"what", e.what()},
                 {"diagnostic", e.diagnostic}},
            ws.hash);
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kSolverError;
    } catch (const NonConvergence& e) {
        artifacts::write_json(ws.file("error.json"),
                              json{{"error", "non_convergence"},
                                   {"what", e.what()},
                                   {"residual", e.residual},
                                   {"iterations", e.iterations}},
                              ws.hash);
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kSolverError;
    } catch (const DivergentMoment& e) {
        artifacts::write_json(ws.file("error.json"),
                              json{{"error", "divergent_moment"}, {"what", e.what()},
                                   {"rho", e.rho}},
                              ws.hash);
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kSolverError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolverError;
    }
}

} // namespace hatax::cli
