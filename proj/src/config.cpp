#include "hatax/config.hpp"

#include <fstream>
#include <sstream>

namespace hatax::config {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        // calibration table
        "alpha", "delta", "beta", "gamma", "upsilon", "tau_K", "tau_L", "tau_C",
        "pi_ew", "pi_we", "sigma", "skewness", "kurtosis", "n_productivity_states",
        // run controls
        "seed", "threads",
        // solver settings (documented defaults in the README)
        "solver.bellman_tol", "solver.bellman_max_iter", "solver.bond_tol",
        "solver.labor_tol", "solver.omega_lo", "solver.omega_hi",
        "inversion.points", "inversion.lo_offset", "inversion.hi_offset",
        "inversion.damping", "inversion.atom_prune", "inversion.error_floor",
        "optimizer.coarse_step", "optimizer.coarse_step_full", "optimizer.rate_tol",
        "optimizer.revenue_tol_rel", "optimizer.tau_K_max", "optimizer.tau_C_max",
        "transition.horizon", "transition.tau_L", "transition.tau_K", "transition.tau_C",
        "transition.lm_max_iter",
        "sweep.from", "sweep.to", "sweep.step", "sweep.mode",
        "verify.agents", "verify.periods",
    };
    return keys;
}

Config Config::defaults() {
    Config c;
    c.values_ = {
        {"alpha", "0.36"},
        {"delta", "0.08"},
        {"beta", "0.96"},
        {"gamma", "3.0"},
        {"upsilon", "0.975"},
        {"tau_K", "0.398"},
        {"tau_L", "0.248"},
        {"tau_C", "0.0"},
        {"pi_ew", "0.0192"},
        {"pi_we", "0.0024949152542372881"},
        {"sigma", "0.2473"},
        {"skewness", "-0.08"},
        {"kurtosis", "6.22"},
        {"n_productivity_states", "5"},
    };
    return c;
}

Config Config::parse_string(const std::string& text) {
    Config c = defaults();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto ltrim = line.find_first_not_of(" \t\r\n");
        if (ltrim == std::string::npos) continue;
        auto rtrim = line.find_last_not_of(" \t\r\n");
        line = line.substr(ltrim, rtrim - ltrim + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
        };
        strip(key);
        strip(val);
        c.set(key, val);
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

double Config::get(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    }
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key))
        throw std::invalid_argument("config: unknown key '" + key + "'");
    values_[key] = value;
}

std::string Config::canonical() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
    return out.str();
}

ModelParams model_params(const Config& cfg) {
    ModelParams p;
    p.alpha = cfg.get("alpha", p.alpha);
    p.delta = cfg.get("delta", p.delta);
    p.beta = cfg.get("beta", p.beta);
    p.gamma = cfg.get("gamma", p.gamma);
    p.upsilon = cfg.get("upsilon", p.upsilon);
    p.tau_K = cfg.get("tau_K", p.tau_K);
    p.tau_L = cfg.get("tau_L", p.tau_L);
    p.tau_C = cfg.get("tau_C", p.tau_C);
    p.validate();
    return p;
}

calib::CalibrationTargets calibration_targets(const Config& cfg) {
    calib::CalibrationTargets t;
    t.sigma = cfg.get("sigma", t.sigma);
    t.skewness = cfg.get("skewness", t.skewness);
    t.kurtosis = cfg.get("kurtosis", t.kurtosis);
    t.pi_ew = cfg.get("pi_ew", t.pi_ew);
    t.pi_we = cfg.get("pi_we", t.pi_we);
    t.n_productivity_states = cfg.get_int("n_productivity_states", t.n_productivity_states);
    t.validate();
    return t;
}

} // namespace hatax::config
