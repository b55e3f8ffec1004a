#include "qstruct/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace qstruct {

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::SgRun: return "sg-run";
        case Scenario::ErDemo: return "er-demo";
        case Scenario::BohmRun: return "bohm-run";
        case Scenario::ClassicalSweep: return "classical-sweep";
    }
    return "?";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "sg-run") return Scenario::SgRun;
    if (name == "er-demo") return Scenario::ErDemo;
    if (name == "bohm-run") return Scenario::BohmRun;
    if (name == "classical-sweep") return Scenario::ClassicalSweep;
    throw ValidationError("unknown scenario '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct RawConfig {
    std::map<std::string, std::string> kv;  // "section.key" -> value ("" section for top level)
    std::map<std::string, int> line;
};

RawConfig parse_ini(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ParseError("line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (raw.kv.count(full))
            throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + full +
                             "' (first on line " + std::to_string(raw.line[full]) + ")");
        raw.kv[full] = value;
        raw.line[full] = lineno;
    }
    return raw;
}

struct Schema {
    // key -> required
    std::map<std::string, bool> fields;
    void add(std::initializer_list<const char*> required,
             std::initializer_list<const char*> optional) {
        for (const char* k : required) fields[k] = true;
        for (const char* k : optional) fields[k] = false;
    }
};

class Extractor {
public:
    Extractor(const RawConfig& raw, const Schema& schema) : raw_(raw) {
        for (const auto& [key, value] : raw_.kv)
            if (!schema.fields.count(key))
                violations_.push_back("unknown key '" + key + "' (line " +
                                      std::to_string(raw_.line.at(key)) + ")");
        for (const auto& [key, required] : schema.fields)
            if (required && !raw_.kv.count(key))
                violations_.push_back("missing required key '" + key + "'");
    }

    bool has(const std::string& key) const { return raw_.kv.count(key) > 0; }

    double num(const std::string& key, double fallback = 0.0) {
        if (!has(key)) return fallback;
        const std::string& v = raw_.kv.at(key);
        try {
            size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return x;
        } catch (const std::exception&) {
            violations_.push_back("key '" + key + "': not a number: '" + v + "'");
            return fallback;
        }
    }

    long integer(const std::string& key, long fallback = 0) {
        if (!has(key)) return fallback;
        const std::string& v = raw_.kv.at(key);
        try {
            size_t pos = 0;
            const long x = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return x;
        } catch (const std::exception&) {
            violations_.push_back("key '" + key + "': not an integer: '" + v + "'");
            return fallback;
        }
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const std::string& v = raw_.kv.at(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        violations_.push_back("key '" + key + "': not a boolean: '" + v + "'");
        return fallback;
    }

    std::string str(const std::string& key, std::string fallback = "") {
        return has(key) ? raw_.kv.at(key) : fallback;
    }

    Grid1D grid(const std::string& prefix) {
        const double lo = num(prefix + "_min"), hi = num(prefix + "_max");
        const long n = integer(prefix + "_n", 2);
        try {
            return Grid1D(lo, hi, static_cast<int>(n));
        } catch (const Error& e) {
            violations_.push_back(std::string("grid '") + prefix + "': " + e.what());
            return Grid1D(0.0, 1.0, 2);
        }
    }

    void require(bool ok, const std::string& msg) {
        if (!ok) violations_.push_back(msg);
    }

    void finish() const {
        if (violations_.empty()) return;
        std::string msg = "configuration invalid:";
        for (const auto& v : violations_) msg += "\n  - " + v;
        throw ValidationError(msg);
    }

private:
    const RawConfig& raw_;
    std::vector<std::string> violations_;
};

void add_tolerance_keys(Schema& s) {
    s.add({}, {"tolerances.branch_overlap", "tolerances.spin_entropy", "tolerances.branch_weights",
               "tolerances.ehrenfest_rel", "tolerances.r_fidelity_gap", "tolerances.r_l1_drift",
               "tolerances.norm_drift", "tolerances.deflection_frac", "tolerances.product_entropy",
               "tolerances.entropy_vs_oracle", "tolerances.min_cmr_entropy", "tolerances.ks_max",
               "tolerances.rho_ks_drift", "tolerances.bimodal_center_max",
               "tolerances.bimodal_side_min", "tolerances.mi_locus", "tolerances.mi_off_locus",
               "tolerances.mi_worked_point", "tolerances.mi_quadrature"});
}

void read_tolerances(Extractor& ex, Tolerances& t) {
    t.branch_overlap = ex.num("tolerances.branch_overlap", t.branch_overlap);
    t.spin_entropy = ex.num("tolerances.spin_entropy", t.spin_entropy);
    t.branch_weights = ex.num("tolerances.branch_weights", t.branch_weights);
    t.ehrenfest_rel = ex.num("tolerances.ehrenfest_rel", t.ehrenfest_rel);
    t.r_fidelity_gap = ex.num("tolerances.r_fidelity_gap", t.r_fidelity_gap);
    t.r_l1_drift = ex.num("tolerances.r_l1_drift", t.r_l1_drift);
    t.norm_drift = ex.num("tolerances.norm_drift", t.norm_drift);
    t.deflection_frac = ex.num("tolerances.deflection_frac", t.deflection_frac);
    t.product_entropy = ex.num("tolerances.product_entropy", t.product_entropy);
    t.entropy_vs_oracle = ex.num("tolerances.entropy_vs_oracle", t.entropy_vs_oracle);
    t.min_cmr_entropy = ex.num("tolerances.min_cmr_entropy", t.min_cmr_entropy);
    t.ks_max = ex.num("tolerances.ks_max", t.ks_max);
    t.rho_ks_drift = ex.num("tolerances.rho_ks_drift", t.rho_ks_drift);
    t.bimodal_center_max = ex.num("tolerances.bimodal_center_max", t.bimodal_center_max);
    t.bimodal_side_min = ex.num("tolerances.bimodal_side_min", t.bimodal_side_min);
    t.mi_locus = ex.num("tolerances.mi_locus", t.mi_locus);
    t.mi_off_locus = ex.num("tolerances.mi_off_locus", t.mi_off_locus);
    t.mi_worked_point = ex.num("tolerances.mi_worked_point", t.mi_worked_point);
    t.mi_quadrature = ex.num("tolerances.mi_quadrature", t.mi_quadrature);
}

void read_dynamics(Extractor& ex, ScenarioConfig& cfg) {
    cfg.physics.m_e = ex.num("physics.m_e", 1.0);
    cfg.physics.m_p = ex.num("physics.m_p", 1836.0);
    cfg.physics.mu = ex.num("physics.mu", 1.0);
    cfg.physics.B0 = ex.num("physics.B0", 0.0);
    cfg.physics.b = ex.num("physics.b");
    cfg.physics.internal_omega = ex.num("physics.internal_omega");
    cfg.physics.grid_cm = ex.grid("grid.cm");
    cfg.physics.grid_r = ex.grid("grid.r");
    cfg.physics.dt = ex.num("time.dt");
    cfg.physics.steps = static_cast<int>(ex.integer("time.steps"));
    cfg.save_every = static_cast<int>(ex.integer("time.save_every", 1));
    cfg.sigma_cm = ex.num("state.sigma_cm");
    cfg.sigma_r = ex.num("state.sigma_r", 0.0);
    cfg.spin_up_amp = ex.num("state.spin_up_amp");
    cfg.spin_dn_amp = ex.num("state.spin_dn_amp");

    ex.require(cfg.physics.dt > 0.0, "time.dt must be positive");
    ex.require(cfg.physics.steps >= 1, "time.steps must be >= 1");
    ex.require(cfg.save_every >= 1, "time.save_every must be >= 1");
    ex.require(cfg.physics.m_e > 0.0 && cfg.physics.m_p > 0.0, "masses must be positive");
    ex.require(cfg.physics.internal_omega > 0.0,
               "physics.internal_omega must be positive for dynamic scenarios");
    ex.require(cfg.sigma_cm > 0.0, "state.sigma_cm must be positive");
    const double spin_norm =
        cfg.spin_up_amp * cfg.spin_up_amp + cfg.spin_dn_amp * cfg.spin_dn_amp;
    ex.require(std::abs(spin_norm - 1.0) <= 1e-9,
               "state spin amplitudes must satisfy up^2 + dn^2 = 1");
}

const char* kDynRequired[] = {"physics.b",      "physics.internal_omega",
                              "grid.cm_min",    "grid.cm_max",
                              "grid.cm_n",      "grid.r_min",
                              "grid.r_max",     "grid.r_n",
                              "time.dt",        "time.steps",
                              "state.sigma_cm", "state.spin_up_amp",
                              "state.spin_dn_amp"};
const char* kDynOptional[] = {"scenario",      "physics.m_e",     "physics.m_p", "physics.mu",
                              "physics.B0",    "time.save_every", "state.sigma_r",
                              "output.dir",    "run.seed"};

}  // namespace

ScenarioConfig parse_config(const std::string& text, Scenario scenario) {
    const RawConfig raw = parse_ini(text);

    Schema schema;
    switch (scenario) {
        case Scenario::SgRun:
            for (const char* k : kDynRequired) schema.fields[k] = true;
            for (const char* k : kDynOptional) schema.fields[k] = false;
            break;
        case Scenario::BohmRun:
            for (const char* k : kDynRequired) schema.fields[k] = true;
            for (const char* k : kDynOptional) schema.fields[k] = false;
            schema.add({"bohm.n_traj", "bohm.checkpoint_every"},
                       {"bohm.dt_traj_factor", "bohm.frame_every"});
            break;
        case Scenario::ErDemo:
            schema.add({"state.sigma1_sq", "state.sigma2_sq", "grid.q1_min", "grid.q1_max",
                        "grid.q1_n", "grid.q2_min", "grid.q2_max", "grid.q2_n", "grid.cm_min",
                        "grid.cm_max", "grid.cm_n", "grid.r_min", "grid.r_max", "grid.r_n"},
                       {"scenario", "physics.m1", "physics.m2", "output.dir", "run.seed"});
            break;
        case Scenario::ClassicalSweep:
            schema.add({"sweep.sigma1_sq", "sweep.sigma2_sq_min", "sweep.sigma2_sq_max",
                        "sweep.sigma2_sq_steps"},
                       {"scenario", "physics.m1", "physics.m2", "sweep.quadrature_check",
                        "output.dir", "run.seed"});
            break;
    }
    add_tolerance_keys(schema);

    Extractor ex(raw, schema);
    ScenarioConfig cfg;
    cfg.scenario = scenario;

    const std::string declared = ex.str("scenario");
    if (!declared.empty())
        ex.require(declared == scenario_name(scenario),
                   "config declares scenario '" + declared + "' but '" +
                       scenario_name(scenario) + "' was requested");

    cfg.output_dir = ex.str("output.dir", "out/" + scenario_name(scenario));
    cfg.seed = static_cast<std::uint64_t>(ex.integer("run.seed", 0));

    switch (scenario) {
        case Scenario::SgRun:
            read_dynamics(ex, cfg);
            break;
        case Scenario::BohmRun: {
            read_dynamics(ex, cfg);
            cfg.bohm.n_traj = static_cast<int>(ex.integer("bohm.n_traj"));
            cfg.bohm.dt_traj_factor = ex.num("bohm.dt_traj_factor", 0.5);
            cfg.bohm.frame_every = static_cast<int>(ex.integer("bohm.frame_every", 1));
            cfg.bohm.checkpoint_every = static_cast<int>(ex.integer("bohm.checkpoint_every"));
            ex.require(cfg.bohm.n_traj > 0, "bohm.n_traj must be positive");
            ex.require(cfg.bohm.dt_traj_factor > 0.0, "bohm.dt_traj_factor must be positive");
            ex.require(cfg.bohm.frame_every >= 1, "bohm.frame_every must be >= 1");
            ex.require(cfg.bohm.checkpoint_every >= 1, "bohm.checkpoint_every must be >= 1");
            if (cfg.bohm.frame_every >= 1 && cfg.bohm.checkpoint_every >= 1)
                ex.require(cfg.bohm.checkpoint_every % cfg.bohm.frame_every == 0,
                           "bohm.checkpoint_every must be a multiple of bohm.frame_every");
            // Frame spacing must keep linear-in-time velocity interpolation stable.
            if (cfg.physics.dt > 0.0 && cfg.bohm.dt_traj_factor > 0.0)
                ex.require(cfg.bohm.frame_every <= 5.0 * cfg.bohm.dt_traj_factor + 1e-12,
                           "frame spacing exceeds 5 * dt_traj");
            break;
        }
        case Scenario::ErDemo:
            cfg.er.m1 = ex.num("physics.m1", 1.0);
            cfg.er.m2 = ex.num("physics.m2", 1.0);
            cfg.er.sigma1_sq = ex.num("state.sigma1_sq");
            cfg.er.sigma2_sq = ex.num("state.sigma2_sq");
            cfg.er.grid_q1 = ex.grid("grid.q1");
            cfg.er.grid_q2 = ex.grid("grid.q2");
            cfg.er.grid_cm = ex.grid("grid.cm");
            cfg.er.grid_r = ex.grid("grid.r");
            ex.require(cfg.er.m1 > 0.0 && cfg.er.m2 > 0.0, "masses must be positive");
            ex.require(cfg.er.sigma1_sq > 0.0 && cfg.er.sigma2_sq > 0.0,
                       "state variances must be positive");
            break;
        case Scenario::ClassicalSweep:
            cfg.sweep.m1 = ex.num("physics.m1", 1.0);
            cfg.sweep.m2 = ex.num("physics.m2", 1.0);
            cfg.sweep.sigma1_sq = ex.num("sweep.sigma1_sq");
            cfg.sweep.sigma2_sq_min = ex.num("sweep.sigma2_sq_min");
            cfg.sweep.sigma2_sq_max = ex.num("sweep.sigma2_sq_max");
            cfg.sweep.sigma2_sq_steps = static_cast<int>(ex.integer("sweep.sigma2_sq_steps"));
            cfg.sweep.quadrature_check = ex.boolean("sweep.quadrature_check", true);
            ex.require(cfg.sweep.m1 > 0.0 && cfg.sweep.m2 > 0.0, "masses must be positive");
            ex.require(cfg.sweep.sigma1_sq > 0.0, "sweep.sigma1_sq must be positive");
            ex.require(cfg.sweep.sigma2_sq_min > 0.0 &&
                           cfg.sweep.sigma2_sq_max >= cfg.sweep.sigma2_sq_min,
                       "sweep variance range invalid");
            ex.require(cfg.sweep.sigma2_sq_steps >= 2, "sweep.sigma2_sq_steps must be >= 2");
            break;
    }
    read_tolerances(ex, cfg.tol);
    ex.finish();
    return cfg;
}

ScenarioConfig load_config_file(const std::string& path, Scenario scenario) {
    std::ifstream f(path);
    if (!f) throw IOError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), scenario);
}

}  // namespace qstruct
