// End-to-end acceptance suite: drives the shipped scenario configs through
// the same entry points as the CLI and verifies every headline invariant at
// its pinned tolerance, one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "qstruct/scenario.hpp"
#include "qstruct/sgdyn.hpp"
#include "qstruct/structure.hpp"

using namespace qstruct;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass = true;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "ok" : "VIOLATED") + ": " + what);
    }
};

std::string out_root() {
    return (fs::temp_directory_path() / "qstruct_acceptance").string();
}

ScenarioConfig load(const char* file, Scenario s) {
    return load_config_file(std::string(QSTRUCT_CONFIG_DIR) + "/" + file, s);
}

double check_value(const ScenarioOutcome& o, const std::string& name) {
    for (const auto& c : o.checks)
        if (c.name == name) return c.value;
    std::fprintf(stderr, "acceptance: missing check '%s'\n", name.c_str());
    std::exit(3);
}

double run_timed(const ScenarioConfig& cfg, ScenarioOutcome& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = run_scenario(cfg, default_exec_mode());
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

char fmt_buf[256];
const char* fmt(const char* pattern, double a, double b = 0.0) {
    std::snprintf(fmt_buf, sizeof fmt_buf, pattern, a, b);
    return fmt_buf;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria;
    fs::remove_all(out_root());

    // ---------------------------------------------------------------- 1
    {
        Criterion c{1, "entanglement relativity of the Gaussian product (er-demo)"};
        auto cfg = load("er.conf", Scenario::ErDemo);
        cfg.output_dir = out_root() + "/er";
        ScenarioOutcome o;
        const double secs = run_timed(cfg, o);
        c.expect(check_value(o, "entropy_ep") <= 1e-4,
                 fmt("e|p entropy %.3g <= 1e-4", check_value(o, "entropy_ep")));
        c.expect(check_value(o, "entropy_cmr") >= 0.05,
                 fmt("CM|R entropy %.4f >= 0.05", check_value(o, "entropy_cmr")));
        c.expect(check_value(o, "entropy_cmr_vs_oracle") <= 2e-3,
                 fmt("grid-SVD vs Gaussian oracle |diff| %.3g <= 2e-3 at n = 256",
                     check_value(o, "entropy_cmr_vs_oracle")));
        c.expect(secs < 10.0, fmt("runtime %.2f s < 10 s", secs));
        criteria.push_back(c);
    }

    // ------------------------------------------------------------- 2, 3
    double sg_norm_drift = 1.0;
    {
        Criterion c2{2, "Stern-Gerlach branch formation (sg-run)"};
        Criterion c3{3, "statement (S)/(O) invariance"};
        auto cfg = load("sg.conf", Scenario::SgRun);
        cfg.output_dir = out_root() + "/sg";
        c2.expect(cfg.physics.grid_cm.n == 256 && cfg.physics.grid_r.n == 128,
                  "grids are 256 x 128");
        c2.expect(cfg.physics.steps <= 4000, "at most 4000 steps");
        ScenarioOutcome o;
        const double secs = run_timed(cfg, o);
        c2.expect(check_value(o, "branch_overlap_final") < 1e-3,
                  fmt("branch overlap %.3g < 1e-3", check_value(o, "branch_overlap_final")));
        c2.expect(check_value(o, "spin_entropy_error") <= 0.01,
                  fmt("|S_spin - ln 2| = %.3g <= 0.01", check_value(o, "spin_entropy_error")));
        c2.expect(check_value(o, "branch_weight_error") <= 1e-6,
                  fmt("branch weights 0.5 +- %.3g (<= 1e-6)",
                      check_value(o, "branch_weight_error")));
        c2.expect(check_value(o, "ehrenfest_rel_error") <= 0.01,
                  fmt("<P_CM> per branch within %.3g of -mu b t/2 (<= 1%%)",
                      check_value(o, "ehrenfest_rel_error")));
        c2.expect(secs < 120.0, fmt("runtime %.1f s < 120 s", secs));
        sg_norm_drift = check_value(o, "norm_drift_max");
        criteria.push_back(c2);

        c3.expect(check_value(o, "r_fidelity") >= 1.0 - 1e-5,
                  fmt("reduced R fidelity %.8f >= 1 - 1e-5", check_value(o, "r_fidelity")));
        c3.expect(check_value(o, "deflection_ze_frac_of_cm") > 0.1,
                  fmt("<z_e> branch deflection %.3f of the CM shift (> 10%%)",
                      check_value(o, "deflection_ze_frac_of_cm")));
        c3.expect(check_value(o, "deflection_zp_frac_of_cm") > 0.1,
                  fmt("<z_p> branch deflection %.3f of the CM shift (> 10%%)",
                      check_value(o, "deflection_zp_frac_of_cm")));
        criteria.push_back(c3);
    }

    // ---------------------------------------------------------------- 4
    double bohm_norm_drift = 1.0;
    {
        Criterion c{4, "Bohmian statement (O') and equivariance (bohm-run)"};
        auto cfg = load("bohm.conf", Scenario::BohmRun);
        cfg.output_dir = out_root() + "/bohm";
        c.expect(cfg.bohm.n_traj == 10000, "10^4 trajectories");
        ScenarioOutcome o;
        const double secs = run_timed(cfg, o);
        c.expect(check_value(o, "ks_max") <= 0.03,
                 fmt("KS(ensemble, |psi|^2 marginals) max %.4f <= 0.03 at every saved time",
                     check_value(o, "ks_max")));
        c.expect(check_value(o, "bimodal_center_fraction") <= 0.10 &&
                     check_value(o, "bimodal_side_fraction_min") >= 0.35,
                 fmt("final z_e histogram bimodal (center %.3f, min side %.3f)",
                     check_value(o, "bimodal_center_fraction"),
                     check_value(o, "bimodal_side_fraction_min")));
        c.expect(check_value(o, "deflection_ze_frac_of_cm") > 0.1 &&
                     check_value(o, "deflection_zp_frac_of_cm") > 0.1,
                 "both z_e and z_p deflect per branch");
        c.expect(check_value(o, "rho_ks_drift") <= 0.03,
                 fmt("rho distribution KS drift %.4f <= 0.03", check_value(o, "rho_ks_drift")));
        c.expect(secs < 180.0, fmt("runtime %.1f s < 180 s", secs));
        bohm_norm_drift = check_value(o, "norm_drift_max");

        // same-seed rerun must be bit-identical
        auto cfg2 = cfg;
        cfg2.output_dir = out_root() + "/bohm_rerun";
        ScenarioOutcome o2;
        run_timed(cfg2, o2);
        bool identical = true;
        for (const char* f : {"/trajectories.csv", "/ensemble_summary.json", "/record.csv"}) {
            const std::string a = slurp(cfg.output_dir + f);
            identical = identical && !a.empty() && a == slurp(cfg2.output_dir + f);
        }
        c.expect(identical, "same-seed rerun artifacts bit-identical");
        criteria.push_back(c);
    }

    // ---------------------------------------------------------------- 5
    {
        Criterion c{5, "classical correlation relativity (classical-sweep)"};
        auto cfg = load("classical.conf", Scenario::ClassicalSweep);
        cfg.output_dir = out_root() + "/classical";
        ScenarioOutcome o;
        run_timed(cfg, o);
        c.expect(check_value(o, "mi_on_locus") <= 1e-6,
                 fmt("MI on the m1 s1^2 = m2 s2^2 locus %.3g <= 1e-6",
                     check_value(o, "mi_on_locus")));
        c.expect(check_value(o, "mi_one_step_off_locus") > 1e-3,
                 fmt("MI one sweep step off the locus %.4g > 1e-3",
                     check_value(o, "mi_one_step_off_locus")));
        c.expect(check_value(o, "mi_quadrature_vs_closed_form") <= 1e-6,
                 fmt("quadrature MI vs -1/2 ln(1-r^2): |diff| %.3g <= 1e-6",
                     check_value(o, "mi_quadrature_vs_closed_form")));
        // frozen oracle value for sigma1^2 = 1, sigma2^2 = 2, equal masses
        const double worked = 0.05889151782819173;
        c.expect(check_value(o, "mi_worked_point_error") <= 1e-4 &&
                     std::abs(0.5 * std::log(9.0 / 8.0) - worked) < 1e-15,
                 fmt("worked point MI within %.3g of 0.0588915...",
                     check_value(o, "mi_worked_point_error")));
        criteria.push_back(c);
    }

    // ---------------------------------------------------------------- 6
    {
        Criterion c{6, "numerics hygiene"};
        c.expect(sg_norm_drift < 1e-7, fmt("sg-run norm drift %.3g < 1e-7", sg_norm_drift));
        c.expect(bohm_norm_drift < 1e-7, fmt("bohm-run norm drift %.3g < 1e-7", bohm_norm_drift));

        // dt-halving convergence on a short run, reference at dt/16
        {
            SGConfig base;
            base.m_e = 1.0;
            base.m_p = 9.0;
            base.mu = 1.0;
            base.b = 0.1;
            base.internal_omega = 5.0 / 9.0;
            base.grid_cm = Grid1D(-16.0, 16.0, 128);
            base.grid_r = Grid1D(-8.0, 8.0, 64);
            const double T = 10.0;
            auto evolve = [&](double dt) {
                SGConfig cc = base;
                cc.dt = dt;
                cc.steps = static_cast<int>(std::round(T / dt));
                const double r = 1.0 / std::numbers::sqrt2;
                const auto st0 = gaussian_spin_state(
                    {0.0, 0.0},
                    {1.0, std::sqrt(1.0 / (2.0 * cc.reduced_mass() * cc.internal_omega))},
                    {0.0, 0.0}, {cdouble(r, 0.0), cdouble(r, 0.0)}, cc.grid_cm, cc.grid_r, "CM+R");
                return run(st0, cc, cc.steps).final_state;
            };
            const auto ref = evolve(0.1 / 16.0);
            auto err = [&](const SpinorGridState& s) {
                double acc = 0.0;
                for (size_t i = 0; i < s.amps.size(); ++i)
                    acc += std::norm(s.amps[i] - ref.amps[i]);
                return std::sqrt(acc * s.cell_area());
            };
            const double ratio = err(evolve(0.1)) / err(evolve(0.05));
            c.expect(ratio >= 3.0 && ratio <= 5.0,
                     fmt("dt-halving error ratio %.2f in [3, 5]", ratio));
        }

        // structure group laws and canonical brackets on >= 1000 random maps
        {
            std::mt19937_64 eng(2718281828);
            double worst = 0.0;
            int cases = 0;
            for (int dim : {2, 3}) {
                for (int rep = 0; rep < 600; ++rep, ++cases) {
                    const auto a = make_map(oracles::random_well_conditioned(dim, eng));
                    const auto b = make_map(oracles::random_well_conditioned(dim, eng));
                    const auto ab = compose(a, b);
                    worst = std::max(worst,
                                     ((ab.coord_matrix * ab.momentum_matrix.transpose()) -
                                      Eigen::MatrixXd::Identity(dim, dim))
                                         .cwiseAbs()
                                         .maxCoeff());
                    worst = std::max(worst, (invert(invert(a)).coord_matrix - a.coord_matrix)
                                                .cwiseAbs()
                                                .maxCoeff());
                    worst = std::max(worst, (compose(a, invert(a)).coord_matrix -
                                             Eigen::MatrixXd::Identity(dim, dim))
                                                .cwiseAbs()
                                                .maxCoeff());
                }
            }
            c.expect(cases >= 1000 && worst <= 1e-12,
                     fmt("group laws / canonical brackets on %g cases: worst residual %.3g",
                         static_cast<double>(cases), worst));
        }
        criteria.push_back(c);
    }

    int failures = 0;
    for (const auto& c : criteria) {
        std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str());
        for (const auto& n : c.notes) std::printf("         %s\n", n.c_str());
        if (!c.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
