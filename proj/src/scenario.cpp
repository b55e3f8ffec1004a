#include "qstruct/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>

#include "qstruct/bohm.hpp"
#include "qstruct/classical.hpp"
#include "qstruct/sgdyn.hpp"

namespace fs = std::filesystem;

namespace qstruct {

namespace {

struct CheckList {
    std::vector<CheckResult> checks;
    nlohmann::ordered_json values = nlohmann::ordered_json::object();

    void le(const std::string& name, double value, double threshold) {
        checks.push_back({name, value, threshold, "<=", value <= threshold});
    }
    void ge(const std::string& name, double value, double threshold) {
        checks.push_back({name, value, threshold, ">=", value >= threshold});
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IOError("cannot create output directory '" + dir + "': " + ec.message());
    const std::string probe = dir + "/.write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw IOError("output directory '" + dir + "' is not writable");
    }
    fs::remove(probe, ec);
}

std::string write_summary(const std::string& dir, const std::string& scenario,
                          std::uint64_t seed, const CheckList& cl) {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["values"] = cl.values;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : cl.checks) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["value"] = c.value;
        cj["threshold"] = c.threshold;
        cj["cmp"] = c.cmp;
        cj["pass"] = c.pass;
        arr.push_back(cj);
    }
    j["checks"] = arr;
    j["pass"] = cl.all_pass();
    const std::string path = dir + "/summary.json";
    std::ofstream f(path);
    if (!f) throw IOError("cannot write " + path);
    f << j.dump(2) << "\n";
    return path;
}

double ground_state_width(const SGConfig& p) {
    return std::sqrt(1.0 / (2.0 * p.reduced_mass() * p.internal_omega));
}

SpinorGridState initial_sg_state(const ScenarioConfig& cfg) {
    const double sigma_r = cfg.sigma_r > 0.0 ? cfg.sigma_r : ground_state_width(cfg.physics);
    return gaussian_spin_state({0.0, 0.0}, {cfg.sigma_cm, sigma_r}, {0.0, 0.0},
                               {cdouble(cfg.spin_up_amp, 0.0), cdouble(cfg.spin_dn_amp, 0.0)},
                               cfg.physics.grid_cm, cfg.physics.grid_r, "CM+R");
}

// Entanglement entropy of a zero-phase Gaussian product state after the
// linear coordinate change, from the transformed covariance alone. This is
// the covariance route, kept independent of the grid-SVD path it validates.
double gaussian_refactor_entropy(const Eigen::Matrix2d& A, double var1, double var2) {
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
    sigma(0, 0) = var1;
    sigma(1, 1) = var2;
    const Eigen::Matrix2d c = A * sigma * A.transpose();
    const double vx = c(0, 0);
    const double vp = 0.25 * c.inverse()(0, 0);
    const double nu = std::sqrt(vx * vp);
    if (nu <= 0.5 + 1e-15) return 0.0;
    return (nu + 0.5) * std::log(nu + 0.5) - (nu - 0.5) * std::log(nu - 0.5);
}

int next_pow2(double x) {
    int n = 2;
    while (n < x && n < (1 << 12)) n *= 2;
    return n;
}

// Axis-aligned grid covering the image of the source box under row r of A,
// padded, with spacing comparable to the finer source spacing.
Grid1D image_grid(const Eigen::Matrix2d& A, int r, const Grid1D& g1, const Grid1D& g2,
                  int n_cap = 1024) {
    double lo = 1e300, hi = -1e300;
    for (double x : {g1.min, g1.max})
        for (double y : {g2.min, g2.max}) {
            const double z = A(r, 0) * x + A(r, 1) * y;
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
    const double pad = 0.02 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double h_ref = std::min(g1.spacing(), g2.spacing());
    const int n = std::min(n_cap, next_pow2((hi - lo) / h_ref));
    return Grid1D(lo, hi, n);
}

double spin_conditional_mean(const SpinorGridState& st, int spin, int axis) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < st.g1.n; ++i)
        for (int j = 0; j < st.g2.n; ++j) {
            const double w = std::norm(st.at(spin, i, j));
            num += (axis == 0 ? st.g1.point(i) : st.g2.point(j)) * w;
            den += w;
        }
    return den > 0.0 ? num / den : 0.0;
}

ScenarioOutcome finish(const std::string& dir, const ScenarioConfig& cfg, CheckList& cl,
                       std::vector<std::string> warnings = {}) {
    ScenarioOutcome out;
    out.checks = cl.checks;
    out.warnings = std::move(warnings);
    out.summary_path = write_summary(dir, scenario_name(cfg.scenario), cfg.seed, cl);
    out.exit_code = cl.all_pass() ? 0 : 2;
    return out;
}

// ---------------------------------------------------------------------------
// sg-run

ScenarioOutcome run_sg(const ScenarioConfig& cfg, ExecMode mode) {
    ensure_output_dir(cfg.output_dir);
    const Tolerances& tol = cfg.tol;

    const SpinorGridState st0 = initial_sg_state(cfg);
    RunResult rr = run(st0, cfg.physics, cfg.save_every, nullptr, mode);
    rr.record.write_csv(cfg.output_dir + "/record.csv");
    save_state(rr.final_state, cfg.output_dir + "/final_state");

    const EvolutionObservables& fin = rr.record.rows.back();
    const double ln2 = std::numbers::ln2;
    CheckList cl;

    cl.le("branch_overlap_final", fin.branch_overlap, tol.branch_overlap);
    cl.le("spin_entropy_error", std::abs(fin.spin_entropy - ln2), tol.spin_entropy);
    cl.le("branch_weight_error",
          std::max(std::abs(fin.weight_up - 0.5), std::abs(fin.weight_dn - 0.5)),
          tol.branch_weights);

    // Ehrenfest: d<P>/dt = -dV/dZ = -mu*s_z*b, so the up branch carries
    // <P>(t) = -mu*b*t/2 and the down branch its mirror.
    const double p_expect = -0.5 * cfg.physics.mu * cfg.physics.b * fin.t;
    const double ehrenfest =
        std::max(std::abs(fin.mean_p_up - p_expect), std::abs(fin.mean_p_dn + p_expect));
    cl.le("ehrenfest_rel_error", ehrenfest / std::abs(p_expect), tol.ehrenfest_rel);

    const double r_fid = reduced_state_fidelity(reduced_density_matrix(st0, 1),
                                                reduced_density_matrix(rr.final_state, 1));
    cl.ge("r_fidelity", r_fid, 1.0 - tol.r_fidelity_gap);
    cl.le("r_l1_drift", fin.r_l1_drift, tol.r_l1_drift);

    double norm_drift = 0.0;
    for (const auto& row : rr.record.rows) norm_drift = std::max(norm_drift, row.norm_drift);
    cl.le("norm_drift_max", norm_drift, tol.norm_drift);

    // Statement (O) analysis: refactorize to e+p and require that both
    // single-particle means move along with the CM per branch.
    const LinearStructureMap to_cmr = cm_relative_map(cfg.physics.m_e, cfg.physics.m_p);
    const LinearStructureMap to_ep = invert(to_cmr);
    const Grid1D ge = image_grid(to_ep.coord_matrix, 0, st0.g1, st0.g2);
    const Grid1D gp = image_grid(to_ep.coord_matrix, 1, st0.g1, st0.g2);
    const SpinorGridState ep0 = change_structure(st0, to_ep, ge, gp, mode);
    const SpinorGridState ep1 = change_structure(rr.final_state, to_ep, ge, gp, mode);

    const BranchAnalysis ba0 = branch_analysis(st0);
    double min_frac_e = 1e300, min_frac_p = 1e300;
    for (int s = 0; s < kSpins; ++s) {
        const double dz_cm = (s == 0 ? fin.mean_z_up - ba0.mean_z_up
                                     : fin.mean_z_dn - ba0.mean_z_dn);
        const double dz_e = spin_conditional_mean(ep1, s, 0) - spin_conditional_mean(ep0, s, 0);
        const double dz_p = spin_conditional_mean(ep1, s, 1) - spin_conditional_mean(ep0, s, 1);
        min_frac_e = std::min(min_frac_e, std::abs(dz_e) / std::abs(dz_cm));
        min_frac_p = std::min(min_frac_p, std::abs(dz_p) / std::abs(dz_cm));
    }
    cl.ge("deflection_ze_frac_of_cm", min_frac_e, tol.deflection_frac);
    cl.ge("deflection_zp_frac_of_cm", min_frac_p, tol.deflection_frac);

    cl.values["t_final"] = fin.t;
    cl.values["spin_entropy_final"] = fin.spin_entropy;
    cl.values["branch_overlap_final"] = fin.branch_overlap;
    cl.values["weights_final"] = {fin.weight_up, fin.weight_dn};
    cl.values["mean_p_final"] = {fin.mean_p_up, fin.mean_p_dn};
    cl.values["mean_z_final"] = {fin.mean_z_up, fin.mean_z_dn};
    cl.values["r_fidelity"] = r_fid;
    cl.values["r_l1_drift"] = fin.r_l1_drift;
    cl.values["norm_drift_max"] = norm_drift;
    cl.values["stability_product"] = cfg.physics.stability_product();

    std::vector<std::string> warnings;
    if (rr.warning) warnings.push_back(*rr.warning);
    return finish(cfg.output_dir, cfg, cl, std::move(warnings));
}

// ---------------------------------------------------------------------------
// er-demo

ScenarioOutcome run_er(const ScenarioConfig& cfg, ExecMode mode) {
    ensure_output_dir(cfg.output_dir);
    const Tolerances& tol = cfg.tol;
    const ErDemoParams& er = cfg.er;

    const SpinorGridState ep = gaussian_spin_state(
        {0.0, 0.0}, {std::sqrt(er.sigma1_sq), std::sqrt(er.sigma2_sq)}, {0.0, 0.0},
        {cdouble(1.0, 0.0), cdouble(0.0, 0.0)}, er.grid_q1, er.grid_q2, "e+p");
    const double s_ep = entanglement_entropy(schmidt_spectrum(ep, SchmidtSplit::Coord1_vs_Coord2Spin));

    const LinearStructureMap map = cm_relative_map(er.m1, er.m2);
    SpinorGridState cmr = change_structure(ep, map, er.grid_cm, er.grid_r, mode);
    const double resample_norm_drift = std::abs(cmr.norm2() - 1.0);
    cmr.normalize();
    const double s_cmr =
        entanglement_entropy(schmidt_spectrum(cmr, SchmidtSplit::Coord1_vs_Coord2Spin));
    const double s_oracle = gaussian_refactor_entropy(map.coord_matrix, er.sigma1_sq, er.sigma2_sq);

    save_state(ep, cfg.output_dir + "/state_ep");
    save_state(cmr, cfg.output_dir + "/state_cmr");

    CheckList cl;
    cl.le("entropy_ep", s_ep, tol.product_entropy);
    cl.le("entropy_cmr_vs_oracle", std::abs(s_cmr - s_oracle), tol.entropy_vs_oracle);
    if (s_oracle < 1e-6)
        cl.le("entropy_cmr_separable_floor", s_cmr, tol.product_entropy);
    else
        cl.ge("entropy_cmr", s_cmr, tol.min_cmr_entropy);

    cl.values["entropy_ep"] = s_ep;
    cl.values["entropy_cmr"] = s_cmr;
    cl.values["entropy_cmr_oracle"] = s_oracle;
    cl.values["resample_norm_drift"] = resample_norm_drift;
    return finish(cfg.output_dir, cfg, cl);
}

// ---------------------------------------------------------------------------
// bohm-run

ScenarioOutcome run_bohm(const ScenarioConfig& cfg, ExecMode mode) {
    ensure_output_dir(cfg.output_dir);
    const Tolerances& tol = cfg.tol;
    const SGConfig& p = cfg.physics;

    const SpinorGridState st0 = initial_sg_state(cfg);
    const LinearStructureMap to_cmr = cm_relative_map(p.m_e, p.m_p);
    const Eigen::Matrix2d guid_to_ep = to_cmr.coord_matrix.inverse();

    TrajectoryEnsemble ens = sample_initial(st0, cfg.bohm.n_traj, cfg.seed, guid_to_ep);
    ens.dt_traj = cfg.bohm.dt_traj_factor * p.dt;
    const std::array<double, 2> masses = {p.total_mass(), p.reduced_mass()};

    std::vector<std::pair<double, double>> ks_series;
    std::optional<VelocityFrame> prev;
    VelocityFrameBuilder frame_builder(p.grid_cm, p.grid_r, masses);
    RunHooks hooks;
    hooks.frame_every = cfg.bohm.frame_every;
    hooks.on_frame = [&](int k, double t, const SpinorGridState& s) {
        VelocityFrame cur = frame_builder.build(s, t, mode);
        if (prev) advance_ensemble(ens, *prev, cur, mode);
        if (k % cfg.bohm.checkpoint_every == 0 || k == p.steps) {
            ens.record(t);
            ks_series.emplace_back(t, equivariance_statistic(ens, s, guid_to_ep));
        }
        prev = std::move(cur);
    };

    RunResult rr = run(st0, p, cfg.save_every, &hooks, mode);
    rr.record.write_csv(cfg.output_dir + "/record.csv");

    // Trajectory series in both coordinate pairs.
    {
        std::ofstream f(cfg.output_dir + "/trajectories.csv");
        if (!f) throw IOError("cannot write trajectories.csv");
        f << "traj_id,time,z_e,z_p,Z_CM,rho\n";
        char buf[256];
        const Eigen::Matrix2d A = to_cmr.coord_matrix;
        for (size_t ti = 0; ti < ens.times.size(); ++ti)
            for (int k = 0; k < ens.size(); ++k) {
                const double ze = ens.ze[ti * ens.size() + k], zp = ens.zp[ti * ens.size() + k];
                std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", k,
                              ens.times[ti], ze, zp, A(0, 0) * ze + A(0, 1) * zp,
                              A(1, 0) * ze + A(1, 1) * zp);
                f << buf;
            }
    }

    const DeflectionReport rep = subsystem_deflection(ens, to_cmr);

    CheckList cl;
    double ks_max = 0.0;
    for (const auto& [t, ks] : ks_series) ks_max = std::max(ks_max, ks);
    cl.le("ks_max", ks_max, tol.ks_max);

    // Bimodality of the final z_e sample: a quiet center between two heavy
    // side lobes, with the center scaled off the measured branch separation.
    const size_t last = ens.times.size() - 1;
    const double sep = rep.zcm.mean_delta_branch_pos - rep.zcm.mean_delta_branch_neg;
    const double halfwidth = sep / 6.0;
    int n_center = 0, n_lo = 0, n_hi = 0;
    for (int k = 0; k < ens.size(); ++k) {
        const double ze = ens.ze[last * ens.size() + k];
        if (std::abs(ze) < halfwidth)
            ++n_center;
        else if (ze <= -halfwidth)
            ++n_lo;
        else
            ++n_hi;
    }
    const double n_total = ens.size();
    cl.le("bimodal_center_fraction", n_center / n_total, tol.bimodal_center_max);
    cl.ge("bimodal_side_fraction_min", std::min(n_lo, n_hi) / n_total, tol.bimodal_side_min);

    cl.ge("zcm_branch_deflection_sigma",
          std::min(std::abs(rep.zcm.mean_delta_branch_neg), std::abs(rep.zcm.mean_delta_branch_pos)) /
              cfg.sigma_cm,
          3.0);
    const double frac_ze =
        std::min(std::abs(rep.ze.mean_delta_branch_neg / rep.zcm.mean_delta_branch_neg),
                 std::abs(rep.ze.mean_delta_branch_pos / rep.zcm.mean_delta_branch_pos));
    const double frac_zp =
        std::min(std::abs(rep.zp.mean_delta_branch_neg / rep.zcm.mean_delta_branch_neg),
                 std::abs(rep.zp.mean_delta_branch_pos / rep.zcm.mean_delta_branch_pos));
    cl.ge("deflection_ze_frac_of_cm", frac_ze, tol.deflection_frac);
    cl.ge("deflection_zp_frac_of_cm", frac_zp, tol.deflection_frac);
    cl.le("rho_ks_drift", rep.rho_ks_drift, tol.rho_ks_drift);

    double norm_drift = 0.0;
    for (const auto& row : rr.record.rows) norm_drift = std::max(norm_drift, row.norm_drift);
    cl.le("norm_drift_max", norm_drift, tol.norm_drift);

    nlohmann::ordered_json ksj = nlohmann::ordered_json::array();
    for (const auto& [t, ks] : ks_series) ksj.push_back({{"t", t}, {"ks", ks}});
    auto defl = [](const CoordinateDeflection& c) {
        return nlohmann::ordered_json{{"mean_delta", c.mean_delta},
                                      {"std_delta", c.std_delta},
                                      {"mean_delta_branch_neg", c.mean_delta_branch_neg},
                                      {"mean_delta_branch_pos", c.mean_delta_branch_pos}};
    };
    nlohmann::ordered_json esj;
    esj["n_traj"] = ens.size();
    esj["seed"] = cfg.seed;
    esj["ks_series"] = ksj;
    esj["deflections"] = {{"z_e", defl(rep.ze)},
                          {"z_p", defl(rep.zp)},
                          {"Z_CM", defl(rep.zcm)},
                          {"rho", defl(rep.rho)}};
    esj["rho_ks_drift"] = rep.rho_ks_drift;
    esj["branch_counts"] = {rep.n_branch_neg, rep.n_branch_pos};
    {
        std::ofstream f(cfg.output_dir + "/ensemble_summary.json");
        if (!f) throw IOError("cannot write ensemble_summary.json");
        f << esj.dump(2) << "\n";
    }

    cl.values["ks_max"] = ks_max;
    cl.values["branch_separation"] = sep;
    cl.values["rho_ks_drift"] = rep.rho_ks_drift;
    cl.values["norm_drift_max"] = norm_drift;

    std::vector<std::string> warnings;
    if (rr.warning) warnings.push_back(*rr.warning);
    return finish(cfg.output_dir, cfg, cl, std::move(warnings));
}

// ---------------------------------------------------------------------------
// classical-sweep

ScenarioOutcome run_sweep(const ScenarioConfig& cfg, ExecMode mode) {
    ensure_output_dir(cfg.output_dir);
    const Tolerances& tol = cfg.tol;
    const SweepParams& sw = cfg.sweep;
    const LinearStructureMap map = cm_relative_map(sw.m1, sw.m2);

    struct Row {
        double sigma2_sq, mi, gap, mi_quad_diff;
    };
    std::vector<Row> rows(sw.sigma2_sq_steps);

    const int n = sw.sigma2_sq_steps;
    std::exception_ptr failure = nullptr;
    auto compute_row = [&](int i) {
        const double s2 = sw.sigma2_sq_min +
                          (sw.sigma2_sq_max - sw.sigma2_sq_min) * i / (n - 1);
        const MixtureDensity d = product_density({0.0, sw.sigma1_sq}, {0.0, s2}, "e+p");
        const MixtureDensity dc = transform_density(d, map);
        Row r{s2, mutual_information(dc), factorization_gap(dc), 0.0};
        if (sw.quadrature_check)
            r.mi_quad_diff = std::abs(mutual_information_quadrature(dc, 2e-8) - r.mi);
        rows[i] = r;
    };
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            try {
                compute_row(i);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (int i = 0; i < n; ++i) compute_row(i);
    }

    {
        std::ofstream f(cfg.output_dir + "/sweep.csv");
        if (!f) throw IOError("cannot write sweep.csv");
        f << "sigma1,sigma2,m1,m2,MI_cmr,gap\n";
        char buf[256];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          std::sqrt(sw.sigma1_sq), std::sqrt(r.sigma2_sq), sw.m1, sw.m2, r.mi,
                          r.gap);
            f << buf;
        }
    }

    CheckList cl;

    // Locus m1*sigma1^2 = m2*sigma2^2: exactly zero MI there, strictly
    // positive one sweep step away.
    const double locus_s2 = sw.m1 * sw.sigma1_sq / sw.m2;
    int i_locus = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(rows[i].sigma2_sq - locus_s2) < std::abs(rows[i_locus].sigma2_sq - locus_s2))
            i_locus = i;
    const bool locus_on_grid = std::abs(rows[i_locus].sigma2_sq - locus_s2) < 1e-12;
    if (locus_on_grid) {
        cl.le("mi_on_locus", rows[i_locus].mi, tol.mi_locus);
        double off = 1e300;
        if (i_locus > 0) off = std::min(off, rows[i_locus - 1].mi);
        if (i_locus + 1 < n) off = std::min(off, rows[i_locus + 1].mi);
        cl.ge("mi_one_step_off_locus", off, tol.mi_off_locus);
        cl.le("gap_on_locus", rows[i_locus].gap, 1e-6);
        double gap_off = 1e300;
        if (i_locus > 0) gap_off = std::min(gap_off, rows[i_locus - 1].gap);
        if (i_locus + 1 < n) gap_off = std::min(gap_off, rows[i_locus + 1].gap);
        cl.ge("gap_one_step_off_locus", gap_off, 0.01);
    }

    // Worked point sigma1^2 = 1, sigma2^2 = 2, equal masses: MI = ln(9/8)/2.
    for (const auto& r : rows)
        if (sw.m1 == sw.m2 && sw.sigma1_sq == 1.0 && std::abs(r.sigma2_sq - 2.0) < 1e-12) {
            cl.le("mi_worked_point_error", std::abs(r.mi - 0.5 * std::log(9.0 / 8.0)),
                  tol.mi_worked_point);
            break;
        }

    if (sw.quadrature_check) {
        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.mi_quad_diff);
        cl.le("mi_quadrature_vs_closed_form", worst, tol.mi_quadrature);
    }

    // Converse direction: a CM+R product pulled back to e+p picks up
    // correlations unless the symmetric condition holds.
    {
        const MixtureDensity g = product_density({0.0, sw.sigma1_sq}, {0.0, 2.0 * sw.sigma1_sq},
                                                 "CM+R");
        const MixtureDensity ge = transform_density(g, invert(map));
        cl.ge("mi_pullback_asymmetric", mutual_information(ge), tol.mi_off_locus);
        cl.values["mi_pullback_asymmetric"] = mutual_information(ge);
    }

    cl.values["locus_sigma2_sq"] = locus_s2;
    cl.values["locus_on_grid"] = locus_on_grid;
    nlohmann::ordered_json rj = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        rj.push_back({{"sigma2_sq", r.sigma2_sq}, {"mi", r.mi}, {"gap", r.gap}});
    cl.values["rows"] = rj;
    return finish(cfg.output_dir, cfg, cl);
}

}  // namespace

ScenarioOutcome run_scenario(const ScenarioConfig& cfg, ExecMode mode) {
    switch (cfg.scenario) {
        case Scenario::SgRun: return run_sg(cfg, mode);
        case Scenario::ErDemo: return run_er(cfg, mode);
        case Scenario::BohmRun: return run_bohm(cfg, mode);
        case Scenario::ClassicalSweep: return run_sweep(cfg, mode);
    }
    throw ValidationError("run_scenario: unknown scenario");
}

}  // namespace qstruct
