#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "qstruct/sgdyn.hpp"

namespace qstruct {

enum class Scenario { SgRun, ErDemo, BohmRun, ClassicalSweep };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

// Tolerances used by the scenario self-checks; every default matches the
// acceptance thresholds and can be overridden from the [tolerances] section.
struct Tolerances {
    double branch_overlap = 1e-3;
    double spin_entropy = 0.01;
    double branch_weights = 1e-6;
    double ehrenfest_rel = 0.01;
    double r_fidelity_gap = 1e-5;
    double r_l1_drift = 1e-4;
    double norm_drift = 1e-7;
    double deflection_frac = 0.1;
    double product_entropy = 1e-4;
    double entropy_vs_oracle = 2e-3;
    double min_cmr_entropy = 0.05;
    double ks_max = 0.03;
    double rho_ks_drift = 0.03;
    double bimodal_center_max = 0.10;
    double bimodal_side_min = 0.35;
    double mi_locus = 1e-6;
    double mi_off_locus = 1e-3;
    double mi_worked_point = 1e-4;
    double mi_quadrature = 1e-6;
};

struct ErDemoParams {
    double m1 = 1.0, m2 = 1.0;
    double sigma1_sq = 1.0, sigma2_sq = 2.0;
    Grid1D grid_q1, grid_q2;  // source e+p grids
    Grid1D grid_cm, grid_r;   // refactorization targets
};

struct BohmParams {
    int n_traj = 0;
    double dt_traj_factor = 0.5;  // dt_traj = factor * dt
    int frame_every = 1;          // wavefunction frames per trajectory segment
    int checkpoint_every = 0;     // steps between recorded/KS-checked instants
};

struct SweepParams {
    double m1 = 1.0, m2 = 1.0;
    double sigma1_sq = 1.0;
    double sigma2_sq_min = 0.25, sigma2_sq_max = 2.0;
    int sigma2_sq_steps = 8;
    bool quadrature_check = true;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::SgRun;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    // sg-run / bohm-run
    SGConfig physics;
    double sigma_cm = 0.0;               // initial CM packet width
    double sigma_r = 0.0;                // internal packet width; 0 = ground state of the model potential
    double spin_up_amp = 0.0, spin_dn_amp = 0.0;
    int save_every = 1;

    ErDemoParams er;
    BohmParams bohm;
    SweepParams sweep;
    Tolerances tol;
};

// Strict parse of the key=value-with-sections format: '#' comments, one
// [section] per group, unknown keys and duplicates rejected, every violation
// reported in one error.
ScenarioConfig parse_config(const std::string& text, Scenario scenario);
ScenarioConfig load_config_file(const std::string& path, Scenario scenario);

}  // namespace qstruct
