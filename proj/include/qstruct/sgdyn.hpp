#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qstruct/state.hpp"

namespace qstruct {

// Physical and numerical parameters of the Stern-Gerlach run. The atom moves
// in CM+R coordinates: kinetic terms P_CM^2/2M + p_rho^2/2mu_R, a harmonic
// internal potential for the R system, and the spin-CM coupling
// mu * s_z * (B0 + b * Z_CM). The sign convention is electron-like
// (mu_spin = -mu*S), so for b > 0 spin-up is forced toward -z.
struct SGConfig {
    double m_e = 1.0;
    double m_p = 1836.0;
    double mu = 1.0;              // magnetic moment coefficient
    double B0 = 0.0;              // field offset
    double b = 0.0;               // field gradient along z
    double internal_omega = 0.0;  // harmonic stiffness of the internal potential
    double dt = 0.0;
    int steps = 0;
    Grid1D grid_cm;  // Z_CM axis
    Grid1D grid_r;   // rho axis

    double total_mass() const { return m_e + m_p; }
    double reduced_mass() const { return m_e * m_p / (m_e + m_p); }

    void validate() const;
    // dt * max|V| over the grid; above 0.5 the run emits a stability warning.
    double stability_product() const;
};

double potential_energy(double z_cm, double rho, double s_z, const SGConfig& cfg);

// One Strang split-operator step: half potential kick (diagonal in position
// and spin), full spectral kinetic step, half potential kick.
SpinorGridState step(const SpinorGridState& state, const SGConfig& cfg,
                     ExecMode mode = ExecMode::Serial);

struct BranchAnalysis {
    double weight_up = 0.0, weight_dn = 0.0;     // |c_s|^2, sum to 1
    double mean_z_up = 0.0, mean_z_dn = 0.0;     // conditional <Z_CM> per spin
    double overlap = 1.0;                        // |<psi_up|psi_dn>| of normalized branches
};
BranchAnalysis branch_analysis(const SpinorGridState& state);

struct EvolutionObservables {
    double t = 0.0;
    double weight_up = 0.0, weight_dn = 0.0;
    double mean_z_up = 0.0, mean_z_dn = 0.0;
    double mean_p_up = 0.0, mean_p_dn = 0.0;
    double spin_entropy = 0.0;    // spin | coords entanglement entropy, nats
    double branch_overlap = 1.0;
    double r_l1_drift = 0.0;      // L1 distance of the rho marginal from t = 0
    double norm_drift = 0.0;      // |norm^2 - 1|
};

struct EvolutionRecord {
    std::vector<EvolutionObservables> rows;
    void write_csv(const std::string& path) const;
};

struct RunHooks {
    // Called at t=0 and after every frame_every-th step; used to stream
    // wavefunction frames to the trajectory integrator.
    std::function<void(int step_index, double t, const SpinorGridState&)> on_frame;
    int frame_every = 1;
};

struct RunResult {
    EvolutionRecord record;
    SpinorGridState final_state;
    std::optional<std::string> warning;
};

// Evolves `initial` for cfg.steps steps, recording observables every
// save_every steps (plus t=0 and the final step). Aborts with
// BoundaryProximity if noticeable probability mass reaches the 5-spacing
// guard band at any grid edge.
RunResult run(const SpinorGridState& initial, const SGConfig& cfg, int save_every,
              const RunHooks* hooks = nullptr, ExecMode mode = ExecMode::Serial);

}  // namespace qstruct
