#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "qstruct/state.hpp"

namespace qstruct {

// Guidance velocity field of a state, sampled on its own grid, plus the
// spin-summed density used for node detection. v_k = Im(sum_s psi_s* d_k
// psi_s) / (m_k * sum_s |psi_s|^2); derivatives are spectral. Nodes (density
// below node_floor = node_eps_rel * max density) take the velocity of the
// nearest above-floor grid point.
struct VelocityFrame {
    double t = 0.0;
    Grid1D g1, g2;
    std::vector<double> v1, v2;     // [i1*n2 + i2]
    std::vector<double> density;    // spin-summed |psi|^2 at the nodes
    double node_floor = 0.0;
};

VelocityFrame build_velocity_frame(const SpinorGridState& s, double t,
                                   std::array<double, 2> masses, double node_eps_rel = 1e-12,
                                   ExecMode mode = ExecMode::Serial);

// Reusable frame factory: keeps the FFT plans and scratch buffers alive, so
// streaming one frame per evolution step stays cheap.
class VelocityFrameBuilder {
public:
    VelocityFrameBuilder(const Grid1D& g1, const Grid1D& g2, std::array<double, 2> masses,
                         double node_eps_rel = 1e-12);
    ~VelocityFrameBuilder();
    VelocityFrameBuilder(const VelocityFrameBuilder&) = delete;
    VelocityFrameBuilder& operator=(const VelocityFrameBuilder&) = delete;

    VelocityFrame build(const SpinorGridState& s, double t, ExecMode mode = ExecMode::Serial);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Bilinear sample of the frame's velocity at a point; OutsideGrid beyond the
// node-spanned box.
std::array<double, 2> sample_velocity(const VelocityFrame& f, std::array<double, 2> point);
double sample_density(const VelocityFrame& f, std::array<double, 2> point);

// Convenience single-point evaluation (builds the full frame; prefer frames
// when evaluating many points).
std::array<double, 2> velocity_field(const SpinorGridState& s, std::array<double, 2> point,
                                     std::array<double, 2> masses);

// Configuration-space trajectories. Guidance happens in the coordinates of
// the state that produced the frames; recorded series are always reported in
// e+p coordinates through guidance_to_ep (identity when guiding in e+p).
struct TrajectoryEnsemble {
    std::uint64_t seed = 0;
    double dt_traj = 0.0;
    Eigen::Matrix2d guidance_to_ep = Eigen::Matrix2d::Identity();

    std::vector<double> q1, q2;           // current guidance-coordinate positions
    std::vector<int> node_violations;     // consecutive sub-floor density hits
    std::vector<double> times;            // recorded instants
    std::vector<double> ze, zp;           // recorded series, times.size() x n row-major

    int size() const { return static_cast<int>(q1.size()); }
    std::array<double, 2> ep_of(int k) const {
        return {guidance_to_ep(0, 0) * q1[k] + guidance_to_ep(0, 1) * q2[k],
                guidance_to_ep(1, 0) * q1[k] + guidance_to_ep(1, 1) * q2[k]};
    }
    void record(double t);
};

// n i.i.d. draws from the spin-summed |psi|^2 via inverse-CDF over the cell
// masses plus a uniform jitter inside the cell. Deterministic given seed.
TrajectoryEnsemble sample_initial(const SpinorGridState& s, int n, std::uint64_t seed,
                                  const Eigen::Matrix2d& guidance_to_ep =
                                      Eigen::Matrix2d::Identity());

// RK4 advance of every trajectory from frame a.t to frame b.t with fixed
// substeps of at most dt_traj; velocities are bilinear in space and linear in
// time between the two frames. A trajectory that stays below the density
// floor for node_patience consecutive substeps raises NodeEncounter.
void advance_ensemble(TrajectoryEnsemble& ens, const VelocityFrame& a, const VelocityFrame& b,
                      ExecMode mode = ExecMode::Serial, int node_patience = 32);

// Drives the ensemble through a materialized frame sequence, recording at
// every frame time. Frame spacing must not exceed 5 * dt_traj.
void integrate(TrajectoryEnsemble& ens, const std::vector<VelocityFrame>& frames,
               ExecMode mode = ExecMode::Serial, int node_patience = 32);

// Max over (z_e, z_p) of the KS distance between the empirical marginal of
// the current ensemble positions and the state's marginal. state_to_ep maps
// the state's coordinates to e+p. Needs at least 10^3 trajectories.
double equivariance_statistic(const TrajectoryEnsemble& ens, const SpinorGridState& state,
                              const Eigen::Matrix2d& state_to_ep = Eigen::Matrix2d::Identity());

double ks_statistic(std::vector<double> samples, const LinearMarginal& model);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct CoordinateDeflection {
    double mean_delta = 0.0;
    double std_delta = 0.0;
    double mean_delta_branch_neg = 0.0;  // trajectories ending at Z_CM < 0
    double mean_delta_branch_pos = 0.0;
};

struct DeflectionReport {
    CoordinateDeflection ze, zp, zcm, rho;
    double rho_ks_drift = 0.0;  // two-sample KS, initial vs final rho
    int n_branch_neg = 0, n_branch_pos = 0;
};

// Final-minus-initial statistics of the recorded series in e+p coordinates
// and pushed through `map` (e.g. cm_relative_map) for the collective pair.
DeflectionReport subsystem_deflection(const TrajectoryEnsemble& ens,
                                      const LinearStructureMap& map);

}  // namespace qstruct
