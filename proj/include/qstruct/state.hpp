#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "qstruct/grid.hpp"
#include "qstruct/parallel.hpp"
#include "qstruct/structure.hpp"

namespace qstruct {

using cdouble = std::complex<double>;

inline constexpr int kSpins = 2;  // index 0 = spin up (s_z = +1/2), 1 = spin down

// Complex amplitude field over two spatial coordinates and one spin-1/2
// index, sampled at the grid nodes (collocation). Conventions used
// throughout:
//   * natural units, hbar = 1, masses in electron masses
//   * norm^2 = sum |amp|^2 * cell_area, kept at 1 by normalize()
//   * layout amps[(s*n1 + i1)*n2 + i2]
struct SpinorGridState {
    Grid1D g1, g2;
    std::string structure_label;  // which coordinate pair these are, e.g. "e+p" or "CM+R"
    std::vector<cdouble> amps;

    SpinorGridState() = default;
    SpinorGridState(Grid1D a, Grid1D b, std::string label)
        : g1(a), g2(b), structure_label(std::move(label)),
          amps(static_cast<size_t>(kSpins) * a.n * b.n) {}

    size_t idx(int s, int i1, int i2) const {
        return (static_cast<size_t>(s) * g1.n + i1) * g2.n + i2;
    }
    cdouble& at(int s, int i1, int i2) { return amps[idx(s, i1, i2)]; }
    const cdouble& at(int s, int i1, int i2) const { return amps[idx(s, i1, i2)]; }

    double cell_area() const { return g1.spacing() * g2.spacing(); }
    double norm2() const;
    void normalize();
    bool all_finite() const;
};

// Normalized product state: Gaussian(q1) * Gaussian(q2) * spinor, with
// position standard deviations `widths` and plane-wave momenta `momenta`.
// Requires a 5-sigma margin between each center and the grid edges.
SpinorGridState gaussian_spin_state(std::array<double, 2> centers, std::array<double, 2> widths,
                                    std::array<double, 2> momenta, std::array<cdouble, 2> spin_amps,
                                    const Grid1D& g1, const Grid1D& g2,
                                    std::string structure_label = "e+p");

// Resamples the state onto the coordinates xi = map(q): amplitudes are read
// at map^{-1}(xi) through an interpolating bicubic spline and scaled by
// |det|^{-1/2}. Source probability mass whose image is not covered by the
// target grids counts as lost; more than `loss_tol` of it raises
// SupportEscape.
SpinorGridState change_structure(const SpinorGridState& s, const LinearStructureMap& map,
                                 const Grid1D& target1, const Grid1D& target2,
                                 ExecMode mode = ExecMode::Serial, double loss_tol = 1e-6);

enum class SchmidtSplit {
    Coord1_vs_Coord2Spin,   // q1 | q2 (x) spin
    Coord1Coord2_vs_Spin,   // q1 (x) q2 | spin
    Coord1Spin_vs_Coord2,   // q1 (x) spin | q2
};

// Nonincreasing singular values of the matricized amplitude array; their
// squares sum to the squared norm.
std::vector<double> schmidt_spectrum(const SpinorGridState& s, SchmidtSplit split);

// Von Neumann entropy -sum l^2 ln l^2 in nats. Spectrum must satisfy
// sum l^2 = 1 +- 1e-6.
double entanglement_entropy(const std::vector<double>& spectrum);

// Spin-summed density integrated over the other coordinate; integrates to 1.
std::vector<double> marginal_density(const SpinorGridState& s, int which);

// Trace-1 reduced density matrix over one coordinate factor (spin and the
// other coordinate traced out).
Eigen::MatrixXcd reduced_density_matrix(const SpinorGridState& s, int which);

Eigen::Matrix2cd reduced_spin_matrix(const SpinorGridState& s);

// Uhlmann fidelity between two trace-1 PSD matrices on the same grid factor.
double reduced_state_fidelity(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

cdouble state_overlap(const SpinorGridState& a, const SpinorGridState& b);

// d/dq_axis of every spin component, computed spectrally (periodic grid).
std::vector<cdouble> spectral_derivative(const SpinorGridState& s, int axis,
                                         ExecMode mode = ExecMode::Serial);

// Exact projection of the spin-summed density onto the axis z = alpha*q1 +
// beta*q2, with each cell smeared over the interval it projects to. Gives a
// piecewise-linear CDF usable for KS statistics.
struct LinearMarginal {
    double lo = 0.0, hi = 0.0;
    std::vector<double> bin_mass;   // size nbins, sums to 1
    std::vector<double> cdf_edges;  // size nbins+1, cdf_edges[0] = 0
    double cdf(double x) const;
};
LinearMarginal project_linear_combination(const SpinorGridState& s, double alpha, double beta,
                                          int nbins = 4096);

// Snapshot I/O: <base>.json holds grids and structure label, <base>.csv the
// amplitudes as (i1, i2, Re_up, Im_up, Re_dn, Im_dn). Round-trip exact.
void save_state(const SpinorGridState& s, const std::string& basepath);
SpinorGridState load_state(const std::string& basepath);

}  // namespace qstruct
