#include "qstruct/sgdyn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "qstruct/fft.hpp"

namespace qstruct {

void SGConfig::validate() const {
    if (!(m_e > 0.0) || !(m_p > 0.0)) throw NonpositiveMass("SGConfig: masses must be positive");
    if (!(dt > 0.0)) throw ValidationError("SGConfig: dt must be positive");
    if (steps < 1) throw ValidationError("SGConfig: steps must be >= 1");
    if (!(internal_omega >= 0.0)) throw ValidationError("SGConfig: internal_omega must be >= 0");
    grid_cm.validate();
    grid_r.validate();
}

double potential_energy(double z_cm, double rho, double s_z, const SGConfig& cfg) {
    return cfg.mu * s_z * (cfg.B0 + cfg.b * z_cm) +
           0.5 * cfg.reduced_mass() * cfg.internal_omega * cfg.internal_omega * rho * rho;
}

double SGConfig::stability_product() const {
    // |V| over the box is maximized at corners: the magnetic part is linear
    // in z per spin and the harmonic part ranges over [0, edge value].
    const double h_max = 0.5 * reduced_mass() * internal_omega * internal_omega *
                         std::max(grid_r.min * grid_r.min, grid_r.max * grid_r.max);
    double vmax = 0.0;
    for (double s : {0.5, -0.5})
        for (double z : {grid_cm.min, grid_cm.max})
            for (double h : {0.0, h_max}) {
                const double mag = mu * s * (B0 + b * z);
                vmax = std::max(vmax, std::abs(mag + h));
            }
    return dt * vmax;
}

namespace {

constexpr double kSpinZ[kSpins] = {0.5, -0.5};

// Phase tables for one Strang step, built once per run.
struct Propagator {
    const SGConfig& cfg;
    Spectral2D fft;
    std::vector<cdouble> pot_half;  // [spin][i][j]
    std::vector<cdouble> kin;       // [i][j]

    explicit Propagator(const SGConfig& c)
        : cfg(c), fft(c.grid_cm.n, c.grid_r.n),
          pot_half(static_cast<size_t>(kSpins) * c.grid_cm.n * c.grid_r.n),
          kin(static_cast<size_t>(c.grid_cm.n) * c.grid_r.n) {
        const int n1 = c.grid_cm.n, n2 = c.grid_r.n;
        for (int s = 0; s < kSpins; ++s)
            for (int i = 0; i < n1; ++i) {
                const double z = c.grid_cm.point(i);
                for (int j = 0; j < n2; ++j) {
                    const double v = potential_energy(z, c.grid_r.point(j), kSpinZ[s], c);
                    pot_half[(static_cast<size_t>(s) * n1 + i) * n2 + j] =
                        std::polar(1.0, -0.5 * c.dt * v);
                }
            }
        const double inv2M = 1.0 / (2.0 * c.total_mass());
        const double inv2mu = 1.0 / (2.0 * c.reduced_mass());
        for (int i = 0; i < n1; ++i) {
            const double kz = c.grid_cm.wavenumber(i);
            for (int j = 0; j < n2; ++j) {
                const double kr = c.grid_r.wavenumber(j);
                kin[static_cast<size_t>(i) * n2 + j] =
                    std::polar(1.0, -c.dt * (kz * kz * inv2M + kr * kr * inv2mu));
            }
        }
    }

    void multiply_rows(cdouble* data, const cdouble* table, ExecMode mode) const {
        const int n1 = cfg.grid_cm.n, n2 = cfg.grid_r.n;
        if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < n1; ++i)
                for (int j = 0; j < n2; ++j)
                    data[static_cast<size_t>(i) * n2 + j] *= table[static_cast<size_t>(i) * n2 + j];
        } else {
            for (int i = 0; i < n1; ++i)
                for (int j = 0; j < n2; ++j)
                    data[static_cast<size_t>(i) * n2 + j] *= table[static_cast<size_t>(i) * n2 + j];
        }
    }

    void advance(SpinorGridState& st, ExecMode mode) const {
        const int n1 = cfg.grid_cm.n, n2 = cfg.grid_r.n;
        for (int s = 0; s < kSpins; ++s) {
            cdouble* block = st.amps.data() + st.idx(s, 0, 0);
            const cdouble* pot = pot_half.data() + static_cast<size_t>(s) * n1 * n2;
            multiply_rows(block, pot, mode);
            fft.forward(block, mode);
            multiply_rows(block, kin.data(), mode);
            fft.inverse(block, mode);
            multiply_rows(block, pot, mode);
        }
    }
};

void check_structure(const SpinorGridState& st, const SGConfig& cfg) {
    if (st.structure_label != "CM+R")
        throw StructureMismatch("sgdyn: state must be in the CM+R structure, got '" +
                                st.structure_label + "'");
    if (st.g1 != cfg.grid_cm || st.g2 != cfg.grid_r)
        throw StructureMismatch("sgdyn: state grids do not match the configuration");
}

double branch_mean_p(const SpinorGridState& st, int spin, Spectral2D& fft) {
    std::vector<cdouble> block(st.amps.begin() + st.idx(spin, 0, 0),
                               st.amps.begin() + st.idx(spin, 0, 0) + static_cast<size_t>(st.g1.n) * st.g2.n);
    fft.forward(block.data());
    double num = 0.0, den = 0.0;
    for (int i = 0; i < st.g1.n; ++i) {
        const double k = st.g1.wavenumber(i);
        for (int j = 0; j < st.g2.n; ++j) {
            const double w = std::norm(block[static_cast<size_t>(i) * st.g2.n + j]);
            num += k * w;
            den += w;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

double edge_band_mass(const SpinorGridState& st, int band) {
    const double area = st.cell_area();
    double m = 0.0;
    for (int s = 0; s < kSpins; ++s)
        for (int i = 0; i < st.g1.n; ++i)
            for (int j = 0; j < st.g2.n; ++j)
                if (i < band || i >= st.g1.n - band || j < band || j >= st.g2.n - band)
                    m += std::norm(st.at(s, i, j)) * area;
    return m;
}

double spin_entropy_of(const SpinorGridState& st) {
    Eigen::Matrix2cd rho = reduced_spin_matrix(st);
    const double tr = rho.trace().real();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
    double ent = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double p = es.eigenvalues()[i] / tr;
        if (p > 0.0) ent -= p * std::log(p);
    }
    return ent;
}

}  // namespace

SpinorGridState step(const SpinorGridState& state, const SGConfig& cfg, ExecMode mode) {
    cfg.validate();
    check_structure(state, cfg);
    Propagator prop(cfg);
    SpinorGridState out = state;
    prop.advance(out, mode);
    return out;
}

BranchAnalysis branch_analysis(const SpinorGridState& state) {
    const double area = state.cell_area();
    BranchAnalysis out;
    double w[2] = {0.0, 0.0}, zsum[2] = {0.0, 0.0};
    cdouble cross{0.0, 0.0};
    for (int i = 0; i < state.g1.n; ++i) {
        const double z = state.g1.point(i);
        for (int j = 0; j < state.g2.n; ++j) {
            const cdouble u = state.at(0, i, j), d = state.at(1, i, j);
            w[0] += std::norm(u);
            w[1] += std::norm(d);
            zsum[0] += z * std::norm(u);
            zsum[1] += z * std::norm(d);
            cross += std::conj(u) * d;
        }
    }
    const double total = (w[0] + w[1]) * area;
    out.weight_up = w[0] * area / total;
    out.weight_dn = w[1] * area / total;
    out.mean_z_up = w[0] > 0.0 ? zsum[0] / w[0] : 0.0;
    out.mean_z_dn = w[1] > 0.0 ? zsum[1] / w[1] : 0.0;
    out.overlap = (w[0] > 1e-30 && w[1] > 1e-30)
                      ? std::abs(cross) / std::sqrt(w[0] * w[1])
                      : 0.0;
    return out;
}

void EvolutionRecord::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IOError("EvolutionRecord: cannot write " + path);
    f << "time,meanZ_up,meanZ_dn,meanP_up,meanP_dn,S_spin,branch_overlap,R_L1_drift\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                      r.mean_z_up, r.mean_z_dn, r.mean_p_up, r.mean_p_dn, r.spin_entropy,
                      r.branch_overlap, r.r_l1_drift);
        f << buf;
    }
    if (!f) throw IOError("EvolutionRecord: write failed for " + path);
}

RunResult run(const SpinorGridState& initial, const SGConfig& cfg, int save_every,
              const RunHooks* hooks, ExecMode mode) {
    cfg.validate();
    check_structure(initial, cfg);
    if (save_every < 1) throw ValidationError("run: save_every must be >= 1");

    RunResult result{EvolutionRecord{}, initial, std::nullopt};
    if (cfg.stability_product() >= 0.5)
        result.warning = "dt * max|V| = " + std::to_string(cfg.stability_product()) +
                         " >= 0.5; time step is too coarse for this potential";

    Propagator prop(cfg);
    Spectral2D obs_fft(cfg.grid_cm.n, cfg.grid_r.n);
    SpinorGridState st = initial;
    const std::vector<double> rho0 = marginal_density(st, 1);

    auto observe = [&](int step_index) {
        EvolutionObservables o;
        o.t = step_index * cfg.dt;
        const BranchAnalysis ba = branch_analysis(st);
        o.weight_up = ba.weight_up;
        o.weight_dn = ba.weight_dn;
        o.mean_z_up = ba.mean_z_up;
        o.mean_z_dn = ba.mean_z_dn;
        o.branch_overlap = ba.overlap;
        o.mean_p_up = branch_mean_p(st, 0, obs_fft);
        o.mean_p_dn = branch_mean_p(st, 1, obs_fft);
        o.spin_entropy = spin_entropy_of(st);
        const std::vector<double> rho_t = marginal_density(st, 1);
        double l1 = 0.0;
        for (size_t j = 0; j < rho_t.size(); ++j) l1 += std::abs(rho_t[j] - rho0[j]);
        o.r_l1_drift = l1 * cfg.grid_r.spacing();
        o.norm_drift = std::abs(st.norm2() - 1.0);
        result.record.rows.push_back(o);

        // Guard band: abort before a packet wraps around the periodic box.
        if (edge_band_mass(st, 5) > 1e-8)
            throw BoundaryProximity("run: probability mass within 5 grid spacings of a boundary at t = " +
                                    std::to_string(o.t));
    };

    observe(0);
    if (hooks && hooks->on_frame) hooks->on_frame(0, 0.0, st);

    for (int k = 1; k <= cfg.steps; ++k) {
        prop.advance(st, mode);
        if (k % save_every == 0 || k == cfg.steps) observe(k);
        if (hooks && hooks->on_frame && (k % hooks->frame_every == 0 || k == cfg.steps))
            hooks->on_frame(k, k * cfg.dt, st);
    }
    result.final_state = st;
    return result;
}

}  // namespace qstruct
