#include "qstruct/bohm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "qstruct/fft.hpp"

namespace qstruct {

namespace {

// Sub-floor nodes borrow the velocity of the (Manhattan-)nearest live grid
// point: a two-pass distance transform carrying the source values, O(N).
void nearest_live_fill(std::vector<double>& v1, std::vector<double>& v2,
                       const std::vector<double>& density, double floor, int n1, int n2) {
    constexpr int kFar = 1 << 29;
    std::vector<int> dist(static_cast<size_t>(n1) * n2);
    auto live = [&](size_t idx) { return density[idx] >= floor && density[idx] > 0.0; };

    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const size_t idx = static_cast<size_t>(i) * n2 + j;
            if (live(idx)) {
                dist[idx] = 0;
                continue;
            }
            dist[idx] = kFar;
            if (i > 0 && dist[idx - n2] + 1 < dist[idx]) {
                dist[idx] = dist[idx - n2] + 1;
                v1[idx] = v1[idx - n2];
                v2[idx] = v2[idx - n2];
            }
            if (j > 0 && dist[idx - 1] + 1 < dist[idx]) {
                dist[idx] = dist[idx - 1] + 1;
                v1[idx] = v1[idx - 1];
                v2[idx] = v2[idx - 1];
            }
        }
    for (int i = n1 - 1; i >= 0; --i)
        for (int j = n2 - 1; j >= 0; --j) {
            const size_t idx = static_cast<size_t>(i) * n2 + j;
            if (dist[idx] == 0) continue;
            if (i + 1 < n1 && dist[idx + n2] + 1 < dist[idx]) {
                dist[idx] = dist[idx + n2] + 1;
                v1[idx] = v1[idx + n2];
                v2[idx] = v2[idx + n2];
            }
            if (j + 1 < n2 && dist[idx + 1] + 1 < dist[idx]) {
                dist[idx] = dist[idx + 1] + 1;
                v1[idx] = v1[idx + 1];
                v2[idx] = v2[idx + 1];
            }
        }
}

}  // namespace

struct VelocityFrameBuilder::Impl {
    Grid1D g1, g2;
    std::array<double, 2> masses;
    double eps;
    Spectral2D fft;
    std::vector<cdouble> spectrum, dx, dy;

    Impl(const Grid1D& a, const Grid1D& b, std::array<double, 2> m, double e)
        : g1(a), g2(b), masses(m), eps(e), fft(a.n, b.n),
          spectrum(static_cast<size_t>(a.n) * b.n), dx(spectrum.size()), dy(spectrum.size()) {}
};

VelocityFrameBuilder::VelocityFrameBuilder(const Grid1D& g1, const Grid1D& g2,
                                           std::array<double, 2> masses, double node_eps_rel)
    : impl_(std::make_unique<Impl>(g1, g2, masses, node_eps_rel)) {
    if (!(masses[0] > 0.0) || !(masses[1] > 0.0))
        throw NonpositiveMass("VelocityFrameBuilder: masses must be positive");
}

VelocityFrameBuilder::~VelocityFrameBuilder() = default;

VelocityFrame VelocityFrameBuilder::build(const SpinorGridState& s, double t, ExecMode mode) {
    Impl& im = *impl_;
    if (s.g1 != im.g1 || s.g2 != im.g2)
        throw DimensionMismatch("VelocityFrameBuilder: state grids changed");
    const int n1 = im.g1.n, n2 = im.g2.n;
    const size_t plane = static_cast<size_t>(n1) * n2;

    VelocityFrame f;
    f.t = t;
    f.g1 = im.g1;
    f.g2 = im.g2;
    f.v1.assign(plane, 0.0);
    f.v2.assign(plane, 0.0);
    f.density.assign(plane, 0.0);

    std::vector<double> j1(plane, 0.0), j2(plane, 0.0);
    for (int sp = 0; sp < kSpins; ++sp) {
        const cdouble* amp = s.amps.data() + sp * plane;
        std::copy(amp, amp + plane, im.spectrum.begin());
        im.fft.forward(im.spectrum.data(), mode);
        for (int i = 0; i < n1; ++i) {
            const double k1 = im.g1.wavenumber(i);
            for (int j = 0; j < n2; ++j) {
                const double k2 = im.g2.wavenumber(j);
                const cdouble v = im.spectrum[static_cast<size_t>(i) * n2 + j];
                im.dx[static_cast<size_t>(i) * n2 + j] = cdouble(0.0, k1) * v;
                im.dy[static_cast<size_t>(i) * n2 + j] = cdouble(0.0, k2) * v;
            }
        }
        im.fft.inverse(im.dx.data(), mode);
        im.fft.inverse(im.dy.data(), mode);
        for (size_t idx = 0; idx < plane; ++idx) {
            f.density[idx] += std::norm(amp[idx]);
            j1[idx] += std::imag(std::conj(amp[idx]) * im.dx[idx]);
            j2[idx] += std::imag(std::conj(amp[idx]) * im.dy[idx]);
        }
    }

    double dmax = 0.0;
    for (size_t idx = 0; idx < plane; ++idx) dmax = std::max(dmax, f.density[idx]);
    f.node_floor = im.eps * dmax;
    for (size_t idx = 0; idx < plane; ++idx)
        if (f.density[idx] >= f.node_floor && f.density[idx] > 0.0) {
            f.v1[idx] = j1[idx] / (im.masses[0] * f.density[idx]);
            f.v2[idx] = j2[idx] / (im.masses[1] * f.density[idx]);
        }
    nearest_live_fill(f.v1, f.v2, f.density, f.node_floor, n1, n2);
    return f;
}

VelocityFrame build_velocity_frame(const SpinorGridState& s, double t,
                                   std::array<double, 2> masses, double node_eps_rel,
                                   ExecMode mode) {
    VelocityFrameBuilder builder(s.g1, s.g2, masses, node_eps_rel);
    return builder.build(s, t, mode);
}

namespace {

struct Bilinear {
    const VelocityFrame& f;
    int i, j;
    double tx, ty;

    Bilinear(const VelocityFrame& fr, std::array<double, 2> p) : f(fr) {
        const double u = (p[0] - f.g1.min) / f.g1.spacing();
        const double v = (p[1] - f.g2.min) / f.g2.spacing();
        if (u < 0.0 || u > f.g1.n - 1 || v < 0.0 || v > f.g2.n - 1)
            throw OutsideGrid("bohm: point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                              ") left the grid");
        i = std::min(static_cast<int>(u), f.g1.n - 2);
        j = std::min(static_cast<int>(v), f.g2.n - 2);
        tx = u - i;
        ty = v - j;
    }

    double sample(const std::vector<double>& field) const {
        const int n2 = f.g2.n;
        const double a00 = field[static_cast<size_t>(i) * n2 + j];
        const double a01 = field[static_cast<size_t>(i) * n2 + j + 1];
        const double a10 = field[static_cast<size_t>(i + 1) * n2 + j];
        const double a11 = field[static_cast<size_t>(i + 1) * n2 + j + 1];
        return (1 - tx) * ((1 - ty) * a00 + ty * a01) + tx * ((1 - ty) * a10 + ty * a11);
    }
};

}  // namespace

std::array<double, 2> sample_velocity(const VelocityFrame& f, std::array<double, 2> point) {
    Bilinear b(f, point);
    return {b.sample(f.v1), b.sample(f.v2)};
}

double sample_density(const VelocityFrame& f, std::array<double, 2> point) {
    Bilinear b(f, point);
    return b.sample(f.density);
}

std::array<double, 2> velocity_field(const SpinorGridState& s, std::array<double, 2> point,
                                     std::array<double, 2> masses) {
    return sample_velocity(build_velocity_frame(s, 0.0, masses), point);
}

void TrajectoryEnsemble::record(double t) {
    times.push_back(t);
    for (int k = 0; k < size(); ++k) {
        const auto ep = ep_of(k);
        ze.push_back(ep[0]);
        zp.push_back(ep[1]);
    }
}

TrajectoryEnsemble sample_initial(const SpinorGridState& s, int n, std::uint64_t seed,
                                  const Eigen::Matrix2d& guidance_to_ep) {
    if (n < 0) throw ValidationError("sample_initial: negative sample count");
    TrajectoryEnsemble ens;
    ens.seed = seed;
    ens.guidance_to_ep = guidance_to_ep;
    ens.q1.reserve(n);
    ens.q2.reserve(n);
    ens.node_violations.assign(n, 0);
    if (n == 0) return ens;

    const size_t plane = static_cast<size_t>(s.g1.n) * s.g2.n;
    std::vector<double> cum(plane);
    double acc = 0.0;
    for (size_t idx = 0; idx < plane; ++idx) {
        acc += std::norm(s.amps[idx]) + std::norm(s.amps[plane + idx]);
        cum[idx] = acc;
    }
    if (!(acc > 0.0)) throw ValidationError("sample_initial: state has zero norm");

    std::mt19937_64 eng(seed);
    auto uniform = [&eng]() { return (eng() >> 11) * 0x1.0p-53; };
    const double h1 = s.g1.spacing(), h2 = s.g2.spacing();
    for (int k = 0; k < n; ++k) {
        const double u = uniform() * acc;
        const size_t idx = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        const int i = static_cast<int>(idx / s.g2.n);
        const int j = static_cast<int>(idx % s.g2.n);
        ens.q1.push_back(s.g1.point(i) + (uniform() - 0.5) * h1);
        ens.q2.push_back(s.g2.point(j) + (uniform() - 0.5) * h2);
    }
    return ens;
}

namespace {

struct BlendedField {
    const VelocityFrame& a;
    const VelocityFrame& b;
    double t0, span;

    std::array<double, 2> velocity(std::array<double, 2> p, double t) const {
        const auto va = sample_velocity(a, p);
        const auto vb = sample_velocity(b, p);
        const double w = span > 0.0 ? (t - t0) / span : 0.0;
        return {va[0] + w * (vb[0] - va[0]), va[1] + w * (vb[1] - va[1])};
    }
};

}  // namespace

void advance_ensemble(TrajectoryEnsemble& ens, const VelocityFrame& a, const VelocityFrame& b,
                      ExecMode mode, int node_patience) {
    if (!(ens.dt_traj > 0.0)) throw ValidationError("advance_ensemble: dt_traj must be positive");
    const double span = b.t - a.t;
    if (!(span > 0.0)) throw ValidationError("advance_ensemble: frames out of order");
    if (span > 5.0 * ens.dt_traj * (1.0 + 1e-9))
        throw ValidationError("advance_ensemble: frame spacing " + std::to_string(span) +
                              " exceeds 5 * dt_traj");
    const int substeps = std::max(1, static_cast<int>(std::ceil(span / ens.dt_traj - 1e-12)));
    const double h = span / substeps;
    const BlendedField field{a, b, a.t, span};

    std::exception_ptr failure = nullptr;
    std::atomic<bool> failed{false};
    auto advance_one = [&](int k) {
        double x = ens.q1[k], y = ens.q2[k];
        int violations = ens.node_violations[k];
        for (int m = 0; m < substeps; ++m) {
            const double t = a.t + m * h;
            if (sample_density(a, {x, y}) < a.node_floor) {
                if (++violations > node_patience)
                    throw NodeEncounter("advance_ensemble: trajectory " + std::to_string(k) +
                                        " stuck below the density floor");
            } else {
                violations = 0;
            }
            const auto k1 = field.velocity({x, y}, t);
            const auto k2 = field.velocity({x + 0.5 * h * k1[0], y + 0.5 * h * k1[1]}, t + 0.5 * h);
            const auto k3 = field.velocity({x + 0.5 * h * k2[0], y + 0.5 * h * k2[1]}, t + 0.5 * h);
            const auto k4 = field.velocity({x + h * k3[0], y + h * k3[1]}, t + h);
            x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        ens.q1[k] = x;
        ens.q2[k] = y;
        ens.node_violations[k] = violations;
    };

    const int n = ens.size();
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < n; ++k) {
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                advance_one(k);
            } catch (...) {
#pragma omp critical
                {
                    if (!failure) failure = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        }
    } else {
        for (int k = 0; k < n; ++k) advance_one(k);
    }
    if (failure) std::rethrow_exception(failure);
}

void integrate(TrajectoryEnsemble& ens, const std::vector<VelocityFrame>& frames, ExecMode mode,
               int node_patience) {
    if (frames.size() < 2) throw ValidationError("integrate: need at least two frames");
    ens.record(frames.front().t);
    for (size_t i = 0; i + 1 < frames.size(); ++i) {
        advance_ensemble(ens, frames[i], frames[i + 1], mode, node_patience);
        ens.record(frames[i + 1].t);
    }
}

double ks_statistic(std::vector<double> samples, const LinearMarginal& model) {
    if (samples.empty()) throw TooFewSamples("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = model.cdf(samples[i]);
        d = std::max(d, std::abs((i + 1) / n - f));
        d = std::max(d, std::abs(f - i / n));
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw TooFewSamples("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

double equivariance_statistic(const TrajectoryEnsemble& ens, const SpinorGridState& state,
                              const Eigen::Matrix2d& state_to_ep) {
    if (ens.size() < 1000)
        throw TooFewSamples("equivariance_statistic: need >= 1000 trajectories, have " +
                            std::to_string(ens.size()));
    std::vector<double> se(ens.size()), sp(ens.size());
    for (int k = 0; k < ens.size(); ++k) {
        const auto ep = ens.ep_of(k);
        se[k] = ep[0];
        sp[k] = ep[1];
    }
    const LinearMarginal me =
        project_linear_combination(state, state_to_ep(0, 0), state_to_ep(0, 1));
    const LinearMarginal mp =
        project_linear_combination(state, state_to_ep(1, 0), state_to_ep(1, 1));
    return std::max(ks_statistic(std::move(se), me), ks_statistic(std::move(sp), mp));
}

namespace {

CoordinateDeflection deflection_stats(const std::vector<double>& initial,
                                      const std::vector<double>& final_,
                                      const std::vector<int>& branch) {
    const int n = static_cast<int>(initial.size());
    CoordinateDeflection out;
    double sum = 0.0, sum2 = 0.0, sum_neg = 0.0, sum_pos = 0.0;
    int n_neg = 0, n_pos = 0;
    for (int k = 0; k < n; ++k) {
        const double d = final_[k] - initial[k];
        sum += d;
        sum2 += d * d;
        if (branch[k] < 0) {
            sum_neg += d;
            ++n_neg;
        } else {
            sum_pos += d;
            ++n_pos;
        }
    }
    out.mean_delta = sum / n;
    out.std_delta = std::sqrt(std::max(0.0, sum2 / n - out.mean_delta * out.mean_delta));
    out.mean_delta_branch_neg = n_neg ? sum_neg / n_neg : 0.0;
    out.mean_delta_branch_pos = n_pos ? sum_pos / n_pos : 0.0;
    return out;
}

}  // namespace

DeflectionReport subsystem_deflection(const TrajectoryEnsemble& ens,
                                      const LinearStructureMap& map) {
    if (map.dim() != 2) throw DimensionMismatch("subsystem_deflection: map must be 2x2");
    if (ens.times.size() < 2)
        throw ValidationError("subsystem_deflection: ensemble has no filled series");
    const int n = ens.size();
    const size_t last = ens.times.size() - 1;

    auto row = [&](const std::vector<double>& series, size_t t) {
        return std::vector<double>(series.begin() + t * n, series.begin() + (t + 1) * n);
    };
    const auto ze0 = row(ens.ze, 0), ze1 = row(ens.ze, last);
    const auto zp0 = row(ens.zp, 0), zp1 = row(ens.zp, last);

    const Eigen::Matrix2d A = map.coord_matrix;
    std::vector<double> zcm0(n), zcm1(n), rho0(n), rho1(n);
    std::vector<int> branch(n);
    DeflectionReport rep;
    for (int k = 0; k < n; ++k) {
        zcm0[k] = A(0, 0) * ze0[k] + A(0, 1) * zp0[k];
        zcm1[k] = A(0, 0) * ze1[k] + A(0, 1) * zp1[k];
        rho0[k] = A(1, 0) * ze0[k] + A(1, 1) * zp0[k];
        rho1[k] = A(1, 0) * ze1[k] + A(1, 1) * zp1[k];
        branch[k] = zcm1[k] < 0.0 ? -1 : 1;
        (branch[k] < 0 ? rep.n_branch_neg : rep.n_branch_pos)++;
    }
    rep.ze = deflection_stats(ze0, ze1, branch);
    rep.zp = deflection_stats(zp0, zp1, branch);
    rep.zcm = deflection_stats(zcm0, zcm1, branch);
    rep.rho = deflection_stats(rho0, rho1, branch);
    rep.rho_ks_drift = ks_two_sample(rho0, rho1);
    return rep;
}

}  // namespace qstruct
