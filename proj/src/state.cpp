#include "qstruct/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "qstruct/fft.hpp"
#include "qstruct/interp.hpp"

namespace qstruct {

double SpinorGridState::norm2() const {
    double acc = 0.0;
    for (const auto& a : amps) acc += std::norm(a);
    return acc * cell_area();
}

void SpinorGridState::normalize() {
    const double n2 = norm2();
    if (!(n2 > 0.0)) throw NotNormalized("normalize: state has zero norm");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& a : amps) a *= inv;
}

bool SpinorGridState::all_finite() const {
    for (const auto& a : amps)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) return false;
    return true;
}

SpinorGridState gaussian_spin_state(std::array<double, 2> centers, std::array<double, 2> widths,
                                    std::array<double, 2> momenta, std::array<cdouble, 2> spin_amps,
                                    const Grid1D& g1, const Grid1D& g2,
                                    std::string structure_label) {
    if (!(widths[0] > 0.0) || !(widths[1] > 0.0))
        throw ValidationError("gaussian_spin_state: widths must be positive");
    const double spin_norm = std::norm(spin_amps[0]) + std::norm(spin_amps[1]);
    if (std::abs(spin_norm - 1.0) > 1e-9)
        throw ValidationError("gaussian_spin_state: |a_up|^2 + |a_dn|^2 must be 1");
    const Grid1D* grids[2] = {&g1, &g2};
    for (int axis = 0; axis < 2; ++axis) {
        const double margin = 5.0 * widths[axis];
        if (centers[axis] - margin < grids[axis]->min || centers[axis] + margin > grids[axis]->max)
            throw GridTooSmall("gaussian_spin_state: coordinate " + std::to_string(axis + 1) +
                               " needs a 5-sigma margin inside the grid");
    }

    auto packet = [](const Grid1D& g, double c, double sigma, double k) {
        std::vector<cdouble> out(g.n);
        const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
        for (int i = 0; i < g.n; ++i) {
            const double x = g.point(i) - c;
            out[i] = norm * std::exp(-x * x / (4.0 * sigma * sigma)) *
                     std::polar(1.0, k * g.point(i));
        }
        return out;
    };
    const auto p1 = packet(g1, centers[0], widths[0], momenta[0]);
    const auto p2 = packet(g2, centers[1], widths[1], momenta[1]);

    SpinorGridState st(g1, g2, std::move(structure_label));
    for (int s = 0; s < kSpins; ++s)
        for (int i = 0; i < g1.n; ++i)
            for (int j = 0; j < g2.n; ++j) st.at(s, i, j) = spin_amps[s] * p1[i] * p2[j];
    st.normalize();
    return st;
}

SpinorGridState change_structure(const SpinorGridState& s, const LinearStructureMap& map,
                                 const Grid1D& target1, const Grid1D& target2, ExecMode mode,
                                 double loss_tol) {
    if (map.dim() != 2) throw DimensionMismatch("change_structure: map must be 2x2");
    const Eigen::Matrix2d A = map.coord_matrix;
    const Eigen::Matrix2d Ainv = A.inverse();
    const double det_abs = std::abs(A.determinant());

    // Probability-loss accounting: source mass whose image the target grids
    // do not cover is gone for good; fail loudly if it is non-negligible.
    const double area = s.cell_area();
    double lost = 0.0, total = 0.0;
    for (int i = 0; i < s.g1.n; ++i) {
        const double x = s.g1.point(i);
        for (int j = 0; j < s.g2.n; ++j) {
            const double y = s.g2.point(j);
            const double m =
                (std::norm(s.at(0, i, j)) + std::norm(s.at(1, i, j))) * area;
            total += m;
            const double u = A(0, 0) * x + A(0, 1) * y;
            const double v = A(1, 0) * x + A(1, 1) * y;
            if (u < target1.min || u >= target1.max || v < target2.min || v >= target2.max)
                lost += m;
        }
    }
    if (total > 0.0 && lost / total > loss_tol)
        throw SupportEscape("change_structure: lost probability mass " + std::to_string(lost / total) +
                            " exceeds " + std::to_string(loss_tol));

    const double amp_factor = 1.0 / std::sqrt(det_abs);
    const double h1 = s.g1.spacing(), h2 = s.g2.spacing();
    SpinorGridState out(target1, target2, map.label_out_joined());
    for (int sp = 0; sp < kSpins; ++sp) {
        BicubicSpline2D spline(s.amps.data() + s.idx(sp, 0, 0), s.g1.n, s.g2.n, mode);
        auto fill_row = [&](int k) {
            const double u = target1.point(k);
            for (int l = 0; l < target2.n; ++l) {
                const double v = target2.point(l);
                const double x = Ainv(0, 0) * u + Ainv(0, 1) * v;
                const double y = Ainv(1, 0) * u + Ainv(1, 1) * v;
                out.at(sp, k, l) =
                    amp_factor * spline.eval((x - s.g1.min) / h1, (y - s.g2.min) / h2);
            }
        };
        if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
            for (int k = 0; k < target1.n; ++k) fill_row(k);
        } else {
            for (int k = 0; k < target1.n; ++k) fill_row(k);
        }
    }
    return out;
}

std::vector<double> schmidt_spectrum(const SpinorGridState& s, SchmidtSplit split) {
    const int n1 = s.g1.n, n2 = s.g2.n;
    const double w = std::sqrt(s.cell_area());
    Eigen::MatrixXcd m;
    switch (split) {
        case SchmidtSplit::Coord1_vs_Coord2Spin:
            m.resize(n1, static_cast<long>(kSpins) * n2);
            for (int sp = 0; sp < kSpins; ++sp)
                for (int i = 0; i < n1; ++i)
                    for (int j = 0; j < n2; ++j) m(i, sp * n2 + j) = w * s.at(sp, i, j);
            break;
        case SchmidtSplit::Coord1Coord2_vs_Spin:
            m.resize(static_cast<long>(n1) * n2, kSpins);
            for (int sp = 0; sp < kSpins; ++sp)
                for (int i = 0; i < n1; ++i)
                    for (int j = 0; j < n2; ++j) m(static_cast<long>(i) * n2 + j, sp) = w * s.at(sp, i, j);
            break;
        case SchmidtSplit::Coord1Spin_vs_Coord2:
            m.resize(static_cast<long>(kSpins) * n1, n2);
            for (int sp = 0; sp < kSpins; ++sp)
                for (int i = 0; i < n1; ++i)
                    for (int j = 0; j < n2; ++j) m(sp * n1 + i, j) = w * s.at(sp, i, j);
            break;
    }

    // Singular values via the Gram matrix on the smaller side; its
    // eigenvalues are exactly the squared Schmidt coefficients.
    Eigen::MatrixXcd gram;
    if (m.rows() <= m.cols())
        gram = m * m.adjoint();
    else
        gram = m.adjoint() * m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    std::vector<double> sv;
    sv.reserve(gram.rows());
    for (long i = 0; i < gram.rows(); ++i)
        sv.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[i])));
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

double entanglement_entropy(const std::vector<double>& spectrum) {
    double sum2 = 0.0;
    for (double l : spectrum) sum2 += l * l;
    if (std::abs(sum2 - 1.0) > 1e-6)
        throw NotNormalized("entanglement_entropy: sum of squared Schmidt coefficients is " +
                            std::to_string(sum2));
    double ent = 0.0;
    for (double l : spectrum) {
        const double p = l * l;
        if (p > 0.0) ent -= p * std::log(p);
    }
    return ent;
}

std::vector<double> marginal_density(const SpinorGridState& s, int which) {
    if (which != 0 && which != 1) throw ValidationError("marginal_density: which must be 0 or 1");
    const int n_keep = which == 0 ? s.g1.n : s.g2.n;
    const double h_other = which == 0 ? s.g2.spacing() : s.g1.spacing();
    std::vector<double> out(n_keep, 0.0);
    for (int sp = 0; sp < kSpins; ++sp)
        for (int i = 0; i < s.g1.n; ++i)
            for (int j = 0; j < s.g2.n; ++j) out[which == 0 ? i : j] += std::norm(s.at(sp, i, j));
    for (double& v : out) v *= h_other;
    return out;
}

Eigen::MatrixXcd reduced_density_matrix(const SpinorGridState& s, int which) {
    if (which != 0 && which != 1)
        throw ValidationError("reduced_density_matrix: which must be 0 or 1");
    const int n = which == 0 ? s.g1.n : s.g2.n;
    const int n_tr = which == 0 ? s.g2.n : s.g1.n;
    const double h_tr = which == 0 ? s.g2.spacing() : s.g1.spacing();
    const double h_own = which == 0 ? s.g1.spacing() : s.g2.spacing();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    for (int sp = 0; sp < kSpins; ++sp) {
        Eigen::MatrixXcd block(n, n_tr);
        for (int i = 0; i < s.g1.n; ++i)
            for (int j = 0; j < s.g2.n; ++j) {
                if (which == 0)
                    block(i, j) = s.at(sp, i, j);
                else
                    block(j, i) = s.at(sp, i, j);
            }
        rho.noalias() += block * block.adjoint();
    }
    rho *= h_tr * h_own;  // makes trace(rho) = norm^2
    return rho;
}

Eigen::Matrix2cd reduced_spin_matrix(const SpinorGridState& s) {
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < kSpins; ++a)
        for (int b = 0; b < kSpins; ++b) {
            cdouble acc{0.0, 0.0};
            for (int i = 0; i < s.g1.n; ++i)
                for (int j = 0; j < s.g2.n; ++j) acc += s.at(a, i, j) * std::conj(s.at(b, i, j));
            rho(a, b) = acc * s.cell_area();
        }
    return rho;
}

namespace {

void check_density_matrix(const Eigen::MatrixXcd& a, const char* who) {
    if (a.rows() != a.cols()) throw BadDensityMatrix(std::string(who) + ": matrix not square");
    const double herm = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8) throw BadDensityMatrix(std::string(who) + ": matrix not Hermitian");
    if (std::abs(a.trace().real() - 1.0) > 1e-6 || std::abs(a.trace().imag()) > 1e-9)
        throw BadDensityMatrix(std::string(who) + ": trace is not 1");
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& a, const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    Eigen::VectorXd ev = es.eigenvalues();
    for (long i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-9) throw BadDensityMatrix(std::string(who) + ": negative eigenvalue");
        ev[i] = std::sqrt(std::max(0.0, ev[i]));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double reduced_state_fidelity(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw BadDensityMatrix("reduced_state_fidelity: dimension mismatch");
    check_density_matrix(a, "reduced_state_fidelity(a)");
    check_density_matrix(b, "reduced_state_fidelity(b)");
    const Eigen::MatrixXcd sa = psd_sqrt(a, "reduced_state_fidelity(a)");
    Eigen::MatrixXcd m = sa * b * sa;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    double tr = 0.0;
    for (long i = 0; i < es.eigenvalues().size(); ++i)
        tr += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
    return std::min(1.0, tr * tr);
}

cdouble state_overlap(const SpinorGridState& a, const SpinorGridState& b) {
    if (a.g1 != b.g1 || a.g2 != b.g2)
        throw DimensionMismatch("state_overlap: states live on different grids");
    cdouble acc{0.0, 0.0};
    for (size_t i = 0; i < a.amps.size(); ++i) acc += std::conj(a.amps[i]) * b.amps[i];
    return acc * a.cell_area();
}

std::vector<cdouble> spectral_derivative(const SpinorGridState& s, int axis, ExecMode mode) {
    if (axis != 0 && axis != 1) throw ValidationError("spectral_derivative: axis must be 0 or 1");
    Spectral2D fft(s.g1.n, s.g2.n);
    std::vector<cdouble> out(s.amps);
    for (int sp = 0; sp < kSpins; ++sp) {
        cdouble* block = out.data() + s.idx(sp, 0, 0);
        fft.forward(block, mode);
        for (int i = 0; i < s.g1.n; ++i) {
            const double k1 = s.g1.wavenumber(i);
            for (int j = 0; j < s.g2.n; ++j) {
                const double k = axis == 0 ? k1 : s.g2.wavenumber(j);
                block[static_cast<size_t>(i) * s.g2.n + j] *= cdouble(0.0, k);
            }
        }
        fft.inverse(block, mode);
    }
    return out;
}

namespace {

// CDF of the sum of two independent centered uniforms with half-widths p >= q.
double trapezoid_cdf(double z, double p, double q) {
    if (p < q) std::swap(p, q);
    if (p <= 0.0) return z < 0.0 ? 0.0 : 1.0;
    const double s = std::abs(z);
    double tail;  // mass beyond |z|
    if (s >= p + q)
        tail = 0.0;
    else if (s >= p - q)
        tail = (q > 0.0) ? (p + q - s) * (p + q - s) / (8.0 * p * q) : 0.0;
    else
        tail = 0.5 - s / (2.0 * p);
    return z >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace

double LinearMarginal::cdf(double x) const {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    const int nbins = static_cast<int>(bin_mass.size());
    const double u = (x - lo) / (hi - lo) * nbins;
    const int k = std::min(nbins - 1, static_cast<int>(u));
    const double t = u - k;
    return cdf_edges[k] + t * (cdf_edges[k + 1] - cdf_edges[k]);
}

LinearMarginal project_linear_combination(const SpinorGridState& s, double alpha, double beta,
                                          int nbins) {
    if (alpha == 0.0 && beta == 0.0)
        throw ValidationError("project_linear_combination: zero direction");
    const double h1 = s.g1.spacing(), h2 = s.g2.spacing();
    const double p = std::abs(alpha) * h1 * 0.5, q = std::abs(beta) * h2 * 0.5;
    const double smear = p + q;

    double lo = 1e300, hi = -1e300;
    for (double x : {s.g1.min, s.g1.max})
        for (double y : {s.g2.min, s.g2.max}) {
            const double z = alpha * x + beta * y;
            lo = std::min(lo, z - smear);
            hi = std::max(hi, z + smear);
        }

    LinearMarginal out;
    out.lo = lo;
    out.hi = hi;
    out.bin_mass.assign(nbins, 0.0);
    const double bin_w = (hi - lo) / nbins;
    const double area = s.cell_area();

    for (int i = 0; i < s.g1.n; ++i) {
        const double x = s.g1.point(i);
        for (int j = 0; j < s.g2.n; ++j) {
            const double m = (std::norm(s.at(0, i, j)) + std::norm(s.at(1, i, j))) * area;
            if (m == 0.0) continue;
            const double c = alpha * x + beta * s.g2.point(j);
            const int k_lo = std::max(0, static_cast<int>((c - smear - lo) / bin_w));
            const int k_hi = std::min(nbins - 1, static_cast<int>((c + smear - lo) / bin_w));
            double prev = trapezoid_cdf(lo + k_lo * bin_w - c, p, q);
            for (int k = k_lo; k <= k_hi; ++k) {
                const double next = trapezoid_cdf(lo + (k + 1) * bin_w - c, p, q);
                out.bin_mass[k] += m * (next - prev);
                prev = next;
            }
        }
    }

    double total = 0.0;
    for (double v : out.bin_mass) total += v;
    out.cdf_edges.assign(nbins + 1, 0.0);
    double acc = 0.0;
    for (int k = 0; k < nbins; ++k) {
        acc += out.bin_mass[k];
        out.cdf_edges[k + 1] = acc / total;
        out.bin_mass[k] /= total;
    }
    out.cdf_edges[nbins] = 1.0;
    return out;
}

void save_state(const SpinorGridState& s, const std::string& basepath) {
    nlohmann::ordered_json j;
    j["structure_label"] = s.structure_label;
    j["grids"] = {{"q1", {{"min", s.g1.min}, {"max", s.g1.max}, {"n", s.g1.n}}},
                  {"q2", {{"min", s.g2.min}, {"max", s.g2.max}, {"n", s.g2.n}}}};
    std::ofstream jf(basepath + ".json");
    if (!jf) throw IOError("save_state: cannot write " + basepath + ".json");
    jf << j.dump(2) << "\n";

    std::ofstream cf(basepath + ".csv");
    if (!cf) throw IOError("save_state: cannot write " + basepath + ".csv");
    cf << "i1,i2,Re_up,Im_up,Re_dn,Im_dn\n";
    char buf[512];
    for (int i = 0; i < s.g1.n; ++i)
        for (int j2 = 0; j2 < s.g2.n; ++j2) {
            const cdouble u = s.at(0, i, j2), d = s.at(1, i, j2);
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i, j2, u.real(),
                          u.imag(), d.real(), d.imag());
            cf << buf;
        }
    if (!cf) throw IOError("save_state: write failed for " + basepath + ".csv");
}

SpinorGridState load_state(const std::string& basepath) {
    std::ifstream jf(basepath + ".json");
    if (!jf) throw IOError("load_state: cannot read " + basepath + ".json");
    nlohmann::json j;
    try {
        jf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_state: ") + e.what());
    }
    Grid1D g1(j.at("grids").at("q1").at("min"), j.at("grids").at("q1").at("max"),
              j.at("grids").at("q1").at("n"));
    Grid1D g2(j.at("grids").at("q2").at("min"), j.at("grids").at("q2").at("max"),
              j.at("grids").at("q2").at("n"));
    SpinorGridState st(g1, g2, j.at("structure_label").get<std::string>());

    std::ifstream cf(basepath + ".csv");
    if (!cf) throw IOError("load_state: cannot read " + basepath + ".csv");
    std::string line;
    std::getline(cf, line);  // header
    long rows = 0;
    while (std::getline(cf, line)) {
        int i, j2;
        double ru, iu, rd, id;
        if (std::sscanf(line.c_str(), "%d,%d,%lg,%lg,%lg,%lg", &i, &j2, &ru, &iu, &rd, &id) != 6)
            throw ParseError("load_state: bad CSV row: " + line);
        if (i < 0 || i >= g1.n || j2 < 0 || j2 >= g2.n)
            throw ParseError("load_state: index out of range in CSV");
        st.at(0, i, j2) = {ru, iu};
        st.at(1, i, j2) = {rd, id};
        ++rows;
    }
    if (rows != static_cast<long>(g1.n) * g2.n)
        throw ParseError("load_state: expected " + std::to_string(static_cast<long>(g1.n) * g2.n) +
                         " rows, got " + std::to_string(rows));
    return st;
}

}  // namespace qstruct
