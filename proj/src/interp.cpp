#include "qstruct/interp.hpp"

#include <algorithm>
#include <cmath>

#include "qstruct/errors.hpp"

namespace qstruct {

namespace {

// Solves (c[j-1] + 4 c[j] + c[j+1]) / 6 = f[j] with zero virtual coefficients
// beyond both ends. Thomas algorithm specialized to the constant-band system.
void prefilter_line(std::complex<double>* f, int n, long stride,
                    double* scratch_diag, std::complex<double>* scratch_rhs) {
    for (int j = 0; j < n; ++j) scratch_rhs[j] = 6.0 * f[j * stride];
    scratch_diag[0] = 4.0;
    for (int j = 1; j < n; ++j) {
        const double m = 1.0 / scratch_diag[j - 1];
        scratch_diag[j] = 4.0 - m;
        scratch_rhs[j] -= m * scratch_rhs[j - 1];
    }
    scratch_rhs[n - 1] /= scratch_diag[n - 1];
    for (int j = n - 2; j >= 0; --j)
        scratch_rhs[j] = (scratch_rhs[j] - scratch_rhs[j + 1]) / scratch_diag[j];
    for (int j = 0; j < n; ++j) f[j * stride] = scratch_rhs[j];
}

inline void bspline_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
    w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    w[3] = t3 / 6.0;
}

}  // namespace

BicubicSpline2D::BicubicSpline2D(const std::complex<double>* data, int n1, int n2, ExecMode mode)
    : n1_(n1), n2_(n2), coeff_(data, data + static_cast<size_t>(n1) * n2) {
    if (n1 < 4 || n2 < 4) throw ValidationError("BicubicSpline2D: need at least 4x4 samples");

    if (mode == ExecMode::OpenMP) {
#pragma omp parallel
        {
            std::vector<double> diag(static_cast<size_t>(std::max(n1, n2)));
            std::vector<std::complex<double>> rhs(diag.size());
#pragma omp for schedule(static)
            for (int i = 0; i < n1; ++i)
                prefilter_line(coeff_.data() + static_cast<size_t>(i) * n2, n2, 1, diag.data(),
                               rhs.data());
#pragma omp for schedule(static)
            for (int j = 0; j < n2; ++j)
                prefilter_line(coeff_.data() + j, n1, n2, diag.data(), rhs.data());
        }
    } else {
        std::vector<double> diag(static_cast<size_t>(std::max(n1, n2)));
        std::vector<std::complex<double>> rhs(diag.size());
        for (int i = 0; i < n1; ++i)
            prefilter_line(coeff_.data() + static_cast<size_t>(i) * n2, n2, 1, diag.data(),
                           rhs.data());
        for (int j = 0; j < n2; ++j)
            prefilter_line(coeff_.data() + j, n1, n2, diag.data(), rhs.data());
    }
}

std::complex<double> BicubicSpline2D::eval(double u, double v) const {
    if (u < -2.0 || u > n1_ + 1.0 || v < -2.0 || v > n2_ + 1.0) return {0.0, 0.0};
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    double wu[4], wv[4];
    bspline_weights(u - i0, wu);
    bspline_weights(v - j0, wv);
    std::complex<double> acc{0.0, 0.0};
    for (int a = 0; a < 4; ++a) {
        std::complex<double> row{0.0, 0.0};
        for (int b = 0; b < 4; ++b) row += wv[b] * at(i0 - 1 + a, j0 - 1 + b);
        acc += wu[a] * row;
    }
    return acc;
}

}  // namespace qstruct
