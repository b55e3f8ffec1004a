#pragma once

#include <complex>
#include <vector>

#include "qstruct/parallel.hpp"

namespace qstruct {

// Interpolating cubic B-spline on a uniform 2-D grid (row-major, second index
// fastest). Construction prefilters the samples into spline coefficients via
// a tridiagonal solve per line; coefficients beyond the edges are zero, which
// is the right end condition for fields that vanish at the boundary.
// Evaluation is the usual 4x4 tensor-product kernel and returns 0 well
// outside the grid.
class BicubicSpline2D {
public:
    BicubicSpline2D(const std::complex<double>* data, int n1, int n2,
                    ExecMode mode = ExecMode::Serial);

    // u, v in grid units: u = 0 is the first node, u = n1-1 the last.
    std::complex<double> eval(double u, double v) const;

    int n1() const { return n1_; }
    int n2() const { return n2_; }

private:
    int n1_, n2_;
    std::vector<std::complex<double>> coeff_;

    std::complex<double> at(int i, int j) const {
        if (i < 0 || i >= n1_ || j < 0 || j >= n2_) return {0.0, 0.0};
        return coeff_[static_cast<size_t>(i) * n2_ + j];
    }
};

}  // namespace qstruct
