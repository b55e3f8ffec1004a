#pragma once

#include <complex>
#include <memory>

#include "qstruct/parallel.hpp"

namespace qstruct {

// In-place 2-D complex FFT over an n1 x n2 row-major array (index i2 fastest).
// One strided 1-D plan per axis is created up front and executed through
// FFTW's new-array interface row by row / column by column. The serial and
// OpenMP paths run the identical plan on the identical data slices, so their
// outputs are bit-identical.
//
// Construct from a single thread; execution is thread-safe and const.
class Spectral2D {
public:
    Spectral2D(int n1, int n2);
    ~Spectral2D();
    Spectral2D(const Spectral2D&) = delete;
    Spectral2D& operator=(const Spectral2D&) = delete;

    void forward(std::complex<double>* data, ExecMode mode = ExecMode::Serial) const;
    // Inverse includes the 1/(n1*n2) normalization.
    void inverse(std::complex<double>* data, ExecMode mode = ExecMode::Serial) const;

    int n1() const;
    int n2() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qstruct
