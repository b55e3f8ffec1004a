#pragma once

#include <numbers>
#include <string>

#include "qstruct/errors.hpp"

namespace qstruct {

// Uniform 1-D grid on the half-open interval [min, max). Point i sits at
// min + i*spacing; the right endpoint is excluded because the spectral
// propagator treats the domain as periodic. n must be a power of two.
struct Grid1D {
    double min = 0.0;
    double max = 0.0;
    int n = 0;

    Grid1D() = default;
    Grid1D(double min_, double max_, int n_) : min(min_), max(max_), n(n_) { validate(); }

    double length() const { return max - min; }
    double spacing() const { return (max - min) / n; }
    double point(int i) const { return min + i * spacing(); }

    // Momentum associated with FFT bin j (standard wraparound ordering).
    double wavenumber(int j) const {
        const double dk = 2.0 * std::numbers::pi / length();
        return dk * (j < n / 2 ? j : j - n);
    }

    bool operator==(const Grid1D&) const = default;

    void validate() const {
        if (n < 2 || (n & (n - 1)) != 0)
            throw ValidationError("Grid1D: point count " + std::to_string(n) +
                                  " is not a power of two >= 2");
        if (!(max > min)) throw ValidationError("Grid1D: max must exceed min");
    }
};

}  // namespace qstruct
