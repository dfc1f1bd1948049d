#pragma once

// Hand-built fields with known level sets.

#include <cmath>

#include "fracscale/scalespace.hpp"

namespace synthetic {

// phi(x, rho) sampled on x in [x_lo, x_hi] (cols points) and rho on a
// uniform grid [rho_lo, rho_hi] (rows points, ascending).
template <class F>
fracscale::ScaleSpaceField field(F&& phi, double x_lo = -5.0, double x_hi = 5.0, std::size_t cols = 201,
                                 double rho_lo = 0.5, double rho_hi = 3.0, std::size_t rows = 101) {
    fracscale::ScaleSpaceField f;
    f.phi = fracscale::Matrix(rows, cols);
    f.x.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) f.x[c] = x_lo + (x_hi - x_lo) * static_cast<double>(c) / static_cast<double>(cols - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        f.grid.rho.push_back(rho_lo + (rho_hi - rho_lo) * static_cast<double>(r) / static_cast<double>(rows - 1));
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) f.phi(r, c) = phi(f.x[c], f.grid.rho[r]);
    }
    f.layout.dx = f.x[1] - f.x[0];
    f.signal_begin = 0;
    f.signal_end = cols;
    return f;
}

// Zero set x = x0 +- sqrt(rho - r0): an arch with apex (x0, r0), negative
// inside.
inline double arch(double x, double rho, double x0, double r0) { return (x - x0) * (x - x0) - (rho - r0); }

} // namespace synthetic
