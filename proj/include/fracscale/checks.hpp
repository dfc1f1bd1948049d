#pragma once

// Numerical self-checks shared by the `verify` command and the acceptance
// harness.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "fracscale/fft.hpp"
#include "fracscale/kernels.hpp"
#include "fracscale/scalespace.hpp"

namespace fracscale {

struct FtShapeOptions {
    double half_width = 40.0;
    std::size_t samples = 4096;
    double omega_lo = 0.2;
    double omega_hi = 4.0;
    double fit_omega = 1.0;
};

struct FtShapeReport {
    double p = 0.0;
    // Windowed FFT plus the analytic contribution of |x| > half_width and the
    // Euler-Maclaurin endpoint terms.
    double max_rel_error = 0.0;
    // Windowed FFT alone.
    double raw_max_rel_error = 0.0;
    double fit_constant = 0.0;
    std::size_t bins_checked = 0;
};

namespace detail {

// k-th derivative of Lambda^e_p, k <= 3, from the closed recurrences.
inline double even_profile_derivative(double p, int k, double x) {
    using specfun::lambda_profile;
    switch (k) {
    case 0: return lambda_profile({p, Parity::even}, x);
    case 1: return -(p + 1.0) * lambda_profile({p + 1.0, Parity::odd}, x);
    case 2: return -(p + 1.0) * lambda_profile({p + 2.0, Parity::even}, x);
    case 3: return (p + 1.0) * (p + 3.0) * lambda_profile({p + 3.0, Parity::odd}, x);
    default: throw domain_error("even_profile_derivative: order up to 3");
    }
}

// Corrections turning the trapezoid sum over [-L, L] into the integral over
// the real line, for g = Lambda^e_p and the kernel e^{-i omega x}.
class FtCorrection {
public:
    FtCorrection(double p, double L, double h) : p_(p), L_(L), h_(h) {
        for (int k = 0; k <= 3; ++k) {
            d_plus_[k] = even_profile_derivative(p, k, L);
            d_minus_[k] = (k % 2 == 0 ? 1.0 : -1.0) * d_plus_[k];
        }
    }

    complex operator()(double omega) const {
        const complex i(0.0, 1.0);
        auto f1 = [&](const double* d, double x) { return (d[1] - i * omega * d[0]) * std::exp(-i * omega * x); };
        auto f3 = [&](const double* d, double x) {
            return (d[3] - 3.0 * i * omega * d[2] - 3.0 * omega * omega * d[1] + i * omega * omega * omega * d[0]) *
                   std::exp(-i * omega * x);
        };
        const complex em = -h_ * h_ / 12.0 * (f1(d_plus_, L_) - f1(d_minus_, -L_)) +
                           std::pow(h_, 4) / 720.0 * (f3(d_plus_, L_) - f3(d_minus_, -L_));
        return em + tail(omega);
    }

private:
    // 2 * integral_L^inf Lambda^e_p(x) cos(omega x) dx
    double tail(double omega) const {
        if (specfun::profile_tail_constant({p_, Parity::even}) == 0.0) {
            // Gaussian-type decay: negligible beyond the window.
            return 0.0;
        }
        auto g = [&](double t) { return specfun::lambda_profile({p_, Parity::even}, t + L_); };
        boost::math::quadrature::ooura_fourier_cos<double> cos_rule(1e-12);
        boost::math::quadrature::ooura_fourier_sin<double> sin_rule(1e-12);
        const double c = cos_rule.integrate(g, omega).first;
        const double s = sin_rule.integrate(g, omega).first;
        return 2.0 * (c * std::cos(omega * L_) - s * std::sin(omega * L_));
    }

    double p_, L_, h_;
    double d_plus_[4];
    double d_minus_[4];
};

} // namespace detail

// FFT of Lambda^e_p = g^e_p(., rho = 1) sampled on [-L, L) against
// c |omega|^p e^{-omega^2/2}, c fitted at fit_omega.
inline FtShapeReport ft_shape_check(double p, const FtShapeOptions& opt = {}) {
    const std::size_t n = opt.samples;
    const double L = opt.half_width;
    const double h = 2.0 * L / static_cast<double>(n);
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = specfun::lambda_profile({p, Parity::even}, -L + h * static_cast<double>(j));

    FftWorkspace ws(n);
    for (std::size_t j = 0; j < n; ++j) ws[j] = g[j];
    ws.forward();

    const detail::FtCorrection corr(p, L, h);
    auto shape = [&](double w) { return std::pow(std::abs(w), p) * std::exp(-0.5 * w * w); };

    // Trapezoid sum at the (off-bin) fit frequency.
    complex t_fit = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double x = -L + h * static_cast<double>(j);
        const double gx = j < n ? g[j] : g[0];
        const double wgt = (j == 0 || j == n) ? 0.5 : 1.0;
        t_fit += wgt * gx * std::exp(complex(0.0, -opt.fit_omega * x));
    }
    t_fit *= h;
    const double c_raw = t_fit.real() / shape(opt.fit_omega);
    const double c_cor = (t_fit + corr(opt.fit_omega)).real() / shape(opt.fit_omega);

    FtShapeReport rep;
    rep.p = p;
    rep.fit_constant = c_cor;
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double w = bin_frequency(k, n, h);
        if (w < opt.omega_lo || w > opt.omega_hi) continue;
        // Shift the transform origin from x = -L to x = 0.
        const complex t = h * ws[k] * std::exp(complex(0.0, w * L));
        const double model = shape(w);
        rep.raw_max_rel_error = std::max(rep.raw_max_rel_error, std::abs(t - c_raw * model) / std::abs(c_raw * model));
        const complex tc = t + corr(w);
        rep.max_rel_error = std::max(rep.max_rel_error, std::abs(tc - c_cor * model) / std::abs(c_cor * model));
        ++rep.bins_checked;
    }
    return rep;
}

struct ConvolutionCheck {
    double p = 0.0;
    double rho = 0.0;
    double rel_diff = 0.0;
};

// L-infinity difference of convolve_freq and convolve_direct relative to
// max|convolve_freq|, over the padded grid.
inline ConvolutionCheck convolution_oracle_check(const Signal& s, const KernelSpec& k, double rho,
                                                 std::size_t padding_factor = 2) {
    const auto a = convolve_freq(s, k, rho, padding_factor);
    DirectOptions d;
    d.padding_factor = padding_factor;
    const auto b = convolve_direct(s, k, rho, d);
    double m = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return {k.p, rho, m > 0.0 ? diff / m : diff};
}

// Sign changes along a row, ignoring values within floor of zero.
inline std::size_t sign_changes(const double* row, std::size_t n, double floor) {
    std::size_t count = 0;
    int prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::abs(row[i]) > floor)) continue;
        const int s = row[i] > 0.0 ? 1 : -1;
        if (prev != 0 && s != prev) ++count;
        prev = s;
    }
    return count;
}

} // namespace fracscale
