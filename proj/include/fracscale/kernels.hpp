#pragma once

// The scale-space kernel family
//
//   g(x, rho) = alpha rho^(p+1) Lambda^e_p(a x rho) + beta rho^(p+1) Lambda^o_p(a x rho)
//
// and its Fourier multipliers. The spatial kernel is the one above; the
// multiplier follows the unit-DC convention
//
//   m(omega, rho) = [alpha + i beta sign(omega)] |omega/a|^p exp(-omega^2 / (2 (a rho)^2)),
//
// which equals the exact transform of `spectral_equivalent(spec)`. The two
// differ by the per-parity constants returned by `profile_spectrum_constant`.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fracscale/config.hpp"
#include "fracscale/error.hpp"
#include "fracscale/specfun.hpp"

namespace fracscale {

using specfun::Parity;
using specfun::ProfileOrder;
using complex = std::complex<double>;

struct KernelSpec {
    double p = 0.0;
    double a = 1.0;
    double alpha = 1.0;
    double beta = 0.0;
    bool normalize = false;

    bool operator==(const KernelSpec&) const = default;
};

inline void validate(const KernelSpec& spec) {
    if (!std::isfinite(spec.p) || spec.p < 0.0) {
        throw domain_error("kernel order p must be >= 0 (got " + format_double(spec.p) + ")");
    }
    if (!std::isfinite(spec.a) || spec.a == 0.0) throw domain_error("kernel gauge a must be finite and nonzero");
    if (!std::isfinite(spec.alpha) || !std::isfinite(spec.beta)) {
        throw domain_error("kernel mixing coefficients must be finite");
    }
    if (spec.alpha == 0.0 && spec.beta == 0.0) throw domain_error("kernel needs (alpha, beta) != (0, 0)");
    if (spec.beta != 0.0 && !(spec.p > 0.0)) {
        throw domain_error("odd kernel component (beta != 0) requires p > 0");
    }
}

inline void validate_rho(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw domain_error("bandwidth rho must be positive and finite (got " + format_double(rho) + ")");
    }
}

// --- plain-text record ------------------------------------------------------

inline std::string to_record(const KernelSpec& spec) {
    std::string out;
    out += "p=" + format_double(spec.p) + "\n";
    out += "a=" + format_double(spec.a) + "\n";
    out += "alpha=" + format_double(spec.alpha) + "\n";
    out += "beta=" + format_double(spec.beta) + "\n";
    out += std::string("normalize=") + (spec.normalize ? "true" : "false") + "\n";
    return out;
}

// Reads the kernel keys from `kv`; keys that are absent keep their defaults.
inline KernelSpec kernel_spec_from(const KeyValues& kv, KernelSpec base = {}) {
    if (auto it = kv.find("p"); it != kv.end()) base.p = parse_double(it->second, "p");
    if (auto it = kv.find("a"); it != kv.end()) base.a = parse_double(it->second, "a");
    if (auto it = kv.find("alpha"); it != kv.end()) base.alpha = parse_double(it->second, "alpha");
    if (auto it = kv.find("beta"); it != kv.end()) base.beta = parse_double(it->second, "beta");
    if (auto it = kv.find("normalize"); it != kv.end()) base.normalize = parse_bool(it->second, "normalize");
    return base;
}

inline KernelSpec parse_kernel_record(std::string_view text) {
    const KeyValues kv = parse_key_values(text, "kernel record");
    for (const auto& [key, value] : kv) {
        if (key != "p" && key != "a" && key != "alpha" && key != "beta" && key != "normalize") {
            throw input_error("kernel record: unknown key '" + key + "'");
        }
    }
    KernelSpec spec = kernel_spec_from(kv);
    validate(spec);
    return spec;
}

// --- profile transforms -------------------------------------------------------

// Constant c with F[Lambda^e_p](nu) = c |nu|^p e^(-nu^2/2), or, for the odd
// profile, F[Lambda^o_p](nu) = -i c sign(nu) |nu|^p e^(-nu^2/2). Forward
// transform convention: F[f](nu) = integral f(x) e^(-i nu x) dx.
inline double profile_spectrum_constant(const ProfileOrder& order) {
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    if (order.parity == Parity::even) return sqrt_pi * std::pow(2.0, -order.p / 2.0) / std::tgamma((order.p + 1.0) / 2.0);
    return sqrt_pi / std::numbers::sqrt2 * std::pow(2.0, -order.p / 2.0) / std::tgamma(order.p / 2.0 + 1.0);
}

inline complex profile_spectrum(const ProfileOrder& order, double nu) {
    const double shape = (order.p == 0.0 ? 1.0 : std::pow(std::abs(nu), order.p)) * std::exp(-0.5 * nu * nu);
    const double c = profile_spectrum_constant(order);
    if (order.parity == Parity::even) return {c * shape, 0.0};
    const double sgn = nu > 0.0 ? 1.0 : (nu < 0.0 ? -1.0 : 0.0);
    return {0.0, -c * sgn * shape};
}

// Kernel whose exact Fourier transform is `kernel_multiplier(spec, ., .)`
// (both unnormalised).
inline KernelSpec spectral_equivalent(const KernelSpec& spec) {
    validate(spec);
    KernelSpec out = spec;
    out.alpha = spec.alpha * std::abs(spec.a) / profile_spectrum_constant({spec.p, Parity::even});
    out.beta = spec.beta == 0.0 ? 0.0 : -spec.beta * spec.a / profile_spectrum_constant({spec.p, Parity::odd});
    return out;
}

// --- spatial kernel ---------------------------------------------------------

namespace detail {

// alpha Lambda^e_p(u) + beta Lambda^o_p(u)
inline double mixed_profile(const KernelSpec& spec, double u) {
    double v = 0.0;
    if (spec.alpha != 0.0) v += spec.alpha * specfun::lambda_profile({spec.p, Parity::even}, u);
    if (spec.beta != 0.0) v += spec.beta * specfun::lambda_profile({spec.p, Parity::odd}, u);
    return v;
}

// integral over the real line of (alpha Lambda^e_p(u) + beta Lambda^o_p(u))^2 du
inline double profile_energy(const KernelSpec& spec) {
    using boost::math::quadrature::exp_sinh;
    using boost::math::quadrature::gauss_kronrod;
    // Cross terms alpha*beta*Lambda^e*Lambda^o are odd and integrate to zero.
    auto even_part = [&](double u) {
        double v = 0.0;
        if (spec.alpha != 0.0) {
            const double e = specfun::lambda_profile({spec.p, Parity::even}, u);
            v += spec.alpha * spec.alpha * e * e;
        }
        if (spec.beta != 0.0) {
            const double o = specfun::lambda_profile({spec.p, Parity::odd}, u);
            v += spec.beta * spec.beta * o * o;
        }
        return v;
    };
    constexpr double split = 12.0;
    double err = 0.0;
    const double core = gauss_kronrod<double, 61>::integrate(even_part, 0.0, split, 15, 1e-13, &err);
    exp_sinh<double> tail_rule;
    double tail_err = 0.0;
    const double tail = tail_rule.integrate(even_part, split, std::numeric_limits<double>::infinity(), 1e-13, &tail_err);
    const double total = 2.0 * (core + tail);
    if (!(total > 0.0) || !std::isfinite(total) || 2.0 * (err + tail_err) > 1e-9 * total) {
        throw convergence_error("l2_norm: spatial quadrature did not converge");
    }
    return total;
}

} // namespace detail

// Spatial L2 norm sqrt(integral |g(x, rho)|^2 dx) of the unnormalised kernel,
// by adaptive quadrature.
inline double l2_norm(const KernelSpec& spec, double rho) {
    validate(spec);
    validate_rho(rho);
    const double energy = detail::profile_energy(spec);
    return std::sqrt(energy * std::pow(rho, 2.0 * spec.p + 1.0) / std::abs(spec.a));
}

// The same norm through Parseval, integrating the exact transform of the
// kernel over frequency. Independent of `l2_norm`.
inline double l2_norm_spectral(const KernelSpec& spec, double rho) {
    validate(spec);
    validate_rho(rho);
    using boost::math::quadrature::gauss_kronrod;
    const double ce = profile_spectrum_constant({spec.p, Parity::even});
    const double co = spec.p > 0.0 ? profile_spectrum_constant({spec.p, Parity::odd}) : 0.0;
    const double weight = spec.alpha * spec.alpha * ce * ce + spec.beta * spec.beta * co * co;
    auto density = [&](double nu) {
        return (spec.p == 0.0 ? 1.0 : std::pow(nu, 2.0 * spec.p)) * std::exp(-nu * nu);
    };
    double err = 0.0;
    const double half = gauss_kronrod<double, 61>::integrate(density, 0.0, std::numeric_limits<double>::infinity(),
                                                              15, 1e-14, &err);
    const double profile = weight * 2.0 * half / (2.0 * std::numbers::pi);
    return std::sqrt(profile * std::pow(rho, 2.0 * spec.p + 1.0) / std::abs(spec.a));
}

// Kernel bound to one bandwidth; the normalisation constant is computed once.
class KernelEvaluator {
public:
    KernelEvaluator(const KernelSpec& spec, double rho) : spec_(spec), rho_(rho) {
        validate(spec_);
        validate_rho(rho_);
        scale_ = std::pow(rho_, spec_.p + 1.0);
        if (spec_.normalize) scale_ /= l2_norm(spec_, rho_);
    }

    double operator()(double x) const { return scale_ * detail::mixed_profile(spec_, spec_.a * x * rho_); }

    const KernelSpec& spec() const { return spec_; }
    double rho() const { return rho_; }

private:
    KernelSpec spec_;
    double rho_;
    double scale_ = 1.0;
};

inline double kernel_value(const KernelSpec& spec, double x, double rho) { return KernelEvaluator(spec, rho)(x); }

// Radius beyond which |g(x, rho)| stays below rel_tol times its peak.
inline double kernel_truncation_radius(const KernelSpec& spec, double rho, double rel_tol = 1e-12) {
    validate(spec);
    validate_rho(rho);
    auto h = [&](double u) { return std::abs(detail::mixed_profile(spec, u)); };
    double peak = 0.0;
    for (int i = 0; i <= 500; ++i) peak = std::max(peak, h(0.01 * i));
    double tail_c = 0.0;
    if (spec.alpha != 0.0) tail_c += std::abs(spec.alpha * specfun::profile_tail_constant({spec.p, Parity::even}));
    if (spec.beta != 0.0) tail_c += std::abs(spec.beta * specfun::profile_tail_constant({spec.p, Parity::odd}));

    const double threshold = rel_tol * peak;
    // Last sample above threshold on a fine scan; Gaussian-type profiles
    // vanish well before u = 60.
    double u_last = 0.0;
    for (int i = 0; i <= 6000; ++i) {
        const double u = 0.01 * i;
        if (h(u) > threshold) u_last = u;
    }
    double u0 = u_last + 0.01;
    if (tail_c > 0.0) {
        // Algebraic envelope, padded by 5% for the O(u^-2) correction.
        const double algebraic = std::pow(1.05 * tail_c / threshold, 1.0 / (spec.p + 1.0));
        u0 = std::max(u0, algebraic);
    }
    return u0 / (std::abs(spec.a) * rho);
}

// --- multipliers ---------------------------------------------------------------

template <class M>
concept SpectralMultiplier = requires(const M& m, double omega, double rho) {
    { m.value(omega, rho) } -> std::convertible_to<complex>;
    { m.d_rho(omega, rho) } -> std::convertible_to<complex>;
    { m.odd_part_present() } -> std::convertible_to<bool>;
};

namespace detail {

inline double multiplier_norm(const KernelSpec& spec, double rho) {
    const double energy = (spec.alpha * spec.alpha + spec.beta * spec.beta) * std::abs(spec.a) *
                          std::pow(rho, 2.0 * spec.p + 1.0) * std::tgamma(spec.p + 0.5) / (2.0 * std::numbers::pi);
    return std::sqrt(energy);
}

} // namespace detail

// Frequency response of the kernel family (unit-DC convention, see top of
// file). With `normalize` set it is divided by its L2 norm (1/(2 pi)
// integral |m|^2 d omega = 1).
inline complex kernel_multiplier(const KernelSpec& spec, double omega, double rho) {
    validate(spec);
    validate_rho(rho);
    const double ar = spec.a * rho;
    const double gauss = std::exp(-omega * omega / (2.0 * ar * ar));
    double radial = 1.0;
    if (spec.p > 0.0) radial = omega == 0.0 ? 0.0 : std::pow(std::abs(omega / spec.a), spec.p);
    const double sgn = omega > 0.0 ? 1.0 : (omega < 0.0 ? -1.0 : 0.0);
    complex m = complex(spec.alpha, spec.beta * sgn) * (radial * gauss);
    if (spec.normalize) m /= detail::multiplier_norm(spec, rho);
    return m;
}

// d/d rho of kernel_multiplier.
inline complex kernel_multiplier_d_rho(const KernelSpec& spec, double omega, double rho) {
    const complex m = kernel_multiplier(spec, omega, rho);
    const double a2 = spec.a * spec.a;
    double factor = omega * omega / (a2 * rho * rho * rho);
    if (spec.normalize) factor -= (spec.p + 0.5) / rho;
    return m * factor;
}

struct FamilyMultiplier {
    KernelSpec spec;

    complex value(double omega, double rho) const { return kernel_multiplier(spec, omega, rho); }
    complex d_rho(double omega, double rho) const { return kernel_multiplier_d_rho(spec, omega, rho); }
    bool odd_part_present() const { return spec.beta != 0.0; }
};

// Box kernel (rho/2) 1{|x| < 1/rho}; not a member of the family, used as a
// negative control for the causality check.
struct BoxcarMultiplier {
    complex value(double omega, double rho) const {
        const double u = omega / rho;
        return {u == 0.0 ? 1.0 : std::sin(u) / u, 0.0};
    }
    complex d_rho(double omega, double rho) const {
        const double u = omega / rho;
        if (u == 0.0) return {0.0, 0.0};
        const double dsinc = (u * std::cos(u) - std::sin(u)) / (u * u);
        return {dsinc * (-omega / (rho * rho)), 0.0};
    }
    bool odd_part_present() const { return false; }
};

static_assert(SpectralMultiplier<FamilyMultiplier>);
static_assert(SpectralMultiplier<BoxcarMultiplier>);

} // namespace fracscale
