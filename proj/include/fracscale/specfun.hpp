#pragma once

// Kummer's confluent hypergeometric function M(a,b,z) and the even/odd
// profile functions built from it:
//
//   Lambda^e_p(x) = M((p+1)/2, 1/2, -x^2/2) / sqrt(2 pi)
//   Lambda^o_p(x) = x M((p+2)/2, 3/2, -x^2/2) / sqrt(2 pi)
//
// Lambda^e_p and Lambda^o_p are, up to normalisation, the p-th fractional
// derivatives of the unit Gaussian.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fracscale/error.hpp"

namespace fracscale::specfun {

struct KummerArgs {
    double a = 0.0;
    double b = 1.0;
    double z = 0.0;
};

enum class Parity { even, odd };

inline const char* to_string(Parity parity) { return parity == Parity::even ? "even" : "odd"; }

struct ProfileOrder {
    double p = 0.0;
    Parity parity = Parity::even;
};

struct SeriesOptions {
    double tol = 1e-15;
    int max_terms = 10000;
};

struct ProfileOptions {
    SeriesOptions series{};
    // |z| = x^2/2 at which the profile switches to the asymptotic expansion.
    double crossover = 30.0;
};

enum class AsymptoticTerms {
    leading, // Gamma(b)/Gamma(b-a) * (-z)^(-a) only
    full     // leading term times the optimally truncated correction series
};

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;

inline bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

// 1/Gamma(x), zero at the poles of Gamma.
inline double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

namespace detail {

// Sum of sum_n (a)_n/(b)_n y^n/n! for y >= 0, rescaled on the fly so that the
// partial sums never overflow. Returns the sum as mantissa * exp(log_scale).
struct ScaledSum {
    double mantissa = 0.0;
    double log_scale = 0.0;
};

inline ScaledSum hypergeometric_1f1_series(double a, double b, double y, const SeriesOptions& opt) {
    constexpr double rescale_threshold = 1e280;
    const double rescale_log = std::log(rescale_threshold);

    double sum = 1.0;
    double term = 1.0;
    double log_scale = 0.0;
    for (int n = 0;; ++n) {
        if (n >= opt.max_terms) {
            throw convergence_error("kummer_m: series did not converge within " +
                                    std::to_string(opt.max_terms) + " terms (a=" + std::to_string(a) +
                                    ", b=" + std::to_string(b) + ", y=" + std::to_string(y) + ")");
        }
        const double ratio = (a + n) / (b + n) * y / (n + 1);
        term *= ratio;
        sum += term;
        if (term == 0.0) break; // terminating series: a is a nonpositive integer
        if (std::abs(ratio) < 1.0 && std::abs(term) <= opt.tol * std::abs(sum)) break;
        if (std::abs(sum) > rescale_threshold || std::abs(term) > rescale_threshold) {
            sum /= rescale_threshold;
            term /= rescale_threshold;
            log_scale += rescale_log;
        }
    }
    return {sum, log_scale};
}

} // namespace detail

inline void validate(const KummerArgs& args) {
    if (is_nonpositive_integer(args.b)) {
        throw domain_error("kummer_m: b = " + std::to_string(args.b) + " is a nonpositive integer");
    }
    if (!std::isfinite(args.a) || !std::isfinite(args.b) || !std::isfinite(args.z)) {
        throw domain_error("kummer_m: non-finite argument");
    }
}

// M(a,b,z) by its power series. Negative arguments go through the Kummer
// transformation M(a,b,z) = e^z M(b-a,b,-z), whose terms do not alternate.
inline double kummer_m(const KummerArgs& args, double tol = 1e-15, int max_terms = 10000) {
    validate(args);
    if (!(tol > 0.0)) throw domain_error("kummer_m: tol must be positive");
    if (args.z == 0.0) return 1.0;
    const SeriesOptions opt{tol, max_terms};
    if (args.z > 0.0) {
        const auto s = detail::hypergeometric_1f1_series(args.a, args.b, args.z, opt);
        return s.mantissa * std::exp(s.log_scale);
    }
    const double y = -args.z;
    const auto s = detail::hypergeometric_1f1_series(args.b - args.a, args.b, y, opt);
    return s.mantissa * std::exp(s.log_scale - y);
}

struct AsymptoticValue {
    double value = 0.0;
    // Magnitude of the first omitted term, relative to |value|.
    double truncation = 0.0;
    // Size of the exponentially small e^z branch relative to |value|; the
    // algebraic expansion alone is only accurate when this is negligible.
    double exponential_branch = 0.0;
};

inline AsymptoticValue kummer_m_asymptotic_detail(const KummerArgs& args, AsymptoticTerms terms) {
    validate(args);
    const double a = args.a;
    const double b = args.b;
    if (!(args.z < 0.0)) throw domain_error("kummer_m_asymptotic: requires z < 0");
    if (is_nonpositive_integer(b - a)) {
        throw domain_error("kummer_m_asymptotic: b - a = " + std::to_string(b - a) +
                           " is a nonpositive integer, Gamma(b - a) is undefined");
    }
    const double y = -args.z;
    const double leading = std::tgamma(b) * rgamma(b - a) * std::pow(y, -a);

    double sum = 1.0;
    double term = 1.0;
    double omitted = 0.0;
    if (terms == AsymptoticTerms::full) {
        for (int s = 0; s < 200; ++s) {
            const double next = term * (a + s) * (1.0 + a - b + s) / ((s + 1) * y);
            if (next == 0.0) break;
            if (std::abs(next) >= std::abs(term)) { // divergent tail, truncate here
                omitted = std::abs(next);
                break;
            }
            term = next;
            sum += term;
            omitted = std::abs(term);
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
    } else {
        omitted = std::abs(a * (1.0 + a - b) / y);
    }
    AsymptoticValue out;
    out.value = leading * sum;
    out.truncation = omitted / std::abs(sum);
    if (!is_nonpositive_integer(a) && out.value != 0.0) {
        const double branch = std::abs(std::tgamma(b) * rgamma(a)) * std::exp(-y) * std::pow(y, a - b);
        out.exponential_branch = branch / std::abs(out.value);
    }
    return out;
}

// Large-|z| expansion of M(a,b,z) for z < 0. `crossover` is the smallest |z|
// accepted.
inline double kummer_m_asymptotic(const KummerArgs& args, AsymptoticTerms terms = AsymptoticTerms::full,
                                  double crossover = 30.0) {
    if (!(args.z < 0.0) || -args.z < crossover) {
        throw domain_error("kummer_m_asymptotic: requires z <= -" + std::to_string(crossover));
    }
    return kummer_m_asymptotic_detail(args, terms).value;
}

inline void validate(const ProfileOrder& order) {
    if (!std::isfinite(order.p)) throw domain_error("profile order p must be finite");
    if (order.parity == Parity::even && order.p < 0.0) {
        throw domain_error("even profile requires p >= 0 (got " + std::to_string(order.p) + ")");
    }
    if (order.parity == Parity::odd && !(order.p > 0.0)) {
        throw domain_error("odd profile requires p > 0 (got " + std::to_string(order.p) + ")");
    }
}

inline KummerArgs profile_kummer_args(const ProfileOrder& order, double x) {
    if (order.parity == Parity::even) return {(order.p + 1.0) / 2.0, 0.5, -0.5 * x * x};
    return {(order.p + 2.0) / 2.0, 1.5, -0.5 * x * x};
}

namespace detail {

inline double profile_unchecked(const ProfileOrder& order, double x, const ProfileOptions& opt) {
    if (!std::isfinite(x)) throw domain_error("lambda_profile: x must be finite");
    const KummerArgs args = profile_kummer_args(order, x);
    const double y = -args.z;
    double m = 0.0;
    bool done = false;
    if (y >= opt.crossover && !is_nonpositive_integer(args.b - args.a)) {
        const auto asym = kummer_m_asymptotic_detail(args, AsymptoticTerms::full);
        if (asym.truncation < 1e-16 && asym.exponential_branch < 1e-17) {
            m = asym.value;
            done = true;
        }
    }
    if (!done) m = kummer_m(args, opt.series.tol, opt.series.max_terms);
    return order.parity == Parity::even ? inv_sqrt_2pi * m : inv_sqrt_2pi * x * m;
}

} // namespace detail

// Lambda^e_p(x) or Lambda^o_p(x).
inline double lambda_profile(const ProfileOrder& order, double x, const ProfileOptions& opt = {}) {
    validate(order);
    return detail::profile_unchecked(order, x, opt);
}

// First derivative through the closed recurrences
//   d/dx Lambda^e_p = -(p+1) Lambda^o_{p+1},   d/dx Lambda^o_p = Lambda^e_{p+1}.
inline double lambda_derivative(const ProfileOrder& order, double x, const ProfileOptions& opt = {}) {
    validate(order);
    if (order.parity == Parity::even) {
        return -(order.p + 1.0) * detail::profile_unchecked({order.p + 1.0, Parity::odd}, x, opt);
    }
    return detail::profile_unchecked({order.p + 1.0, Parity::even}, x, opt);
}

// Constant C with Lambda(x) ~ C |x|^(-p-1) (times sign(x) for the odd
// profile) as |x| -> infinity. Zero when the profile decays like a Gaussian
// (p an even integer for the even profile, an odd integer for the odd one).
inline double profile_tail_constant(const ProfileOrder& order) {
    validate(order);
    if (order.parity == Parity::even) return std::pow(2.0, order.p / 2.0) * rgamma(-order.p / 2.0);
    return std::pow(2.0, (order.p - 1.0) / 2.0) * rgamma((1.0 - order.p) / 2.0);
}

} // namespace fracscale::specfun
