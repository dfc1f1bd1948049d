#pragma once

// Scale-space fields phi(x, rho) = f * g(., rho) of sampled signals,
// computed with Fourier multipliers on a zero-padded grid, plus the direct
// convolution oracle, the fractional derivative limit and the axiom checks.
//
// Rows of a field are indexed by rho (increasing), columns by x.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fracscale/config.hpp"
#include "fracscale/error.hpp"
#include "fracscale/fft.hpp"
#include "fracscale/kernels.hpp"
#include "fracscale/parallel.hpp"
#include "fracscale/signal.hpp"

namespace fracscale {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    bool empty() const { return data.empty(); }

    double max_abs() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, std::abs(v));
        return m;
    }
};

// --- grids ------------------------------------------------------------------

struct ScaleGrid {
    std::vector<double> rho;
};

inline void validate(const ScaleGrid& grid) {
    if (grid.rho.empty()) throw input_error("scale grid has no rho values");
    for (std::size_t i = 0; i < grid.rho.size(); ++i) {
        if (!(grid.rho[i] > 0.0) || !std::isfinite(grid.rho[i])) throw input_error("scale grid: rho must be > 0");
        if (i > 0 && !(grid.rho[i] > grid.rho[i - 1])) throw input_error("scale grid: rho must be strictly increasing");
    }
}

inline ScaleGrid geometric_grid(double rho_min, double rho_max, std::size_t count) {
    if (!(rho_min > 0.0) || !(rho_max > rho_min) || !std::isfinite(rho_max)) {
        throw input_error("scale grid needs 0 < rho_min < rho_max (got " + format_double(rho_min) + ", " +
                          format_double(rho_max) + ")");
    }
    if (count < 2) throw input_error("scale grid needs at least 2 rows");
    ScaleGrid g;
    g.rho.resize(count);
    const double ratio = std::log(rho_max / rho_min);
    for (std::size_t i = 0; i < count; ++i) {
        g.rho[i] = rho_min * std::exp(ratio * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    g.rho.front() = rho_min;
    g.rho.back() = rho_max;
    return g;
}

// Band of bandwidths the sampling can resolve: from a few periods across the
// window up to half the Nyquist frequency.
inline std::pair<double, double> default_rho_range(const Signal& s) {
    const double n = static_cast<double>(s.size());
    return {4.0 * 2.0 * std::numbers::pi / (n * s.dx), 0.5 * std::numbers::pi / s.dx};
}

inline ScaleGrid default_grid(const Signal& s, std::size_t count = 64) {
    const auto [lo, hi] = default_rho_range(s);
    return geometric_grid(lo, hi, count);
}

// Position of the signal inside the zero-padded transform buffer. The
// samples occupy [offset, offset + n_signal), centred in the buffer.
struct PaddedLayout {
    std::size_t n_fft = 0;
    std::size_t offset = 0;
    std::size_t n_signal = 0;
    double dx = 1.0;
    double x_first = 0.0; // x of buffer index 0

    double x(std::size_t j) const { return x_first + dx * static_cast<double>(j); }
};

inline PaddedLayout padded_layout(const Signal& s, std::size_t padding_factor = 2) {
    if (padding_factor < 2) throw input_error("padding factor must be at least 2");
    PaddedLayout l;
    l.n_signal = s.size();
    l.n_fft = next_power_of_two(padding_factor * s.size());
    l.offset = (l.n_fft - l.n_signal) / 2;
    l.dx = s.dx;
    l.x_first = s.x0 - s.dx * static_cast<double>(l.offset);
    return l;
}

// Forward transform of the padded signal, shared read-only by all rows.
struct SignalSpectrum {
    PaddedLayout layout;
    std::vector<complex> bins;
    std::vector<double> omega;
};

inline SignalSpectrum signal_spectrum(const Signal& s, std::size_t padding_factor = 2) {
    validate(s);
    SignalSpectrum out;
    out.layout = padded_layout(s, padding_factor);
    const std::size_t n = out.layout.n_fft;
    FftWorkspace ws(n);
    for (std::size_t j = 0; j < n; ++j) ws[j] = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) ws[out.layout.offset + i] = s.samples[i];
    ws.forward();
    out.bins.assign(ws.data(), ws.data() + n);
    out.omega.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.omega[k] = bin_frequency(k, n, s.dx);
    return out;
}

namespace detail {

// Inverse transform of spectrum * m(omega). At the Nyquist bin only the real
// part of m is applied: the bin is its own mirror image, so an odd (imaginary)
// response there has no real-valued counterpart.
template <class Fn>
void filter_into(const SignalSpectrum& spec, Fn&& m, FftWorkspace& ws, double* out) {
    const std::size_t n = spec.layout.n_fft;
    // The spectrum is Hermitian only to rounding relative to its largest bin,
    // so the imaginary residue is bounded by max|bin| * mean|m|, which can
    // exceed the output itself when m keeps only near-empty bins.
    double max_bin = 0.0;
    double sum_m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        complex mk = m(spec.omega[k]);
        if (2 * k == n) mk = complex(mk.real(), 0.0);
        ws[k] = spec.bins[k] * mk;
        max_bin = std::max(max_bin, std::abs(spec.bins[k]));
        sum_m += std::abs(mk);
    }
    ws.backward();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double rounding_scale = max_bin * sum_m * inv_n;
    double max_re = 0.0;
    double max_im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const complex v = ws[j] * inv_n;
        out[j] = v.real();
        max_re = std::max(max_re, std::abs(v.real()));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    if (max_im > std::max(1e-9 * max_re, 1e-12 * rounding_scale) && max_im > std::numeric_limits<double>::min()) {
        throw convergence_error("spectral filter left an imaginary residue of " + format_double(max_im) +
                                " (real part max " + format_double(max_re) + ")");
    }
}

} // namespace detail

// phi(., rho) on the padded grid of `padded_layout(signal, padding_factor)`.
template <SpectralMultiplier M>
std::vector<double> convolve_freq_with(const Signal& signal, const M& mult, double rho, std::size_t padding_factor = 2) {
    validate_rho(rho);
    const SignalSpectrum spec = signal_spectrum(signal, padding_factor);
    FftWorkspace ws(spec.layout.n_fft);
    std::vector<double> out(spec.layout.n_fft);
    detail::filter_into(spec, [&](double w) { return mult.value(w, rho); }, ws, out.data());
    return out;
}

inline std::vector<double> convolve_freq(const Signal& signal, const KernelSpec& kernel, double rho,
                                         std::size_t padding_factor = 2) {
    validate(kernel);
    return convolve_freq_with(signal, FamilyMultiplier{kernel}, rho, padding_factor);
}

// --- direct convolution --------------------------------------------------------

struct DirectOptions {
    std::size_t padding_factor = 2;
    double rel_tol = 1e-12;
    // Largest kernel support, in samples, that will be evaluated.
    std::size_t max_radius_samples = std::size_t{1} << 22;
};

// Trapezoid-rule convolution sum_i f_i k(x_j - x_i) dx on the same padded
// grid as convolve_freq, with k the spatial kernel whose exact transform is
// the multiplier (see spectral_equivalent). The kernel is truncated where
// its envelope drops below rel_tol of the peak.
inline std::vector<double> convolve_direct(const Signal& signal, const KernelSpec& kernel, double rho,
                                           const DirectOptions& opt = {}) {
    validate(signal);
    validate(kernel);
    validate_rho(rho);
    const PaddedLayout layout = padded_layout(signal, opt.padding_factor);
    const KernelSpec equivalent = spectral_equivalent(kernel);
    const double radius = kernel_truncation_radius(equivalent, rho, opt.rel_tol);
    const double radius_samples_d = std::ceil(radius / signal.dx);
    const std::size_t span = layout.n_fft;
    std::size_t radius_samples = span;
    if (radius_samples_d < static_cast<double>(span)) radius_samples = static_cast<std::size_t>(radius_samples_d);
    if (radius_samples_d > static_cast<double>(opt.max_radius_samples) && span > opt.max_radius_samples) {
        throw convergence_error("convolve_direct: kernel support of " + format_double(radius_samples_d) +
                                " samples exceeds the cap of " + std::to_string(opt.max_radius_samples));
    }
    const KernelEvaluator g(equivalent, rho);
    // taps[d + R] = g(d dx) for lattice differences |d| <= R
    const long long R = static_cast<long long>(radius_samples);
    std::vector<double> taps(static_cast<std::size_t>(2 * R + 1));
    for (long long d = -R; d <= R; ++d) taps[static_cast<std::size_t>(d + R)] = g(static_cast<double>(d) * signal.dx);

    std::vector<double> out(layout.n_fft, 0.0);
    const long long n_sig = static_cast<long long>(signal.size());
    const long long off = static_cast<long long>(layout.offset);
    for (long long j = 0; j < static_cast<long long>(layout.n_fft); ++j) {
        const long long i_lo = std::max<long long>(0, j - off - R);
        const long long i_hi = std::min<long long>(n_sig - 1, j - off + R);
        double acc = 0.0;
        for (long long i = i_lo; i <= i_hi; ++i) {
            acc += signal.samples[static_cast<std::size_t>(i)] * taps[static_cast<std::size_t>(j - off - i + R)];
        }
        out[static_cast<std::size_t>(j)] = acc * signal.dx;
    }
    return out;
}

// --- fields -------------------------------------------------------------------

struct FieldOptions {
    bool with_derivatives = false;
    std::size_t padding_factor = 2;
    // Extra padded-grid columns kept on each side of the signal window.
    std::size_t x_margin = 0;
    unsigned threads = 1;
};

struct ScaleSpaceField {
    Matrix phi;
    Matrix phi_x;
    Matrix phi_xx;
    Matrix phi_rho;
    bool has_derivatives = false;

    std::vector<double> x;
    ScaleGrid grid;
    PaddedLayout layout;
    std::size_t first_column = 0; // padded index of column 0
    // Columns [signal_begin, signal_end) lie over the sampled window.
    std::size_t signal_begin = 0;
    std::size_t signal_end = 0;

    KernelSpec spec;
    bool family_kernel = true;
    std::string multiplier_name = "family";
    Signal source;

    std::size_t rows() const { return phi.rows; }
    std::size_t cols() const { return phi.cols; }
    double dx() const { return layout.dx; }
};

template <SpectralMultiplier M>
ScaleSpaceField build_field_with(const Signal& signal, const M& mult, const ScaleGrid& grid, const FieldOptions& opt = {}) {
    validate(grid);
    const SignalSpectrum spectrum = signal_spectrum(signal, opt.padding_factor);
    const PaddedLayout& layout = spectrum.layout;

    ScaleSpaceField field;
    field.grid = grid;
    field.layout = layout;
    field.source = signal;
    field.has_derivatives = opt.with_derivatives;
    const std::size_t margin = std::min(opt.x_margin, layout.offset);
    field.first_column = layout.offset - margin;
    const std::size_t cols = signal.size() + 2 * margin;
    field.signal_begin = margin;
    field.signal_end = margin + signal.size();
    field.x.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) field.x[c] = layout.x(field.first_column + c);

    const std::size_t rows = grid.rho.size();
    field.phi = Matrix(rows, cols);
    if (opt.with_derivatives) {
        field.phi_x = Matrix(rows, cols);
        field.phi_xx = Matrix(rows, cols);
        field.phi_rho = Matrix(rows, cols);
    }

    // Workers claim rows; every row is written by exactly one task.
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(rows)));
    std::atomic<std::size_t> next{0};
    parallel_for(workers, workers, [&](std::size_t) {
        FftWorkspace ws(layout.n_fft);
        std::vector<double> buf(layout.n_fft);
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= rows) return;
            const double rho = grid.rho[r];
            auto store = [&](Matrix& target) {
                std::copy(buf.begin() + static_cast<std::ptrdiff_t>(field.first_column),
                          buf.begin() + static_cast<std::ptrdiff_t>(field.first_column + cols), target.row(r));
            };
            detail::filter_into(spectrum, [&](double w) { return complex(mult.value(w, rho)); }, ws, buf.data());
            store(field.phi);
            if (!opt.with_derivatives) continue;
            detail::filter_into(spectrum, [&](double w) { return complex(0.0, w) * complex(mult.value(w, rho)); }, ws,
                                buf.data());
            store(field.phi_x);
            detail::filter_into(spectrum, [&](double w) { return -w * w * complex(mult.value(w, rho)); }, ws,
                                buf.data());
            store(field.phi_xx);
            detail::filter_into(spectrum, [&](double w) { return complex(mult.d_rho(w, rho)); }, ws, buf.data());
            store(field.phi_rho);
        }
    });
    return field;
}

inline ScaleSpaceField build_field(const Signal& signal, const KernelSpec& kernel, const ScaleGrid& grid,
                                   const FieldOptions& opt = {}) {
    validate(kernel);
    ScaleSpaceField field = build_field_with(signal, FamilyMultiplier{kernel}, grid, opt);
    field.spec = kernel;
    return field;
}

// --- fractional derivative -----------------------------------------------------

struct FractionalOptions {
    std::size_t padding_factor = 2;
    // Fraction of |omega|^(2p)-weighted spectral energy in the top octave
    // above which the result is flagged as unreliable.
    double slow_decay_threshold = 1e-3;
};

struct FractionalDerivative {
    std::vector<double> values; // padded grid
    PaddedLayout layout;
    double top_octave_fraction = 0.0;
    bool slow_decay = false;
};

// f^theta_p: the multiplier with the Gaussian factor removed, i.e. |omega|^p
// (even) or i sign(omega) |omega|^p (odd).
inline FractionalDerivative fractional_derivative(const Signal& signal, double p, Parity parity,
                                                  const FractionalOptions& opt = {}) {
    specfun::validate(ProfileOrder{p, parity});
    const SignalSpectrum spectrum = signal_spectrum(signal, opt.padding_factor);
    auto m = [&](double w) -> complex {
        const double radial = p == 0.0 ? 1.0 : (w == 0.0 ? 0.0 : std::pow(std::abs(w), p));
        if (parity == Parity::even) return {radial, 0.0};
        const double sgn = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        return {0.0, sgn * radial};
    };
    FractionalDerivative out;
    out.layout = spectrum.layout;
    out.values.resize(spectrum.layout.n_fft);
    FftWorkspace ws(spectrum.layout.n_fft);
    detail::filter_into(spectrum, m, ws, out.values.data());

    const double nyquist = std::numbers::pi / signal.dx;
    double total = 0.0;
    double top = 0.0;
    for (std::size_t k = 0; k < spectrum.bins.size(); ++k) {
        const double e = std::norm(spectrum.bins[k] * m(spectrum.omega[k]));
        total += e;
        if (std::abs(spectrum.omega[k]) >= 0.5 * nyquist) top += e;
    }
    out.top_octave_fraction = total > 0.0 ? top / total : 0.0;
    out.slow_decay = out.top_octave_fraction > opt.slow_decay_threshold;
    return out;
}

// --- axiom checks -------------------------------------------------------------

struct GridPoint {
    std::size_t row = 0;
    std::size_t col = 0;
    double phi_rho = 0.0;
    double phi_xx = 0.0;
};

struct CausalityReport {
    double tau = 0.0;
    std::size_t points_checked = 0;
    std::size_t weak_points_checked = 0;
    std::vector<GridPoint> strong_violations;
    // Weak variant: points between columns where phi_x changes sign, values
    // interpolated linearly to the crossing; `col` is the left column.
    std::vector<GridPoint> weak_violations;

    bool ok() const { return strong_violations.empty() && weak_violations.empty(); }
};

// phi_rho * phi_xx < 0 must hold wherever either factor exceeds the noise
// floor tau = noise_factor * max|phi_xx|.
inline CausalityReport check_causality(const ScaleSpaceField& field, double noise_factor = 1e-8) {
    if (!field.has_derivatives) throw input_error("check_causality: field was built without derivatives");
    CausalityReport rep;
    rep.tau = noise_factor * field.phi_xx.max_abs();
    auto violates = [&](double pr, double pxx) {
        if (!(std::max(std::abs(pr), std::abs(pxx)) > rep.tau)) return false;
        return !(pr * pxx < 0.0);
    };
    for (std::size_t r = 0; r < field.rows(); ++r) {
        for (std::size_t c = 0; c < field.cols(); ++c) {
            ++rep.points_checked;
            const double pr = field.phi_rho(r, c);
            const double pxx = field.phi_xx(r, c);
            if (violates(pr, pxx)) rep.strong_violations.push_back({r, c, pr, pxx});
        }
        for (std::size_t c = 0; c + 1 < field.cols(); ++c) {
            const double a = field.phi_x(r, c);
            const double b = field.phi_x(r, c + 1);
            if (!((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))) continue;
            ++rep.weak_points_checked;
            const double t = a / (a - b);
            const double pr = (1.0 - t) * field.phi_rho(r, c) + t * field.phi_rho(r, c + 1);
            const double pxx = (1.0 - t) * field.phi_xx(r, c) + t * field.phi_xx(r, c + 1);
            if (violates(pr, pxx)) rep.weak_violations.push_back({r, c, pr, pxx});
        }
    }
    return rep;
}

struct HeatReport {
    double max_residual = 0.0;
    double max_phi_xx = 0.0;
    double relative() const { return max_phi_xx > 0.0 ? max_residual / max_phi_xx : max_residual; }
};

// max |phi_xx + rho^3 phi_rho| over the signal window; zero for unnormalised
// family kernels with a = 1.
inline HeatReport check_heat_identity(const ScaleSpaceField& field) {
    if (!field.has_derivatives) throw input_error("check_heat_identity: field was built without derivatives");
    HeatReport rep;
    for (std::size_t r = 0; r < field.rows(); ++r) {
        const double rho3 = std::pow(field.grid.rho[r], 3);
        for (std::size_t c = field.signal_begin; c < field.signal_end; ++c) {
            rep.max_residual = std::max(rep.max_residual, std::abs(field.phi_xx(r, c) + rho3 * field.phi_rho(r, c)));
            rep.max_phi_xx = std::max(rep.max_phi_xx, std::abs(field.phi_xx(r, c)));
        }
    }
    return rep;
}

// View of a field in the scale parameter sigma = 1/rho:
// Psi(x, sigma) = phi(x, 1/sigma), Psi_sigma = -rho^2 phi_rho.
class PsiView {
public:
    explicit PsiView(const ScaleSpaceField& field) : field_(&field) {}

    double sigma(std::size_t row) const { return 1.0 / field_->grid.rho[row]; }
    double psi(std::size_t row, std::size_t col) const { return field_->phi(row, col); }
    double psi_xx(std::size_t row, std::size_t col) const { return field_->phi_xx(row, col); }
    double psi_sigma(std::size_t row, std::size_t col) const {
        const double rho = field_->grid.rho[row];
        return -rho * rho * field_->phi_rho(row, col);
    }

    // max |sigma Psi_xx - Psi_sigma| / max |sigma Psi_xx| over the window.
    double diffusion_residual() const {
        if (!field_->has_derivatives) throw input_error("PsiView: field was built without derivatives");
        double num = 0.0;
        double den = 0.0;
        for (std::size_t r = 0; r < field_->rows(); ++r) {
            for (std::size_t c = field_->signal_begin; c < field_->signal_end; ++c) {
                const double lhs = sigma(r) * psi_xx(r, c);
                num = std::max(num, std::abs(lhs - psi_sigma(r, c)));
                den = std::max(den, std::abs(lhs));
            }
        }
        return den > 0.0 ? num / den : num;
    }

private:
    const ScaleSpaceField* field_;
};

struct LocalizationBox {
    bool empty = true;
    double x_min = 0.0, x_max = 0.0;
    double rho_min = 0.0, rho_max = 0.0;
    // True when the super-level set reaches the edge of the stored field.
    bool touches_boundary = false;
};

// Bounding box of {|phi| >= rel * max|phi|}.
inline LocalizationBox localization_box(const ScaleSpaceField& field, double rel = 1e-3) {
    LocalizationBox box;
    const double eps = rel * field.phi.max_abs();
    if (!(eps > 0.0)) return box;
    std::size_t r_lo = field.rows(), r_hi = 0, c_lo = field.cols(), c_hi = 0;
    for (std::size_t r = 0; r < field.rows(); ++r) {
        for (std::size_t c = 0; c < field.cols(); ++c) {
            if (std::abs(field.phi(r, c)) < eps) continue;
            r_lo = std::min(r_lo, r);
            r_hi = std::max(r_hi, r);
            c_lo = std::min(c_lo, c);
            c_hi = std::max(c_hi, c);
        }
    }
    box.empty = false;
    box.x_min = field.x[c_lo];
    box.x_max = field.x[c_hi];
    box.rho_min = field.grid.rho[r_lo];
    box.rho_max = field.grid.rho[r_hi];
    box.touches_boundary = c_lo == 0 || c_hi + 1 == field.cols() || r_hi + 1 == field.rows();
    return box;
}

// --- export -----------------------------------------------------------------

namespace detail {
inline void write_matrix(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write '" + path + "'");
    for (double v : m.data) {
        const double le = to_little_endian(v);
        out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
    if (!out) throw input_error("write failed for '" + path + "'");
}
} // namespace detail

// Writes <prefix>.phi.bin (and .phi_x/.phi_xx/.phi_rho.bin with derivatives),
// row-major little-endian doubles, plus the key=value sidecar <prefix>.meta.
// Returns the paths written.
inline std::vector<std::string> write_field(const ScaleSpaceField& field, const std::string& prefix) {
    std::vector<std::string> written;
    auto emit = [&](const Matrix& m, const std::string& name) {
        const std::string path = prefix + "." + name + ".bin";
        detail::write_matrix(m, path);
        written.push_back(path);
    };
    emit(field.phi, "phi");
    if (field.has_derivatives) {
        emit(field.phi_x, "phi_x");
        emit(field.phi_xx, "phi_xx");
        emit(field.phi_rho, "phi_rho");
    }
    const std::string meta_path = prefix + ".meta";
    std::ofstream meta(meta_path);
    if (!meta) throw input_error("cannot write '" + meta_path + "'");
    meta << "format=f64le row-major, rows=rho, cols=x\n";
    meta << "rows=" << field.rows() << "\ncols=" << field.cols() << "\n";
    meta << "x_first=" << format_double(field.x.empty() ? 0.0 : field.x.front()) << "\n";
    meta << "dx=" << format_double(field.dx()) << "\n";
    meta << "signal_begin=" << field.signal_begin << "\nsignal_end=" << field.signal_end << "\n";
    meta << "n_fft=" << field.layout.n_fft << "\n";
    meta << "multiplier=" << field.multiplier_name << "\n";
    meta << "matrices=phi" << (field.has_derivatives ? ",phi_x,phi_xx,phi_rho" : "") << "\n";
    meta << "rho=";
    for (std::size_t i = 0; i < field.grid.rho.size(); ++i) meta << (i ? "," : "") << format_double(field.grid.rho[i]);
    meta << "\n";
    meta << to_record(field.spec);
    if (!meta) throw input_error("write failed for '" + meta_path + "'");
    written.push_back(meta_path);
    return written;
}

} // namespace fracscale
