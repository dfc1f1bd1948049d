#pragma once

// Synthetic test signals: sums of Gaussian bumps (with closed-form
// derivatives) and Gaussian-windowed cosines.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fracscale/config.hpp"
#include "fracscale/error.hpp"
#include "fracscale/signal.hpp"

namespace fracscale {

struct Bump {
    double center = 0.0;
    double amplitude = 1.0;
    double width = 1.0;
};

struct BumpSum {
    std::vector<Bump> bumps;

    // derivative order 0, 1 or 2
    double operator()(double x, int order = 0) const {
        double v = 0.0;
        for (const auto& b : bumps) {
            const double u = (x - b.center) / b.width;
            const double e = b.amplitude * std::exp(-0.5 * u * u);
            switch (order) {
            case 0: v += e; break;
            case 1: v += -u / b.width * e; break;
            case 2: v += (u * u - 1.0) / (b.width * b.width) * e; break;
            default: throw domain_error("BumpSum: derivative order must be 0, 1 or 2");
            }
        }
        return v;
    }

    BumpSum mirrored() const {
        BumpSum m = *this;
        for (auto& b : m.bumps) b.center = -b.center;
        return m;
    }
};

struct SamplingSpec {
    std::size_t n = 1024;
    double dx = 0.05;
};

inline Signal sample(const BumpSum& f, const SamplingSpec& s = {}, int order = 0) {
    return sample_centered([&](double x) { return f(x, order); }, s.n, s.dx);
}

// Text form: one "center amplitude width" triple per line.
inline std::string to_text(const BumpSum& f) {
    std::string out;
    for (const auto& b : f.bumps) {
        out += format_double(b.center) + ' ' + format_double(b.amplitude) + ' ' + format_double(b.width) + '\n';
    }
    return out;
}

struct RandomBumpOptions {
    std::size_t count = 5;
    double center_span = 10.0; // centres uniform in [-span, span]
    double width = 1.0;
    double amp_min = 0.5;
    double amp_max = 1.5;
    bool random_sign = true;
};

// The generator is std::mt19937_64; values are drawn with explicit
// arithmetic so the sequence does not depend on the library's
// distribution implementations.
class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    bool coin() { return (eng_() >> 63) != 0; }

private:
    std::mt19937_64 eng_;
};

inline BumpSum random_bumps(FixtureRng& rng, const RandomBumpOptions& o = {}) {
    BumpSum f;
    for (std::size_t i = 0; i < o.count; ++i) {
        Bump b;
        b.center = rng.uniform(-o.center_span, o.center_span);
        b.amplitude = rng.uniform(o.amp_min, o.amp_max);
        if (o.random_sign && rng.coin()) b.amplitude = -b.amplitude;
        b.width = o.width;
        f.bumps.push_back(b);
    }
    return f;
}

inline BumpSum random_bumps(std::uint64_t seed, const RandomBumpOptions& o = {}) {
    FixtureRng rng(seed);
    return random_bumps(rng, o);
}

// cos(omega x + phase) exp(-x^2 / (2 w^2)), nearly free of DC for omega w >= 6.
inline Signal wave_packet(double omega, double width, double phase = 0.0, const SamplingSpec& s = {}) {
    return sample_centered(
        [&](double x) { return std::cos(omega * x + phase) * std::exp(-0.5 * x * x / (width * width)); }, s.n, s.dx);
}

// A sum of wave packets with different carriers; smooth and band-limited.
inline Signal smooth_fixture(const SamplingSpec& s = {}) {
    return sample_centered(
        [](double x) {
            const double a = std::cos(2.0 * x) * std::exp(-0.5 * (x + 4.0) * (x + 4.0) / 9.0);
            const double b = 0.6 * std::sin(3.1 * x) * std::exp(-0.5 * (x - 5.0) * (x - 5.0) / 6.25);
            return a + b;
        },
        s.n, s.dx);
}

// Ten signals: six random bump sums and four wave-packet mixtures.
inline std::vector<Signal> standard_corpus(std::uint64_t seed = 1, const SamplingSpec& s = {}) {
    std::vector<Signal> out;
    FixtureRng rng(seed);
    for (int i = 0; i < 6; ++i) {
        RandomBumpOptions o;
        o.count = 3 + static_cast<std::size_t>(i % 4);
        out.push_back(sample(random_bumps(rng, o), s));
    }
    for (int i = 0; i < 4; ++i) {
        const double omega = rng.uniform(1.5, 4.0);
        const double width = rng.uniform(6.0, 9.0) / omega * 1.5;
        const double phase = rng.uniform(0.0, 6.283185307179586);
        out.push_back(wave_packet(omega, width, phase, s));
    }
    return out;
}

} // namespace fracscale
