#pragma once

// Uniformly sampled 1-D signals and their file formats.
//
// CSV: one value per line, or "x,y" pairs with uniform x. Lines starting with
// '#' are comments, except that a "# dx=<v> x0=<v>" line sets the sampling of
// single-column files (default dx = 1, x0 = 0).
//
// Raw: the text line "FSIG n=<n> dx=<dx> x0=<x0>\n" followed by n
// little-endian IEEE-754 doubles.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fracscale/config.hpp"
#include "fracscale/error.hpp"

namespace fracscale {

struct Signal {
    std::vector<double> samples;
    double dx = 1.0;
    double x0 = 0.0;

    std::size_t size() const { return samples.size(); }
    double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
    double center() const { return x0 + 0.5 * dx * static_cast<double>(samples.size() - 1); }
};

inline constexpr std::size_t min_signal_length = 8;

inline void validate(const Signal& s) {
    if (s.samples.size() < min_signal_length) {
        throw input_error("signal needs at least " + std::to_string(min_signal_length) + " samples (got " +
                          std::to_string(s.samples.size()) + ")");
    }
    if (!(s.dx > 0.0) || !std::isfinite(s.dx)) throw input_error("signal spacing dx must be positive and finite");
    if (!std::isfinite(s.x0)) throw input_error("signal origin x0 must be finite");
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        if (!std::isfinite(s.samples[i])) throw input_error("signal sample " + std::to_string(i) + " is not finite");
    }
}

template <class F>
Signal sample_function(F&& f, std::size_t n, double dx, double x0) {
    Signal s;
    s.dx = dx;
    s.x0 = x0;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.samples[i] = f(s.x(i));
    return s;
}

// Signal on n points centred at zero.
template <class F>
Signal sample_centered(F&& f, std::size_t n, double dx) {
    return sample_function(f, n, dx, -0.5 * dx * static_cast<double>(n - 1));
}

namespace detail {

inline double to_little_endian(double v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        bits = __builtin_bswap64(bits);
        std::memcpy(&v, &bits, sizeof bits);
        return v;
    }
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open signal file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',' || ch == ';' || ch == '\t') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline Signal parse_raw(const std::string& text, const std::string& path) {
    const auto nl = text.find('\n');
    if (nl == std::string::npos) throw input_error(path + ": raw signal header is not terminated");
    std::istringstream header(text.substr(0, nl));
    std::string magic;
    header >> magic;
    KeyValues kv;
    for (std::string tok; header >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw input_error(path + ": malformed raw header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* key : {"n", "dx", "x0"}) {
        if (!kv.count(key)) throw input_error(path + ": raw header is missing '" + std::string(key) + "'");
    }
    const long long n = parse_integer(kv["n"], "n");
    if (n < 0) throw input_error(path + ": negative sample count");
    Signal s;
    s.dx = parse_double(kv["dx"], "dx");
    s.x0 = parse_double(kv["x0"], "x0");
    const std::size_t bytes = static_cast<std::size_t>(n) * sizeof(double);
    if (text.size() - nl - 1 != bytes) {
        throw input_error(path + ": raw payload has " + std::to_string(text.size() - nl - 1) + " bytes, header says " +
                          std::to_string(bytes));
    }
    s.samples.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        double v;
        std::memcpy(&v, text.data() + nl + 1 + i * sizeof(double), sizeof v);
        s.samples[i] = to_little_endian(v);
    }
    return s;
}

inline Signal parse_csv(const std::string& text, const std::string& path) {
    std::istringstream in(text);
    std::string line;
    std::vector<double> xs;
    std::vector<double> ys;
    Signal s;
    int columns = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(line);
        if (body.empty()) continue;
        if (body[0] == '#') {
            std::istringstream meta(body.substr(1));
            for (std::string tok; meta >> tok;) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                if (key == "dx") s.dx = parse_double(tok.substr(eq + 1), "dx");
                if (key == "x0") s.x0 = parse_double(tok.substr(eq + 1), "x0");
            }
            continue;
        }
        const auto fields = split_fields(body);
        const int here = static_cast<int>(fields.size());
        if (here != 1 && here != 2) {
            throw input_error(path + ":" + std::to_string(lineno) + ": expected 1 or 2 columns");
        }
        if (columns == 0) {
            columns = here;
        } else if (columns != here) {
            throw input_error(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        }
        try {
            if (here == 1) {
                ys.push_back(parse_double(fields[0], "sample"));
            } else {
                xs.push_back(parse_double(fields[0], "x"));
                ys.push_back(parse_double(fields[1], "y"));
            }
        } catch (const input_error& e) {
            if (xs.empty() && ys.empty() && lineno == 1) continue; // header row such as "x,y"
            throw input_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (ys.empty()) throw input_error("signal file '" + path + "' contains no samples");
    s.samples = std::move(ys);
    if (columns == 2 && xs.size() >= 2) {
        s.x0 = xs.front();
        s.dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (std::abs(xs[i] - s.x(i)) > 1e-6 * std::abs(s.dx)) {
                throw input_error(path + ": x column is not uniformly spaced near row " + std::to_string(i + 1));
            }
        }
    }
    return s;
}

} // namespace detail

inline Signal read_signal(const std::string& path) {
    const std::string text = detail::slurp(path);
    if (text.empty()) throw input_error("signal file '" + path + "' is empty");
    Signal s = text.rfind("FSIG", 0) == 0 ? detail::parse_raw(text, path) : detail::parse_csv(text, path);
    try {
        validate(s);
    } catch (const input_error& e) {
        throw input_error("signal file '" + path + "': " + e.what());
    }
    return s;
}

inline void write_signal_csv(const Signal& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << "x,y\n";
    for (std::size_t i = 0; i < s.size(); ++i) out << format_double(s.x(i)) << ',' << format_double(s.samples[i]) << '\n';
    if (!out) throw input_error("write failed for '" + path + "'");
}

inline void write_signal_raw(const Signal& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << "FSIG n=" << s.size() << " dx=" << format_double(s.dx) << " x0=" << format_double(s.x0) << '\n';
    for (double v : s.samples) {
        const double le = detail::to_little_endian(v);
        out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
    if (!out) throw input_error("write failed for '" + path + "'");
}

} // namespace fracscale
