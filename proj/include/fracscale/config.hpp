#pragma once

// Flat key=value text records. One entry per line, '#' starts a comment.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "fracscale/error.hpp"

namespace fracscale {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline KeyValues parse_key_values(std::string_view text, std::string_view origin = "<text>") {
    KeyValues out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw input_error(std::string(origin) + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                              body + "'");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw input_error(std::string(origin) + ":" + std::to_string(lineno) + ": empty key");
        out[std::move(key)] = std::move(value);
    }
    return out;
}

inline KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str(), path);
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const std::string t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw input_error("invalid number for " + std::string(what) + ": '" + t + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view text, std::string_view what) {
    long long v = 0;
    const std::string t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw input_error("invalid integer for " + std::string(what) + ": '" + t + "'");
    }
    return v;
}

inline bool parse_bool(std::string_view text, std::string_view what) {
    const std::string t = trim(text);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw input_error("invalid boolean for " + std::string(what) + ": '" + t + "'");
}

} // namespace fracscale
