#pragma once

// Trees as a function of the fractional order p: a sweep over a step grid,
// bisection of every step where the canonical encoding changes, and the
// resulting partition of [p_min, p_max] into segments of constant tree.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracscale/contours.hpp"
#include "fracscale/parallel.hpp"
#include "fracscale/scalespace.hpp"
#include "fracscale/trees.hpp"

namespace fracscale {

struct TreeRequest {
    KernelSpec spec;
    ScaleGrid grid;
    double level = 0.0;
    TreeKind kind = TreeKind::tw;
    FieldOptions field;
    ContourOptions contour;
    TreeOptions tree;
};

struct TreeResult {
    ContourSet contours;
    ScaleTree tree;
    std::string encoding;
};

inline TreeResult compute_tree(const Signal& signal, const TreeRequest& req) {
    FieldOptions fo = req.field;
    fo.with_derivatives = false;
    const ScaleSpaceField field = build_field(signal, req.spec, req.grid, fo);
    TreeResult out;
    out.contours = extract_contours(field, req.level, req.contour);
    if (req.kind == TreeKind::tw) {
        out.tree = build_tw(out.contours.contours, req.tree);
    } else {
        out.tree = build_tt(build_nesting(out.contours.contours), &out.contours.contours);
    }
    out.tree.level = req.level;
    out.encoding = canonical_encode(out.tree);
    return out;
}

struct SweepConfig {
    double p_min = 0.5;
    double p_max = 2.15;
    double p_step = 0.01;
    double level = 0.0;
    TreeKind kind = TreeKind::tw;
    double bisection_tol = 1e-3;
    int max_depth = 40;
    unsigned threads = 1;
    // Kernel parameters other than p.
    KernelSpec base{};
    FieldOptions field{};
    ContourOptions contour{};
    TreeOptions tree{};
};

inline void validate(const SweepConfig& c) {
    if (!(c.p_min >= 0.0) || !(c.p_max > c.p_min) || !std::isfinite(c.p_max)) {
        throw input_error("sweep needs 0 <= p_min < p_max");
    }
    if (!(c.p_step > 0.0)) throw input_error("sweep needs p_step > 0");
    if (!(c.bisection_tol > 0.0) || !(c.bisection_tol < c.p_step)) {
        throw input_error("sweep needs 0 < bisection_tol < p_step");
    }
    if (c.max_depth < 1) throw input_error("sweep needs max_depth >= 1");
}

struct Breakpoint {
    double p_lo = 0.0;
    double p_hi = 0.0;
    std::string before;
    std::string after;
    bool resolved = true;   // bracket narrowed to bisection_tol
    bool composite = false; // more than one change inside the coarse step
};

struct Segment {
    double p_lo = 0.0;
    double p_hi = 0.0;
    std::string encoding;
};

struct SweepSample {
    double p = 0.0;
    std::string encoding;
    bool failed = false;
    std::string message; // exception text when failed
};

struct BifurcationReport {
    SweepConfig config;
    std::vector<SweepSample> samples;
    std::vector<Breakpoint> breakpoints;
    std::vector<Segment> segments;
    std::vector<std::string> warnings;
    // Largest apex displacement per unit p between neighbouring samples with
    // the same encoding (|dx|/dp and |d log rho|/dp).
    double max_apex_dx_per_dp = 0.0;
    double max_apex_dlogrho_per_dp = 0.0;
};

namespace detail {

// Failed evaluations are labelled by error category only, so that a run of
// failures with p-dependent messages forms a single segment.
struct Evaluation {
    std::string encoding;
    bool failed = false;
    std::string message;
    std::vector<Point> apexes;
};

inline Evaluation evaluate_at(const Signal& signal, const SweepConfig& cfg, const ScaleGrid& grid, double p) {
    TreeRequest req;
    req.spec = cfg.base;
    req.spec.p = p;
    req.grid = grid;
    req.level = cfg.level;
    req.kind = cfg.kind;
    req.field = cfg.field;
    req.field.threads = 1;
    req.contour = cfg.contour;
    req.tree = cfg.tree;
    Evaluation ev;
    try {
        const TreeResult r = compute_tree(signal, req);
        ev.encoding = r.encoding;
        for (const auto& c : r.contours.contours) ev.apexes.push_back(c.apex);
    } catch (const topology_error& e) {
        ev.encoding = "error: topology";
        ev.message = e.what();
    } catch (const convergence_error& e) {
        ev.encoding = "error: convergence";
        ev.message = e.what();
    } catch (const std::exception& e) {
        ev.encoding = "error: other";
        ev.message = e.what();
    }
    ev.failed = !ev.message.empty();
    return ev;
}

inline std::vector<double> step_grid(const SweepConfig& c) {
    std::vector<double> ps;
    const double span = c.p_max - c.p_min;
    const auto n = static_cast<std::size_t>(std::ceil(span / c.p_step - 1e-9));
    for (std::size_t i = 0; i < n; ++i) ps.push_back(c.p_min + c.p_step * static_cast<double>(i));
    ps.push_back(c.p_max);
    return ps;
}

} // namespace detail

inline BifurcationReport sweep(const Signal& signal, const SweepConfig& config, const ScaleGrid& grid) {
    validate(config);
    validate(signal);
    validate(grid);
    BifurcationReport rep;
    rep.config = config;
    const std::vector<double> ps = detail::step_grid(config);
    std::vector<detail::Evaluation> evals(ps.size());
    parallel_for(ps.size(), config.threads,
                 [&](std::size_t i) { evals[i] = detail::evaluate_at(signal, config, grid, ps[i]); });
    for (std::size_t i = 0; i < ps.size(); ++i) rep.samples.push_back({ps[i], evals[i].encoding, evals[i].failed, evals[i].message});

    std::vector<std::size_t> changes;
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        if (evals[i].encoding != evals[i + 1].encoding) changes.push_back(i);
    }

    rep.breakpoints.resize(changes.size());
    parallel_for(changes.size(), config.threads, [&](std::size_t k) {
        const std::size_t i = changes[k];
        Breakpoint bp;
        bp.before = evals[i].encoding;
        bp.after = evals[i + 1].encoding;
        double lo = ps[i], hi = ps[i + 1];
        int depth = 0;
        while (hi - lo > config.bisection_tol && depth < config.max_depth) {
            const double mid = 0.5 * (lo + hi);
            const std::string enc = detail::evaluate_at(signal, config, grid, mid).encoding;
            if (enc == bp.before) {
                lo = mid;
            } else {
                if (enc != bp.after) bp.composite = true;
                hi = mid;
            }
            ++depth;
        }
        bp.p_lo = lo;
        bp.p_hi = hi;
        bp.resolved = hi - lo <= config.bisection_tol;
        rep.breakpoints[k] = bp;
    });
    for (const auto& bp : rep.breakpoints) {
        std::ostringstream w;
        if (bp.composite) {
            w << "several structure changes between p=" << format_double(bp.p_lo) << " and the next step; reported "
              << "as one composite breakpoint";
            rep.warnings.push_back(w.str());
        }
        if (!bp.resolved) {
            std::ostringstream u;
            u << "bracket [" << format_double(bp.p_lo) << ", " << format_double(bp.p_hi)
              << "] not resolved within the depth cap";
            rep.warnings.push_back(u.str());
        }
    }

    double start = config.p_min;
    std::size_t first = 0;
    for (std::size_t k = 0; k < rep.breakpoints.size(); ++k) {
        const double cut = 0.5 * (rep.breakpoints[k].p_lo + rep.breakpoints[k].p_hi);
        rep.segments.push_back({start, cut, evals[first].encoding});
        start = cut;
        first = changes[k] + 1;
    }
    rep.segments.push_back({start, config.p_max, evals[first].encoding});

    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        const auto& a = evals[i];
        const auto& b = evals[i + 1];
        if (a.failed || a.encoding != b.encoding || a.apexes.size() != b.apexes.size()) continue;
        const double dp = ps[i + 1] - ps[i];
        for (std::size_t j = 0; j < a.apexes.size(); ++j) {
            rep.max_apex_dx_per_dp = std::max(rep.max_apex_dx_per_dp, std::abs(b.apexes[j].x - a.apexes[j].x) / dp);
            rep.max_apex_dlogrho_per_dp =
                std::max(rep.max_apex_dlogrho_per_dp, std::abs(std::log(b.apexes[j].rho / a.apexes[j].rho)) / dp);
        }
    }
    return rep;
}

inline nlohmann::json report_to_json(const BifurcationReport& rep) {
    nlohmann::json j;
    const auto& c = rep.config;
    j["config"] = {{"p_min", c.p_min},   {"p_max", c.p_max},         {"p_step", c.p_step},
                   {"level", c.level},   {"kind", to_string(c.kind)}, {"bisection_tol", c.bisection_tol},
                   {"a", c.base.a},      {"alpha", c.base.alpha},     {"beta", c.base.beta},
                   {"normalize", c.base.normalize}};
    j["segments"] = nlohmann::json::array();
    for (const auto& s : rep.segments) j["segments"].push_back({{"p_lo", s.p_lo}, {"p_hi", s.p_hi}, {"encoding", s.encoding}});
    j["breakpoints"] = nlohmann::json::array();
    for (const auto& b : rep.breakpoints) {
        j["breakpoints"].push_back({{"p_lo", b.p_lo},
                                    {"p_hi", b.p_hi},
                                    {"before", b.before},
                                    {"after", b.after},
                                    {"resolved", b.resolved},
                                    {"composite", b.composite}});
    }
    j["failures"] = nlohmann::json::array();
    for (const auto& smp : rep.samples) {
        if (smp.failed) j["failures"].push_back({{"p", smp.p}, {"message", smp.message}});
    }
    j["warnings"] = rep.warnings;
    j["apex_motion"] = {{"max_dx_per_dp", rep.max_apex_dx_per_dp},
                        {"max_dlogrho_per_dp", rep.max_apex_dlogrho_per_dp}};
    return j;
}

inline std::string report_to_text(const BifurcationReport& rep) {
    std::ostringstream out;
    out << "# segments\n";
    out << std::left << std::setw(24) << "p_lo" << std::setw(24) << "p_hi" << "encoding\n";
    for (const auto& s : rep.segments) {
        out << std::setw(23) << format_double(s.p_lo) << ' ' << std::setw(23) << format_double(s.p_hi) << ' '
            << s.encoding << '\n';
    }
    out << "# breakpoints\n";
    for (const auto& b : rep.breakpoints) {
        out << '[' << format_double(b.p_lo) << ", " << format_double(b.p_hi) << "] " << b.before << " -> " << b.after;
        if (b.composite) out << " (composite)";
        if (!b.resolved) out << " (unresolved)";
        out << '\n';
    }
    for (const auto& smp : rep.samples) {
        if (smp.failed) out << "# failed at p=" << format_double(smp.p) << ": " << smp.message << '\n';
    }
    for (const auto& w : rep.warnings) out << "# warning: " << w << '\n';
    return out.str();
}

} // namespace fracscale
