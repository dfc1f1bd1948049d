#pragma once

// Command driver behind tools/fracscale. A run is described by a RunConfig,
// which round-trips through flat key=value text; the effective config is
// echoed to <out>/config.txt so that `--config <out>/config.txt` repeats the
// run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracscale/bifurcation.hpp"
#include "fracscale/checks.hpp"
#include "fracscale/config.hpp"
#include "fracscale/contours.hpp"
#include "fracscale/error.hpp"
#include "fracscale/fixtures.hpp"
#include "fracscale/kernels.hpp"
#include "fracscale/scalespace.hpp"
#include "fracscale/signal.hpp"
#include "fracscale/trees.hpp"

namespace fracscale {

enum class Command { field, contours, tree, sweep, verify };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::field: return "field";
    case Command::contours: return "contours";
    case Command::tree: return "tree";
    case Command::sweep: return "sweep";
    case Command::verify: return "verify";
    }
    return "?";
}

inline Command parse_command(std::string_view s) {
    if (s == "field") return Command::field;
    if (s == "contours") return Command::contours;
    if (s == "tree") return Command::tree;
    if (s == "sweep") return Command::sweep;
    if (s == "verify") return Command::verify;
    throw input_error("unknown command '" + std::string(s) + "' (expected field, contours, tree, sweep or verify)");
}

struct RunConfig {
    Command command = Command::tree;
    std::string input;
    std::string out = "out";
    KernelSpec spec{};
    std::optional<double> rho_min;
    std::optional<double> rho_max;
    std::size_t rho_count = 64;
    double level = 0.0;
    TreeKind kind = TreeKind::tw;
    double p_min = 0.5;
    double p_max = 2.15;
    double p_step = 0.01;
    double bisection_tol = 1e-3;
    unsigned threads = 1;
    std::uint64_t seed = 1;
    std::size_t padding = 2;
    std::size_t x_margin = 0;
    bool derivatives = false;
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "command", "input",  "out",     "p",      "a",          "alpha",    "beta",     "normalize",
        "level",   "kind",   "rho_min", "rho_max", "rho_count", "p_min",    "p_max",    "p_step",
        "bisection_tol", "threads", "seed", "padding", "x_margin", "derivatives"};
    return keys;
}

inline std::string normalize_key(std::string key) {
    for (char& ch : key) {
        if (ch == '-') ch = '_';
    }
    return key;
}

// Overlays the entries of kv (keys with '-' or '_') onto base.
inline RunConfig apply_key_values(RunConfig cfg, const KeyValues& kv) {
    for (const auto& [raw_key, value] : kv) {
        const std::string key = normalize_key(raw_key);
        auto count = [&](const char* what) {
            const long long v = parse_integer(value, what);
            if (v < 0) throw input_error(std::string(what) + " must be non-negative");
            return static_cast<std::size_t>(v);
        };
        if (key == "command") cfg.command = parse_command(value);
        else if (key == "input") cfg.input = value;
        else if (key == "out") cfg.out = value;
        else if (key == "p") cfg.spec.p = parse_double(value, "p");
        else if (key == "a") cfg.spec.a = parse_double(value, "a");
        else if (key == "alpha") cfg.spec.alpha = parse_double(value, "alpha");
        else if (key == "beta") cfg.spec.beta = parse_double(value, "beta");
        else if (key == "normalize") cfg.spec.normalize = parse_bool(value, "normalize");
        else if (key == "level") cfg.level = parse_double(value, "level");
        else if (key == "kind") cfg.kind = parse_tree_kind(value);
        else if (key == "rho_min") cfg.rho_min = value.empty() ? std::nullopt : std::optional(parse_double(value, "rho_min"));
        else if (key == "rho_max") cfg.rho_max = value.empty() ? std::nullopt : std::optional(parse_double(value, "rho_max"));
        else if (key == "rho_count") cfg.rho_count = count("rho_count");
        else if (key == "p_min") cfg.p_min = parse_double(value, "p_min");
        else if (key == "p_max") cfg.p_max = parse_double(value, "p_max");
        else if (key == "p_step") cfg.p_step = parse_double(value, "p_step");
        else if (key == "bisection_tol") cfg.bisection_tol = parse_double(value, "bisection_tol");
        else if (key == "threads") cfg.threads = static_cast<unsigned>(std::max<std::size_t>(1, count("threads")));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(count("seed"));
        else if (key == "padding") cfg.padding = count("padding");
        else if (key == "x_margin") cfg.x_margin = count("x_margin");
        else if (key == "derivatives") cfg.derivatives = parse_bool(value, "derivatives");
        else throw input_error("unknown config key '" + raw_key + "'");
    }
    return cfg;
}

inline std::string to_config_text(const RunConfig& c) {
    std::ostringstream o;
    o << "command=" << to_string(c.command) << "\n";
    o << "input=" << c.input << "\n";
    o << "out=" << c.out << "\n";
    o << to_record(c.spec);
    o << "level=" << format_double(c.level) << "\n";
    o << "kind=" << to_string(c.kind) << "\n";
    o << "rho_min=" << (c.rho_min ? format_double(*c.rho_min) : "") << "\n";
    o << "rho_max=" << (c.rho_max ? format_double(*c.rho_max) : "") << "\n";
    o << "rho_count=" << c.rho_count << "\n";
    o << "p_min=" << format_double(c.p_min) << "\n";
    o << "p_max=" << format_double(c.p_max) << "\n";
    o << "p_step=" << format_double(c.p_step) << "\n";
    o << "bisection_tol=" << format_double(c.bisection_tol) << "\n";
    o << "threads=" << c.threads << "\n";
    o << "seed=" << c.seed << "\n";
    o << "padding=" << c.padding << "\n";
    o << "x_margin=" << c.x_margin << "\n";
    o << "derivatives=" << (c.derivatives ? "true" : "false") << "\n";
    return o.str();
}

inline ScaleGrid grid_for(const RunConfig& c, const Signal& s) {
    const auto [lo, hi] = default_rho_range(s);
    return geometric_grid(c.rho_min.value_or(lo), c.rho_max.value_or(hi), c.rho_count);
}

struct RunResult {
    int status = 0;
    std::vector<std::string> artifacts;
    std::string message;
};

namespace detail {

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void prepare() {
        namespace fs = std::filesystem;
        std::error_code ec;
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_, ec);
            if (ec) throw input_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
            created_dir_ = true;
        } else if (!fs::is_directory(dir_)) {
            throw input_error("output path '" + dir_.string() + "' is not a directory");
        }
    }

    std::string path(const std::string& name) {
        const std::string p = (dir_ / name).string();
        written_.push_back(p);
        return p;
    }

    void text(const std::string& name, const std::string& content) {
        const std::string p = path(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw input_error("cannot write '" + p + "'");
        out << content;
        if (!out) throw input_error("write failed for '" + p + "'");
    }

    void track(const std::vector<std::string>& paths) { written_.insert(written_.end(), paths.begin(), paths.end()); }

    void rollback() {
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
        if (created_dir_) std::filesystem::remove(dir_, ec);
        written_.clear();
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> written_;
    bool created_dir_ = false;
};

struct VerifyLine {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string note;
};

inline std::vector<VerifyLine> run_verification(const Signal& s, const RunConfig& c) {
    std::vector<VerifyLine> lines;
    const ScaleGrid grid = grid_for(c, s);
    FieldOptions fo;
    fo.with_derivatives = true;
    fo.padding_factor = c.padding;
    fo.threads = c.threads;

    for (double p : {0.0, 0.5, 1.0, 1.35, 2.0}) {
        const ScaleSpaceField f = build_field(s, KernelSpec{p, 1.0, 1.0, 0.0, false}, grid, fo);
        const CausalityReport r = check_causality(f);
        lines.push_back({"causality p=" + format_double(p), r.ok(),
                         static_cast<double>(r.strong_violations.size() + r.weak_violations.size()), 0.0,
                         "violations above tau=" + format_double(r.tau)});
    }
    {
        const ScaleSpaceField f = build_field(s, KernelSpec{0.0, 1.0, 1.0, 0.0, false}, grid, fo);
        const HeatReport h = check_heat_identity(f);
        lines.push_back({"heat identity p=0", h.relative() <= 1e-3, h.relative(), 1e-3, "max|phi_xx+rho^3 phi_rho|/max|phi_xx|"});
    }
    {
        // Seeded random signal on the input's sampling.
        const Signal r = sample(random_bumps(c.seed), SamplingSpec{s.size(), s.dx});
        const ScaleSpaceField f = build_field(r, KernelSpec{}, grid_for(c, r), fo);
        const double floor = 1e-10 * f.phi.max_abs();
        std::size_t drops = 0;
        for (std::size_t row = 1; row < f.rows(); ++row) {
            drops += sign_changes(f.phi.row(row), f.cols(), floor) < sign_changes(f.phi.row(row - 1), f.cols(), floor);
        }
        lines.push_back({"zero-crossing monotonicity p=0 seed=" + std::to_string(c.seed), drops == 0,
                         static_cast<double>(drops), 0.0, "rows with fewer sign changes than the coarser row"});
    }
    for (double p : {0.5, 1.35, 2.0}) {
        const FtShapeReport r = ft_shape_check(p);
        lines.push_back({"fourier shape p=" + format_double(p), r.max_rel_error <= 1e-5, r.max_rel_error, 1e-5,
                         "windowed FFT alone: " + format_double(r.raw_max_rel_error)});
    }
    for (double p : {0.0, 1.35}) {
        for (double rho : {1.0, 4.0}) {
            const ConvolutionCheck r = convolution_oracle_check(s, KernelSpec{p, 1.0, 1.0, 0.0, false}, rho, c.padding);
            lines.push_back({"convolution oracle p=" + format_double(p) + " rho=" + format_double(rho),
                             r.rel_diff <= 1e-6, r.rel_diff, 1e-6, "freq vs direct, L-inf relative"});
        }
    }
    return lines;
}

inline Signal load_input(const RunConfig& c) {
    if (c.input.empty()) throw input_error("--input is required for the " + std::string(to_string(c.command)) + " command");
    return read_signal(c.input);
}

} // namespace detail

// Results (tree encoding, verification table) go to out, diagnostics to log.
inline RunResult run(const RunConfig& cfg, std::ostream& log = std::cerr, std::ostream& out = std::cout) {
    RunResult result;
    detail::ArtifactWriter writer(cfg.out);
    try {
        validate(cfg.spec);
        if (cfg.threads == 0) throw input_error("threads must be >= 1");
        // Signal first, so a bad input leaves no output directory behind.
        const Signal s = cfg.command == Command::verify && cfg.input.empty() ? smooth_fixture() : detail::load_input(cfg);
        writer.prepare();
        writer.text("config.txt", to_config_text(cfg));
        const ScaleGrid grid = grid_for(cfg, s);
        FieldOptions fo;
        fo.padding_factor = cfg.padding;
        fo.x_margin = cfg.x_margin;
        fo.threads = cfg.threads;

        switch (cfg.command) {
        case Command::field: {
            fo.with_derivatives = cfg.derivatives;
            const ScaleSpaceField f = build_field(s, cfg.spec, grid, fo);
            writer.track(write_field(f, (std::filesystem::path(cfg.out) / "field").string()));
            break;
        }
        case Command::contours: {
            const ScaleSpaceField f = build_field(s, cfg.spec, grid, fo);
            const ContourSet set = extract_contours(f, cfg.level);
            write_contours_csv(set, writer.path("contours.csv"));
            writer.text("contours.json", contours_to_json(set).dump(2) + "\n");
            for (const auto& w : set.warnings) log << "warning: " << w << "\n";
            break;
        }
        case Command::tree: {
            TreeRequest req;
            req.spec = cfg.spec;
            req.grid = grid;
            req.level = cfg.level;
            req.kind = cfg.kind;
            req.field = fo;
            const TreeResult t = compute_tree(s, req);
            writer.text("tree.json", tree_to_json(t.tree).dump(2) + "\n");
            writer.text("tree.dot", tree_to_dot(t.tree));
            writer.text("tree.txt", t.encoding + "\n");
            for (const auto& w : t.contours.warnings) log << "warning: " << w << "\n";
            out << t.encoding << "\n";
            break;
        }
        case Command::sweep: {
            SweepConfig sc;
            sc.p_min = cfg.p_min;
            sc.p_max = cfg.p_max;
            sc.p_step = cfg.p_step;
            sc.level = cfg.level;
            sc.kind = cfg.kind;
            sc.bisection_tol = cfg.bisection_tol;
            sc.threads = cfg.threads;
            sc.base = cfg.spec;
            sc.field = fo;
            const BifurcationReport rep = sweep(s, sc, grid);
            writer.text("sweep.json", report_to_json(rep).dump(2) + "\n");
            writer.text("sweep.txt", report_to_text(rep));
            for (const auto& w : rep.warnings) log << "warning: " << w << "\n";
            break;
        }
        case Command::verify: {
            const auto lines = detail::run_verification(s, cfg);
            std::ostringstream txt;
            nlohmann::json j = nlohmann::json::array();
            bool all = true;
            for (const auto& l : lines) {
                all = all && l.pass;
                txt << (l.pass ? "PASS " : "FAIL ") << l.name << " measured=" << format_double(l.measured)
                    << " tol=" << format_double(l.tolerance) << " (" << l.note << ")\n";
                j.push_back({{"check", l.name}, {"pass", l.pass}, {"measured", l.measured}, {"tolerance", l.tolerance},
                             {"note", l.note}});
            }
            writer.text("verify.txt", txt.str());
            writer.text("verify.json", j.dump(2) + "\n");
            out << txt.str();
            if (!all) {
                result.status = 1;
                result.message = "verification failed";
            }
            break;
        }
        }
        result.artifacts = writer.written();
        return result;
    } catch (const input_error& e) {
        result.status = 2;
        result.message = e.what();
    } catch (const domain_error& e) {
        result.status = 2;
        result.message = e.what();
    } catch (const topology_error& e) {
        result.status = 2;
        result.message = e.what();
    } catch (const std::exception& e) {
        result.status = 1;
        result.message = e.what();
    }
    writer.rollback();
    log << "error: " << result.message << "\n";
    return result;
}

} // namespace fracscale
