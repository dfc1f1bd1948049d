// fracscale: scale-space fields, contours, trees and p-sweeps of 1-D signals.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "fracscale/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fractional Gaussian-derivative scale-space analysis of 1-D signals"};
    app.set_version_flag("--version", "fracscale 1.0");

    std::string command;
    std::string config_file;
    std::map<std::string, std::string> given;
    app.add_option("command", command, "field | contours | tree | sweep | verify")->required();
    app.add_option("--config", config_file, "key=value file; flags given on the command line override it");

    struct Flag {
        const char* name;
        const char* help;
    };
    const Flag flags[] = {
        {"input", "signal file (CSV or raw FSIG)"},
        {"out", "output directory (default: out)"},
        {"p", "fractional order p >= 0 (typical 0.6 .. 2.15, e.g. 1.35)"},
        {"a", "gauge a != 0 (default 1)"},
        {"alpha", "even mixing coefficient (default 1)"},
        {"beta", "odd mixing coefficient (default 0; needs p > 0)"},
        {"normalize", "unit L2 kernels: true/false"},
        {"level", "contour level c (default 0)"},
        {"kind", "tree kind: tw or tt"},
        {"rho-min", "smallest bandwidth (default from the signal's band)"},
        {"rho-max", "largest bandwidth"},
        {"rho-count", "number of bandwidths (default 64)"},
        {"p-min", "sweep start (default 0.5)"},
        {"p-max", "sweep end (default 2.15)"},
        {"p-step", "sweep step (default 0.01)"},
        {"bisection-tol", "breakpoint resolution (default 1e-3)"},
        {"threads", "worker threads (default 1)"},
        {"seed", "verify: seed of the random test signal (default 1)"},
        {"padding", "zero-padding factor, >= 2 (default 2)"},
        {"x-margin", "padded columns kept either side of the signal (default 0)"},
        {"derivatives", "field: also write phi_x, phi_xx, phi_rho (true/false)"},
    };
    for (const auto& f : flags) {
        const std::string name = f.name;
        app.add_option_function<std::string>(
            "--" + name, [&given, name](const std::string& v) { given[name] = v; }, f.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    fracscale::RunConfig cfg;
    try {
        fracscale::KeyValues kv;
        if (!config_file.empty()) kv = fracscale::read_key_values_file(config_file);
        for (const auto& [k, v] : given) kv[fracscale::normalize_key(k)] = v;
        kv["command"] = command;
        cfg = fracscale::apply_key_values(cfg, kv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return fracscale::run(cfg).status;
}
