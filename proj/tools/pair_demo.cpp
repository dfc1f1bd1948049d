// Prints the TW and TT trees of two signals over a few orders p.
//
// usage: pair_demo <a.csv> <b.csv> [p ...]

#include <cstdlib>
#include <iostream>
#include <numbers>
#include <vector>

#include "fracscale/bifurcation.hpp"

using namespace fracscale;

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: pair_demo <a.csv> <b.csv> [p ...]\n";
        return 2;
    }
    std::vector<double> ps;
    for (int i = 3; i < argc; ++i) ps.push_back(std::strtod(argv[i], nullptr));
    if (ps.empty()) ps = {0.0, 1.0, 1.35, 2.0};

    try {
        const Signal a = read_signal(argv[1]);
        const Signal b = read_signal(argv[2]);
        TreeRequest req;
        req.grid = geometric_grid(0.1, 0.5 * std::numbers::pi / a.dx, 64);
        for (double p : ps) {
            req.spec.p = p;
            for (TreeKind k : {TreeKind::tw, TreeKind::tt}) {
                req.kind = k;
                const std::string ea = compute_tree(a, req).encoding;
                const std::string eb = compute_tree(b, req).encoding;
                std::cout << "p=" << format_double(p) << ' ' << to_string(k) << (ea == eb ? "  same  " : "  DIFF  ")
                          << ea << "  " << eb << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
