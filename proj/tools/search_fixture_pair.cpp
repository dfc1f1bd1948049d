// Generates the committed fixtures under data/fixtures:
//
//   two_bump.csv, smooth.csv       signals for the CLI examples
//   pair_a.csv, pair_b.csv         two bump sums whose trees agree at p = 0, 1, 2
//   pair.txt                       and differ at p = 1.35 (search result)
//
// The pair search draws random bump sums A, perturbs one bump of A to get B,
// and keeps the first (A, B) whose TW and TT trees agree at p in {0, 1, 2} but
// not at p = 1.35, and that keeps this property for rho_count 56, 64 and 72.
//
// usage: search_fixture_pair <out-dir> [first-seed] [max-seeds]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include "fracscale/bifurcation.hpp"
#include "fracscale/fixtures.hpp"

using namespace fracscale;

namespace {

const SamplingSpec sampling{1024, 0.05};
constexpr double rho_min = 0.1;
const double rho_max = 0.5 * std::numbers::pi / sampling.dx;

struct Trees {
    std::string tw;
    std::string tt;
};

Trees trees_at(const Signal& s, double p, std::size_t rho_count) {
    TreeRequest req;
    req.spec = KernelSpec{p, 1.0, 1.0, 0.0, false};
    req.grid = geometric_grid(rho_min, rho_max, rho_count);
    Trees t;
    try {
        req.kind = TreeKind::tw;
        t.tw = compute_tree(s, req).encoding;
    } catch (const std::exception& e) {
        t.tw = std::string("error: ") + e.what();
    }
    try {
        req.kind = TreeKind::tt;
        t.tt = compute_tree(s, req).encoding;
    } catch (const std::exception& e) {
        t.tt = std::string("error: ") + e.what();
    }
    return t;
}

bool failed(const Trees& t) { return t.tw.rfind("error", 0) == 0 || t.tt.rfind("error", 0) == 0; }

bool pair_property(const Signal& a, const Signal& b, std::size_t rho_count) {
    for (double p : {0.0, 1.0, 2.0}) {
        const Trees ta = trees_at(a, p, rho_count), tb = trees_at(b, p, rho_count);
        if (failed(ta) || failed(tb) || ta.tw != tb.tw || ta.tt != tb.tt) return false;
    }
    const Trees ta = trees_at(a, 1.35, rho_count), tb = trees_at(b, 1.35, rho_count);
    if (failed(ta) || failed(tb)) return false;
    return ta.tw != tb.tw || ta.tt != tb.tt;
}

std::string bumps_record(const BumpSum& f) {
    std::string s;
    for (std::size_t i = 0; i < f.bumps.size(); ++i) {
        const auto& b = f.bumps[i];
        if (i) s += ';';
        s += format_double(b.center) + ':' + format_double(b.amplitude) + ':' + format_double(b.width);
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: search_fixture_pair <out-dir> [first-seed] [max-seeds]\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const std::uint64_t first_seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    const std::uint64_t max_seeds = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 2000;
    std::filesystem::create_directories(dir);

    const BumpSum two_bump{{{-3.0, 1.0, 1.0}, {2.5, -0.8, 0.9}}};
    write_signal_csv(sample(two_bump, sampling), (dir / "two_bump.csv").string());
    write_signal_csv(smooth_fixture(sampling), (dir / "smooth.csv").string());

    const double deltas[] = {0.02, -0.02, 0.05, -0.05, 0.1, -0.1, 0.2, -0.2};
    for (std::uint64_t seed = first_seed; seed < first_seed + max_seeds; ++seed) {
        const BumpSum fa = random_bumps(seed);
        const Signal sa = sample(fa, sampling);
        const Trees a135 = trees_at(sa, 1.35, 64);
        if (failed(a135)) continue;
        for (std::size_t k = 0; k < fa.bumps.size(); ++k) {
            for (int mode = 0; mode < 2; ++mode) {
                for (double d : deltas) {
                    BumpSum fb = fa;
                    if (mode == 0) fb.bumps[k].amplitude *= 1.0 + d;
                    else fb.bumps[k].center += d;
                    const Signal sb = sample(fb, sampling);
                    if (!pair_property(sa, sb, 64)) continue;
                    if (!pair_property(sa, sb, 56) || !pair_property(sa, sb, 72)) continue;

                    write_signal_csv(sa, (dir / "pair_a.csv").string());
                    write_signal_csv(sb, (dir / "pair_b.csv").string());
                    std::ofstream meta(dir / "pair.txt");
                    meta << "# bump sums: center:amplitude:width, separated by ';'\n";
                    meta << "seed=" << seed << "\n";
                    meta << "a_bumps=" << bumps_record(fa) << "\n";
                    meta << "b_bumps=" << bumps_record(fb) << "\n";
                    meta << "n=" << sampling.n << "\ndx=" << format_double(sampling.dx) << "\n";
                    meta << "rho_min=" << format_double(rho_min) << "\nrho_max=" << format_double(rho_max) << "\n";
                    meta << "rho_count=64\n";
                    for (double p : {0.0, 1.0, 1.35, 2.0}) {
                        const Trees ta = trees_at(sa, p, 64), tb = trees_at(sb, p, 64);
                        const std::string tag = format_double(p);
                        meta << "a_tw_" << tag << "=" << ta.tw << "\n" << "b_tw_" << tag << "=" << tb.tw << "\n";
                        meta << "a_tt_" << tag << "=" << ta.tt << "\n" << "b_tt_" << tag << "=" << tb.tt << "\n";
                    }
                    std::cout << "seed " << seed << ": perturbed bump " << k << (mode == 0 ? " amplitude" : " center")
                              << " by " << d << "\n";
                    return 0;
                }
            }
        }
    }
    std::cerr << "no pair found\n";
    return 1;
}
