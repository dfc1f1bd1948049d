#pragma once

// Level-set components {phi = c} of a scale-space field, traced with
// marching squares.
//
// Orientation: rows run from the coarsest bandwidth (row 0, smallest rho) to
// the finest (last row). Zero crossings appear as rho grows, so an arch is a
// component with both ends on the finest row, closing towards coarse scale.
// Its apex is the point of smallest rho (largest sigma = 1/rho).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fracscale/config.hpp"
#include "fracscale/error.hpp"
#include "fracscale/scalespace.hpp"

namespace fracscale {

enum class ContourKind {
    arch,       // both ends on the finest row
    loop,       // closed
    persistent, // one end on the finest row, one on the coarsest
    inverted,   // both ends on the coarsest row (closes towards fine scale)
};

inline const char* to_string(ContourKind k) {
    switch (k) {
    case ContourKind::arch: return "arch";
    case ContourKind::loop: return "loop";
    case ContourKind::persistent: return "persistent";
    case ContourKind::inverted: return "inverted";
    }
    return "?";
}

struct Point {
    double x = 0.0;
    double rho = 0.0;
};

// Position in grid-index units: col along x, row along rho.
struct GridCoord {
    double col = 0.0;
    double row = 0.0;
};

struct Contour {
    std::size_t id = 0;
    ContourKind kind = ContourKind::arch;
    double level = 0.0;
    std::vector<Point> points;
    std::vector<GridCoord> grid_points;
    Point apex;
    GridCoord apex_grid;
    // Arch: x of the left and right ends on the finest row. Persistent: both
    // entries hold the x of the fine-row end.
    std::pair<double, double> feet{0.0, 0.0};
    std::pair<double, double> feet_col{0.0, 0.0};
};

struct ContourOptions {
    // |phi - c| at or below noise_floor * max|phi| counts as noise (exact
    // equality with c included) and is replaced by +-snap * max|phi|.
    double noise_floor = 1e-10;
    double snap = 1e-12;
    std::size_t min_points = 3;
};

struct ContourSet {
    double level = 0.0;
    std::vector<Contour> contours;
    std::size_t clipped = 0;
    std::size_t degenerate = 0;
    std::vector<std::string> warnings;

    std::size_t count(ContourKind k) const {
        return static_cast<std::size_t>(
            std::count_if(contours.begin(), contours.end(), [&](const Contour& c) { return c.kind == k; }));
    }
};

namespace detail {

// Field values minus the level after snapping. A node within the noise floor
// takes the sign of the nearest significant node in its row (the left one on
// a tie, + when the whole row is noise) with magnitude eps, so crossings
// only separate significant values of opposite sign.
inline Matrix shifted_values(const Matrix& phi, double c, const ContourOptions& opt) {
    const double scale = phi.max_abs();
    const double floor = opt.noise_floor * scale;
    const double eps = scale > 0.0 ? opt.snap * scale : opt.snap;
    Matrix out(phi.rows, phi.cols);
    std::vector<double> left_sign(phi.cols), right_sign(phi.cols);
    std::vector<long long> left_at(phi.cols), right_at(phi.cols);
    for (std::size_t r = 0; r < phi.rows; ++r) {
        const double* in = phi.row(r);
        double* dst = out.row(r);
        auto significant = [&](std::size_t j) {
            const double v = in[j] - c;
            return v != 0.0 && std::abs(v) > floor;
        };
        double s = 0.0;
        long long at = -1;
        for (std::size_t j = 0; j < phi.cols; ++j) {
            if (significant(j)) {
                s = in[j] - c > 0.0 ? 1.0 : -1.0;
                at = static_cast<long long>(j);
            }
            left_sign[j] = s;
            left_at[j] = at;
        }
        s = 0.0;
        at = -1;
        for (std::size_t j = phi.cols; j-- > 0;) {
            if (significant(j)) {
                s = in[j] - c > 0.0 ? 1.0 : -1.0;
                at = static_cast<long long>(j);
            }
            right_sign[j] = s;
            right_at[j] = at;
        }
        for (std::size_t j = 0; j < phi.cols; ++j) {
            if (significant(j)) {
                dst[j] = in[j] - c;
                continue;
            }
            const long long jj = static_cast<long long>(j);
            double sign = 1.0;
            if (left_at[j] >= 0 && (right_at[j] < 0 || jj - left_at[j] <= right_at[j] - jj)) sign = left_sign[j];
            else if (right_at[j] >= 0) sign = right_sign[j];
            dst[j] = sign * eps;
        }
    }
    return out;
}

struct EdgePoint {
    GridCoord g;
    Point p;
    bool on_coarse = false;
    bool on_fine = false;
    bool on_side = false;
    int nbr[2] = {-1, -1};
};

inline double local_peak(const double* row, std::size_t cols, double center_col, double sign, std::size_t halfwidth,
                         double* at_col) {
    const long long c0 = std::llround(center_col);
    const long long lo = std::max<long long>(0, c0 - static_cast<long long>(halfwidth));
    const long long hi = std::min<long long>(static_cast<long long>(cols) - 1, c0 + static_cast<long long>(halfwidth));
    long long best = lo;
    for (long long c = lo; c <= hi; ++c) {
        if (sign * row[c] > sign * row[best]) best = c;
    }
    double value = sign * row[best];
    double col = static_cast<double>(best);
    if (best > 0 && best + 1 < static_cast<long long>(cols)) {
        const double a = sign * row[best - 1];
        const double b = sign * row[best];
        const double d = sign * row[best + 1];
        const double curv = a - 2.0 * b + d;
        if (curv < 0.0) {
            const double off = 0.5 * (a - d) / curv;
            if (std::abs(off) <= 1.0) {
                col += off;
                value = b - 0.25 * (a - d) * off;
            }
        }
    }
    *at_col = col;
    return value;
}

inline double row_rho(const ScaleGrid& g, double row) {
    const auto r0 = static_cast<std::size_t>(std::clamp(std::floor(row), 0.0, static_cast<double>(g.rho.size() - 1)));
    if (r0 + 1 >= g.rho.size()) return g.rho.back();
    const double t = row - static_cast<double>(r0);
    return g.rho[r0] + t * (g.rho[r0 + 1] - g.rho[r0]);
}

inline double col_x(const std::vector<double>& xs, double col) {
    const auto c0 = static_cast<std::size_t>(std::clamp(std::floor(col), 0.0, static_cast<double>(xs.size() - 1)));
    if (c0 + 1 >= xs.size()) return xs.back();
    const double t = col - static_cast<double>(c0);
    return xs[c0] + t * (xs[c0 + 1] - xs[c0]);
}

// Sub-grid apex of an arch. Between the last row that contains the arch's
// interior near the topmost vertex and the row above it, the interior peak
// of sign_in * (phi - c) changes sign; the apex is where it vanishes.
inline void refine_apex(Contour& arch, const Matrix& v, const ScaleGrid& grid, const std::vector<double>& xs) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < arch.grid_points.size(); ++i) {
        if (arch.grid_points[i].row < arch.grid_points[top].row) top = i;
    }
    const GridCoord vertex = arch.grid_points[top];
    arch.apex_grid = vertex;
    arch.apex = arch.points[top];

    const auto ra = static_cast<std::size_t>(std::ceil(vertex.row - 1e-12));
    if (ra == 0 || ra >= v.rows) return;
    // Interior sign: the node just right of the left foot on the finest row.
    const std::size_t fine = v.rows - 1;
    const auto inside_col = static_cast<std::size_t>(std::floor(arch.feet_col.first)) + 1;
    if (inside_col >= v.cols) return;
    const double sign = v(fine, inside_col) > 0.0 ? 1.0 : -1.0;

    const std::size_t halfwidth = 3;
    double col_in = 0.0;
    double col_out = 0.0;
    const double e_in = local_peak(v.row(ra), v.cols, vertex.col, sign, halfwidth, &col_in);
    const double e_out = local_peak(v.row(ra - 1), v.cols, vertex.col, sign, halfwidth, &col_out);
    if (!(e_in > 0.0) || !(e_out <= 0.0)) return;
    const double t = e_in / (e_in - e_out); // 0 at row ra, 1 at row ra - 1
    arch.apex_grid.row = static_cast<double>(ra) - t;
    const double a_col = col_in + t * (col_out - col_in);
    arch.apex_grid.col = std::clamp(a_col, 0.0, static_cast<double>(v.cols - 1));
    arch.apex.rho = row_rho(grid, arch.apex_grid.row);
    arch.apex.x = col_x(xs, arch.apex_grid.col);
}

} // namespace detail

// Marching squares over the whole stored field. Saddle cells are resolved by
// the sign of the bilinear value at the cell centre. Components touching the
// left or right edge of the stored x-range are dropped with a warning.
inline ContourSet extract_contours(const ScaleSpaceField& field, double c, const ContourOptions& opt = {}) {
    if (!std::isfinite(c)) throw input_error("extract_contours: level must be finite");
    const std::size_t R = field.rows();
    const std::size_t C = field.cols();
    ContourSet out;
    out.level = c;
    if (R < 2 || C < 2) return out;
    const Matrix v = detail::shifted_values(field.phi, c, opt);

    const std::size_t n_h = R * (C - 1);
    const std::size_t n_v = (R - 1) * C;
    std::vector<int> edge_point(n_h + n_v, -1);
    std::vector<detail::EdgePoint> pts;
    auto h_id = [&](std::size_t r, std::size_t cc) { return r * (C - 1) + cc; };
    auto v_id = [&](std::size_t r, std::size_t cc) { return n_h + r * C + cc; };

    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t cc = 0; cc + 1 < C; ++cc) {
            const double a = v(r, cc), b = v(r, cc + 1);
            if ((a > 0.0) == (b > 0.0)) continue;
            detail::EdgePoint e;
            const double t = a / (a - b);
            e.g = {static_cast<double>(cc) + t, static_cast<double>(r)};
            e.p = {field.x[cc] + t * (field.x[cc + 1] - field.x[cc]), field.grid.rho[r]};
            e.on_coarse = r == 0;
            e.on_fine = r + 1 == R;
            edge_point[h_id(r, cc)] = static_cast<int>(pts.size());
            pts.push_back(e);
        }
    }
    for (std::size_t r = 0; r + 1 < R; ++r) {
        for (std::size_t cc = 0; cc < C; ++cc) {
            const double a = v(r, cc), b = v(r + 1, cc);
            if ((a > 0.0) == (b > 0.0)) continue;
            detail::EdgePoint e;
            const double t = a / (a - b);
            e.g = {static_cast<double>(cc), static_cast<double>(r) + t};
            e.p = {field.x[cc], field.grid.rho[r] + t * (field.grid.rho[r + 1] - field.grid.rho[r])};
            e.on_side = cc == 0 || cc + 1 == C;
            edge_point[v_id(r, cc)] = static_cast<int>(pts.size());
            pts.push_back(e);
        }
    }

    auto link = [&](std::size_t e1, std::size_t e2) {
        const int a = edge_point[e1], b = edge_point[e2];
        auto add = [&](int from, int to) {
            auto& n = pts[static_cast<std::size_t>(from)].nbr;
            if (n[0] < 0) n[0] = to;
            else n[1] = to;
        };
        add(a, b);
        add(b, a);
    };

    for (std::size_t r = 0; r + 1 < R; ++r) {
        for (std::size_t cc = 0; cc + 1 < C; ++cc) {
            const double v00 = v(r, cc), v01 = v(r, cc + 1), v10 = v(r + 1, cc), v11 = v(r + 1, cc + 1);
            const std::size_t h0 = h_id(r, cc), h1 = h_id(r + 1, cc), e0 = v_id(r, cc), e1 = v_id(r, cc + 1);
            std::size_t crossing[4];
            int k = 0;
            for (std::size_t e : {h0, e1, h1, e0}) {
                if (edge_point[e] >= 0) crossing[k++] = e;
            }
            if (k == 2) {
                link(crossing[0], crossing[1]);
            } else if (k == 4) {
                const double center = 0.25 * (v00 + v01 + v10 + v11);
                if ((center > 0.0) == (v00 > 0.0)) {
                    // v00 and v11 connected through the centre
                    link(h0, e1);
                    link(h1, e0);
                } else {
                    link(h0, e0);
                    link(h1, e1);
                }
            }
        }
    }

    std::vector<char> used(pts.size(), 0);
    auto trace = [&](int start) {
        std::vector<int> chain{start};
        used[static_cast<std::size_t>(start)] = 1;
        int prev = -1, cur = start;
        for (;;) {
            const auto& n = pts[static_cast<std::size_t>(cur)].nbr;
            int next = n[0] != prev ? n[0] : n[1];
            if (n[0] == n[1]) next = n[0] != prev ? n[0] : -1;
            if (next < 0) break;
            if (next == start) {
                chain.push_back(start);
                break;
            }
            if (used[static_cast<std::size_t>(next)]) break;
            used[static_cast<std::size_t>(next)] = 1;
            chain.push_back(next);
            prev = cur;
            cur = next;
        }
        return chain;
    };

    std::vector<std::vector<int>> chains;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& n = pts[i].nbr;
        if (!used[i] && (n[0] < 0 || n[1] < 0)) chains.push_back(trace(static_cast<int>(i)));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!used[i]) chains.push_back(trace(static_cast<int>(i)));
    }

    for (auto& chain : chains) {
        const bool closed = chain.size() > 1 && chain.front() == chain.back();
        const std::size_t distinct = closed ? chain.size() - 1 : chain.size();
        if (distinct < opt.min_points) {
            ++out.degenerate;
            continue;
        }
        const auto& first = pts[static_cast<std::size_t>(chain.front())];
        const auto& last = pts[static_cast<std::size_t>(chain.back())];
        Contour ct;
        ct.level = c;
        if (closed) {
            ct.kind = ContourKind::loop;
        } else if (first.on_side || last.on_side) {
            ++out.clipped;
            std::ostringstream w;
            w << "contour touching the x-boundary near x=" << format_double(first.on_side ? first.p.x : last.p.x)
              << " discarded";
            out.warnings.push_back(w.str());
            continue;
        } else if (first.on_fine && last.on_fine) {
            ct.kind = ContourKind::arch;
        } else if (first.on_coarse && last.on_coarse) {
            ct.kind = ContourKind::inverted;
        } else {
            ct.kind = ContourKind::persistent;
            if (first.on_coarse) std::reverse(chain.begin(), chain.end()); // fine end first
        }
        if (ct.kind == ContourKind::arch || ct.kind == ContourKind::inverted) {
            if (pts[static_cast<std::size_t>(chain.front())].g.col > pts[static_cast<std::size_t>(chain.back())].g.col) {
                std::reverse(chain.begin(), chain.end());
            }
        }
        for (int idx : chain) {
            ct.points.push_back(pts[static_cast<std::size_t>(idx)].p);
            ct.grid_points.push_back(pts[static_cast<std::size_t>(idx)].g);
        }
        if (ct.kind == ContourKind::arch || ct.kind == ContourKind::inverted) {
            ct.feet = {ct.points.front().x, ct.points.back().x};
            ct.feet_col = {ct.grid_points.front().col, ct.grid_points.back().col};
        } else if (ct.kind == ContourKind::persistent) {
            ct.feet = {ct.points.front().x, ct.points.front().x};
            ct.feet_col = {ct.grid_points.front().col, ct.grid_points.front().col};
        }
        if (ct.kind == ContourKind::arch) {
            detail::refine_apex(ct, v, field.grid, field.x);
        } else {
            std::size_t top = 0;
            for (std::size_t i = 1; i < ct.grid_points.size(); ++i) {
                if (ct.grid_points[i].row < ct.grid_points[top].row) top = i;
            }
            ct.apex = ct.points[top];
            ct.apex_grid = ct.grid_points[top];
        }
        out.contours.push_back(std::move(ct));
    }

    // Stable, geometry-based order: by left foot / first point, then apex.
    std::stable_sort(out.contours.begin(), out.contours.end(), [](const Contour& a, const Contour& b) {
        const double ka = a.kind == ContourKind::loop ? a.apex_grid.col : a.feet_col.first;
        const double kb = b.kind == ContourKind::loop ? b.apex_grid.col : b.feet_col.first;
        if (ka != kb) return ka < kb;
        return a.apex_grid.row < b.apex_grid.row;
    });
    for (std::size_t i = 0; i < out.contours.size(); ++i) out.contours[i].id = i;
    return out;
}

// --- nesting --------------------------------------------------------------------

struct NestingForest {
    // parent[i] is the minimal contour enclosing contour i.
    std::vector<std::optional<std::size_t>> parent;
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::size_t> roots;
    std::vector<ContourKind> kinds;
};

namespace detail {

// Closed polygon bounding the region of a contour in grid coordinates:
// arches are closed along the finest row, inverted contours along the
// coarsest; persistent contours bound nothing.
inline std::vector<GridCoord> region_polygon(const Contour& ct) {
    std::vector<GridCoord> poly = ct.grid_points;
    if (ct.kind == ContourKind::loop && poly.size() > 1 && poly.front().col == poly.back().col &&
        poly.front().row == poly.back().row) {
        poly.pop_back();
    }
    return poly; // the closing chord runs along the boundary row
}

inline bool point_in_polygon(const std::vector<GridCoord>& poly, GridCoord q) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const GridCoord a = poly[i], b = poly[j];
        if ((a.row > q.row) != (b.row > q.row)) {
            const double at = a.col + (q.row - a.row) * (b.col - a.col) / (b.row - a.row);
            if (q.col < at) inside = !inside;
        }
    }
    return inside;
}

inline double segment_distance(GridCoord q, GridCoord a, GridCoord b) {
    const double dx = b.col - a.col, dy = b.row - a.row;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((q.col - a.col) * dx + (q.row - a.row) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.col + t * dx - q.col, ey = a.row + t * dy - q.row;
    return std::sqrt(ex * ex + ey * ey);
}

inline double polygon_area(const std::vector<GridCoord>& poly) {
    double s = 0.0;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        s += (poly[j].col + poly[i].col) * (poly[j].row - poly[i].row);
    }
    return std::abs(0.5 * s);
}

} // namespace detail

// Minimal enclosing contour of each contour, tested at its apex with a ray
// test. `tolerance` is in grid cells.
inline NestingForest build_nesting(const std::vector<Contour>& contours, double tolerance = 1e-9) {
    const std::size_t n = contours.size();
    NestingForest forest;
    forest.parent.assign(n, std::nullopt);
    forest.children.assign(n, {});
    forest.kinds.resize(n);
    std::vector<std::vector<GridCoord>> polys(n);
    std::vector<double> area(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        forest.kinds[i] = contours[i].kind;
        if (contours[i].kind == ContourKind::persistent) continue;
        polys[i] = detail::region_polygon(contours[i]);
        if (polys[i].size() >= 3) area[i] = detail::polygon_area(polys[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (contours[i].kind == ContourKind::persistent) continue;
        const GridCoord q = contours[i].apex_grid;
        std::optional<std::size_t> best;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || polys[j].size() < 3) continue;
            const auto& pj = contours[j].grid_points;
            for (std::size_t k = 0; k + 1 < pj.size(); ++k) {
                if (detail::segment_distance(q, pj[k], pj[k + 1]) <= tolerance) {
                    throw topology_error("ambiguous containment: apex of contour " + std::to_string(contours[i].id) +
                                         " lies on contour " + std::to_string(contours[j].id));
                }
            }
            if (!detail::point_in_polygon(polys[j], q)) continue;
            if (!best || area[j] < area[*best]) best = j;
        }
        forest.parent[i] = best;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (forest.parent[i]) forest.children[*forest.parent[i]].push_back(i);
        else forest.roots.push_back(i);
    }
    // Reject cycles, which only malformed input could produce.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t steps = 0;
        for (auto p = forest.parent[i]; p; p = forest.parent[*p]) {
            if (++steps > n) throw topology_error("nesting relation contains a cycle");
        }
    }
    return forest;
}

// --- export -------------------------------------------------------------------

inline void write_contours_csv(const ContourSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << "id,kind,x,rho\n";
    for (const auto& ct : set.contours) {
        for (const auto& p : ct.points) {
            out << ct.id << ',' << to_string(ct.kind) << ',' << format_double(p.x) << ',' << format_double(p.rho) << '\n';
        }
    }
    if (!out) throw input_error("write failed for '" + path + "'");
}

inline nlohmann::json contours_to_json(const ContourSet& set) {
    nlohmann::json j;
    j["level"] = set.level;
    j["clipped"] = set.clipped;
    j["warnings"] = set.warnings;
    j["contours"] = nlohmann::json::array();
    for (const auto& ct : set.contours) {
        nlohmann::json c;
        c["id"] = ct.id;
        c["kind"] = to_string(ct.kind);
        c["apex"] = {{"x", ct.apex.x}, {"rho", ct.apex.rho}, {"sigma", 1.0 / ct.apex.rho}};
        if (ct.kind != ContourKind::loop) c["feet"] = {ct.feet.first, ct.feet.second};
        c["n_points"] = ct.points.size();
        nlohmann::json xs = nlohmann::json::array(), rs = nlohmann::json::array();
        for (const auto& p : ct.points) {
            xs.push_back(p.x);
            rs.push_back(p.rho);
        }
        c["x"] = std::move(xs);
        c["rho"] = std::move(rs);
        j["contours"].push_back(std::move(c));
    }
    return j;
}

} // namespace fracscale
