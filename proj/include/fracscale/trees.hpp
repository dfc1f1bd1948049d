#pragma once

// Witkin trees (ordered, built from arch apexes) and topological trees
// (unordered, built from contour nesting), with canonical string encodings.
//
// TW: a region of the half-plane is an x-interval; processing arches from
// the coarsest apex down, each arch splits the region containing it into
// left / inside / right children. Contours that run across every scale
// (persistent) split the root into k + 1 intervals before any arch is placed;
// such a root is written with square brackets.
//
// TT: a virtual root whose children are the contours not enclosed by any
// other contour, and so on recursively. Children are sorted by encoding.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracscale/contours.hpp"
#include "fracscale/error.hpp"

namespace fracscale {

enum class TreeKind { tw, tt };

inline const char* to_string(TreeKind k) { return k == TreeKind::tw ? "tw" : "tt"; }

inline TreeKind parse_tree_kind(std::string_view s) {
    if (s == "tw" || s == "TW") return TreeKind::tw;
    if (s == "tt" || s == "TT") return TreeKind::tt;
    throw input_error("tree kind must be 'tw' or 'tt' (got '" + std::string(s) + "')");
}

struct TreeNode {
    std::vector<std::size_t> children;
    // Annotations; not part of tree equality.
    std::optional<std::size_t> contour_id;
    std::optional<Point> apex;
    std::pair<double, double> interval{0.0, 0.0}; // TW: x-range of the region
    bool split_root = false;                      // TW root divided by persistent contours
};

struct ScaleTree {
    TreeKind kind = TreeKind::tw;
    std::vector<TreeNode> nodes{TreeNode{}};
    std::size_t root = 0;
    double level = 0.0;
};

struct TreeOptions {
    // Apex bandwidths closer than this (relative) are a tie.
    double tie_tolerance = 1e-9;
};

namespace detail {

inline std::size_t add_node(ScaleTree& t, TreeNode n) {
    t.nodes.push_back(std::move(n));
    return t.nodes.size() - 1;
}

} // namespace detail

inline ScaleTree build_tw(const std::vector<Contour>& contours, const TreeOptions& opt = {}) {
    ScaleTree tree;
    tree.kind = TreeKind::tw;
    std::vector<const Contour*> arches;
    std::vector<double> cuts;
    for (const auto& ct : contours) {
        if (ct.kind == ContourKind::loop || ct.kind == ContourKind::inverted) {
            throw topology_error(std::string("Witkin tree: contour ") + std::to_string(ct.id) + " is a " +
                                 to_string(ct.kind) + "; use the topological tree (kind tt) for such level sets");
        }
        if (ct.kind == ContourKind::arch) arches.push_back(&ct);
        else cuts.push_back(ct.feet.first);
    }
    if (!contours.empty()) tree.level = contours.front().level;
    const double inf = std::numeric_limits<double>::infinity();
    tree.nodes[0].interval = {-inf, inf};

    std::sort(cuts.begin(), cuts.end());
    if (!cuts.empty()) {
        tree.nodes[0].split_root = true;
        double lo = -inf;
        for (std::size_t k = 0; k <= cuts.size(); ++k) {
            const double hi = k < cuts.size() ? cuts[k] : inf;
            TreeNode leaf;
            leaf.interval = {lo, hi};
            const std::size_t id = detail::add_node(tree, leaf);
            tree.nodes[0].children.push_back(id);
            lo = hi;
        }
    }

    // Coarsest apex (smallest rho) first.
    std::stable_sort(arches.begin(), arches.end(),
                     [](const Contour* a, const Contour* b) { return a->apex.rho < b->apex.rho; });
    for (std::size_t i = 0; i + 1 < arches.size(); ++i) {
        const double a = arches[i]->apex.rho, b = arches[i + 1]->apex.rho;
        if (b - a <= opt.tie_tolerance * std::max(std::abs(a), std::abs(b))) {
            throw topology_error("Witkin tree: arches " + std::to_string(arches[i]->id) + " and " +
                                 std::to_string(arches[i + 1]->id) + " have tied apexes at rho=" + format_double(a) +
                                 "; perturb the input or the grid");
        }
    }

    for (const Contour* arch : arches) {
        const double mid = 0.5 * (arch->feet.first + arch->feet.second);
        std::size_t node = tree.root;
        // Descend to the leaf region containing the arch.
        while (!tree.nodes[node].children.empty()) {
            std::size_t next = tree.nodes[node].children.front();
            for (std::size_t ch : tree.nodes[node].children) {
                const auto [lo, hi] = tree.nodes[ch].interval;
                if (mid > lo && mid < hi) {
                    next = ch;
                    break;
                }
            }
            node = next;
        }
        const auto [lo, hi] = tree.nodes[node].interval;
        TreeNode left, inside, right;
        left.interval = {lo, arch->feet.first};
        inside.interval = {arch->feet.first, arch->feet.second};
        right.interval = {arch->feet.second, hi};
        tree.nodes[node].contour_id = arch->id;
        tree.nodes[node].apex = arch->apex;
        const std::size_t l = detail::add_node(tree, left);
        const std::size_t in = detail::add_node(tree, inside);
        const std::size_t r = detail::add_node(tree, right);
        tree.nodes[node].children = {l, in, r};
    }
    return tree;
}

inline ScaleTree build_tt(const NestingForest& forest, const std::vector<Contour>* contours = nullptr) {
    ScaleTree tree;
    tree.kind = TreeKind::tt;
    const std::size_t n = forest.parent.size();
    std::vector<std::size_t> node_of(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        TreeNode node;
        node.contour_id = contours ? (*contours)[i].id : i;
        if (contours) node.apex = (*contours)[i].apex;
        node_of[i] = detail::add_node(tree, node);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t parent = forest.parent[i] ? node_of[*forest.parent[i]] : tree.root;
        tree.nodes[parent].children.push_back(node_of[i]);
    }
    if (contours && !contours->empty()) tree.level = contours->front().level;
    return tree;
}

namespace detail {

inline std::string encode_node(const ScaleTree& t, std::size_t id) {
    const TreeNode& node = t.nodes[id];
    std::vector<std::string> parts;
    parts.reserve(node.children.size());
    for (std::size_t ch : node.children) parts.push_back(encode_node(t, ch));
    if (t.kind == TreeKind::tt) std::sort(parts.begin(), parts.end());
    const bool square = t.kind == TreeKind::tw && node.split_root;
    std::string s(1, square ? '[' : '(');
    for (const auto& p : parts) s += p;
    s += square ? ']' : ')';
    return s;
}

} // namespace detail

inline std::string canonical_encode(const ScaleTree& t) { return detail::encode_node(t, t.root); }

inline bool trees_equal(const ScaleTree& a, const ScaleTree& b) {
    if (a.kind != b.kind) throw input_error("trees_equal: cannot compare a TW tree with a TT tree");
    return canonical_encode(a) == canonical_encode(b);
}

inline std::size_t tree_depth(const ScaleTree& t, std::size_t id) {
    std::size_t d = 0;
    for (std::size_t ch : t.nodes[id].children) d = std::max(d, 1 + tree_depth(t, ch));
    return d;
}

inline std::size_t tree_depth(const ScaleTree& t) { return tree_depth(t, t.root); }

// --- serialisation --------------------------------------------------------------

namespace detail {

inline nlohmann::json node_json(const ScaleTree& t, std::size_t id) {
    const TreeNode& node = t.nodes[id];
    nlohmann::json j;
    j["id"] = id;
    if (node.contour_id) j["contour"] = *node.contour_id;
    if (node.apex) j["apex"] = {{"x", node.apex->x}, {"rho", node.apex->rho}};
    if (t.kind == TreeKind::tw && std::isfinite(node.interval.first)) j["x_lo"] = node.interval.first;
    if (t.kind == TreeKind::tw && std::isfinite(node.interval.second)) j["x_hi"] = node.interval.second;
    nlohmann::json ch = nlohmann::json::array();
    for (std::size_t c : node.children) ch.push_back(node_json(t, c));
    j["children"] = std::move(ch);
    return j;
}

} // namespace detail

inline nlohmann::json tree_to_json(const ScaleTree& t) {
    nlohmann::json j;
    j["kind"] = to_string(t.kind);
    j["level"] = t.level;
    j["encoding"] = canonical_encode(t);
    j["root"] = detail::node_json(t, t.root);
    return j;
}

inline std::string tree_to_dot(const ScaleTree& t) {
    std::ostringstream out;
    out << "digraph " << to_string(t.kind) << " {\n  node [shape=circle, label=\"\"];\n";
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const TreeNode& n = t.nodes[i];
        out << "  n" << i;
        if (i == t.root) out << " [shape=doublecircle]";
        else if (n.contour_id) out << " [label=\"" << *n.contour_id << "\"]";
        out << ";\n";
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        for (std::size_t c : t.nodes[i].children) out << "  n" << i << " -> n" << c << ";\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace fracscale
