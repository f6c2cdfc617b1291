#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdk/pattern.hpp"

namespace gdk {

struct EvalReport {
    double panel_l2 = 0.0;        // cm
    double num_panel_acc = 0.0;
    double num_edge_acc = 0.0;
    double rot_l2 = 0.0;          // radians
    double trans_l2 = 0.0;        // cm
    double stitch_precision = 0.0;
    double stitch_recall = 0.0;
    double stitch_f1 = 0.0;
    int n_samples = 0;
    int degenerate_panels = 0;
};

// Canonical per-panel view used by every metric: 2D vertices and placement
// both re-derived through place_panel + recover_placement, so generated and
// ground-truth patterns are compared in the same frame.
struct CanonicalPanel {
    std::vector<Vec2> verts;  // centered 2D edge start points
    Vec3 rotation_deg;
    Vec3 translation;
    int edge_count = 0;
    bool degenerate = false;
};

inline std::vector<CanonicalPanel> canonicalize(const Pattern& p) {
    std::vector<CanonicalPanel> out;
    out.reserve(p.panels.size());
    for (const Panel& panel : p.panels) {
        const auto placed = place_panel(panel);
        const RecoveredPlacement rec = recover_placement(placed_loop_points(placed));
        CanonicalPanel c;
        c.verts = rec.points2d;
        c.rotation_deg = rec.rotation_deg;
        c.translation = rec.translation;
        c.edge_count = static_cast<int>(panel.edges.size());
        c.degenerate = rec.degenerate;
        out.push_back(std::move(c));
    }
    return out;
}

inline double bbox_diagonal(const std::vector<Vec2>& verts) {
    if (verts.empty()) return 0.0;
    double lx = verts[0].x, hx = verts[0].x, ly = verts[0].y, hy = verts[0].y;
    for (const Vec2& v : verts) {
        lx = std::min(lx, v.x);
        hx = std::max(hx, v.x);
        ly = std::min(ly, v.y);
        hy = std::max(hy, v.y);
    }
    return std::hypot(hx - lx, hy - ly);
}

// Vertex-loop distance after centroid shift: minimum over cyclic rotations of
// the predicted loop of the summed pointwise L2. Unequal counts contribute
// over the shorter loop plus one GT bbox diagonal per missing vertex.
inline double panel_vertex_l2(const std::vector<Vec2>& pred_in, const std::vector<Vec2>& gt_in) {
    auto centered = [](std::vector<Vec2> v) {
        Vec2 c{};
        for (const Vec2& p : v) c = c + p;
        c = c * (1.0 / static_cast<double>(v.size()));
        for (Vec2& p : v) p = p - c;
        return v;
    };
    const std::vector<Vec2> pred = centered(pred_in);
    const std::vector<Vec2> gt = centered(gt_in);
    const std::size_t np = pred.size(), ng = gt.size();
    const std::size_t L = std::min(np, ng);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < np; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < L; ++i) s += (pred[(i + r) % np] - gt[i]).norm();
        best = std::min(best, s);
    }
    const double penalty = static_cast<double>(np > ng ? np - ng : ng - np) * bbox_diagonal(gt_in);
    return best + penalty;
}

inline double match_cost(const CanonicalPanel& pred, const CanonicalPanel& gt) {
    // The epsilon placement term only breaks ties between panels with equal
    // 2D shape (mirrored fronts/backs), keeping self-matching deterministic.
    const double placement_tiebreak =
        (pred.translation - gt.translation).norm() +
        (pred.rotation_deg - gt.rotation_deg).norm();
    return panel_vertex_l2(pred.verts, gt.verts) +
           1000.0 * std::abs(pred.edge_count - gt.edge_count) + 1e-9 * placement_tiebreak;
}

struct PanelMatching {
    std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
    std::vector<int> unmatched_pred;
    std::vector<int> unmatched_gt;
};

namespace detail {

// Hungarian algorithm with potentials; rows <= cols required.
// Returns col index assigned to each row.
inline std::vector<int> assign_min_cost(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const int m = n == 0 ? 0 : static_cast<int>(cost[0].size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
        std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[static_cast<std::size_t>(j)] != 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

}  // namespace detail

// Minimum-cost bipartite matching between predicted and GT panels.
inline PanelMatching match_panels(const std::vector<CanonicalPanel>& pred,
                                  const std::vector<CanonicalPanel>& gt) {
    const int np = static_cast<int>(pred.size());
    const int ng = static_cast<int>(gt.size());
    PanelMatching out;
    if (np == 0 || ng == 0) {
        for (int i = 0; i < np; ++i) out.unmatched_pred.push_back(i);
        for (int j = 0; j < ng; ++j) out.unmatched_gt.push_back(j);
        return out;
    }
    const bool transpose = np > ng;
    const int n = transpose ? ng : np;
    const int m = transpose ? np : ng;
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(m)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                transpose ? match_cost(pred[static_cast<std::size_t>(j)], gt[static_cast<std::size_t>(i)])
                          : match_cost(pred[static_cast<std::size_t>(i)], gt[static_cast<std::size_t>(j)]);
    const std::vector<int> row_to_col = detail::assign_min_cost(cost);
    std::vector<bool> pred_used(static_cast<std::size_t>(np), false), gt_used(static_cast<std::size_t>(ng), false);
    for (int i = 0; i < n; ++i) {
        const int j = row_to_col[static_cast<std::size_t>(i)];
        if (j < 0) continue;
        const int pi = transpose ? j : i;
        const int gi = transpose ? i : j;
        out.pairs.push_back({pi, gi});
        pred_used[static_cast<std::size_t>(pi)] = true;
        gt_used[static_cast<std::size_t>(gi)] = true;
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (int i = 0; i < np; ++i)
        if (!pred_used[static_cast<std::size_t>(i)]) out.unmatched_pred.push_back(i);
    for (int j = 0; j < ng; ++j)
        if (!gt_used[static_cast<std::size_t>(j)]) out.unmatched_gt.push_back(j);
    return out;
}

inline PanelMatching match_panels(const Pattern& pred, const Pattern& gt) {
    return match_panels(canonicalize(pred), canonicalize(gt));
}

// Mean summed vertex distance over matched pairs.
inline double panel_l2(const std::vector<CanonicalPanel>& pred,
                       const std::vector<CanonicalPanel>& gt, const PanelMatching& m) {
    if (m.pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [pi, gi] : m.pairs)
        total += panel_vertex_l2(pred[static_cast<std::size_t>(pi)].verts, gt[static_cast<std::size_t>(gi)].verts);
    return total / static_cast<double>(m.pairs.size());
}

// (panel-count correctness, fraction of matched panels with equal edge counts)
inline std::pair<double, double> count_acc(const std::vector<CanonicalPanel>& pred,
                                           const std::vector<CanonicalPanel>& gt,
                                           const PanelMatching& m) {
    const double panel_term = pred.size() == gt.size() ? 1.0 : 0.0;
    if (m.pairs.empty()) return {panel_term, pred.empty() && gt.empty() ? 1.0 : 0.0};
    int correct = 0;
    for (const auto& [pi, gi] : m.pairs)
        if (pred[static_cast<std::size_t>(pi)].edge_count == gt[static_cast<std::size_t>(gi)].edge_count) ++correct;
    return {panel_term, static_cast<double>(correct) / static_cast<double>(m.pairs.size())};
}

inline double angle_wrap_rad(double deg_a, double deg_b) {
    double d = std::fmod(std::abs(deg_a - deg_b), 360.0);
    if (d > 180.0) d = 360.0 - d;
    return deg_to_rad(d);
}

struct PlacementL2 {
    double rot = 0.0;
    double trans = 0.0;
    int pairs = 0;
    int degenerate = 0;
};

// L2 over the wrapped Euler angles (radians) and over 3D translations (cm),
// averaged over non-degenerate matched pairs.
inline PlacementL2 placement_l2(const std::vector<CanonicalPanel>& pred,
                                const std::vector<CanonicalPanel>& gt, const PanelMatching& m) {
    PlacementL2 out;
    for (const auto& [pi, gi] : m.pairs) {
        const CanonicalPanel& a = pred[static_cast<std::size_t>(pi)];
        const CanonicalPanel& b = gt[static_cast<std::size_t>(gi)];
        if (a.degenerate || b.degenerate) {
            ++out.degenerate;
            continue;
        }
        const double rx = angle_wrap_rad(a.rotation_deg.x, b.rotation_deg.x);
        const double ry = angle_wrap_rad(a.rotation_deg.y, b.rotation_deg.y);
        const double rz = angle_wrap_rad(a.rotation_deg.z, b.rotation_deg.z);
        out.rot += std::sqrt(rx * rx + ry * ry + rz * rz);
        out.trans += (a.translation - b.translation).norm();
        ++out.pairs;
    }
    if (out.pairs > 0) {
        out.rot /= out.pairs;
        out.trans /= out.pairs;
    }
    return out;
}

struct StitchPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Predicted stitches count as true positives when their edge pairs map exactly
// onto GT pairs through the panel matching.
inline StitchPRF stitch_prf(const Pattern& pred, const Pattern& gt, const PanelMatching& m) {
    std::vector<int> pred_to_gt(pred.panels.size(), -1);
    for (const auto& [pi, gi] : m.pairs) pred_to_gt[static_cast<std::size_t>(pi)] = gi;
    auto key = [](EdgeRef a, EdgeRef b) {
        if (b < a) std::swap(a, b);
        return std::make_pair(std::make_pair(a.panel, a.edge), std::make_pair(b.panel, b.edge));
    };
    std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> gt_set;
    for (const Stitch& s : gt.stitches) gt_set.insert(key(s.first, s.second));
    int tp = 0;
    for (const Stitch& s : pred.stitches) {
        EdgeRef a = s.first, b = s.second;
        if (pred_to_gt[static_cast<std::size_t>(a.panel)] < 0 || pred_to_gt[static_cast<std::size_t>(b.panel)] < 0) continue;
        a.panel = pred_to_gt[static_cast<std::size_t>(a.panel)];
        b.panel = pred_to_gt[static_cast<std::size_t>(b.panel)];
        if (gt_set.count(key(a, b))) ++tp;
    }
    const std::size_t n_pred = pred.stitches.size(), n_gt = gt.stitches.size();
    StitchPRF out;
    if (n_pred == 0 && n_gt == 0) {
        out.precision = out.recall = out.f1 = 1.0;
        return out;
    }
    out.precision = n_pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_pred);
    out.recall = n_gt == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

// Full suite over (pred, gt) pairs; per-pattern values averaged.
inline EvalReport evaluate(const std::vector<std::pair<Pattern, Pattern>>& pairs) {
    EvalReport rep;
    rep.n_samples = static_cast<int>(pairs.size());
    if (pairs.empty()) return rep;
    double sum_pl2 = 0.0, sum_pacc = 0.0, sum_eacc = 0.0;
    double sum_rot = 0.0, sum_trans = 0.0;
    double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
    int placement_patterns = 0;
    for (const auto& [pred, gt] : pairs) {
        const auto cp = canonicalize(pred);
        const auto cg = canonicalize(gt);
        const PanelMatching m = match_panels(cp, cg);
        sum_pl2 += panel_l2(cp, cg, m);
        const auto [pacc, eacc] = count_acc(cp, cg, m);
        sum_pacc += pacc;
        sum_eacc += eacc;
        const PlacementL2 pl = placement_l2(cp, cg, m);
        rep.degenerate_panels += pl.degenerate;
        if (pl.pairs > 0) {
            sum_rot += pl.rot;
            sum_trans += pl.trans;
            ++placement_patterns;
        }
        const StitchPRF prf = stitch_prf(pred, gt, m);
        sum_p += prf.precision;
        sum_r += prf.recall;
        sum_f += prf.f1;
    }
    const double n = static_cast<double>(pairs.size());
    rep.panel_l2 = sum_pl2 / n;
    rep.num_panel_acc = sum_pacc / n;
    rep.num_edge_acc = sum_eacc / n;
    rep.rot_l2 = placement_patterns > 0 ? sum_rot / placement_patterns : 0.0;
    rep.trans_l2 = placement_patterns > 0 ? sum_trans / placement_patterns : 0.0;
    rep.stitch_precision = sum_p / n;
    rep.stitch_recall = sum_r / n;
    rep.stitch_f1 = sum_f / n;
    return rep;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
    return {{"panel_l2", r.panel_l2},
            {"num_panel_acc", r.num_panel_acc},
            {"num_edge_acc", r.num_edge_acc},
            {"rot_l2", r.rot_l2},
            {"trans_l2", r.trans_l2},
            {"stitch_precision", r.stitch_precision},
            {"stitch_recall", r.stitch_recall},
            {"stitch_f1", r.stitch_f1},
            {"n_samples", r.n_samples},
            {"degenerate_panels", r.degenerate_panels}};
}

inline std::string report_to_table(const EvalReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-10s %-8s %-8s %-10s %-10s %-10s %-8s %-8s\n", "Panel L2",
                  "#Panel", "#Edge", "Rot L2", "Trans L2", "Precision", "Recall", "F1");
    out += buf;
    std::snprintf(buf, sizeof buf, "%-10.3e %-8.3f %-8.3f %-10.3e %-10.3e %-10.3f %-8.3f %-8.3f\n",
                  r.panel_l2, r.num_panel_acc, r.num_edge_acc, r.rot_l2, r.trans_l2,
                  r.stitch_precision, r.stitch_recall, r.stitch_f1);
    out += buf;
    return out;
}

}  // namespace gdk
