#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gdk/geometry.hpp"

namespace gdk {

struct ArcParams {
    double radius = 0.0;  // cm, > 0 for a real arc
    bool large_arc = false;
    bool ccw = false;
};

// One boundary segment of a panel. The end point is implicit: it is the start
// of the next edge in the panel loop.
struct Edge2D {
    Vec2 start;
    std::vector<Vec2> control_points;  // 0 (line/arc), 1 (quadratic) or 2 (cubic)
    std::optional<ArcParams> arc;

    bool is_arc() const { return arc.has_value(); }
};

struct Panel {
    std::string name;
    std::vector<Edge2D> edges;  // closed loop, >= 3 edges
    Vec3 rotation_deg;          // Euler XYZ, applied Rx*Ry*Rz
    Vec3 translation;           // cm
};

struct EdgeRef {
    int panel = 0;
    int edge = 0;

    bool operator==(const EdgeRef& o) const { return panel == o.panel && edge == o.edge; }
    bool operator<(const EdgeRef& o) const {
        return panel != o.panel ? panel < o.panel : edge < o.edge;
    }
};

struct Stitch {
    EdgeRef first;
    EdgeRef second;
};

struct Pattern {
    std::string name;
    std::vector<Panel> panels;
    std::vector<Stitch> stitches;
};

// Edge lifted into 3D by the panel placement, plus stitch annotations.
struct PlacedEdge {
    Vec3 start;
    std::vector<Vec3> controls;  // same count as the source edge
    ArcParams arc;               // zeroed for non-arc edges
    Vec3 stitch_tag;             // (0,0,0) unless stitched
    int stitch_flag = 0;         // 0 or 1
};

inline void validate_pattern(const Pattern& p) {
    if (p.panels.empty()) throw ValidationError("pattern '" + p.name + "' has no panels");
    for (const Panel& panel : p.panels) {
        if (panel.edges.size() < 3)
            throw ValidationError("panel '" + panel.name + "' has fewer than 3 edges");
        for (const Edge2D& e : panel.edges) {
            if (e.control_points.size() > 2)
                throw ValidationError("panel '" + panel.name + "' has an edge with more than 2 control points");
            if (e.arc) {
                if (!e.control_points.empty())
                    throw ValidationError("panel '" + panel.name + "' has an arc edge with control points");
                if (e.arc->radius <= 0.0)
                    throw ValidationError("panel '" + panel.name + "' has an arc with non-positive radius");
            }
        }
    }
    std::set<EdgeRef> used;
    for (const Stitch& s : p.stitches) {
        for (const EdgeRef& ref : {s.first, s.second}) {
            if (ref.panel < 0 || ref.panel >= static_cast<int>(p.panels.size()))
                throw ValidationError("stitch references panel index " + std::to_string(ref.panel) +
                                      " outside pattern '" + p.name + "'");
            const auto& edges = p.panels[static_cast<std::size_t>(ref.panel)].edges;
            if (ref.edge < 0 || ref.edge >= static_cast<int>(edges.size()))
                throw ValidationError("stitch references edge index " + std::to_string(ref.edge) +
                                      " outside panel " + std::to_string(ref.panel));
        }
        if (s.first == s.second) throw ValidationError("stitch pairs an edge with itself");
        if (!used.insert(s.first).second || !used.insert(s.second).second)
            throw ValidationError("edge participates in more than one stitch");
    }
}

// Lifts (x, y) to (x, y, 0), rotates by the panel's Euler XYZ matrix and translates.
// Stitch fields are left zero; compute_stitch_tags fills them.
inline std::vector<PlacedEdge> place_panel(const Panel& panel) {
    const Mat3 rot = rotation_from_euler_deg(panel.rotation_deg);
    auto lift = [&](Vec2 p) { return rot.apply({p.x, p.y, 0.0}) + panel.translation; };
    std::vector<PlacedEdge> placed;
    placed.reserve(panel.edges.size());
    for (const Edge2D& e : panel.edges) {
        PlacedEdge pe;
        pe.start = lift(e.start);
        for (Vec2 c : e.control_points) pe.controls.push_back(lift(c));
        if (e.arc) pe.arc = *e.arc;
        placed.push_back(std::move(pe));
    }
    return placed;
}

// Tags every stitched edge with the mean of the four 3D endpoints of the pair.
// Endpoints come from the placed loop: end of edge j = start of edge j+1 (mod n).
inline void compute_stitch_tags(const Pattern& pattern,
                                std::vector<std::vector<PlacedEdge>>& placed) {
    for (const Stitch& s : pattern.stitches) {
        auto endpoint_sum = [&](const EdgeRef& ref) {
            const auto& loop = placed[static_cast<std::size_t>(ref.panel)];
            const std::size_t j = static_cast<std::size_t>(ref.edge);
            return loop[j].start + loop[(j + 1) % loop.size()].start;
        };
        const Vec3 tag = (endpoint_sum(s.first) + endpoint_sum(s.second)) * 0.25;
        for (const EdgeRef& ref : {s.first, s.second}) {
            PlacedEdge& pe = placed[static_cast<std::size_t>(ref.panel)][static_cast<std::size_t>(ref.edge)];
            pe.stitch_tag = tag;
            pe.stitch_flag = 1;
        }
    }
}

struct RecoveredPlacement {
    Vec3 rotation_deg;
    Vec3 translation;
    std::vector<Vec2> points2d;
    bool degenerate = false;
};

// Recovers a canonical placement from one panel's 3D loop points:
//   translation = centroid,
//   plane normal = smallest-variance principal axis, signed so the projected
//   loop winds counter-clockwise,
//   in-plane x-axis = first edge chord projected into the plane.
// Both metric sides use this same rule, so recovered frames are comparable.
inline RecoveredPlacement recover_placement(const std::vector<Vec3>& points) {
    RecoveredPlacement out;
    const std::size_t n = points.size();
    if (n < 3) {
        out.degenerate = true;
        out.points2d.assign(n, Vec2{});
        return out;
    }
    Vec3 centroid{};
    for (const Vec3& p : points) centroid = centroid + p;
    centroid = centroid * (1.0 / static_cast<double>(n));
    out.translation = centroid;

    Mat3 cov;
    cov.m.fill(0.0);
    for (const Vec3& p : points) {
        const Vec3 d = p - centroid;
        cov.at(0, 0) += d.x * d.x;
        cov.at(0, 1) += d.x * d.y;
        cov.at(0, 2) += d.x * d.z;
        cov.at(1, 1) += d.y * d.y;
        cov.at(1, 2) += d.y * d.z;
        cov.at(2, 2) += d.z * d.z;
    }
    cov.at(1, 0) = cov.at(0, 1);
    cov.at(2, 0) = cov.at(0, 2);
    cov.at(2, 1) = cov.at(1, 2);

    std::array<double, 3> lam;
    Mat3 axes;
    jacobi_eigen_sym3(cov, lam, axes);
    // Collinear loops have two near-zero principal variances.
    if (lam[1] <= 1e-12 * std::max(1.0, lam[2])) {
        out.degenerate = true;
        out.points2d.assign(n, Vec2{});
        return out;
    }
    Vec3 normal = axes.column(0).normalized();

    const Vec3 chord = points[1] - points[0];
    Vec3 u = (chord - normal * chord.dot(normal));
    if (u.norm() <= 1e-12) {
        out.degenerate = true;
        out.points2d.assign(n, Vec2{});
        return out;
    }
    u = u.normalized();
    Vec3 v = normal.cross(u);

    // Signed area of the projection decides the normal sign (ccw winding).
    double area2 = 0.0;
    std::vector<Vec2> proj(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = points[i] - centroid;
        proj[i] = {d.dot(u), d.dot(v)};
    }
    for (std::size_t i = 0; i < n; ++i) area2 += proj[i].cross(proj[(i + 1) % n]);
    if (area2 < 0.0) {
        normal = normal * -1.0;
        v = normal.cross(u);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 d = points[i] - centroid;
            proj[i] = {d.dot(u), d.dot(v)};
        }
    }

    const Mat3 rot = Mat3::from_columns(u, v, normal);
    out.rotation_deg = euler_deg_from_rotation(rot);
    out.points2d = std::move(proj);
    return out;
}

// 3D loop points of a placed panel (edge start points in loop order).
inline std::vector<Vec3> placed_loop_points(const std::vector<PlacedEdge>& placed) {
    std::vector<Vec3> pts;
    pts.reserve(placed.size());
    for (const PlacedEdge& pe : placed) pts.push_back(pe.start);
    return pts;
}

}  // namespace gdk
