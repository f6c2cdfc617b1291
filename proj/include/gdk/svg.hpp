#pragma once

#include <map>
#include <string>
#include <vector>

#include "gdk/pattern.hpp"

namespace gdk {

// Vector rendering for human inspection: one group per panel laid out on a
// grid, one path per edge, stitched edge pairs drawn in a shared color.
inline std::string render_svg(const Pattern& p) {
    validate_pattern(p);
    static const char* kPalette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                                     "#a65628", "#f781bf", "#00ced1", "#999900", "#666666"};
    std::map<std::pair<int, int>, std::string> edge_color;
    for (std::size_t si = 0; si < p.stitches.size(); ++si) {
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        const Stitch& s = p.stitches[si];
        edge_color[{s.first.panel, s.first.edge}] = color;
        edge_color[{s.second.panel, s.second.edge}] = color;
    }

    // Per-panel bounding boxes drive the grid cells.
    struct Box {
        double lx, ly, hx, hy;
    };
    std::vector<Box> boxes;
    double cell_w = 0.0, cell_h = 0.0;
    for (const Panel& panel : p.panels) {
        Box b{1e30, 1e30, -1e30, -1e30};
        for (const Edge2D& e : panel.edges) {
            auto grow = [&b](Vec2 v) {
                b.lx = std::min(b.lx, v.x);
                b.hx = std::max(b.hx, v.x);
                b.ly = std::min(b.ly, v.y);
                b.hy = std::max(b.hy, v.y);
            };
            grow(e.start);
            for (Vec2 c : e.control_points) grow(c);
            if (e.arc) {
                b.lx -= e.arc->radius * 0.2;
                b.hx += e.arc->radius * 0.2;
                b.ly -= e.arc->radius * 0.2;
                b.hy += e.arc->radius * 0.2;
            }
        }
        cell_w = std::max(cell_w, b.hx - b.lx);
        cell_h = std::max(cell_h, b.hy - b.ly);
        boxes.push_back(b);
    }
    const double margin = 4.0;
    cell_w += 2 * margin;
    cell_h += 2 * margin;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.panels.size()))));
    const int rows = (static_cast<int>(p.panels.size()) + cols - 1) / cols;

    char buf[512];
    std::string svg;
    std::snprintf(buf, sizeof buf,
                  "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.3f %.3f\">\n",
                  cols * cell_w, rows * cell_h);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<title>%s</title>\n", p.name.c_str());
    svg += buf;

    for (std::size_t pi = 0; pi < p.panels.size(); ++pi) {
        const Panel& panel = p.panels[pi];
        const Box& b = boxes[pi];
        const double ox = (static_cast<double>(pi % static_cast<std::size_t>(cols))) * cell_w + margin - b.lx;
        const double oy = (static_cast<double>(pi / static_cast<std::size_t>(cols))) * cell_h + margin;
        // y flips so authored y-up geometry reads naturally in SVG.
        auto map = [&](Vec2 v) { return Vec2{ox + v.x, oy + (b.hy - v.y)}; };
        std::snprintf(buf, sizeof buf, "<g id=\"panel-%zu\" data-name=\"%s\">\n", pi,
                      panel.name.c_str());
        svg += buf;
        for (std::size_t ei = 0; ei < panel.edges.size(); ++ei) {
            const Edge2D& e = panel.edges[ei];
            const Vec2 a = map(e.start);
            const Vec2 z = map(panel.edges[(ei + 1) % panel.edges.size()].start);
            std::string d;
            char seg[256];
            std::snprintf(seg, sizeof seg, "M %.3f %.3f ", a.x, a.y);
            d += seg;
            if (e.arc) {
                // flipped y reverses the sweep orientation
                std::snprintf(seg, sizeof seg, "A %.3f %.3f 0 %d %d %.3f %.3f", e.arc->radius,
                              e.arc->radius, e.arc->large_arc ? 1 : 0, e.arc->ccw ? 0 : 1, z.x,
                              z.y);
            } else if (e.control_points.size() == 1) {
                const Vec2 c = map(e.control_points[0]);
                std::snprintf(seg, sizeof seg, "Q %.3f %.3f %.3f %.3f", c.x, c.y, z.x, z.y);
            } else if (e.control_points.size() == 2) {
                const Vec2 c0 = map(e.control_points[0]);
                const Vec2 c1 = map(e.control_points[1]);
                std::snprintf(seg, sizeof seg, "C %.3f %.3f %.3f %.3f %.3f %.3f", c0.x, c0.y, c1.x,
                              c1.y, z.x, z.y);
            } else {
                std::snprintf(seg, sizeof seg, "L %.3f %.3f", z.x, z.y);
            }
            d += seg;
            auto it = edge_color.find({static_cast<int>(pi), static_cast<int>(ei)});
            const std::string color = it == edge_color.end() ? "#000000" : it->second;
            std::snprintf(buf, sizeof buf,
                          "<path d=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"0.6\"/>\n",
                          d.c_str(), color.c_str());
            svg += buf;
        }
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace gdk
