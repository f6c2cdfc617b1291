#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdk/io.hpp"
#include "gdk/pattern_json.hpp"
#include "gdk/rng.hpp"
#include "gdk/tokenizer.hpp"

namespace gdk {

struct CorpusEntry {
    Pattern pattern;
    std::string brief;
    std::string detailed;
    std::vector<double> sketch;  // 64x64 grayscale, binarized
};

namespace synth {

inline int round_cm(double v) { return static_cast<int>(std::lround(v)); }

inline std::string length_word(double length) {
    if (length < 40.0) return "mini";
    if (length < 55.0) return "knee length";
    if (length < 70.0) return "midi";
    return "maxi";
}

inline std::string shape_word(double hem_ratio) {
    if (hem_ratio < 1.15) return "pencil";
    if (hem_ratio < 1.6) return "a-line";
    return "flared";
}

// Trapezoid panel, CCW with y up: hem at y=0, waist at y=length.
inline Panel trapezoid_panel(const std::string& name, double waist_half, double hem_half,
                             double length, double hem_curve) {
    Panel p;
    p.name = name;
    Edge2D hem;
    hem.start = {-hem_half, 0.0};
    if (hem_curve > 0.0) hem.control_points.push_back({0.0, -hem_curve});
    p.edges.push_back(hem);
    p.edges.push_back({{hem_half, 0.0}, {}, std::nullopt});
    p.edges.push_back({{waist_half, length}, {}, std::nullopt});
    p.edges.push_back({{-waist_half, length}, {}, std::nullopt});
    return p;
}

inline Panel rectangle_panel(const std::string& name, double half_width, double height) {
    Panel p;
    p.name = name;
    p.edges.push_back({{-half_width, 0.0}, {}, std::nullopt});
    p.edges.push_back({{half_width, 0.0}, {}, std::nullopt});
    p.edges.push_back({{half_width, height}, {}, std::nullopt});
    p.edges.push_back({{-half_width, height}, {}, std::nullopt});
    return p;
}

// Bodice outline, CCW: hem, right side, right armhole, right shoulder, neck,
// left shoulder, left armhole, left side. neck_style: 0 quad scoop, 1 arc.
inline Panel bodice_panel(const std::string& name, double hem_half, double chest_half,
                          double shoulder_half, double neck_half, double length,
                          double armhole_depth, double neck_depth, int neck_style) {
    const double ya = length - armhole_depth;  // armhole bottom
    const double yn = length;                  // shoulder line
    Panel p;
    p.name = name;
    p.edges.push_back({{-hem_half, 0.0}, {}, std::nullopt});                       // hem
    p.edges.push_back({{hem_half, 0.0}, {}, std::nullopt});                        // right side
    Edge2D arm_r;                                                                  // right armhole
    arm_r.start = {chest_half, ya};
    arm_r.control_points.push_back({chest_half - armhole_depth * 0.45, ya + armhole_depth * 0.5});
    p.edges.push_back(arm_r);
    p.edges.push_back({{shoulder_half, yn}, {}, std::nullopt});  // right shoulder
    Edge2D neck;                                                 // neck scoop, right to left
    neck.start = {neck_half, yn};
    if (neck_style == 1) {
        // minor clockwise arc bulging into the panel
        neck.arc = ArcParams{neck_half * 1.4, false, false};
    } else {
        neck.control_points.push_back({0.0, yn - neck_depth});
    }
    p.edges.push_back(neck);
    p.edges.push_back({{-neck_half, yn}, {}, std::nullopt});   // left shoulder
    Edge2D arm_l;                                               // left armhole
    arm_l.start = {-shoulder_half, yn};
    arm_l.control_points.push_back({-chest_half + armhole_depth * 0.45, ya + armhole_depth * 0.5});
    p.edges.push_back(arm_l);
    p.edges.push_back({{-chest_half, ya}, {}, std::nullopt});  // left side
    return p;
}

struct SkirtParams {
    double length, waist_half, hem_ratio, hem_curve, band_height, gore_radius;
    bool gored, waistband;
    int n_gores;
};

inline CorpusEntry make_skirt(const std::string& name, Rng& rng) {
    SkirtParams sp;
    sp.length = 35.0 + rng.uniform() * 45.0;
    sp.waist_half = 15.0 + rng.uniform() * 10.0;
    sp.hem_ratio = 1.0 + rng.uniform() * 1.0;
    sp.hem_curve = rng.uniform() < 0.5 ? 2.0 + rng.uniform() * 3.0 : 0.0;
    sp.gored = rng.uniform() < 0.35;
    sp.waistband = !sp.gored && rng.uniform() < 0.5;
    sp.band_height = 4.0 + rng.uniform() * 3.0;
    sp.gore_radius = 10.0 + rng.uniform() * 6.0;
    sp.n_gores = 4 + 2 * static_cast<int>(rng.uniform_int(3));  // 4, 6 or 8
    const double hem_half = sp.waist_half * sp.hem_ratio;
    const double z0 = 5.0;

    CorpusEntry e;
    e.pattern.name = name;
    if (sp.gored) {
        // identical gores around the vertical axis
        const int n = sp.n_gores;
        const double gore_waist = sp.waist_half * 2.2 / n;
        const double gore_hem = hem_half * 2.2 / n;
        for (int g = 0; g < n; ++g) {
            Panel gore = trapezoid_panel("gore_" + std::to_string(g), gore_waist, gore_hem,
                                         sp.length, 0.0);
            gore.rotation_deg = {0.0, 360.0 * g / n, 0.0};
            const double ang = deg_to_rad(360.0 * g / n);
            gore.translation = {sp.gore_radius * std::sin(ang), 0.0, sp.gore_radius * std::cos(ang)};
            e.pattern.panels.push_back(std::move(gore));
        }
        for (int g = 0; g < n; ++g)
            e.pattern.stitches.push_back({{g, 1}, {(g + 1) % n, 3}});
    } else {
        Panel front = trapezoid_panel("front", sp.waist_half, hem_half, sp.length, sp.hem_curve);
        front.translation = {0.0, 0.0, z0};
        Panel back = trapezoid_panel("back", sp.waist_half, hem_half, sp.length, sp.hem_curve);
        back.rotation_deg = {0.0, 180.0, 0.0};
        back.translation = {0.0, 0.0, -z0};
        e.pattern.panels.push_back(std::move(front));
        e.pattern.panels.push_back(std::move(back));
        e.pattern.stitches.push_back({{0, 1}, {1, 3}});
        e.pattern.stitches.push_back({{0, 3}, {1, 1}});
        if (sp.waistband) {
            Panel band_f = rectangle_panel("waistband_front", sp.waist_half, sp.band_height);
            band_f.translation = {0.0, sp.length, z0};
            Panel band_b = rectangle_panel("waistband_back", sp.waist_half, sp.band_height);
            band_b.rotation_deg = {0.0, 180.0, 0.0};
            band_b.translation = {0.0, sp.length, -z0};
            e.pattern.panels.push_back(std::move(band_f));
            e.pattern.panels.push_back(std::move(band_b));
            e.pattern.stitches.push_back({{0, 2}, {2, 0}});
            e.pattern.stitches.push_back({{1, 2}, {3, 0}});
        }
    }

    const std::string lw = length_word(sp.length);
    const std::string sw = shape_word(sp.hem_ratio);
    if (sp.gored) {
        e.brief = lw + " gored skirt with " + std::to_string(sp.n_gores) + " panels";
        e.detailed = "a " + lw + " skirt assembled from " + std::to_string(sp.n_gores) +
                     " gores, each " + std::to_string(round_cm(sp.length)) + " cm long and " +
                     std::to_string(round_cm(2 * hem_half * 2.2 / sp.n_gores)) +
                     " cm at the hem, stitched side to side around the waist";
    } else {
        e.brief = lw + " " + sw + " skirt";
        e.detailed = "a " + sw + " skirt, " + std::to_string(round_cm(sp.length)) +
                     " cm long, front panel " + std::to_string(round_cm(2 * sp.waist_half)) +
                     " cm across the waist and " + std::to_string(round_cm(2 * hem_half)) +
                     " cm at the hem, with a matching back panel" +
                     (sp.hem_curve > 0.0 ? ", curved hem" : ", straight hem") +
                     (sp.waistband ? ", finished with front and back waistband pieces" : "");
    }
    return e;
}

inline CorpusEntry make_top(const std::string& name, Rng& rng) {
    const double length = 30.0 + rng.uniform() * 20.0;
    const double hem_half = 18.0 + rng.uniform() * 8.0;
    const double chest_half = hem_half * (0.9 + rng.uniform() * 0.15);
    const double shoulder_half = chest_half * 0.62;
    const double neck_half = 6.0 + rng.uniform() * 3.0;
    const double armhole_depth = 9.0 + rng.uniform() * 4.0;
    const double neck_depth = 4.0 + rng.uniform() * 4.0;
    const int neck_style = rng.uniform() < 0.5 ? 1 : 0;
    const double z0 = 4.0;

    CorpusEntry e;
    e.pattern.name = name;
    Panel front = bodice_panel("front", hem_half, chest_half, shoulder_half, neck_half, length,
                               armhole_depth, neck_depth, neck_style);
    front.translation = {0.0, 0.0, z0};
    Panel back = bodice_panel("back", hem_half, chest_half, shoulder_half, neck_half, length,
                              armhole_depth, neck_depth * 0.4, 0);
    back.rotation_deg = {0.0, 180.0, 0.0};
    back.translation = {0.0, 0.0, -z0};
    e.pattern.panels.push_back(std::move(front));
    e.pattern.panels.push_back(std::move(back));
    e.pattern.stitches.push_back({{0, 1}, {1, 7}});  // right side seam
    e.pattern.stitches.push_back({{0, 7}, {1, 1}});  // left side seam
    e.pattern.stitches.push_back({{0, 3}, {1, 5}});  // right shoulder
    e.pattern.stitches.push_back({{0, 5}, {1, 3}});  // left shoulder

    const std::string neck_word = neck_style == 1 ? "round" : "scoop";
    e.brief = (length < 38.0 ? "cropped top with a " : "top with a ") + neck_word + " neckline";
    e.detailed = "a sleeveless top with front and back bodice panels, " +
                 std::to_string(round_cm(length)) + " cm long and " +
                 std::to_string(round_cm(2 * hem_half)) + " cm at the hem, " + neck_word +
                 " neckline " + std::to_string(round_cm(2 * neck_half)) +
                 " cm wide, joined at the sides and shoulders";
    return e;
}

inline CorpusEntry make_dress(const std::string& name, Rng& rng) {
    const double skirt_len = 40.0 + rng.uniform() * 35.0;
    const double bodice_len = 28.0 + rng.uniform() * 8.0;
    const double waist_half = 16.0 + rng.uniform() * 6.0;
    const double hem_ratio = 1.1 + rng.uniform() * 0.9;
    const double chest_half = waist_half * (1.05 + rng.uniform() * 0.1);
    const double shoulder_half = chest_half * 0.6;
    const double neck_half = 6.0 + rng.uniform() * 3.0;
    const double neck_depth = 5.0 + rng.uniform() * 4.0;
    const int neck_style = rng.uniform() < 0.5 ? 1 : 0;
    const double z0 = 5.0;

    CorpusEntry e;
    e.pattern.name = name;
    Panel bod_f = bodice_panel("bodice_front", waist_half, chest_half, shoulder_half, neck_half,
                               bodice_len, 10.0, neck_depth, neck_style);
    bod_f.translation = {0.0, skirt_len, z0};
    Panel bod_b = bodice_panel("bodice_back", waist_half, chest_half, shoulder_half, neck_half,
                               bodice_len, 10.0, neck_depth * 0.4, 0);
    bod_b.rotation_deg = {0.0, 180.0, 0.0};
    bod_b.translation = {0.0, skirt_len, -z0};
    const bool gored_skirt = rng.uniform() < 0.5;
    e.pattern.panels.push_back(std::move(bod_f));
    e.pattern.panels.push_back(std::move(bod_b));
    if (gored_skirt) {
        const int n = 4;
        const double gore_waist = waist_half * 2.2 / n;
        const double gore_hem = gore_waist * hem_ratio;
        for (int g = 0; g < n; ++g) {
            Panel gore = trapezoid_panel("gore_" + std::to_string(g), gore_waist, gore_hem,
                                         skirt_len, 0.0);
            gore.rotation_deg = {0.0, 360.0 * g / n, 0.0};
            const double ang = deg_to_rad(360.0 * g / n);
            gore.translation = {8.0 * std::sin(ang), 0.0, 8.0 * std::cos(ang)};
            e.pattern.panels.push_back(std::move(gore));
        }
        e.pattern.stitches.push_back({{0, 1}, {1, 7}});
        e.pattern.stitches.push_back({{0, 7}, {1, 1}});
        for (int g = 0; g < n; ++g)
            e.pattern.stitches.push_back({{2 + g, 1}, {2 + (g + 1) % n, 3}});
        e.pattern.stitches.push_back({{0, 0}, {2, 2}});  // bodice front to front gore
        e.pattern.stitches.push_back({{1, 0}, {4, 2}});  // bodice back to back gore
    } else {
        Panel sk_f = trapezoid_panel("skirt_front", waist_half, waist_half * hem_ratio, skirt_len, 0.0);
        sk_f.translation = {0.0, 0.0, z0};
        Panel sk_b = trapezoid_panel("skirt_back", waist_half, waist_half * hem_ratio, skirt_len, 0.0);
        sk_b.rotation_deg = {0.0, 180.0, 0.0};
        sk_b.translation = {0.0, 0.0, -z0};
        e.pattern.panels.push_back(std::move(sk_f));
        e.pattern.panels.push_back(std::move(sk_b));
        e.pattern.stitches.push_back({{0, 1}, {1, 7}});
        e.pattern.stitches.push_back({{0, 7}, {1, 1}});
        e.pattern.stitches.push_back({{2, 1}, {3, 3}});
        e.pattern.stitches.push_back({{2, 3}, {3, 1}});
        e.pattern.stitches.push_back({{0, 0}, {2, 2}});  // front waist seam
        e.pattern.stitches.push_back({{1, 0}, {3, 2}});  // back waist seam
    }

    const double total = skirt_len + bodice_len;
    e.brief = length_word(total) + " " + shape_word(hem_ratio) +
              (gored_skirt ? " gored dress" : " dress");
    e.detailed = "a " + shape_word(hem_ratio) + " dress with bodice front and back panels " +
                 std::to_string(round_cm(bodice_len)) + " cm long joined at the waist to " +
                 (gored_skirt ? std::string("four gore panels ") : std::string("skirt panels ")) +
                 std::to_string(round_cm(skirt_len)) + " cm long, " +
                 std::to_string(round_cm(2 * waist_half)) + " cm across the waist, " +
                 (neck_style == 1 ? "round" : "scoop") + " neckline";
    return e;
}

// Flattened polyline of one placed edge, projected to the xy plane.
inline std::vector<Vec2> edge_polyline_2d(const Panel& panel, std::size_t edge_idx) {
    const Edge2D& e = panel.edges[edge_idx];
    const Edge2D& next = panel.edges[(edge_idx + 1) % panel.edges.size()];
    std::vector<Vec2> pts;
    if (e.arc) {
        pts = sample_arc(e.start, next.start, e.arc->radius, e.arc->large_arc, e.arc->ccw, 16);
    } else if (e.control_points.size() == 1) {
        for (int i = 0; i <= 12; ++i)
            pts.push_back(quad_bezier_point(e.start, e.control_points[0], next.start, i / 12.0));
    } else if (e.control_points.size() == 2) {
        for (int i = 0; i <= 12; ++i)
            pts.push_back(cubic_bezier_point(e.start, e.control_points[0], e.control_points[1],
                                             next.start, i / 12.0));
    } else {
        pts = {e.start, next.start};
    }
    return pts;
}

inline void draw_line(std::vector<double>& img, int w, int h, double x0, double y0, double x1,
                      double y1) {
    int ix0 = static_cast<int>(std::lround(x0)), iy0 = static_cast<int>(std::lround(y0));
    const int ix1 = static_cast<int>(std::lround(x1)), iy1 = static_cast<int>(std::lround(y1));
    const int dx = std::abs(ix1 - ix0), dy = -std::abs(iy1 - iy0);
    const int sx = ix0 < ix1 ? 1 : -1, sy = iy0 < iy1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (ix0 >= 0 && ix0 < w && iy0 >= 0 && iy0 < h)
            img[static_cast<std::size_t>(iy0) * w + ix0] = 1.0;
        if (ix0 == ix1 && iy0 == iy1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            ix0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            iy0 += sy;
        }
    }
}

}  // namespace synth

// Orthographic front view (x, y of the placed panels) rasterized as 1-pixel
// polylines; odd-numbered panels are nudged sideways so mirrored backs do not
// vanish behind fronts. Binarized at 0.5.
inline std::vector<double> render_sketch(const Pattern& p) {
    constexpr int kW = 64, kH = 64;
    const double offset_step = 3.0;  // cm
    std::vector<std::vector<Vec2>> lines;
    double lx = 1e30, hx = -1e30, ly = 1e30, hy = -1e30;
    for (std::size_t pi = 0; pi < p.panels.size(); ++pi) {
        const Panel& panel = p.panels[static_cast<std::size_t>(pi)];
        const Mat3 rot = rotation_from_euler_deg(panel.rotation_deg);
        const double dx = offset_step * static_cast<double>(pi % 2);
        for (std::size_t ei = 0; ei < panel.edges.size(); ++ei) {
            std::vector<Vec2> pts2 = synth::edge_polyline_2d(panel, ei);
            std::vector<Vec2> line;
            for (Vec2 q : pts2) {
                const Vec3 placed = rot.apply({q.x, q.y, 0.0}) + panel.translation;
                const Vec2 v{placed.x + dx, placed.y};
                lx = std::min(lx, v.x);
                hx = std::max(hx, v.x);
                ly = std::min(ly, v.y);
                hy = std::max(hy, v.y);
                line.push_back(v);
            }
            lines.push_back(std::move(line));
        }
    }
    std::vector<double> img(static_cast<std::size_t>(kW) * kH, 0.0);
    const double span = std::max({hx - lx, hy - ly, 1e-9});
    const double scale = (kW - 5) / span;
    auto px = [&](Vec2 v) {
        return Vec2{2.0 + (v.x - lx) * scale, kH - 3.0 - (v.y - ly) * scale};
    };
    for (const auto& line : lines)
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
            const Vec2 a = px(line[i]), b = px(line[i + 1]);
            synth::draw_line(img, kW, kH, a.x, a.y, b.x, b.y);
        }
    for (double& v : img) v = v >= 0.5 ? 1.0 : 0.0;
    return img;
}

// Deterministic corpus: families cycle skirt -> top -> dress.
inline std::vector<CorpusEntry> generate_corpus(int n, std::uint64_t seed) {
    if (n < 1) throw UsageError("generate_corpus: n must be >= 1");
    std::vector<CorpusEntry> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(Rng::mix(seed, "entry-" + std::to_string(i)));
        char name[32];
        std::snprintf(name, sizeof name, "%04d", i);
        CorpusEntry e;
        switch (i % 3) {
            case 0: e = synth::make_skirt(std::string("skirt_") + name, rng); break;
            case 1: e = synth::make_top(std::string("top_") + name, rng); break;
            default: e = synth::make_dress(std::string("dress_") + name, rng); break;
        }
        // Canonical files carry 9 significant digits; regenerating through the
        // JSON round trip keeps in-memory and on-disk corpora identical.
        e.pattern = pattern_from_json(pattern_to_json(e.pattern));
        e.sketch = render_sketch(e.pattern);
        out.push_back(std::move(e));
    }
    return out;
}

inline std::string corpus_entry_dir(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return buf;
}

inline void write_corpus(const std::vector<CorpusEntry>& entries, const std::string& dir,
                         std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["seed"] = seed;
    manifest["count"] = entries.size();
    manifest["entries"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string sub = corpus_entry_dir(static_cast<int>(i));
        fs::create_directories(fs::path(dir) / sub);
        const std::string base = (fs::path(dir) / sub).string();
        save_pattern(entries[i].pattern, base + "/pattern.json");
        write_text_file(base + "/brief.txt", entries[i].brief + "\n");
        write_text_file(base + "/detailed.txt", entries[i].detailed + "\n");
        write_pgm(base + "/sketch.pgm", entries[i].sketch, 64, 64);
        manifest["entries"].push_back(sub);
    }
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

inline std::vector<CorpusEntry> load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("cannot parse corpus manifest: " + std::string(e.what()));
    }
    std::vector<CorpusEntry> out;
    for (const auto& sub : manifest.at("entries")) {
        const std::string base = (fs::path(dir) / sub.get<std::string>()).string();
        CorpusEntry e;
        e.pattern = load_pattern(base + "/pattern.json");
        e.brief = read_text_file(base + "/brief.txt");
        e.detailed = read_text_file(base + "/detailed.txt");
        while (!e.brief.empty() && e.brief.back() == '\n') e.brief.pop_back();
        while (!e.detailed.empty() && e.detailed.back() == '\n') e.detailed.pop_back();
        int w = 0, h = 0;
        e.sketch = read_pgm(base + "/sketch.pgm", w, h);
        if (w != 64 || h != 64) throw ValidationError("corpus sketch is not 64x64: " + base);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace gdk
