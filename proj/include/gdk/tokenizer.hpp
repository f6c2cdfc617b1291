#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdk/io.hpp"
#include "gdk/pattern.hpp"
#include "gdk/rng.hpp"

namespace gdk {

// Fixed grid geometry: M panel blocks of N edge rows, token width
// D = 3 (start) + 3K (controls) + 3 (arc) + 3 (stitch tag) + 1 (flag).
struct TokenLayout {
    std::string preset;
    int max_panels = 0;        // M
    int max_edges = 0;         // N
    int n_control_points = 1;  // K, 1 or 2

    int token_width() const { return 10 + 3 * n_control_points; }
    int rows() const { return max_panels * max_edges; }
};

inline TokenLayout layout_preset(const std::string& name) {
    if (name == "dresscode") return {"dresscode", 10, 10, 1};
    if (name == "garmentcode") return {"garmentcode", 37, 39, 2};
    if (name == "sewfactory") return {"sewfactory", 14, 12, 1};
    throw UsageError("unknown layout preset: " + name);
}

struct NormStats {
    TokenLayout layout;
    std::vector<double> shift;  // D values
    std::vector<double> scale;  // D values, >= 1e-6

    double normalize(double v, int dim) const { return (v - shift[static_cast<std::size_t>(dim)]) / scale[static_cast<std::size_t>(dim)]; }
    double denormalize(double v, int dim) const { return v * scale[static_cast<std::size_t>(dim)] + shift[static_cast<std::size_t>(dim)]; }
};

struct TokenGrid {
    TokenLayout layout;
    std::vector<double> values;      // (M*N) x D row-major, normalized
    std::vector<uint8_t> panel_mask; // M entries
    std::vector<uint8_t> edge_mask;  // M*N entries

    double* row(int r) { return values.data() + static_cast<std::size_t>(r) * layout.token_width(); }
    const double* row(int r) const {
        return values.data() + static_cast<std::size_t>(r) * layout.token_width();
    }
};

// Raw (unnormalized) token for one placed edge.
inline std::vector<double> edge_token(const PlacedEdge& pe, const TokenLayout& layout) {
    const int K = layout.n_control_points;
    std::vector<double> tok;
    tok.reserve(static_cast<std::size_t>(layout.token_width()));
    tok.insert(tok.end(), {pe.start.x, pe.start.y, pe.start.z});
    // Control slots: real controls first, then the last defined point repeated.
    // Edges without controls (lines, arcs) repeat the start point itself.
    for (int k = 0; k < K; ++k) {
        Vec3 c = pe.start;
        if (!pe.controls.empty())
            c = pe.controls[std::min<std::size_t>(static_cast<std::size_t>(k), pe.controls.size() - 1)];
        tok.insert(tok.end(), {c.x, c.y, c.z});
    }
    tok.insert(tok.end(), {pe.arc.radius, pe.arc.large_arc ? 1.0 : 0.0, pe.arc.ccw ? 1.0 : 0.0});
    tok.insert(tok.end(), {pe.stitch_tag.x, pe.stitch_tag.y, pe.stitch_tag.z});
    tok.push_back(static_cast<double>(pe.stitch_flag));
    return tok;
}

inline void check_fits(const Pattern& p, const TokenLayout& layout) {
    if (static_cast<int>(p.panels.size()) > layout.max_panels)
        throw ValidationError("pattern '" + p.name + "' exceeds panel capacity " +
                              std::to_string(layout.max_panels));
    for (const Panel& panel : p.panels) {
        if (static_cast<int>(panel.edges.size()) > layout.max_edges)
            throw ValidationError("panel '" + panel.name + "' exceeds edge capacity " +
                                  std::to_string(layout.max_edges));
        for (const Edge2D& e : panel.edges)
            if (static_cast<int>(e.control_points.size()) > layout.n_control_points)
                throw ValidationError("panel '" + panel.name + "' needs " +
                                      std::to_string(e.control_points.size()) +
                                      " control slots but layout has " +
                                      std::to_string(layout.n_control_points));
    }
}

// Raw per-edge tokens for every panel of a pattern, in panel order.
inline std::vector<std::vector<std::vector<double>>> raw_tokens(const Pattern& p,
                                                                const TokenLayout& layout) {
    check_fits(p, layout);
    std::vector<std::vector<PlacedEdge>> placed;
    placed.reserve(p.panels.size());
    for (const Panel& panel : p.panels) placed.push_back(place_panel(panel));
    compute_stitch_tags(p, placed);
    std::vector<std::vector<std::vector<double>>> out(p.panels.size());
    for (std::size_t i = 0; i < placed.size(); ++i)
        for (const PlacedEdge& pe : placed[i]) out[i].push_back(edge_token(pe, layout));
    return out;
}

// Half-range shift/scale per dimension over all real edge tokens; guarantees
// every normalized training value lands in [-1, 1].
inline NormStats compute_stats(const std::vector<Pattern>& patterns, const TokenLayout& layout) {
    if (patterns.empty()) throw ValidationError("compute_stats: empty pattern collection");
    const int D = layout.token_width();
    std::vector<double> lo(static_cast<std::size_t>(D), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<std::size_t>(D), -std::numeric_limits<double>::infinity());
    for (const Pattern& p : patterns) {
        for (const auto& panel_tokens : raw_tokens(p, layout)) {
            for (const auto& tok : panel_tokens) {
                for (int d = 0; d < D; ++d) {
                    lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], tok[static_cast<std::size_t>(d)]);
                    hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], tok[static_cast<std::size_t>(d)]);
                }
            }
        }
    }
    NormStats stats;
    stats.layout = layout;
    stats.shift.resize(static_cast<std::size_t>(D));
    stats.scale.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        stats.shift[static_cast<std::size_t>(d)] = (hi[static_cast<std::size_t>(d)] + lo[static_cast<std::size_t>(d)]) / 2.0;
        stats.scale[static_cast<std::size_t>(d)] =
            std::max((hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)]) / 2.0, 1e-6);
    }
    return stats;
}

inline void check_stats_layout(const NormStats& stats, const TokenLayout& layout) {
    if (stats.layout.max_panels != layout.max_panels || stats.layout.max_edges != layout.max_edges ||
        stats.layout.n_control_points != layout.n_control_points)
        throw ValidationError("normalization stats belong to a different token layout");
    if (static_cast<int>(stats.shift.size()) != layout.token_width() ||
        static_cast<int>(stats.scale.size()) != layout.token_width())
        throw ValidationError("normalization stats width does not match layout");
}

// Pattern -> normalized token grid. With a shuffle seed the real panel blocks
// are permuted (edge order inside each panel is preserved and padding blocks
// always trail). Padding rows are exactly zero in normalized space.
inline TokenGrid encode(const Pattern& p, const TokenLayout& layout, const NormStats& stats,
                        std::optional<std::uint64_t> shuffle_seed = std::nullopt) {
    check_stats_layout(stats, layout);
    const auto tokens = raw_tokens(p, layout);
    const int D = layout.token_width();
    const int N = layout.max_edges;

    std::vector<std::size_t> order(tokens.size());
    std::iota(order.begin(), order.end(), 0);
    if (shuffle_seed) {
        Rng rng(*shuffle_seed);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(i))]);
    }

    TokenGrid grid;
    grid.layout = layout;
    grid.values.assign(static_cast<std::size_t>(layout.rows()) * D, 0.0);
    grid.panel_mask.assign(static_cast<std::size_t>(layout.max_panels), 0);
    grid.edge_mask.assign(static_cast<std::size_t>(layout.rows()), 0);
    for (std::size_t block = 0; block < order.size(); ++block) {
        const auto& panel_tokens = tokens[order[block]];
        grid.panel_mask[block] = 1;
        for (std::size_t j = 0; j < panel_tokens.size(); ++j) {
            const int r = static_cast<int>(block) * N + static_cast<int>(j);
            grid.edge_mask[static_cast<std::size_t>(r)] = 1;
            double* row = grid.row(r);
            for (int d = 0; d < D; ++d) row[d] = stats.normalize(panel_tokens[j][static_cast<std::size_t>(d)], d);
        }
    }
    return grid;
}

struct DecodeOptions {
    double tau_pad = 0.02;      // normalized L-inf threshold separating real rows from padding
    double tau_stitch = 3.0;    // cm, stitch tag pairing radius
    double tau_control = 0.1;   // cm, control point collapsing onto the start point
    double tau_arc_radius = 0.5;  // cm, minimum radius that counts as an arc
};

struct DecodeResult {
    Pattern pattern;
    int dropped_panels = 0;  // degenerate panels discarded during decoding
};

// Normalized values -> Pattern. Total: degenerate panels are dropped and counted.
inline DecodeResult decode(const std::vector<double>& values, const TokenLayout& layout,
                           const NormStats& stats, const DecodeOptions& opts = {}) {
    check_stats_layout(stats, layout);
    const int D = layout.token_width();
    const int N = layout.max_edges;
    const int K = layout.n_control_points;
    if (values.size() != static_cast<std::size_t>(layout.rows()) * D)
        throw ShapeError("decode: value buffer does not match layout");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("decode: non-finite token value");

    DecodeResult result;
    result.pattern.name = "decoded";

    auto row_live = [&](int r) {
        const double* row = values.data() + static_cast<std::size_t>(r) * D;
        double linf = 0.0;
        for (int d = 0; d < D; ++d) linf = std::max(linf, std::abs(row[d]));
        return linf > opts.tau_pad;
    };

    struct DecodedEdge {
        EdgeRef ref;
        Vec3 tag;
    };
    std::vector<DecodedEdge> flagged;

    for (int block = 0; block < layout.max_panels; ++block) {
        std::vector<int> live_rows;
        for (int j = 0; j < N; ++j)
            if (row_live(block * N + j)) live_rows.push_back(block * N + j);
        if (live_rows.empty()) continue;
        if (live_rows.size() < 3) {
            ++result.dropped_panels;
            continue;
        }

        // Denormalized per-edge records for this panel.
        struct RawEdge {
            Vec3 start;
            std::vector<Vec3> controls;
            double arc[3];
            Vec3 tag;
            double flag;
        };
        std::vector<RawEdge> raw;
        raw.reserve(live_rows.size());
        for (int r : live_rows) {
            const double* row = values.data() + static_cast<std::size_t>(r) * D;
            RawEdge e;
            auto dn = [&](int d) { return stats.denormalize(row[d], d); };
            e.start = {dn(0), dn(1), dn(2)};
            for (int k = 0; k < K; ++k)
                e.controls.push_back({dn(3 + 3 * k), dn(4 + 3 * k), dn(5 + 3 * k)});
            const int a0 = 3 + 3 * K;
            e.arc[0] = dn(a0);
            e.arc[1] = dn(a0 + 1);
            e.arc[2] = dn(a0 + 2);
            e.tag = {dn(a0 + 3), dn(a0 + 4), dn(a0 + 5)};
            e.flag = dn(a0 + 6);
            raw.push_back(std::move(e));
        }

        std::vector<Vec3> loop;
        for (const RawEdge& e : raw) loop.push_back(e.start);
        const RecoveredPlacement rec = recover_placement(loop);
        if (rec.degenerate) {
            ++result.dropped_panels;
            continue;
        }

        const Mat3 rot = rotation_from_euler_deg(rec.rotation_deg);
        const Mat3 rot_t = rot.transposed();
        auto to2d = [&](Vec3 p) {
            const Vec3 local = rot_t.apply(p - rec.translation);
            return Vec2{local.x, local.y};
        };

        Panel panel;
        panel.name = "panel_" + std::to_string(result.pattern.panels.size());
        panel.rotation_deg = rec.rotation_deg;
        panel.translation = rec.translation;
        const int panel_idx = static_cast<int>(result.pattern.panels.size());
        for (std::size_t j = 0; j < raw.size(); ++j) {
            const RawEdge& re = raw[j];
            Edge2D edge;
            edge.start = rec.points2d[j];
            if (re.arc[0] > opts.tau_arc_radius) {
                edge.arc = ArcParams{re.arc[0], re.arc[1] > 0.5, re.arc[2] > 0.5};
            } else {
                std::vector<Vec2> ctrl;
                for (const Vec3& c : re.controls) ctrl.push_back(to2d(c));
                // Collapse repeated slots, then a control sitting on the start point.
                while (ctrl.size() >= 2 && (ctrl.back() - ctrl[ctrl.size() - 2]).norm() < opts.tau_control)
                    ctrl.pop_back();
                if (ctrl.size() == 1 && (ctrl[0] - edge.start).norm() < opts.tau_control) ctrl.clear();
                edge.control_points = std::move(ctrl);
            }
            if (re.flag > 0.5)
                flagged.push_back({{panel_idx, static_cast<int>(j)}, re.tag});
            panel.edges.push_back(std::move(edge));
        }
        result.pattern.panels.push_back(std::move(panel));
    }

    // Stitch recovery: greedy mutual pairing by ascending tag distance.
    struct Candidate {
        double dist;
        std::size_t a, b;
    };
    std::vector<Candidate> cands;
    for (std::size_t a = 0; a < flagged.size(); ++a)
        for (std::size_t b = a + 1; b < flagged.size(); ++b) {
            const double d = (flagged[a].tag - flagged[b].tag).norm();
            if (d <= opts.tau_stitch) cands.push_back({d, a, b});
        }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.dist != y.dist) return x.dist < y.dist;
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::vector<bool> used(flagged.size(), false);
    for (const Candidate& c : cands) {
        if (used[c.a] || used[c.b]) continue;
        used[c.a] = used[c.b] = true;
        result.pattern.stitches.push_back({flagged[c.a].ref, flagged[c.b].ref});
    }
    return result;
}

inline DecodeResult decode(const TokenGrid& grid, const NormStats& stats,
                           const DecodeOptions& opts = {}) {
    return decode(grid.values, grid.layout, stats, opts);
}

// ---- stats JSON ----

inline nlohmann::ordered_json stats_to_json(const NormStats& stats) {
    nlohmann::ordered_json j;
    j["layout"] = {{"preset", stats.layout.preset},
                   {"max_panels", stats.layout.max_panels},
                   {"max_edges", stats.layout.max_edges},
                   {"n_control_points", stats.layout.n_control_points}};
    j["shift"] = stats.shift;
    j["scale"] = stats.scale;
    return j;
}

inline NormStats stats_from_json(const nlohmann::json& j) {
    NormStats stats;
    try {
        const auto& jl = j.at("layout");
        stats.layout.preset = jl.value("preset", std::string{});
        stats.layout.max_panels = jl.at("max_panels").get<int>();
        stats.layout.max_edges = jl.at("max_edges").get<int>();
        stats.layout.n_control_points = jl.at("n_control_points").get<int>();
        stats.shift = j.at("shift").get<std::vector<double>>();
        stats.scale = j.at("scale").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed stats JSON: ") + e.what());
    }
    if (static_cast<int>(stats.shift.size()) != stats.layout.token_width() ||
        stats.shift.size() != stats.scale.size())
        throw ValidationError("stats arrays do not match layout width");
    for (double s : stats.scale)
        if (s <= 0.0) throw ValidationError("stats scale must be positive");
    return stats;
}

inline void save_stats(const NormStats& stats, const std::string& path) {
    write_text_file(path, stats_to_json(stats).dump(2) + "\n");
}

inline NormStats load_stats(const std::string& path) {
    try {
        return stats_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("cannot parse " + path + ": " + e.what());
    }
}

// ---- token grid binary format ----
// 12-byte magic + u32 version, u32 M/N/D, f32 rows, then packed mask bits.

inline constexpr char kGridMagic[12] = {'G', 'D', 'K', 'T', 'O', 'K', 'G', 'R', 'I', 'D', 0, 0};

inline void save_grid(const TokenGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    write_bytes(out, kGridMagic, 12);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(grid.layout.max_panels));
    write_u32(out, static_cast<std::uint32_t>(grid.layout.max_edges));
    write_u32(out, static_cast<std::uint32_t>(grid.layout.token_width()));
    for (double v : grid.values) write_f32(out, static_cast<float>(v));
    auto write_packed = [&out](const std::vector<uint8_t>& bits) {
        for (std::size_t i = 0; i < bits.size(); i += 8) {
            unsigned char byte = 0;
            for (std::size_t b = 0; b < 8 && i + b < bits.size(); ++b)
                if (bits[i + b]) byte |= static_cast<unsigned char>(1u << b);
            out.put(static_cast<char>(byte));
        }
    };
    write_packed(grid.panel_mask);
    write_packed(grid.edge_mask);
}

inline TokenGrid load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    char magic[12];
    in.read(magic, 12);
    if (!in || std::memcmp(magic, kGridMagic, 12) != 0)
        throw ParseError("not a token grid file: " + path);
    const std::uint32_t version = read_u32(in);
    if (version != 1) throw ParseError("unsupported token grid version");
    TokenGrid grid;
    grid.layout.max_panels = static_cast<int>(read_u32(in));
    grid.layout.max_edges = static_cast<int>(read_u32(in));
    const int d = static_cast<int>(read_u32(in));
    grid.layout.n_control_points = (d - 10) / 3;
    if (grid.layout.token_width() != d) throw ParseError("inconsistent token width in " + path);
    grid.values.resize(static_cast<std::size_t>(grid.layout.rows()) * d);
    for (double& v : grid.values) v = static_cast<double>(read_f32(in));
    auto read_packed = [&in, &path](std::vector<uint8_t>& bits, std::size_t n) {
        bits.assign(n, 0);
        for (std::size_t i = 0; i < n; i += 8) {
            const int c = in.get();
            if (c == EOF) throw ParseError("truncated token grid: " + path);
            for (std::size_t b = 0; b < 8 && i + b < n; ++b)
                bits[i + b] = (static_cast<unsigned>(c) >> b) & 1u;
        }
    };
    read_packed(grid.panel_mask, static_cast<std::size_t>(grid.layout.max_panels));
    read_packed(grid.edge_mask, static_cast<std::size_t>(grid.layout.rows()));
    return grid;
}

}  // namespace gdk
