#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "gdk/synthgen.hpp"
#include "gdk/tokenizer.hpp"
#include "helpers.hpp"

using namespace gdk;

TEST_CASE("layout presets and token widths") {
    REQUIRE(layout_preset("garmentcode").rows() == 1443);
    REQUIRE(layout_preset("dresscode").rows() == 100);
    REQUIRE(layout_preset("sewfactory").rows() == 168);
    REQUIRE(layout_preset("dresscode").token_width() == 13);
    REQUIRE(layout_preset("sewfactory").token_width() == 13);
    REQUIRE(layout_preset("garmentcode").token_width() == 16);
    REQUIRE_THROWS_AS(layout_preset("nonsense"), UsageError);
}

TEST_CASE("compute_stats: half-range shift and scale") {
    // one panel whose x coordinates span exactly [-50, 50]
    Pattern p;
    p.name = "span";
    Panel a;
    a.name = "a";
    a.edges.push_back({{-50, 0}, {}, std::nullopt});
    a.edges.push_back({{50, 0}, {}, std::nullopt});
    a.edges.push_back({{50, 10}, {}, std::nullopt});
    a.edges.push_back({{-50, 10}, {}, std::nullopt});
    p.panels.push_back(a);
    const auto layout = layout_preset("dresscode");
    const NormStats stats = compute_stats({p}, layout);
    REQUIRE(stats.shift[0] == Catch::Approx(0.0));
    REQUIRE(stats.scale[0] == Catch::Approx(50.0));
    // unused arc radius dimension collapses to the floor
    const int arc_dim = 3 + 3 * layout.n_control_points;
    REQUIRE(stats.shift[static_cast<std::size_t>(arc_dim)] == 0.0);
    REQUIRE(stats.scale[static_cast<std::size_t>(arc_dim)] == Catch::Approx(1e-6));
    REQUIRE_THROWS_AS(compute_stats({}, layout), ValidationError);
}

TEST_CASE("every normalized corpus value lands in [-1, 1]") {
    const auto corpus = generate_corpus(100, 21);
    std::vector<Pattern> patterns;
    for (const auto& e : corpus) patterns.push_back(e.pattern);
    const auto layout = layout_preset("dresscode");
    const NormStats stats = compute_stats(patterns, layout);
    for (const auto& pat : patterns) {
        const TokenGrid g = encode(pat, layout, stats);
        for (double v : g.values) {
            REQUIRE(v >= -1.0 - 1e-9);
            REQUIRE(v <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("encode pads with exact zeros and respects row layout") {
    Pattern p;
    p.name = "sq";
    p.panels.push_back(oracle::centered_square_panel(10.0));
    const auto layout = layout_preset("dresscode");
    const NormStats stats = compute_stats({p}, layout);
    const TokenGrid g = encode(p, layout, stats);
    const int D = layout.token_width();
    for (int r = 0; r < layout.rows(); ++r) {
        double linf = 0;
        for (int d = 0; d < D; ++d) linf = std::max(linf, std::abs(g.row(r)[d]));
        if (r < 4) {
            REQUIRE(linf > 0.0);
            REQUIRE(g.edge_mask[static_cast<std::size_t>(r)] == 1);
        } else {
            REQUIRE(linf == 0.0);
            REQUIRE(g.edge_mask[static_cast<std::size_t>(r)] == 0);
        }
    }
    REQUIRE(g.panel_mask[0] == 1);
    for (int i = 1; i < layout.max_panels; ++i) REQUIRE(g.panel_mask[static_cast<std::size_t>(i)] == 0);
}

TEST_CASE("encode rejects capacity violations") {
    const auto layout = layout_preset("dresscode");
    Pattern p;
    p.name = "big";
    for (int i = 0; i < 11; ++i) p.panels.push_back(oracle::centered_square_panel());
    NormStats stats;
    stats.layout = layout;
    stats.shift.assign(static_cast<std::size_t>(layout.token_width()), 0.0);
    stats.scale.assign(static_cast<std::size_t>(layout.token_width()), 1.0);
    REQUIRE_THROWS_AS(encode(p, layout, stats), ValidationError);

    // cubic edge cannot fit a K=1 layout
    Pattern q;
    q.name = "cubic";
    Panel a = oracle::centered_square_panel();
    a.edges[0].control_points = {{0.1, 0.1}, {0.2, 0.2}};
    q.panels.push_back(a);
    REQUIRE_THROWS_AS(encode(q, layout, stats), ValidationError);
}

TEST_CASE("stats/layout mismatch is rejected") {
    Pattern p;
    p.name = "sq";
    p.panels.push_back(oracle::centered_square_panel());
    const NormStats stats = compute_stats({p}, layout_preset("dresscode"));
    REQUIRE_THROWS_AS(encode(p, layout_preset("sewfactory"), stats), ValidationError);
}

TEST_CASE("decode of an all-zero grid is an empty pattern") {
    const auto layout = layout_preset("dresscode");
    Pattern p;
    p.name = "sq";
    p.panels.push_back(oracle::centered_square_panel());
    const NormStats stats = compute_stats({p}, layout);
    const std::vector<double> zeros(static_cast<std::size_t>(layout.rows()) * layout.token_width(), 0.0);
    const DecodeResult res = decode(zeros, layout, stats);
    REQUIRE(res.pattern.panels.empty());
    REQUIRE(res.dropped_panels == 0);
}

TEST_CASE("round trip over a synthetic corpus") {
    const auto corpus = generate_corpus(60, 3);
    std::vector<Pattern> patterns;
    for (const auto& e : corpus) patterns.push_back(e.pattern);
    const auto layout = layout_preset("dresscode");
    const NormStats stats = compute_stats(patterns, layout);
    for (const auto& pat : patterns) {
        const TokenGrid g = encode(pat, layout, stats);
        const DecodeResult res = decode(g, stats);
        REQUIRE(res.dropped_panels == 0);
        REQUIRE(oracle::patterns_equal(res.pattern, pat, 1e-5));
    }
}

TEST_CASE("round trip through the K=2 layout keeps cubic controls") {
    Panel a = oracle::centered_square_panel(10.0);
    a.edges[1].control_points = {{12.0, -3.0}, {13.0, 3.0}};  // cubic side
    a.edges[0].control_points = {{0.0, -12.0}};               // quadratic hem
    Pattern p;
    p.name = "cubic";
    p.panels.push_back(a);
    const auto layout = layout_preset("garmentcode");
    const NormStats stats = compute_stats({p}, layout);
    const DecodeResult res = decode(encode(p, layout, stats), stats);
    REQUIRE(res.pattern.panels.size() == 1);
    REQUIRE(res.pattern.panels[0].edges[1].control_points.size() == 2);
    REQUIRE(res.pattern.panels[0].edges[0].control_points.size() == 1);
    REQUIRE(oracle::patterns_equal(res.pattern, p, 1e-5));
}

TEST_CASE("shuffle permutes whole panel blocks") {
    const auto corpus = generate_corpus(6, 9);
    const Pattern& pat = corpus[5].pattern;  // dress: 4 panels
    REQUIRE(pat.panels.size() >= 3);
    const auto layout = layout_preset("dresscode");
    std::vector<Pattern> patterns{pat};
    const NormStats stats = compute_stats(patterns, layout);
    const TokenGrid base = encode(pat, layout, stats);
    const TokenGrid shuf_a = encode(pat, layout, stats, 123);
    const TokenGrid shuf_b = encode(pat, layout, stats, 456);

    const int N = layout.max_edges;
    const int D = layout.token_width();
    auto blocks = [&](const TokenGrid& g) {
        std::multiset<std::vector<double>> out;
        for (int i = 0; i < layout.max_panels; ++i) {
            std::vector<double> block(g.values.begin() + static_cast<std::ptrdiff_t>(i) * N * D,
                                      g.values.begin() + static_cast<std::ptrdiff_t>(i + 1) * N * D);
            out.insert(std::move(block));
        }
        return out;
    };
    // identical multiset of panel blocks, different order for some seed
    REQUIRE(blocks(base) == blocks(shuf_a));
    REQUIRE(blocks(base) == blocks(shuf_b));
    REQUIRE(shuf_a.values != shuf_b.values);
    // padding blocks always trail
    bool seen_empty = false;
    for (int i = 0; i < layout.max_panels; ++i) {
        const bool live = shuf_a.panel_mask[static_cast<std::size_t>(i)] != 0;
        if (!live) seen_empty = true;
        REQUIRE_FALSE((seen_empty && live));
    }
}

TEST_CASE("decode after shuffle matches up to panel permutation") {
    const auto corpus = generate_corpus(12, 17);
    const auto layout = layout_preset("dresscode");
    std::vector<Pattern> patterns;
    for (const auto& e : corpus) patterns.push_back(e.pattern);
    const NormStats stats = compute_stats(patterns, layout);
    Rng rng(99);
    for (const auto& pat : patterns) {
        const TokenGrid g = encode(pat, layout, stats, rng.next_u64());
        const DecodeResult res = decode(g, stats);
        REQUIRE(oracle::patterns_equal_up_to_permutation(res.pattern, pat, 1e-5));
    }
}

TEST_CASE("token grid binary round trip") {
    oracle::TempDir tmp("grid");
    const auto corpus = generate_corpus(3, 4);
    const auto layout = layout_preset("dresscode");
    std::vector<Pattern> patterns;
    for (const auto& e : corpus) patterns.push_back(e.pattern);
    const NormStats stats = compute_stats(patterns, layout);
    const TokenGrid g = encode(patterns[0], layout, stats);
    save_grid(g, tmp.file("a.tok"));
    const TokenGrid back = load_grid(tmp.file("a.tok"));
    REQUIRE(back.layout.max_panels == g.layout.max_panels);
    REQUIRE(back.layout.max_edges == g.layout.max_edges);
    REQUIRE(back.panel_mask == g.panel_mask);
    REQUIRE(back.edge_mask == g.edge_mask);
    REQUIRE(back.values.size() == g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i)
        REQUIRE(back.values[i] == Catch::Approx(g.values[i]).margin(1e-6));  // f32 payload
    REQUIRE_THROWS_AS(load_grid(tmp.file("missing.tok")), ParseError);
}

TEST_CASE("stats JSON round trip") {
    oracle::TempDir tmp("stats");
    const auto corpus = generate_corpus(4, 5);
    std::vector<Pattern> patterns;
    for (const auto& e : corpus) patterns.push_back(e.pattern);
    const NormStats stats = compute_stats(patterns, layout_preset("dresscode"));
    save_stats(stats, tmp.file("s.json"));
    const NormStats back = load_stats(tmp.file("s.json"));
    REQUIRE(back.layout.preset == "dresscode");
    REQUIRE(back.shift == stats.shift);
    REQUIRE(back.scale == stats.scale);
}
