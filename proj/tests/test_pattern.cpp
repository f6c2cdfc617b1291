#include <catch2/catch_amalgamated.hpp>

#include "gdk/pattern.hpp"
#include "gdk/pattern_json.hpp"
#include "helpers.hpp"

using namespace gdk;

namespace {

Pattern two_rectangles_stitched() {
    Pattern p;
    p.name = "rects";
    Panel a = oracle::centered_square_panel(1.0);
    a.name = "left";
    Panel b = oracle::centered_square_panel(1.0);
    b.name = "right";
    b.translation = {3, 0, 0};
    p.panels = {a, b};
    p.stitches.push_back({{0, 1}, {1, 3}});
    p.stitches.push_back({{0, 3}, {1, 1}});
    return p;
}

}  // namespace

TEST_CASE("place_panel identity and z-rotation") {
    Panel p = oracle::centered_square_panel();
    p.edges[0].start = {3, 4};
    auto placed = place_panel(p);
    REQUIRE(placed[0].start.x == Catch::Approx(3.0));
    REQUIRE(placed[0].start.y == Catch::Approx(4.0));
    REQUIRE(placed[0].start.z == Catch::Approx(0.0));

    Panel q = oracle::centered_square_panel();
    q.edges[0].start = {1, 0};
    q.rotation_deg = {0, 0, 90};
    auto placed_q = place_panel(q);
    REQUIRE(placed_q[0].start.x == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(placed_q[0].start.y == Catch::Approx(1.0));
    REQUIRE(placed_q[0].start.z == Catch::Approx(0.0));
}

TEST_CASE("place_panel matches the matrix-composition oracle") {
    Panel p = oracle::centered_square_panel();
    p.edges[0].start = {1, 1};
    p.rotation_deg = {30, 45, 60};
    p.translation = {1, 2, 3};
    const auto placed = place_panel(p);
    const auto m = oracle::euler_xyz_matrix(30, 45, 60);
    const Vec3 expected = oracle::apply_mat(m, {1, 1, 0}) + Vec3{1, 2, 3};
    REQUIRE((placed[0].start - expected).norm() < 1e-12);
}

TEST_CASE("place_panel preserves pairwise distances") {
    Rng rng(7);
    Panel p;
    p.name = "poly";
    for (int i = 0; i < 6; ++i)
        p.edges.push_back({{rng.uniform() * 20 - 10, rng.uniform() * 20 - 10}, {}, std::nullopt});
    p.rotation_deg = {17, -33, 118};
    p.translation = {4, -2, 9};
    const auto placed = place_panel(p);
    for (std::size_t i = 0; i < p.edges.size(); ++i)
        for (std::size_t j = i + 1; j < p.edges.size(); ++j) {
            const double d2 = (p.edges[i].start - p.edges[j].start).norm();
            const double d3 = (placed[i].start - placed[j].start).norm();
            REQUIRE(d3 == Catch::Approx(d2).epsilon(1e-9));
        }
}

TEST_CASE("stitch tags average the four endpoints and stay symmetric") {
    Pattern p = two_rectangles_stitched();
    std::vector<std::vector<PlacedEdge>> placed;
    for (const auto& panel : p.panels) placed.push_back(place_panel(panel));
    compute_stitch_tags(p, placed);
    for (const Stitch& s : p.stitches) {
        const auto& ea = placed[static_cast<std::size_t>(s.first.panel)][static_cast<std::size_t>(s.first.edge)];
        const auto& eb = placed[static_cast<std::size_t>(s.second.panel)][static_cast<std::size_t>(s.second.edge)];
        REQUIRE(ea.stitch_flag == 1);
        REQUIRE(eb.stitch_flag == 1);
        REQUIRE((ea.stitch_tag - eb.stitch_tag).norm() == 0.0);  // exact
        // endpoint-average oracle
        auto& loop_a = placed[static_cast<std::size_t>(s.first.panel)];
        auto& loop_b = placed[static_cast<std::size_t>(s.second.panel)];
        const Vec3 sum = loop_a[static_cast<std::size_t>(s.first.edge)].start +
                         loop_a[(static_cast<std::size_t>(s.first.edge) + 1) % loop_a.size()].start +
                         loop_b[static_cast<std::size_t>(s.second.edge)].start +
                         loop_b[(static_cast<std::size_t>(s.second.edge) + 1) % loop_b.size()].start;
        REQUIRE((ea.stitch_tag - sum * 0.25).norm() < 1e-12);
    }
    // unstitched edges keep zero tag and flag
    REQUIRE(placed[0][0].stitch_flag == 0);
    REQUIRE(placed[0][0].stitch_tag.norm() == 0.0);
}

TEST_CASE("stitch tag on a simple shared segment") {
    // edge A endpoints (0,0,0)-(1,0,0); edge B endpoints (1,0,0)-(0,0,0)
    Pattern p;
    Panel a;
    a.name = "a";
    a.edges.push_back({{0, 0}, {}, std::nullopt});
    a.edges.push_back({{1, 0}, {}, std::nullopt});
    a.edges.push_back({{1, 1}, {}, std::nullopt});
    a.edges.push_back({{0, 1}, {}, std::nullopt});
    Panel b;
    b.name = "b";
    b.edges.push_back({{1, 0}, {}, std::nullopt});
    b.edges.push_back({{0, 0}, {}, std::nullopt});
    b.edges.push_back({{0, -1}, {}, std::nullopt});
    b.edges.push_back({{1, -1}, {}, std::nullopt});
    p.name = "pair";
    p.panels = {a, b};
    p.stitches.push_back({{0, 0}, {1, 0}});
    std::vector<std::vector<PlacedEdge>> placed;
    for (const auto& panel : p.panels) placed.push_back(place_panel(panel));
    compute_stitch_tags(p, placed);
    REQUIRE((placed[0][0].stitch_tag - Vec3{0.5, 0, 0}).norm() < 1e-15);
    REQUIRE((placed[1][0].stitch_tag - Vec3{0.5, 0, 0}).norm() < 1e-15);
}

TEST_CASE("pattern with no stitches keeps all tags zero") {
    Pattern p;
    p.name = "plain";
    p.panels.push_back(oracle::centered_square_panel());
    std::vector<std::vector<PlacedEdge>> placed;
    placed.push_back(place_panel(p.panels[0]));
    compute_stitch_tags(p, placed);
    for (const auto& pe : placed[0]) {
        REQUIRE(pe.stitch_flag == 0);
        REQUIRE(pe.stitch_tag.norm() == 0.0);
    }
}

TEST_CASE("recover_placement canonical poses") {
    Panel sq = oracle::centered_square_panel(1.0);
    SECTION("axis-aligned square in the xy plane") {
        const auto rec = recover_placement(placed_loop_points(place_panel(sq)));
        REQUIRE_FALSE(rec.degenerate);
        REQUIRE(rec.translation.norm() < 1e-12);
        REQUIRE(rec.rotation_deg.x == Catch::Approx(0.0).margin(1e-9));
        REQUIRE(rec.rotation_deg.y == Catch::Approx(0.0).margin(1e-9));
        REQUIRE(rec.rotation_deg.z == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("pure translation") {
        sq.translation = {0, 0, 7};
        const auto rec = recover_placement(placed_loop_points(place_panel(sq)));
        REQUIRE((rec.translation - Vec3{0, 0, 7}).norm() < 1e-12);
        REQUIRE(std::abs(rec.rotation_deg.x) < 1e-9);
        REQUIRE(std::abs(rec.rotation_deg.y) < 1e-9);
        REQUIRE(std::abs(rec.rotation_deg.z) < 1e-9);
    }
}

TEST_CASE("recover_placement round-trips through place_panel") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        Panel p;
        p.name = "t";
        // centered CCW pentagon with first chord along +x, mildly perturbed radii
        std::vector<Vec2> verts;
        for (int i = 0; i < 5; ++i) {
            const double ang = 2 * kPi * i / 5 - kPi / 2;
            const double rad = 4.0 + rng.uniform();
            verts.push_back({rad * std::cos(ang), rad * std::sin(ang)});
        }
        Vec2 c{};
        for (auto& v : verts) c = c + v;
        c = c * (1.0 / 5);
        for (auto& v : verts) p.edges.push_back({v - c, {}, std::nullopt});
        p.rotation_deg = {rng.uniform() * 40 - 20, rng.uniform() * 40 - 20, rng.uniform() * 80 - 40};
        p.translation = {rng.uniform() * 10, rng.uniform() * 10, rng.uniform() * 10};

        const auto placed = placed_loop_points(place_panel(p));
        const auto rec = recover_placement(placed);
        REQUIRE_FALSE(rec.degenerate);

        // canonical frame of the 2D loop itself
        Panel flat = p;
        flat.rotation_deg = {};
        flat.translation = {};
        const auto rec0 = recover_placement(placed_loop_points(place_panel(flat)));
        const Mat3 applied = rotation_from_euler_deg(p.rotation_deg);
        const Mat3 canon = rotation_from_euler_deg(rec0.rotation_deg);
        const Mat3 expected = applied.mul(canon);
        const Mat3 got = rotation_from_euler_deg(rec.rotation_deg);
        for (int k = 0; k < 9; ++k)
            REQUIRE(got.m[static_cast<std::size_t>(k)] ==
                    Catch::Approx(expected.m[static_cast<std::size_t>(k)]).margin(1e-6));

        // recovered 2D points equal the centered 2D points up to the canonical frame
        for (std::size_t i = 0; i < rec.points2d.size(); ++i) {
            REQUIRE(rec.points2d[i].x == Catch::Approx(rec0.points2d[i].x).margin(1e-6));
            REQUIRE(rec.points2d[i].y == Catch::Approx(rec0.points2d[i].y).margin(1e-6));
        }
    }
}

TEST_CASE("recover_placement flags collinear input") {
    const std::vector<Vec3> line = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
    const auto rec = recover_placement(line);
    REQUIRE(rec.degenerate);
    REQUIRE(rec.rotation_deg.norm() == 0.0);
}

TEST_CASE("pattern validation catches structural errors") {
    Pattern p = two_rectangles_stitched();
    SECTION("valid fixture passes") { REQUIRE_NOTHROW(validate_pattern(p)); }
    SECTION("dangling stitch panel index") {
        p.stitches[0].second.panel = 5;
        REQUIRE_THROWS_AS(validate_pattern(p), ValidationError);
    }
    SECTION("edge used twice") {
        p.stitches[1] = {{0, 1}, {1, 2}};
        REQUIRE_THROWS_AS(validate_pattern(p), ValidationError);
    }
    SECTION("self stitch") {
        p.stitches[0].second = p.stitches[0].first;
        REQUIRE_THROWS_AS(validate_pattern(p), ValidationError);
    }
    SECTION("too few edges") {
        p.panels[0].edges.resize(2);
        REQUIRE_THROWS_AS(validate_pattern(p), ValidationError);
    }
    SECTION("arc with control points") {
        p.panels[0].edges[0].arc = ArcParams{1.0, false, true};
        p.panels[0].edges[0].control_points.push_back({0, 0});
        REQUIRE_THROWS_AS(validate_pattern(p), ValidationError);
    }
}

TEST_CASE("pattern JSON round trip") {
    oracle::TempDir tmp("pattern_json");
    Pattern p = two_rectangles_stitched();
    p.panels[0].edges[0].control_points.push_back({0.25, -0.5});
    p.panels[1].edges[2].arc = ArcParams{1.75, false, true};
    const std::string path = tmp.file("p.json");
    save_pattern(p, path);

    SECTION("load returns the same pattern") {
        const Pattern q = load_pattern(path);
        REQUIRE(q.name == p.name);
        REQUIRE(oracle::patterns_equal(p, q, 1e-9));
        REQUIRE(q.panels[1].edges[2].arc->radius == Catch::Approx(1.75));
        REQUIRE(q.panels[1].edges[2].arc->ccw);
    }
    SECTION("save(load(file)) is byte-stable") {
        const Pattern q = load_pattern(path);
        save_pattern(q, tmp.file("q.json"));
        REQUIRE(read_text_file(path) == read_text_file(tmp.file("q.json")));
    }
    SECTION("unit square fixture") {
        Pattern sq;
        sq.name = "unit";
        sq.panels.push_back(oracle::centered_square_panel());
        save_pattern(sq, tmp.file("sq.json"));
        const Pattern back = load_pattern(tmp.file("sq.json"));
        REQUIRE(back.panels.size() == 1);
        REQUIRE(back.panels[0].edges.size() == 4);
        REQUIRE(back.stitches.empty());
    }
    SECTION("malformed file is a parse error") {
        write_text_file(tmp.file("bad.json"), "{not json");
        REQUIRE_THROWS_AS(load_pattern(tmp.file("bad.json")), ParseError);
    }
    SECTION("dangling stitch reference fails validation") {
        write_text_file(
            tmp.file("dangling.json"),
            R"({"name":"x","panels":[{"name":"a","rotation":[0,0,0],"translation":[0,0,0],
                "edges":[{"start":[0,0],"control_points":[],"arc":null},
                         {"start":[1,0],"control_points":[],"arc":null},
                         {"start":[1,1],"control_points":[],"arc":null}]}],
                "stitches":[[[0,0],[5,1]]]})");
        REQUIRE_THROWS_AS(load_pattern(tmp.file("dangling.json")), ValidationError);
    }
}
