#include "fracms/io.hpp"
#include "fracms/mesh.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace fracms;

namespace {

Fracture line(double x0, double y0, double x1, double y1) { return Fracture{{{x0, y0}, {x1, y1}}}; }

// A horizontal fracture through five intermediate cells, a vertical one crossing it
// (same network) and a short isolated one.
std::vector<Fracture> hand_geometry() {
    return {line(0.05, 0.25, 0.95, 0.25), line(0.55, 0.15, 0.55, 0.35), line(0.81, 0.71, 0.89, 0.71)};
}

} // namespace

TEST_CASE("segment_distance and meeting point") {
    CHECK(segment_distance({0, 0}, {1, 1}, {0, 1}, {1, 0}) == 0.0);
    CHECK(segment_distance({0, 0}, {1, 0}, {0, 0.5}, {1, 0.5}) == doctest::Approx(0.5));
    CHECK(segment_distance({0, 0}, {1, 0}, {2, 0}, {3, 0}) == doctest::Approx(1.0));
    const Point p = segment_meeting_point({0, 0}, {1, 1}, {0, 1}, {1, 0});
    CHECK(p.x == doctest::Approx(0.5));
    CHECK(p.y == doctest::Approx(0.5));
    CHECK(line(0, 0, 3, 4).length() == doctest::Approx(5.0));
}

TEST_CASE("identify_networks on the hand geometry") {
    const auto fx = identify_networks(hand_geometry());
    CHECK(fx.network_count == 2);
    CHECK(fx.network_of[0] == fx.network_of[1]);
    CHECK(fx.network_of[2] != fx.network_of[0]);
}

TEST_CASE("identify_networks counts touching endpoints as intersecting") {
    const auto fx = identify_networks({line(0.1, 0.1, 0.5, 0.5), line(0.5, 0.5, 0.9, 0.1), line(0.1, 0.9, 0.2, 0.9)});
    CHECK(fx.network_count == 2);
    CHECK(fx.network_of[0] == fx.network_of[1]);
}

TEST_CASE("identify_networks agrees with a brute-force union-find") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 42ULL}) {
        const auto fractures = io::generate_fractures(40, seed);
        std::vector<std::pair<int, int>> edges;
        for (std::size_t i = 0; i < fractures.size(); ++i)
            for (std::size_t j = i + 1; j < fractures.size(); ++j) {
                const auto& a = fractures[i].vertices;
                const auto& b = fractures[j].vertices;
                if (oracle::segments_touch(a[0].x, a[0].y, a[1].x, a[1].y, b[0].x, b[0].y, b[1].x, b[1].y))
                    edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        const std::vector<int> expected = oracle::components(fractures.size(), edges);
        const auto fx = identify_networks(fractures);
        int expected_count = 0;
        for (int l : expected) expected_count = std::max(expected_count, l + 1);
        CHECK(fx.network_count == expected_count);
        for (std::size_t i = 0; i < fractures.size(); ++i)
            for (std::size_t j = 0; j < fractures.size(); ++j)
                CHECK((fx.network_of[i] == fx.network_of[j]) == (expected[i] == expected[j]));
    }
}

TEST_CASE("identify_networks rejects a single-vertex fracture") {
    CHECK_THROWS_AS(identify_networks({Fracture{{{0.1, 0.1}}}}), std::invalid_argument);
}

TEST_CASE("FineGrid indexing and location") {
    const FineGrid g(10, 5);
    CHECK(g.cell_count() == 50);
    CHECK(g.hx() == doctest::Approx(0.1));
    CHECK(g.hy() == doctest::Approx(0.2));
    CHECK(g.cell_area() == doctest::Approx(0.02));
    CHECK(g.index(2, 3) == 23);
    CHECK(g.row(23) == 2);
    CHECK(g.col(23) == 3);
    CHECK(g.center(23).x == doctest::Approx(0.35));
    CHECK(g.center(23).y == doctest::Approx(0.5));
    CHECK(g.locate({0.35, 0.5}) == 23);
    CHECK(g.locate({0.1, 0.05}) == 0); // edge point goes to the lower index
    CHECK(g.locate({1.0, 1.0}) == 49);
    CHECK_THROWS_AS(FineGrid(0, 3), std::invalid_argument);
}

TEST_CASE("clip_fractures splits at cell edges and preserves length") {
    const FineGrid grid(10, 10);
    const auto fx = identify_networks(hand_geometry());
    const FractureMesh fm = clip_fractures(grid, fx);
    // 0.05..0.95 at y = 0.25 crosses 9 vertical edges: 10 pieces.
    CHECK(fm.by_fracture[0].size() == 10);
    // 0.15..0.35 at x = 0.55 crosses y = 0.2 and y = 0.3: 3 pieces.
    CHECK(fm.by_fracture[1].size() == 3);
    CHECK(fm.by_fracture[2].size() == 1);
    for (std::size_t f = 0; f < fx.fractures.size(); ++f) {
        double total = 0.0, prev_s = -1.0;
        for (int s : fm.by_fracture[f]) {
            const auto& seg = fm.segments[static_cast<std::size_t>(s)];
            total += seg.length;
            CHECK(seg.fracture == static_cast<int>(f));
            CHECK(seg.network == fx.network_of[f]);
            CHECK(seg.s_mid > prev_s);
            prev_s = seg.s_mid;
            const Point c = grid.center(seg.cell);
            for (Point p : {seg.a, seg.b}) {
                CHECK(std::abs(p.x - c.x) <= 0.5 * grid.hx() + 1e-12);
                CHECK(std::abs(p.y - c.y) <= 0.5 * grid.hy() + 1e-12);
            }
        }
        CHECK(total == doctest::Approx(fx.fractures[f].length()).epsilon(1e-14));
    }
    CHECK(fm.segments[static_cast<std::size_t>(fm.by_fracture[0][0])].length == doctest::Approx(0.05));
    CHECK(fm.segments[static_cast<std::size_t>(fm.by_fracture[0][0])].s_mid == doctest::Approx(0.025));
}

TEST_CASE("clip_fractures drops the part outside the unit square") {
    const FineGrid grid(4, 4);
    const auto fx = identify_networks({line(-0.5, 0.3, 0.6, 0.3)});
    const FractureMesh fm = clip_fractures(grid, fx);
    double total = 0.0;
    for (const auto& s : fm.segments) total += s.length;
    CHECK(total == doctest::Approx(0.6));
    // Arclength is measured from the original (outside) start point.
    CHECK(fm.segments.front().s_mid == doctest::Approx(0.5 + 0.125));
}

TEST_CASE("intermediate grid continua and dof numbering") {
    const FineGrid grid(10, 10);
    const auto fx = identify_networks(hand_geometry());
    const FractureMesh fm = clip_fractures(grid, fx);
    const IntermediateGrid ig = build_intermediate_grid(grid, 5, 5, fm);
    CHECK(ig.ratio_x() == 2);
    CHECK(ig.cell_count() == 25);
    // Network 0 lies in cells 5..9 (row 1) and cell 2 (row 0); network 1 in cell 19.
    CHECK(ig.fracture_dof_count() == 7);
    CHECK(ig.dof_count() == 32);
    for (int cell : {2, 5, 6, 7, 8, 9, 19}) CHECK(ig.continuum_count(cell) == 1);
    CHECK(ig.continuum_count(0) == 0);
    CHECK(ig.dof(2, 0) == 2);
    CHECK(ig.dof(2, 1) == 25); // fracture continua grouped by cell
    CHECK(ig.dof(19, 1) == 31);
    CHECK(ig.cell_of_dof(31) == 19);
    CHECK(ig.is_matrix_dof(24));
    CHECK_FALSE(ig.is_matrix_dof(25));

    // Cell 7 holds the crossing: 0.2 of the horizontal fracture plus 0.15 of the vertical one.
    const Continuum& c7 = ig.continuum_of_dof(ig.dof(7, 1));
    CHECK(c7.measure == doctest::Approx(0.35));
    CHECK(c7.centroid.x == doctest::Approx((0.2 * 0.5 + 0.15 * 0.55) / 0.35));
    CHECK(c7.centroid.y == doctest::Approx((0.2 * 0.25 + 0.15 * 0.275) / 0.35));
    CHECK(ig.measure(ig.dof(7, 1)) == doctest::Approx(0.35));
    CHECK(ig.measure(7) == doctest::Approx(0.04));
    CHECK(ig.anchor(7).x == doctest::Approx(0.5));

    // Every segment maps to the continuum that lists it.
    for (int s = 0; s < fm.size(); ++s) {
        const int d = ig.segment_dof()[static_cast<std::size_t>(s)];
        const auto& segs = ig.continuum_of_dof(d).segments;
        CHECK(std::find(segs.begin(), segs.end(), s) != segs.end());
        CHECK(ig.cell_of_dof(d) == ig.cell_of_fine(fm.segments[static_cast<std::size_t>(s)].cell));
    }
    std::vector<int> fine = ig.fine_cells(7);
    CHECK(fine == std::vector<int>{24, 25, 34, 35});
    CHECK_THROWS_AS(build_intermediate_grid(grid, 3, 5, fm), std::invalid_argument);
}

TEST_CASE("sliver continua merge into the matrix dof") {
    const FineGrid grid(10, 10);
    // 5e-12 of the fracture lies in intermediate column 1, the rest in column 2.
    const auto fx = identify_networks({line(0.4 - 5e-12, 0.51, 0.6, 0.51)});
    const FractureMesh fm = clip_fractures(grid, fx);
    const IntermediateGrid ig = build_intermediate_grid(grid, 5, 5, fm);
    const int sliver_cell = 2 * 5 + 1;
    CHECK(ig.continuum_count(sliver_cell) == 0);
    CHECK(ig.segment_dof()[0] == sliver_cell);
    CHECK(ig.fracture_dof_count() == 1);
}

TEST_CASE("oversampled regions") {
    const FineGrid grid(10, 10);
    const auto fx = identify_networks(hand_geometry());
    const FractureMesh fm = clip_fractures(grid, fx);
    const IntermediateGrid ig = build_intermediate_grid(grid, 5, 5, fm);

    SUBCASE("corner cell, one layer") {
        const OversampleRegion r = oversample(ig, fm, 0, 1);
        CHECK(r.cells == std::vector<int>{0, 1, 5, 6});
        CHECK(r.fine_cells.size() == 16);
        CHECK_FALSE(r.saturated);
        int boundary = 0;
        for (char b : r.boundary) boundary += b;
        CHECK(boundary == 7); // fine row 3 and column 3 of the 4x4 block
        CHECK(r.contains(1, 1));
        CHECK_FALSE(r.contains(2, 0));
        // Segments whose fine cell lies in the 4x4 block: fracture 0 from x = 0.05 to 0.4.
        for (int s : r.segments) CHECK(fm.segments[static_cast<std::size_t>(s)].cell % 10 < 4);
        CHECK(r.segments.size() == 4);
    }
    SUBCASE("centre cell, two layers saturates") {
        const OversampleRegion r = oversample(ig, fm, 12, 2);
        CHECK(r.saturated);
        CHECK(r.cells.size() == 25);
        CHECK(r.segments.size() == static_cast<std::size_t>(fm.size()));
        for (char b : r.boundary) CHECK(b == 0);
    }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(oversample(ig, fm, 25, 1), std::out_of_range);
        CHECK_THROWS_AS(oversample(ig, fm, -1, 1), std::out_of_range);
        CHECK_THROWS_AS(oversample(ig, fm, 0, 0), std::invalid_argument);
    }
}

TEST_CASE("coarse grid neighbourhoods and hat functions") {
    const FineGrid grid(20, 20);
    const IntermediateGrid ig = build_intermediate_grid(grid, 10, 10, FractureMesh{});
    const CoarseGrid cg = build_coarse_grid(ig, 5, 5);
    CHECK(cg.vertex_count() == 36);
    CHECK(cg.neighborhood(0) == std::vector<int>{0});
    CHECK(cg.neighborhood(2).size() == 2);
    CHECK(cg.neighborhood(7) == std::vector<int>{0, 1, 5, 6});
    CHECK(cg.neighborhood_cells(7).size() == 16);
    CHECK(cg.neighborhood_cells(0) == std::vector<int>{0, 1, 10, 11});
    CHECK(cg.cell_of_intermediate(23) == 6); // row 2, col 3 -> coarse (1, 1)
    CHECK(cg.vertex(7).x == doctest::Approx(0.2));
    CHECK(cg.vertex(7).y == doctest::Approx(0.2));
    CHECK(cg.hat(7, {0.2, 0.2}) == doctest::Approx(1.0));
    CHECK(cg.hat(7, {0.3, 0.2}) == doctest::Approx(0.5));
    CHECK(cg.hat(7, {0.3, 0.3}) == doctest::Approx(0.25));
    CHECK(cg.hat(7, {0.5, 0.5}) == 0.0);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Point p{u(rng), u(rng)};
        double sum = 0.0;
        for (int v = 0; v < cg.vertex_count(); ++v) sum += cg.hat(v, p);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(build_coarse_grid(ig, 3, 5), std::invalid_argument);
}
