#include <doctest.h>

#include <map>

#include "slitmod/menger.hpp"

using namespace slitmod;

namespace {

const Dyadic kHalf = Dyadic::pow2_inv(1), kQuarter = Dyadic::pow2_inv(2);

std::int64_t cube(std::int64_t m) { return m * m * m; }

}  // namespace

TEST_CASE("menger sheets of the first generation") {
    std::vector<MengerComponent> reg;
    auto sheets = menger_sheets({0}, 0, &reg);
    REQUIRE(reg.size() == 2);
    REQUIRE(sheets.size() == 3);
    const auto& tube = reg[0].cross ? reg[1] : reg[0];
    const auto& cross = reg[0].cross ? reg[0] : reg[1];
    REQUIRE(tube.sheets.size() == 1);
    const SheetRect& t = sheets[tube.sheets[0]];
    CHECK(t.axis == 1);
    CHECK(t.coord == kHalf);
    CHECK(t.lo[0] == Dyadic(0));
    CHECK(t.hi[0] == Dyadic(1));
    CHECK(t.lo[2] == kQuarter);
    CHECK(t.hi[2] == Dyadic::make(3, 2));
    REQUIRE(cross.sheets.size() == 2);
    for (int i : cross.sheets) {
        CHECK(sheets[i].axis == 0);
        CHECK(sheets[i].coord == kHalf);
    }
}

TEST_CASE("menger complexes") {
    auto empty = build_menger({}, 0, Dyadic::pow2_inv(4));
    CHECK(empty.gc.num_vertices() == cube(17));
    CHECK(empty.components.empty());

    auto one = build_menger({0}, 0, Dyadic::pow2_inv(4));
    CHECK(one.gc.sheets.size() == 3);
    CHECK(one.gc.num_vertices() > cube(17));

    auto two = build_menger({0, 1}, 1, Dyadic::pow2_inv(6), false, BuildOptions{Stencil::Full, false});
    std::map<int, int> per_gen;
    for (const auto& c : two.components) per_gen[c.generation] += c.cross ? 0 : 1;
    CHECK(per_gen[0] == 1);
    CHECK(per_gen[1] == 64);
    for (const auto& c : two.components)
        if (c.generation == 1) CHECK(c.cube.generation == 2);

    CHECK_THROWS(build_menger({0, 1}, 1, Dyadic::pow2_inv(3)));
    CHECK_THROWS(build_menger({2}, 1, Dyadic::pow2_inv(6)));
}

TEST_CASE("square slits of the side faces") {
    auto f2 = menger_square_slits({0}, 0, 0), f1 = menger_square_slits({0}, 0, 1);
    CHECK(f2.size() >= 1);
    CHECK(f1.size() >= 1);
    for (const auto& s : f2.slits) CHECK(s.axis == 0);
    for (const auto& s : f1.slits) CHECK(s.axis == 1);
    CHECK_THROWS(menger_square_slits({0}, 0, 2));
}

TEST_CASE("base carpet is isometric to the bottom face") {
    auto mc = build_menger({0, 1}, 1, Dyadic::pow2_inv(5), false, BuildOptions{Stencil::Full, false});
    auto bc = base_carpet(mc, 100, 4);
    CHECK(bc.pairs == 100);
    CHECK(bc.max_discrepancy <= bc.slack);
    CHECK(bc.ok);
}

TEST_CASE("fiber labels") {
    CHECK(classify_fiber(0, 2).first == FiberLabel::Interval);
    CHECK(classify_fiber(1, 0).first == FiberLabel::Circle);
    CHECK(classify_fiber(1, 2) == std::pair{FiberLabel::L, 1});
    CHECK(classify_fiber(4, 2) == std::pair{FiberLabel::L, 2});
    CHECK(classify_fiber(3, 0) == std::pair{FiberLabel::Y, 1});
    CHECK(classify_fiber(9, 0) == std::pair{FiberLabel::Y, 2});
    CHECK(classify_fiber(2, 2).first == FiberLabel::Other);
}

TEST_CASE("single-copy fibers over the big slit") {
    auto mc = build_menger({0}, 0, Dyadic::pow2_inv(5), false, BuildOptions{Stencil::Full, false});
    auto off = fiber(mc, Dyadic::pow2_inv(3), Dyadic::pow2_inv(3));
    CHECK(off.label == FiberLabel::Interval);
    CHECK(off.betti == 0);
    CHECK(off.endpoints == 2);

    auto end = fiber(mc, kHalf, kQuarter, 1);
    CHECK(end.label == FiberLabel::L);
    CHECK(end.m == 1);
    CHECK(end.betti == 1);
    CHECK(end.endpoints == 2);

    auto right = fiber(mc, kHalf, kHalf, 1), left = fiber(mc, kHalf, kHalf, 0);
    CHECK(right.label == FiberLabel::L);
    CHECK(left.label == FiberLabel::L);
    for (auto v : right.vertices)
        CHECK(std::find(left.vertices.begin(), left.vertices.end(), v) == left.vertices.end());
    CHECK(isomorphic(left, right));
    CHECK(isomorphic(left, end));
    CHECK_FALSE(isomorphic(left, off));
}

TEST_CASE("fiber predicate") {
    auto e = fiber_predicate({0}, 0, kHalf, kQuarter);
    CHECK(e.kind == FiberPrediction::Case::Endpoint);
    CHECK(e.betti == 1);
    CHECK(e.endpoints == 2);
    auto plain = fiber_predicate({0}, 0, kHalf, Dyadic::make(5, 4));
    CHECK(plain.kind == FiberPrediction::Case::Plain);
    CHECK(plain.label == FiberLabel::Interval);
    auto centre = fiber_predicate({0, 1}, 1, kHalf, Dyadic::make(3, 3));
    CHECK(centre.kind == FiberPrediction::Case::SheetCenter);
    CHECK(centre.sheet_generation == 1);
    CHECK(centre.betti == 4);
    auto doubled = fiber_predicate({0, 1}, 1, kHalf, Dyadic::make(3, 3), true);
    CHECK(doubled.betti == 9);
    CHECK(doubled.endpoints == 0);
    CHECK_THROWS_WITH(fiber_predicate({0}, 0, Dyadic::pow2_inv(3), kHalf), doctest::Contains("not on a slit"));
    CHECK_THROWS_WITH(fiber_predicate({0}, 0, kHalf, Dyadic::pow2_inv(3)), doctest::Contains("not on a slit"));
}

TEST_CASE("predicate, column sweep and built complex agree on every slit point") {
    const std::set<int> A{0, 1};
    const int k = 1;
    for (bool doubled : {false, true}) {
        const Dyadic h = doubled ? Dyadic::pow2_inv(4) : Dyadic::pow2_inv(6);
        auto mc = build_menger(A, k, h, doubled, BuildOptions{Stencil::Full, false});
        const GridComplex& gc = mc.gc;
        for (const auto& s : menger_slit_faces(A, k).z0.slits) {
            std::int64_t xi = gc.to_index(s.offset, 0);
            for (std::int64_t yi = gc.to_index(s.cross_lo(1), 1); yi <= gc.to_index(s.cross_hi(1), 1); ++yi) {
                std::int64_t gp = gc.grid_point({xi, yi, 0});
                Dyadic y = gc.coord_exact(gp, 1);
                auto pred = fiber_predicate(A, k, s.offset, y, doubled);
                for (unsigned side : {0u, 1u}) {
                    auto f = fiber(gc, gc.vertex(gp, side, 0));
                    auto col = column_fiber(gc.sheets, s.offset, y, side, doubled);
                    CHECK(f.betti == col.betti);
                    CHECK(f.endpoints == col.endpoints);
                    CHECK(f.betti == pred.betti);
                    CHECK(f.endpoints == pred.endpoints);
                }
            }
        }
    }
}

TEST_CASE("untorn columns of the double are circles") {
    auto mc = build_menger({0, 1}, 1, Dyadic::pow2_inv(4), true, BuildOptions{Stencil::Full, false});
    const GridComplex& gc = mc.gc;
    int plain = 0;
    for (std::int64_t i = 0; i <= gc.N[0]; ++i)
        for (std::int64_t j = 0; j <= gc.N[1]; ++j) {
            std::int64_t gp = gc.grid_point({i, j, 0});
            auto col = column_fiber(gc.sheets, gc.coord_exact(gp, 0), gc.coord_exact(gp, 1), 0, true);
            if (col.torn) continue;
            ++plain;
            CHECK(fiber(gc, gc.vertex(gp, 0, 0)).label == FiberLabel::Circle);
        }
    CHECK(plain > 0);
}

TEST_CASE("four special points") {
    auto big = build_menger({0}, 0, Dyadic::pow2_inv(5), true, BuildOptions{Stencil::Full, false});
    auto r = four_points_check(big, menger_slit_faces({0}, 0).z0.slits[0]);
    CHECK(r.ok);
    CHECK(r.maximal);
    CHECK(r.isomorphic);
    CHECK(r.matches.size() == 4);
    CHECK(r.special_betti == 3);

    auto mc = build_menger({0, 1}, 1, Dyadic::pow2_inv(5), true, BuildOptions{Stencil::Full, false});
    auto faces = menger_slit_faces({0, 1}, 1);
    const Slit& small = faces.z0.slits[1];
    REQUIRE(small.generation == 1);
    auto s = four_points_check(mc, small);
    CHECK(s.ok);
    CHECK(s.matches.size() == 4);
    CHECK(s.special_betti == 2 * 4 + 1);
}

TEST_CASE("fiber spectra") {
    const Dyadic h = Dyadic::pow2_inv(6);
    auto one = fiber_spectrum({0}, 0, h);
    REQUIRE(one.entries.size() == 1);
    CHECK(one.entries[0].generation == 0);
    CHECK(fiber_spectrum({0, 1}, 2, h) == fiber_spectrum({0, 1}, 2, h));
    CHECK(spectra_distinguish({0, 2}, {0, 1}, 2, h));
    CHECK_FALSE(spectra_distinguish({0, 1}, {0, 1}, 2, h));
    auto a = fiber_spectrum({0, 1, 2}, 2, h);
    CHECK(a.up_to(1) == fiber_spectrum({0, 1}, 1, h).entries);
}

TEST_CASE("covering order and the cube dichotomy") {
    auto mc = build_menger({0, 1}, 1, Dyadic::pow2_inv(6));
    auto adj = cube_dichotomy(mc, 1, {0, 0, 0}, {1, 0, 0});
    CHECK(adj.adjacent);
    CHECK(adj.distance == 0);
    auto rep = covering_order(mc, 1, 0.03);
    CHECK(rep.max_order == 2);
    CHECK(rep.violations == 0);
    CHECK(rep.bound == doctest::Approx(1.0 / 16));
    for (const auto& p : rep.pairs)
        if (!p.adjacent) CHECK(p.distance >= rep.bound - rep.slack);
    CHECK_THROWS(covering_order(mc, 1, 0.1));
    CHECK_THROWS(covering_order(mc, 2, 0.001));
}

TEST_CASE("k5 witness") {
    auto mc = build_menger({0, 1}, 1, Dyadic::pow2_inv(4), false, BuildOptions{Stencil::Full, false});
    auto w = k5_witness(mc);
    CHECK(w.disjoint);
    CHECK(w.bad_pairs.empty());
    const GridComplex& gc = mc.gc;
    REQUIRE(w.names[0] == "ab");
    for (auto v : w.curves[0].vertices) {
        CHECK(gc.coord(gc.vgp[v], 1) == 0.0);
        CHECK(gc.coord(gc.vgp[v], 2) == 0.0);
    }
    CHECK(w.curves[0].length == doctest::Approx(1.0));
    REQUIRE(w.names[9] == "ae");
    int vertical = 0;
    for (auto v : w.curves[9].vertices)
        if (gc.coord(gc.vgp[v], 0) == 0.25 && gc.coord(gc.vgp[v], 1) == 0.25) ++vertical;
    CHECK(vertical == 17);
    CHECK_THROWS(k5_witness(build_menger({0}, 0, Dyadic::pow2_inv(4))));
}
