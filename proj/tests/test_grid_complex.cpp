#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "slitmod/grid_complex.hpp"

using namespace slitmod;

namespace {

const Dyadic kHalf = Dyadic::pow2_inv(1);

SlitSequence halves(int max_gen) { return dyadic_slits(std::vector<Dyadic>(max_gen + 1, kHalf), 2, max_gen); }

GridComplex square(int e) { return build_torn_complex(BoxN::unit(2), {}, Dyadic::pow2_inv(e)); }

double octile(double dx, double dy) {
    dx = std::abs(dx);
    dy = std::abs(dy);
    return std::max(dx, dy) + (std::sqrt(2.0) - 1) * std::min(dx, dy);
}

PointRef pt(Dyadic x, Dyadic y, unsigned side = 0, int layer = 0) { return PointRef{{x, y}, side, layer}; }

}  // namespace

TEST_CASE("untorn square") {
    auto gc = square(2);
    CHECK(gc.num_vertices() == 25);
    for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) CHECK(gc.copies(gp) == 1);
    CHECK(gc.num_cells() == 16);
    CHECK(gc.total_volume() == doctest::Approx(1.0));
    CHECK(geodesic_distance(gc, pt(0, 0), pt(1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("untorn geodesics match the octile metric") {
    auto gc = square(4);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int32_t> pick(0, gc.num_vertices() - 1);
    for (int t = 0; t < 50; ++t) {
        std::int32_t u = pick(rng), v = pick(rng);
        double oracle = octile(gc.coord(gc.vgp[u], 0) - gc.coord(gc.vgp[v], 0),
                               gc.coord(gc.vgp[u], 1) - gc.coord(gc.vgp[v], 1));
        CHECK(geodesic_distance(gc, u, v) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("stencil distortion bounds the octile metric") {
    double worst = 0;
    for (int k = 0; k <= 1000; ++k) {
        double th = k * (M_PI / 2) / 1000;
        worst = std::max(worst, octile(std::cos(th), std::sin(th)));
    }
    CHECK(worst == doctest::Approx(stencil_distortion(2)).epsilon(1e-6));
}

TEST_CASE("slit duplication rule") {
    auto gc = build_slit_complex(halves(0), 1, Dyadic::pow2_inv(3));
    CHECK(gc.num_vertices() == 81 + 3);
    for (int j = 0; j <= 8; ++j) {
        std::int64_t gp = gc.grid_point({4, j});
        CHECK(gc.copies(gp) == (j > 2 && j < 6 ? 2 : 1));
    }
    CHECK(gc.copies(gc.grid_point({3, 4})) == 1);
    CHECK_THROWS(gc.to_index(Dyadic::pow2_inv(4), 0));
}

TEST_CASE("vertex count equals base count plus interior slit points") {
    auto seq = halves(1);
    const Dyadic h = Dyadic::pow2_inv(5);
    auto gc = build_slit_complex(seq, seq.size(), h);
    std::int64_t interior = 0;
    for (const auto& s : seq.slits) interior += s.side.div_exact(h) - 1;
    CHECK(gc.num_vertices() == 33 * 33 + interior);
    CHECK(interior == 15 + 4 * 7);
}

TEST_CASE("detour around the big slit") {
    auto seq = halves(0);
    for (int e : {3, 4, 5, 6}) {
        auto gc = build_slit_complex(seq, 1, Dyadic::pow2_inv(e));
        double d = geodesic_distance(gc, pt(kHalf, kHalf, 0), pt(kHalf, kHalf, 1));
        CHECK(d == doctest::Approx(0.5).epsilon(1e-12));
    }
    auto coarse = build_slit_complex(seq, 1, Dyadic::pow2_inv(2));
    CHECK(geodesic_distance(coarse, pt(kHalf, kHalf, 0), pt(kHalf, kHalf, 1)) >= 0.5);
}

TEST_CASE("edges never cross an open sheet") {
    auto seq = halves(1);
    auto gc = build_slit_complex(seq, seq.size(), Dyadic::pow2_inv(4));
    for (std::int32_t v = 0; v < gc.num_vertices(); ++v) {
        std::int64_t gp = gc.vgp[v];
        if (!(gc.dupmask[gp] & 1u)) continue;
        double x = gc.coord(gp, 0);
        bool plus = gc.vside[v] & 1u;
        for (std::int64_t k = gc.adj_start[v]; k < gc.adj_start[v + 1]; ++k) {
            double xn = gc.coord(gc.vgp[gc.adj_to[k]], 0);
            CHECK((plus ? xn >= x : xn <= x));
        }
    }
}

TEST_CASE("projection to a coarser level") {
    auto seq = halves(1);
    const Dyadic h = Dyadic::pow2_inv(4);
    auto fine = build_slit_complex(seq, seq.size(), h), coarse = build_slit_complex(seq, 1, h);
    for (std::int32_t v = 0; v < fine.num_vertices(); ++v) CHECK(project(fine, fine, v) == v);
    std::int64_t big = fine.grid_point({8, 8});
    std::int32_t right = fine.vertex(big, 1);
    CHECK(coarse.vside[project(coarse, fine, right)] == fine.vside[right]);
    CHECK(project(coarse, fine, fine.vertex(big, 0)) != project(coarse, fine, right));
    std::int64_t small = fine.grid_point({4, 4});
    REQUIRE(fine.copies(small) == 2);
    CHECK(project(coarse, fine, fine.vertex(small, 0)) == project(coarse, fine, fine.vertex(small, 1)));
    CHECK_THROWS(project(square(3), fine, 0));
}

TEST_CASE("double along the boundary") {
    auto single = square(4);
    auto d = double_complex(single, Glue::OuterBoundary);
    CHECK(geodesic_distance(d, pt(kHalf, kHalf, 0, 0), pt(kHalf, kHalf, 0, 1)) == doctest::Approx(1.0));
    CHECK(d.num_cells() == 2 * single.num_cells());
    CHECK_THROWS(double_complex(d, Glue::OuterBoundary));
}

TEST_CASE("each copy of a double is isometric to the single complex") {
    auto seq = halves(1);
    auto single = build_slit_complex(seq, seq.size(), Dyadic::pow2_inv(4));
    auto d = double_complex(single, Glue::OuterBoundary);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int32_t> pick(0, single.num_vertices() - 1);
    for (int t = 0; t < 100; ++t) {
        std::int32_t u = pick(rng), v = pick(rng);
        auto pu = single.point_of(u), pv = single.point_of(v);
        double ds = geodesic_distance(single, u, v);
        CHECK(geodesic_distance(d, pu, pv) == doctest::Approx(ds).epsilon(1e-12));
        pu.layer = pv.layer = 1;
        CHECK(geodesic_distance(d, pu, pv) == doctest::Approx(ds).epsilon(1e-12));
    }
}

TEST_CASE("ahlfors ratio of the untorn square") {
    const int e = 6;
    const double h = std::ldexp(1.0, -e), r = 0.125;
    auto gc = build_torn_complex(BoxN::unit(2), {}, Dyadic::pow2_inv(e), BuildOptions{Stencil::Full, false});
    auto rep = ahlfors_scan(gc, 60, {r}, 11);
    // Interior centre: cells with a corner at octile distance below r.
    std::int64_t R = static_cast<std::int64_t>(r / h) + 2, count = 0;
    for (std::int64_t i = -R; i < R; ++i)
        for (std::int64_t j = -R; j < R; ++j) {
            double best = kInf;
            for (int a = 0; a <= 1; ++a)
                for (int b = 0; b <= 1; ++b) best = std::min(best, octile((i + a) * h, (j + b) * h));
            if (best < r) ++count;
        }
    double interior = count * h * h / (r * r);
    CHECK(rep.samples == 60);
    CHECK(rep.max_ratio == doctest::Approx(interior));
    CHECK(rep.min_ratio >= interior / 4 - 1e-12);
    double k = stencil_distortion(2);
    CHECK(interior > M_PI / (k * k));
    CHECK(interior < M_PI * k * k * (1 + 4 * h / r));
}

TEST_CASE("ahlfors ratios stay comparable with slits") {
    auto seq = halves(2);
    auto gc = build_slit_complex(seq, seq.size(), Dyadic::pow2_inv(6), BuildOptions{Stencil::Full, false});
    auto rep = ahlfors_scan(gc, 40, {1.0 / 16, 1.0 / 8, 1.0 / 4}, 2);
    CHECK(rep.max_ratio / rep.min_ratio < 10);
}

TEST_CASE("measure comparability") {
    auto seq = halves(1);
    auto gc = build_slit_complex(seq, seq.size(), Dyadic::pow2_inv(4));
    std::vector<std::int64_t> all(gc.num_cells());
    for (std::int64_t c = 0; c < gc.num_cells(); ++c) all[c] = c;
    auto [a, b] = measure_comparability(gc, all);
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(1.0));
    std::vector<std::int64_t> near{gc.cell_index({7, 6}), gc.cell_index({8, 6})};
    auto [c, d] = measure_comparability(gc, near);
    CHECK(c == d);
}

TEST_CASE("cap on cell counts") {
    BuildOptions opt;
    opt.max_cells = 1000;
    CHECK_THROWS_WITH_AS(build_torn_complex(BoxN::unit(2), {}, Dyadic::pow2_inv(6), opt), doctest::Contains("1000"),
                         std::length_error);
}
