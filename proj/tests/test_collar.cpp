#include <doctest.h>

#include <cmath>
#include <random>

#include "slitmod/collar.hpp"

using namespace slitmod;

namespace {

const Dyadic kHalf = Dyadic::pow2_inv(1), kQuarter = Dyadic::pow2_inv(2);

SlitSequence halves(int max_gen, int n = 2) {
    return dyadic_slits(std::vector<Dyadic>(max_gen + 1, kHalf), n, max_gen);
}

SlitSequence manual(const std::vector<Slit>& slits) {
    SlitSequence seq;
    seq.box = BoxN::unit(2);
    seq.slits = slits;
    validate_sequence(seq);
    return seq;
}

// Interiors of two closed boxes meet.
bool overlap(const std::vector<Dyadic>& alo, const std::vector<Dyadic>& ahi, const std::vector<Dyadic>& blo,
             const std::vector<Dyadic>& bhi) {
    for (std::size_t a = 0; a < alo.size(); ++a)
        if (!(alo[a] < bhi[a] && blo[a] < ahi[a])) return false;
    return true;
}

std::int32_t edge_between(const GridComplex& gc, std::int32_t u, std::int32_t v) {
    for (std::int64_t k = gc.adj_start[u]; k < gc.adj_start[u + 1]; ++k)
        if (gc.adj_to[k] == v) return gc.adj_edge[k];
    return -1;
}

PathInComplex through(const GridComplex& gc, const std::vector<std::int32_t>& stops) {
    PathInComplex path;
    path.vertices.push_back(stops.front());
    for (std::size_t s = 1; s < stops.size(); ++s) {
        auto leg = extract_path(gc, dijkstra(gc, {stops[s - 1]}), stops[s]);
        for (std::size_t k = 0; k < leg.edges.size(); ++k) {
            path.vertices.push_back(leg.vertices[k + 1]);
            path.edges.push_back(leg.edges[k]);
        }
        path.length += leg.length;
    }
    return path;
}

std::int32_t at(const GridComplex& gc, const Dyadic& x, const Dyadic& y, unsigned side = 0) {
    return gc.vertex(gc.grid_point({gc.to_index(x, 0), gc.to_index(y, 1)}), side);
}

}  // namespace

TEST_CASE("collar and omitted boxes") {
    auto seq = halves(0);
    const Slit& s = seq.slits[0];
    auto c = collar_box(s, kQuarter), o = omitted_box(s, kQuarter);
    CHECK(c.lo[0] == kHalf);
    CHECK(c.hi[0] == Dyadic::make(5, 3));
    CHECK(c.lo[1] == kQuarter);
    CHECK(c.hi[1] == Dyadic::make(3, 2));
    CHECK(o.lo[0] == kHalf);
    CHECK(o.hi[0] == Dyadic::make(5, 3));
    CHECK(o.lo[1] == Dyadic::make(3, 3));
    CHECK(o.hi[1] == Dyadic::make(5, 3));
}

TEST_CASE("collar selection") {
    CHECK(select_collars(halves(0), kQuarter, Selection::Largest) == std::vector<std::size_t>{0});

    auto seq = halves(2);
    std::vector<std::size_t> oracle;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Slit& s = seq.slits[i];
        Dyadic w = kQuarter * s.side;
        std::vector<Dyadic> lo{s.offset, s.center[0] - s.side.halved()}, hi{s.offset + w, s.center[0] + s.side.halved()};
        bool free = true;
        for (auto j : oracle) {
            const Slit& t = seq.slits[j];
            Dyadic wt = kQuarter * t.side;
            std::vector<Dyadic> tlo{t.offset, t.center[0] - t.side.halved()},
                thi{t.offset + wt, t.center[0] + t.side.halved()};
            if (overlap(lo, hi, tlo, thi)) free = false;
        }
        if (free) oracle.push_back(i);
    }
    CHECK(select_collars(seq, kQuarter, Selection::Largest) == oracle);
    CHECK(select_collars(seq, kQuarter, Selection::FirstFit) == oracle);
    CHECK(select_collars(seq, kQuarter, Selection::Largest, 5).size() == 5);

    Slit big{0, kHalf, {kHalf}, kHalf};
    Slit small{0, kHalf + Dyadic::pow2_inv(6), {kHalf}, Dyadic::pow2_inv(4)};
    auto pair = manual({big, small});
    CHECK(select_collars(pair, Dyadic::pow2_inv(3), Selection::Largest) == std::vector<std::size_t>{0});
    CHECK_THROWS(select_collars(pair, kHalf, Selection::Largest));
}

TEST_CASE("decomposition of one slit") {
    auto seq = halves(0);
    auto d = decompose(seq, {0}, kQuarter, Dyadic::pow2_inv(5));
    const double l2 = 0.25;
    CHECK(d.H_O == doctest::Approx(l2 / 8));
    CHECK(d.H_B == doctest::Approx(l2 / 8));
    CHECK(d.H_R + d.H_B + d.H_O == doctest::Approx(1.0));
    CHECK(d.exact_O == Dyadic::pow2_inv(5));
    CHECK(d.exact_B == Dyadic::pow2_inv(5));
    CHECK(d.exact_R + d.exact_B + d.exact_O == Dyadic(1));

    auto d3 = decompose(halves(0, 3), {0}, kQuarter, Dyadic::pow2_inv(4));
    auto bb = buffer_bound(d3);
    CHECK(bb.factor == doctest::Approx(1 - 0.25));
    CHECK(bb.H_B / bb.H_collars == doctest::Approx(1 - std::pow(1 - 2 * 0.25, 2)));
    CHECK(bb.identity_ok);
    CHECK(bb.bound_ok);
}

TEST_CASE("partition holds for every level") {
    auto seq = halves(3);
    for (int k = 0; k <= 3; ++k) {
        auto sel = select_collars(seq, kQuarter, Selection::Largest, seq.count_through_generation(k));
        auto d = decompose(seq, sel, kQuarter, Dyadic::pow2_inv(7));
        CHECK(d.H_R + d.H_B + d.H_O == doctest::Approx(1.0));
        CHECK(d.exact_R.to_double() == doctest::Approx(d.H_R));
    }
}

TEST_CASE("buffer bound") {
    auto seq = halves(2);
    for (Dyadic eps : {kQuarter, Dyadic::pow2_inv(3), Dyadic::pow2_inv(4)}) {
        auto d = decompose(seq, select_collars(seq, eps, Selection::Largest), eps, Dyadic::pow2_inv(7));
        auto bb = buffer_bound(d);
        CHECK(bb.factor == doctest::Approx(2 * eps.to_double()));
        CHECK(bb.identity_ok);
        CHECK(bb.bound_ok);
    }
    auto none = decompose(seq, {}, kQuarter, Dyadic::pow2_inv(5));
    CHECK(buffer_bound(none).H_B == 0);
}

TEST_CASE("rho eps mass") {
    auto seq = halves(2);
    auto empty = decompose(seq, {}, kQuarter, Dyadic::pow2_inv(5));
    CHECK(rho_eps(empty).mass(2) == doctest::Approx(1.0));
    CHECK(rho_eps(empty).mass(3) == doctest::Approx(1.0));

    auto one = decompose(seq, {0}, kQuarter, Dyadic::pow2_inv(5));
    CHECK(rho_eps(one).mass(2) == doctest::Approx(one.H_R + one.H_B));

    double prev = 2;
    auto sel = select_collars(seq, kQuarter, Selection::Largest);
    for (std::size_t m = 0; m <= sel.size(); ++m) {
        auto d = decompose(seq, std::vector<std::size_t>(sel.begin(), sel.begin() + m), kQuarter, Dyadic::pow2_inv(6));
        double mass = rho_eps(d).mass(2);
        CHECK(mass < prev);
        prev = mass;
    }
}

TEST_CASE("admissibility of rho eps") {
    auto seq = halves(2);
    const Dyadic h = Dyadic::pow2_inv(6);
    auto flat = decompose(seq, {}, kQuarter, h);
    auto gc0 = build_slit_complex(seq, 0, h);
    auto a0 = admissibility_min(gc0, rho_eps(flat), 0.0);
    CHECK(a0.min_length == doctest::Approx(1.0));
    CHECK(a0.admissible);

    auto sel = select_collars(seq, kQuarter, Selection::Largest);
    auto d = decompose(seq, sel, kQuarter, h);
    auto gc = build_slit_complex(seq, seq.size(), h);
    double delta = admissibility_slack(h, 2, d.b_minus_a);
    auto rho = rho_eps(d);
    auto a = admissibility_min(gc, rho, delta);
    CHECK(a.min_length >= 1 - delta);
    CHECK(a.admissible);
    for (double& v : rho.value) v /= 2;
    auto half = admissibility_min(gc, rho, delta);
    CHECK(half.min_length == doctest::Approx(a.min_length / 2));
    CHECK_FALSE(half.admissible);
}

TEST_CASE("surgery leaves paths away from omitted regions alone") {
    auto seq = halves(1);
    const Dyadic h = Dyadic::pow2_inv(5);
    auto gc = build_slit_complex(seq, seq.size(), h);
    auto d = decompose(seq, select_collars(seq, kQuarter, Selection::Largest), kQuarter, h);
    auto path = through(gc, {at(gc, 0, Dyadic::pow2_inv(5)), at(gc, 1, Dyadic::pow2_inv(5))});
    REQUIRE(path.edges.size() == 32);
    auto s = curve_surgery(gc, path, d, d.selected.size());
    for (int c : s.cases) CHECK(c == 1);
    CHECK(s.kept.size() == path.edges.size());
    CHECK(s.length_after == doctest::Approx(s.length_before));
    CHECK(s.projection_ok);
}

TEST_CASE("surgery replaces an omitted dip entered from the left by the top interval") {
    auto seq = halves(0);
    const Dyadic h = Dyadic::pow2_inv(5);
    auto gc = build_slit_complex(seq, 1, h);
    auto d = decompose(seq, {0}, kQuarter, h);
    auto path = through(gc, {at(gc, 0, kHalf), at(gc, kHalf, Dyadic::make(3, 2)),
                             at(gc, Dyadic::make(9, 4), kHalf), at(gc, 1, kHalf)});
    auto s = curve_surgery(gc, path, d, 1);
    CHECK(s.cases[0] == 2);
    REQUIRE(s.tops.size() == 1);
    CHECK(s.length_after <= s.length_before);
    CHECK(s.length_ok);
    CHECK(s.projection_ok);
    CHECK(s.kept.size() < path.edges.size());
}

TEST_CASE("surgery deletes a dip after the right face") {
    auto seq = halves(0);
    const Dyadic h = Dyadic::pow2_inv(5);
    auto gc = build_slit_complex(seq, 1, h);
    auto d = decompose(seq, {0}, kQuarter, h);
    // Cross the right face of the collar above the omitted region, then dip into it and leave.
    auto path = through(gc, {at(gc, 0, Dyadic::make(7, 3)), at(gc, Dyadic::make(11, 4), Dyadic::make(11, 4)),
                             at(gc, Dyadic::make(9, 4), kHalf), at(gc, Dyadic::make(11, 4), kHalf), at(gc, 1, kHalf)});
    auto s = curve_surgery(gc, path, d, 1);
    CHECK(s.cases[0] == 3);
    CHECK(s.tops.empty());
    CHECK(s.length_ok);
    CHECK(s.projection_ok);
}

TEST_CASE("surgery rejects non-paths") {
    auto seq = halves(0);
    const Dyadic h = Dyadic::pow2_inv(4);
    auto gc = build_slit_complex(seq, 1, h);
    auto d = decompose(seq, {0}, kQuarter, h);
    PathInComplex bad;
    bad.vertices = {at(gc, 0, 0), at(gc, 1, 1)};
    CHECK_THROWS_WITH(curve_surgery(gc, bad, d, 1), doctest::Contains("not in Gamma_S"));
}

TEST_CASE("random test paths survive surgery") {
    auto seq = halves(2);
    const Dyadic h = Dyadic::pow2_inv(6);
    auto gc = build_slit_complex(seq, seq.size(), h);
    auto d = decompose(seq, select_collars(seq, kQuarter, Selection::Largest), kQuarter, h);
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        auto path = random_test_path(gc, d, rng);
        CHECK(gc.on_face(path.vertices.front(), 0, false));
        CHECK(gc.on_face(path.vertices.back(), 0, true));
        for (std::size_t k = 0; k < path.edges.size(); ++k)
            CHECK(edge_between(gc, path.vertices[k], path.vertices[k + 1]) >= 0);
        for (std::size_t i = 0; i <= d.selected.size(); ++i) {
            auto s = curve_surgery(gc, path, d, i);
            CHECK(s.length_ok);
            CHECK(s.projection_ok);
        }
    }
}

TEST_CASE("residual product") {
    std::vector<double> r(6, 0.5);
    CHECK(residual_product(r, kQuarter, 2, 3) == doctest::Approx(std::pow(15.0 / 16, 4)));
    CHECK(residual_product(r, kQuarter, 2, 0) == doctest::Approx(1 - 0.25 * 0.25));
    std::vector<double> gap{0.5, 0.0, 0.5};
    CHECK(residual_product(gap, kQuarter, 2, 2) == doctest::Approx(std::pow(15.0 / 16, 2)));

    auto seq = halves(0);
    auto d = decompose(seq, {0}, kQuarter, Dyadic::pow2_inv(5));
    CHECK(d.H_R == doctest::Approx(residual_product(r, kQuarter, 2, 0)));
}

TEST_CASE("residual product bounds the residual set") {
    auto seq = halves(4);
    std::vector<double> r(5, 0.5);
    for (int k = 0; k <= 4; ++k) {
        auto sel = select_collars(seq, kQuarter, Selection::Largest, seq.count_through_generation(k));
        auto d = decompose(seq, sel, kQuarter, Dyadic::pow2_inv(8));
        CHECK(d.H_R <= residual_product(r, kQuarter, 2, k) + 1e-12);
    }
}

TEST_CASE("divergence report") {
    auto flat = divergence_report(std::vector<double>(40, 0.5), 2, 39, 0.25);
    REQUIRE(flat.size() == 40);
    CHECK(flat[9].partial_sum == doctest::Approx(2.5));
    CHECK(flat[39].partial_sum == doctest::Approx(10.0));
    CHECK(flat[39].product == doctest::Approx(std::pow(15.0 / 16, 40)));

    std::vector<double> shrinking, harmonic;
    for (int i = 0; i < 200; ++i) {
        shrinking.push_back(std::ldexp(1.0, -(i + 1)));
        harmonic.push_back(1 / std::sqrt(i + 1.0));
    }
    auto conv = divergence_report(shrinking, 2, 199, 0.25);
    CHECK(conv.back().product > 0.9);
    auto div = divergence_report(harmonic, 2, 199, 0.25);
    CHECK(div.back().partial_sum > 5.8);
    CHECK(div.back().product < div[20].product);
    CHECK(div.back().product < 0.3);
}
