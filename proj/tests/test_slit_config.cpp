#include <doctest.h>

#include <cmath>

#include "slitmod/slit_config.hpp"

using namespace slitmod;

namespace {

AxisBox box2(Dyadic x0, Dyadic y0, Dyadic x1, Dyadic y1) { return AxisBox{{x0, y0}, {x1, y1}}; }

std::vector<Dyadic> halves(int count) { return std::vector<Dyadic>(count, Dyadic::pow2_inv(1)); }

}  // namespace

TEST_CASE("relative distance") {
    auto e = box2(0, 0, 1, 1), f = box2(2, 0, 3, 1);
    CHECK(relative_distance(e, f) == doctest::Approx(1.0 / std::sqrt(2.0)));
    auto g = box2(0, 0, 1, 1), k = box2(Dyadic(1) + Dyadic(1), 0, 3, 1);
    CHECK(squared_distance(g, k) == Dyadic(1));
    CHECK(relative_distance(box2(0, 0, 1, 0), box2(2, 0, 3, 0)) == doctest::Approx(1.0));
    CHECK(relative_distance(e, e) == 0.0);
    CHECK_THROWS(relative_distance(box2(0, 0, 0, 0), e));
}

TEST_CASE("relative distance of two generation-1 dyadic slits") {
    auto seq = dyadic_slits(halves(2), 2, 1);
    // generation-1 slits of side 1/4 at x = 1/4 and x = 3/4, centred at y = 1/4: gap 1/2, diameter 1/4
    const Slit* a = nullptr;
    const Slit* b = nullptr;
    for (const auto& s : seq.slits)
        if (s.generation == 1 && s.center[0] == Dyadic::pow2_inv(2)) (a ? b : a) = &s;
    REQUIRE(a);
    REQUIRE(b);
    CHECK(squared_distance(a->box(), b->box()) == Dyadic::pow2_inv(2));
    CHECK(relative_distance(a->box(), b->box()) == doctest::Approx(2.0));
}

TEST_CASE("dyadic slits") {
    auto one = dyadic_slits(halves(1), 2, 0);
    REQUIRE(one.size() == 1);
    const Slit& s = one.slits[0];
    CHECK(s.axis == 0);
    CHECK(s.offset == Dyadic::pow2_inv(1));
    CHECK(s.cross_lo(1) == Dyadic::pow2_inv(2));
    CHECK(s.cross_hi(1) == Dyadic::make(3, 2));

    CHECK(dyadic_slits({0, 0, 0}, 2, 2).size() == 0);

    auto two = dyadic_slits(halves(2), 2, 1);
    REQUIRE(two.size() == 5);
    CHECK(two.count_through_generation(0) == 1);
    CHECK(two.count_through_generation(1) == 5);
    for (std::size_t i = 1; i < 5; ++i) {
        CHECK(two.slits[i].side == Dyadic::pow2_inv(2));
        CHECK(two.slits[i].offset.exp() == 2);
        CHECK(two.slits[i].center[0].exp() == 2);
    }
    CHECK_THROWS(dyadic_slits({1}, 2, 0));
    CHECK_THROWS(dyadic_slits(halves(1), 2, 1));
}

TEST_CASE("dyadic slits in 3D") {
    auto seq = dyadic_slits(halves(2), 3, 1);
    CHECK(seq.size() == 9);
    CHECK(seq.slits[0].dim() == 3);
}

TEST_CASE("validation") {
    auto seq = dyadic_slits(halves(3), 2, 2);
    auto rep = validate_sequence(seq);
    CHECK(rep.min_pairwise > 0);
    CHECK(rep.min_boundary > 0);
    CHECK(rep.sorted_ok);
    CHECK(rep.disjoint_ok);
    CHECK(rep.contained_ok);
    CHECK(seq.sigma == doctest::Approx(std::min(rep.min_pairwise, rep.min_boundary)));

    SlitSequence touching;
    touching.box = BoxN::unit(2);
    touching.slits.push_back(Slit{0, Dyadic::pow2_inv(1), {Dyadic::pow2_inv(2)}, Dyadic::pow2_inv(1)});
    CHECK(validate_sequence(touching).min_boundary == 0.0);

    SlitSequence empty;
    empty.box = BoxN::unit(2);
    auto e = validate_sequence(empty);
    CHECK(std::isinf(e.min_pairwise));
    CHECK(std::isinf(e.min_boundary));
    CHECK(e.sorted_ok);
    CHECK(e.disjoint_ok);
}

TEST_CASE("all scales") {
    auto seq = dyadic_slits(halves(5), 2, 4);
    auto rep = all_scales_check(seq, 16, 200, 0.125);
    CHECK(rep.pass);

    std::vector<Dyadic> shrinking;
    for (int g = 0; g <= 4; ++g) shrinking.push_back(Dyadic::pow2_inv(g + 1));
    auto thin = dyadic_slits(shrinking, 2, 4);
    CHECK_FALSE(all_scales_check(thin, 16, 200, 1.0 / 64).pass);

    SlitSequence empty;
    empty.box = BoxN::unit(2);
    CHECK_FALSE(all_scales_check(empty, 1000, 20, 0.1).pass);
}

TEST_CASE("menger face slits") {
    auto f0 = menger_slit_faces({0}, 0);
    REQUIRE(f0.z0.size() == 1);
    CHECK(f0.z0.slits[0].offset == Dyadic::pow2_inv(1));
    CHECK(f0.z0.slits[0].cross_lo(1) == Dyadic::pow2_inv(2));
    CHECK(f0.z0.slits[0].cross_hi(1) == Dyadic::make(3, 2));

    auto none = menger_slit_faces({}, 2);
    CHECK(none.z0.size() == 0);
    CHECK(none.y0.size() == 0);
    CHECK(none.x0.size() == 0);

    auto f1 = menger_slit_faces({0, 1}, 1);
    CHECK(f1.z0.size() == 17);
    CHECK(f1.z0.count_through_generation(0) == 1);
    for (std::size_t i = 1; i < f1.z0.size(); ++i) CHECK(f1.z0.slits[i].side == Dyadic::pow2_inv(3));
}

TEST_CASE("slit sequence text round trip") {
    auto seq = dyadic_slits(halves(3), 2, 2);
    auto back = parse_slit_sequence(serialize(seq));
    REQUIRE(back.size() == seq.size());
    CHECK(serialize(back) == serialize(seq));
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(back.slits[i].offset == seq.slits[i].offset);
        CHECK(back.slits[i].side == seq.slits[i].side);
        CHECK(back.slits[i].center == seq.slits[i].center);
    }
    CHECK_THROWS(parse_slit_sequence("dim = 2\nslit = nonsense\n"));
}
