#include <doctest.h>

#include <random>
#include <stdexcept>

#include "slitmod/dyadic.hpp"

using slitmod::Dyadic;

TEST_CASE("dyadic normal form") {
    CHECK(Dyadic::make(6, 3) == Dyadic::make(3, 2));
    CHECK(Dyadic::make(8, 3) == Dyadic(1));
    CHECK(Dyadic::make(0, 5) == Dyadic(0));
    CHECK(Dyadic::make(6, 3).exp() == 2);
    CHECK(Dyadic::pow2_inv(4).to_double() == 0.0625);
}

TEST_CASE("dyadic parse and print") {
    CHECK(Dyadic::parse("3/2^4") == Dyadic::make(3, 4));
    CHECK(Dyadic::parse("3/16") == Dyadic::make(3, 4));
    CHECK(Dyadic::parse("-5") == Dyadic(-5));
    CHECK(Dyadic::make(3, 4).str() == "3/2^4");
    CHECK(Dyadic(7).str() == "7");
    CHECK_THROWS(Dyadic::parse("1/3"));
    CHECK_THROWS(Dyadic::parse("x"));
    CHECK_THROWS(Dyadic::parse("1/2^"));
}

TEST_CASE("dyadic arithmetic is exact") {
    Dyadic a = Dyadic::make(3, 4), b = Dyadic::make(5, 2);
    CHECK(a + b == Dyadic::make(23, 4));
    CHECK(a - b == Dyadic::make(-17, 4));
    CHECK(a * b == Dyadic::make(15, 6));
    CHECK(a.halved(2) == Dyadic::make(3, 6));
    CHECK(a < b);
    CHECK(-b < a);
    CHECK(slitmod::abs(-a) == a);
    CHECK(slitmod::min(a, b) == a);
    CHECK(slitmod::max(a, b) == b);
}

TEST_CASE("dyadic divisibility") {
    Dyadic h = Dyadic::pow2_inv(5);
    CHECK(Dyadic::make(3, 4).multiple_of(h));
    CHECK_FALSE(Dyadic::make(3, 6).multiple_of(h));
    CHECK(Dyadic::make(3, 4).div_exact(h) == 6);
    CHECK_THROWS(Dyadic::make(3, 6).div_exact(h));
    CHECK(Dyadic::pow2_inv(7).is_power_of_half());
    CHECK_FALSE(Dyadic::make(3, 7).is_power_of_half());
}

TEST_CASE("dyadic overflow throws") {
    Dyadic big(std::int64_t{1} << 62);
    CHECK_THROWS_AS(big + big, std::overflow_error);
    CHECK_THROWS_AS(big * big, std::overflow_error);
}

TEST_CASE("dyadic round trips through text and arithmetic") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> num(-1000000, 1000000);
    std::uniform_int_distribution<int> ex(0, 30);
    for (int t = 0; t < 500; ++t) {
        Dyadic a = Dyadic::make(num(rng), ex(rng)), b = Dyadic::make(num(rng), ex(rng));
        CHECK(Dyadic::parse(a.str()) == a);
        CHECK((a + b) - b == a);
        CHECK((a + b).to_double() == doctest::Approx(a.to_double() + b.to_double()));
        CHECK(((a < b) == (a.to_double() < b.to_double())));
    }
}
