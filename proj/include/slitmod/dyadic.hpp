#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace slitmod {

/**
 * Exact dyadic rational num / 2^exp with exp >= 0, kept in lowest terms
 * (num odd, or exp == 0). Arithmetic throws std::overflow_error instead of
 * wrapping.
 */
class Dyadic {
public:
    Dyadic() = default;
    Dyadic(std::int64_t integer) : num_(integer), exp_(0) {}  // NOLINT: implicit by design
    static Dyadic make(std::int64_t num, int exp);
    /** 2^{-k}. */
    static Dyadic pow2_inv(int k) { return make(1, k); }
    /** Accepts "p/2^q", "p/q" (q a power of two) or a plain integer. */
    static Dyadic parse(const std::string& text);

    std::int64_t num() const { return num_; }
    int exp() const { return exp_; }
    double to_double() const;
    /** Serialized as "p/2^q" (integers as "p"). */
    std::string str() const;

    Dyadic operator-() const { return make(-num_, exp_); }
    friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
    Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
    Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
    /** Multiply by 2^{-k}. */
    Dyadic halved(int k = 1) const { return make(num_, exp_ + k); }

    friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.num_ == b.num_ && a.exp_ == b.exp_; }
    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

    bool is_zero() const { return num_ == 0; }
    int sign() const { return (num_ > 0) - (num_ < 0); }
    /** True iff the value is an integer multiple of step (step > 0). */
    bool multiple_of(const Dyadic& step) const;
    /** this / step, which must be an exact integer. */
    std::int64_t div_exact(const Dyadic& step) const;
    /** True iff the value is 2^{-k} for some k >= 0. */
    bool is_power_of_half() const { return num_ == 1; }

private:
    std::int64_t num_ = 0;
    int exp_ = 0;
};

Dyadic abs(const Dyadic& d);
Dyadic min(const Dyadic& a, const Dyadic& b);
Dyadic max(const Dyadic& a, const Dyadic& b);

}  // namespace slitmod
