#include "slitmod/dyadic.hpp"

#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>

namespace slitmod {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw std::overflow_error("dyadic overflow");
    return static_cast<std::int64_t>(v);
}

i128 shl(i128 v, int k) {
    if (k >= 100) throw std::overflow_error("dyadic overflow");
    i128 r = v * (static_cast<i128>(1) << k);
    if (k > 0 && v != 0 && r / (static_cast<i128>(1) << k) != v) throw std::overflow_error("dyadic overflow");
    return r;
}

Dyadic from_wide(i128 num, int exp) {
    while (exp > 0 && num % 2 == 0) {
        num /= 2;
        --exp;
    }
    if (num == 0) exp = 0;
    return Dyadic::make(narrow(num), exp);
}

}  // namespace

Dyadic Dyadic::make(std::int64_t num, int exp) {
    if (exp < 0) {
        i128 v = shl(num, -exp);
        num = narrow(v);
        exp = 0;
    }
    while (exp > 0 && num % 2 == 0) {
        num /= 2;
        --exp;
    }
    if (num == 0) exp = 0;
    if (exp > 62) throw std::overflow_error("dyadic exponent too large");
    Dyadic d;
    d.num_ = num;
    d.exp_ = exp;
    return d;
}

Dyadic Dyadic::parse(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (c != ' ' && c != '\t') text += c;
    if (text.empty()) throw std::invalid_argument("empty rational");
    auto parse_int = [&](const std::string& s) -> std::int64_t {
        if (s.empty()) throw std::invalid_argument("bad rational '" + raw + "'");
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad rational '" + raw + "'");
        }
        if (pos != s.size()) throw std::invalid_argument("bad rational '" + raw + "'");
        return v;
    };
    auto slash = text.find('/');
    if (slash == std::string::npos) return Dyadic(parse_int(text));
    std::int64_t p = parse_int(text.substr(0, slash));
    std::string den = text.substr(slash + 1);
    if (den.rfind("2^", 0) == 0) {
        std::int64_t q = parse_int(den.substr(2));
        if (q < 0 || q > 62) throw std::invalid_argument("bad exponent in '" + raw + "'");
        return make(p, static_cast<int>(q));
    }
    std::int64_t q = parse_int(den);
    if (q <= 0 || (q & (q - 1)) != 0) throw std::invalid_argument("denominator not a power of two in '" + raw + "'");
    int e = 0;
    while ((static_cast<std::int64_t>(1) << e) < q) ++e;
    return make(p, e);
}

double Dyadic::to_double() const { return std::ldexp(static_cast<double>(num_), -exp_); }

std::string Dyadic::str() const {
    if (exp_ == 0) return std::to_string(num_);
    return std::to_string(num_) + "/2^" + std::to_string(exp_);
}

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    int e = std::max(a.exp_, b.exp_);
    i128 x = shl(a.num_, e - a.exp_) + shl(b.num_, e - b.exp_);
    return from_wide(x, e);
}

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    i128 x = static_cast<i128>(a.num_) * b.num_;
    return from_wide(x, a.exp_ + b.exp_);
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    int e = std::max(a.exp_, b.exp_);
    i128 x = shl(a.num_, e - a.exp_);
    i128 y = shl(b.num_, e - b.exp_);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

bool Dyadic::multiple_of(const Dyadic& step) const {
    if (step.num_ <= 0) throw std::invalid_argument("step must be positive");
    int e = std::max(exp_, step.exp_);
    i128 x = shl(num_, e - exp_);
    i128 s = shl(step.num_, e - step.exp_);
    return x % s == 0;
}

std::int64_t Dyadic::div_exact(const Dyadic& step) const {
    if (!multiple_of(step)) throw std::invalid_argument(str() + " is not a multiple of " + step.str());
    int e = std::max(exp_, step.exp_);
    return narrow(shl(num_, e - exp_) / shl(step.num_, e - step.exp_));
}

Dyadic abs(const Dyadic& d) { return d.sign() < 0 ? -d : d; }
Dyadic min(const Dyadic& a, const Dyadic& b) { return b < a ? b : a; }
Dyadic max(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }

}  // namespace slitmod
