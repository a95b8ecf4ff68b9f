#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace sgm {

/// Exact money amount stored as integer cents. All payment arithmetic in the
/// market is exact; doubles only appear at the formatting / plotting boundary.
struct Money {
    std::int64_t cents = 0;

    constexpr Money() = default;
    constexpr explicit Money(std::int64_t c) : cents(c) {}

    static constexpr Money from_cents(std::int64_t c) { return Money{c}; }
    static Money from_dollars(double d) { return Money{std::llround(d * 100.0)}; }

    double dollars() const { return static_cast<double>(cents) / 100.0; }

    friend constexpr Money operator+(Money a, Money b) { return Money{a.cents + b.cents}; }
    friend constexpr Money operator-(Money a, Money b) { return Money{a.cents - b.cents}; }
    constexpr Money operator-() const { return Money{-cents}; }
    Money& operator+=(Money o) { cents += o.cents; return *this; }
    Money& operator-=(Money o) { cents -= o.cents; return *this; }
    friend constexpr Money operator*(Money a, std::int64_t k) { return Money{a.cents * k}; }
    friend constexpr Money operator*(std::int64_t k, Money a) { return a * k; }

    friend constexpr auto operator<=>(Money, Money) = default;
};

/// Exact rational used for revenues, potentials and win probabilities, where
/// divisions by team size and tie splits make integer cents insufficient.
using Rat = boost::multiprecision::cpp_rational;

inline Rat rat(Money m) { return Rat(m.cents, 100); }
inline Rat rat(std::int64_t num, std::int64_t den) { return Rat(num, den); }

inline double to_double(const Rat& r) { return static_cast<double>(r); }

/// Scales a money amount by a real-valued factor, rounding to the nearest
/// cent. Applied per (customer, service) term so that per-member and
/// per-service payment sums agree exactly.
inline Money scale_to_cents(Money m, double factor) {
    double v = static_cast<double>(m.cents) * factor;
    if (!std::isfinite(v) || std::abs(v) > 9.0e18)
        throw std::overflow_error("money scaling overflow");
    return Money{std::llround(v)};
}

inline std::string to_string(Money m) {
    char buf[40];
    std::int64_t a = m.cents < 0 ? -m.cents : m.cents;
    std::snprintf(buf, sizeof buf, "%s%lld.%02lld", m.cents < 0 ? "-" : "",
                  static_cast<long long>(a / 100), static_cast<long long>(a % 100));
    return buf;
}

/// Parses a decimal money literal ("258.4", "-20", "176.00") exactly.
inline Money parse_money(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty money literal");
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '-' || s[i] == '+') { neg = s[i] == '-'; ++i; }
    std::int64_t whole = 0, frac = 0;
    int fdigits = 0;
    bool any = false;
    for (; i < s.size() && s[i] != '.'; ++i) {
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad money literal: " + s);
        whole = whole * 10 + (s[i] - '0');
        any = true;
    }
    if (i < s.size()) {  // fractional part
        ++i;
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad money literal: " + s);
            if (fdigits < 2) { frac = frac * 10 + (s[i] - '0'); ++fdigits; }
            else if (s[i] != '0') throw std::invalid_argument("sub-cent money literal: " + s);
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("bad money literal: " + s);
    while (fdigits < 2) { frac *= 10; ++fdigits; }
    std::int64_t c = whole * 100 + frac;
    return Money{neg ? -c : c};
}

}  // namespace sgm
