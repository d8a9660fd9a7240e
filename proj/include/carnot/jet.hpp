#pragma once

#include <cmath>

namespace carnot {

/// Second-order jet (g(0), g'(0), g''(0)) of a scalar function of one real
/// parameter t. Arithmetic applies the Leibniz and chain rules exactly.
struct Jet2 {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    constexpr Jet2() = default;
    constexpr Jet2(double value) : v(value) {}  // NOLINT: constants promote implicitly
    constexpr Jet2(double value, double first, double second) : v(value), d1(first), d2(second) {}

    /// Jet of t -> value + slope * t.
    static constexpr Jet2 linear(double value, double slope) { return {value, slope, 0.0}; }

    Jet2& operator+=(const Jet2& o) {
        v += o.v;
        d1 += o.d1;
        d2 += o.d2;
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        v -= o.v;
        d1 -= o.d1;
        d2 -= o.d2;
        return *this;
    }
    Jet2& operator*=(const Jet2& o) { return *this = *this * o; }

    friend constexpr Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }
    friend constexpr Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
    friend constexpr Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
    friend constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
        return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
    }
    friend constexpr Jet2 operator*(double s, const Jet2& a) { return {s * a.v, s * a.d1, s * a.d2}; }
    friend constexpr Jet2 operator*(const Jet2& a, double s) { return s * a; }
    friend Jet2 operator/(const Jet2& a, const Jet2& b) {
        // a * b^{-1}
        const double inv = 1.0 / b.v;
        const Jet2 recip{inv, -b.d1 * inv * inv, 2.0 * b.d1 * b.d1 * inv * inv * inv - b.d2 * inv * inv};
        return a * recip;
    }
};

/// Composition g(u(t)) given g(u0), g'(u0), g''(u0).
constexpr Jet2 compose(const Jet2& u, double g, double dg, double d2g) {
    return {g, dg * u.d1, d2g * u.d1 * u.d1 + dg * u.d2};
}

inline Jet2 exp(const Jet2& u) {
    const double e = std::exp(u.v);
    return compose(u, e, e, e);
}

inline Jet2 log(const Jet2& u) {
    return compose(u, std::log(u.v), 1.0 / u.v, -1.0 / (u.v * u.v));
}

inline Jet2 pow(const Jet2& u, double p) {
    if (p == 0.0) {
        return Jet2{1.0};
    }
    const double g = std::pow(u.v, p);
    const double dg = p == 1.0 ? 1.0 : p * std::pow(u.v, p - 1.0);
    const double d2g = (p == 1.0) ? 0.0 : (p == 2.0 ? 2.0 : p * (p - 1.0) * std::pow(u.v, p - 2.0));
    return compose(u, g, dg, d2g);
}

}  // namespace carnot
