#pragma once

#include <cmath>

namespace incstab {

/// First-order dual number: value plus the directional derivative with
/// respect to whatever seed was planted in the inputs. Arithmetic follows
/// the chain rule, so evaluating any composite function on Duals yields the
/// exact derivative up to floating-point rounding.
struct Dual {
    double value = 0.0;
    double deriv = 0.0;

    constexpr Dual() = default;
    constexpr Dual(double v) : value(v) {}
    constexpr Dual(double v, double d) : value(v), deriv(d) {}

    constexpr Dual operator-() const { return {-value, -deriv}; }

    constexpr Dual& operator+=(const Dual& r) {
        value += r.value;
        deriv += r.deriv;
        return *this;
    }
    constexpr Dual& operator-=(const Dual& r) {
        value -= r.value;
        deriv -= r.deriv;
        return *this;
    }
    constexpr Dual& operator*=(const Dual& r) {
        deriv = deriv * r.value + value * r.deriv;
        value *= r.value;
        return *this;
    }
    constexpr Dual& operator/=(const Dual& r) {
        deriv = (deriv * r.value - value * r.deriv) / (r.value * r.value);
        value /= r.value;
        return *this;
    }
};

constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }

inline Dual sin(const Dual& a) { return {std::sin(a.value), std::cos(a.value) * a.deriv}; }
inline Dual cos(const Dual& a) { return {std::cos(a.value), -std::sin(a.value) * a.deriv}; }
inline Dual exp(const Dual& a) {
    const double e = std::exp(a.value);
    return {e, e * a.deriv};
}
inline Dual log(const Dual& a) { return {std::log(a.value), a.deriv / a.value}; }
inline Dual sqrt(const Dual& a) {
    const double s = std::sqrt(a.value);
    return {s, a.deriv / (2.0 * s)};
}
inline Dual tanh(const Dual& a) {
    const double t = std::tanh(a.value);
    return {t, (1.0 - t * t) * a.deriv};
}

/// Power with a constant exponent, valid for negative bases when the
/// exponent is an integer (the only case the evaluator routes here).
inline Dual pow(const Dual& a, double c) {
    const double p = std::pow(a.value, c);
    return {p, c * std::pow(a.value, c - 1.0) * a.deriv};
}

}  // namespace incstab
