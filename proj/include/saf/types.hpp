#pragma once

#include <cmath>

namespace saf {

/// Two-phase planar (alpha-beta) vector.
struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;

    double norm() const { return std::hypot(alpha, beta); }
};

/// Synchronous-frame pair. Used both for power variables (V*A) and for
/// their current/voltage images, so members are named d/q without units.
struct Dq {
    double d = 0.0;
    double q = 0.0;

    double norm() const { return std::hypot(d, q); }
};

/// Three-phase tern.
struct Abc {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double sum() const { return a + b + c; }
};

inline Dq operator+(Dq lhs, Dq rhs) { return {lhs.d + rhs.d, lhs.q + rhs.q}; }
inline Dq operator-(Dq lhs, Dq rhs) { return {lhs.d - rhs.d, lhs.q - rhs.q}; }
inline Dq operator*(double s, Dq v) { return {s * v.d, s * v.q}; }
inline Abc operator+(Abc lhs, Abc rhs) { return {lhs.a + rhs.a, lhs.b + rhs.b, lhs.c + rhs.c}; }
inline Abc operator-(Abc lhs, Abc rhs) { return {lhs.a - rhs.a, lhs.b - rhs.b, lhs.c - rhs.c}; }
inline Abc operator*(double s, Abc v) { return {s * v.a, s * v.b, s * v.c}; }

} // namespace saf
