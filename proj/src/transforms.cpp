#include "saf/transforms.hpp"

#include "saf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace saf {

namespace {
constexpr double kZeroSumRelTol = 1e-9;
constexpr double kSqrt3 = 1.7320508075688772935;
} // namespace

AlphaBeta clarke_forward(const Abc& tern) {
    const double scale = std::max({std::abs(tern.a), std::abs(tern.b), std::abs(tern.c)});
    if (std::abs(tern.sum()) > kZeroSumRelTol * std::max(scale, 1e-300)) {
        throw ConstraintError("clarke: input tern is not zero-sum (residual " +
                              std::to_string(tern.sum()) + ")");
    }
    return {
        (2.0 / 3.0) * (tern.a - 0.5 * tern.b - 0.5 * tern.c),
        (2.0 / 3.0) * (kSqrt3 / 2.0) * (tern.b - tern.c),
    };
}

Abc clarke_inverse(const AlphaBeta& v) {
    const double a = v.alpha;
    const double b = -0.5 * v.alpha + (kSqrt3 / 2.0) * v.beta;
    return {a, b, -(a + b)};
}

Dq rotate_to_dq(const AlphaBeta& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v.alpha + s * v.beta, -s * v.alpha + c * v.beta};
}

AlphaBeta rotate_to_alphabeta(const Dq& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v.d - s * v.q, s * v.d + c * v.q};
}

Dq park_forward(const AlphaBeta& v, double theta, double V_m) {
    if (V_m <= 0.0) {
        throw InputError("park: V_m must be positive");
    }
    Dq r = rotate_to_dq(v, theta);
    return {V_m * r.d, V_m * r.q};
}

AlphaBeta park_inverse(const Dq& v, double theta, double V_m) {
    if (V_m <= 0.0) {
        throw InputError("park: V_m must be positive");
    }
    return rotate_to_alphabeta({v.d / V_m, v.q / V_m}, theta);
}

SwitchImage switch_to_uabc(const SwitchVector& legs) {
    for (double u : {legs.x, legs.y, legs.z}) {
        if (!(u >= 0.0 && u <= 1.0)) {
            throw ConstraintError("switch_to_uabc: leg command outside [0,1]");
        }
    }
    // u_a + u_b + u_c must vanish exactly, so the third component is built
    // from the first two instead of subtracting the mean three times.
    const double u_a = (2.0 * legs.x - legs.y - legs.z) / 3.0;
    const double u_b = (2.0 * legs.y - legs.x - legs.z) / 3.0;
    const Abc u_abc{u_a, u_b, -(u_a + u_b)};
    return {u_abc, clarke_forward(u_abc)};
}

HexagonVerdict hexagon_check(const AlphaBeta& u, HexagonMode mode) {
    constexpr double kBoundaryTol = 1e-12;
    if (mode == HexagonMode::InscribedCircle) {
        const double margin = kHexagonInradius - u.norm();
        return {margin >= -kBoundaryTol, margin};
    }
    // The hexagon is the intersection of six half-planes whose edge lines
    // sit at the inradius, with outward normals every 60 degrees starting
    // at 30 degrees.
    double margin = kHexagonInradius;
    for (int i = 0; i < 6; ++i) {
        const double ang = (2.0 * i + 1.0) * 3.14159265358979323846 / 6.0;
        const double proj = std::cos(ang) * u.alpha + std::sin(ang) * u.beta;
        margin = std::min(margin, kHexagonInradius - proj);
    }
    return {margin >= -kBoundaryTol, margin};
}

} // namespace saf
