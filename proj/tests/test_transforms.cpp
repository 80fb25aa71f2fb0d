#include <doctest.h>

#include "saf/errors.hpp"
#include "saf/transforms.hpp"

#include <cmath>
#include <random>

using namespace saf;

namespace {
constexpr double kPi = 3.14159265358979323846;

Abc random_zero_sum(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    const double a = dist(rng);
    const double b = dist(rng);
    return {a, b, -(a + b)};
}
} // namespace

TEST_CASE("clarke forward matches the transform columns") {
    const AlphaBeta first = clarke_forward({1.0, -0.5, -0.5});
    CHECK(first.alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(first.beta == doctest::Approx(0.0).epsilon(1e-15));

    const AlphaBeta zero = clarke_forward({0.0, 0.0, 0.0});
    CHECK(zero.alpha == 0.0);
    CHECK(zero.beta == 0.0);

    const double s = std::sqrt(3.0) / 2.0;
    const AlphaBeta beta_unit = clarke_forward({0.0, s, -s});
    CHECK(beta_unit.alpha == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(beta_unit.beta == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("clarke rejects non-zero-sum terns") {
    CHECK_THROWS_AS(clarke_forward({1.0, 1.0, 1.0}), ConstraintError);
    CHECK_THROWS_AS(clarke_forward({1.0, -0.5, -0.5 + 1e-6}), ConstraintError);
    // within the relative tolerance
    CHECK_NOTHROW(clarke_forward({1.0, -0.5, -0.5 + 1e-12}));
}

TEST_CASE("clarke round trip is the identity on zero-sum terns") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Abc tern = random_zero_sum(rng, 100.0);
        const Abc back = clarke_inverse(clarke_forward(tern));
        CHECK(back.a == doctest::Approx(tern.a).epsilon(1e-12));
        CHECK(back.b == doctest::Approx(tern.b).epsilon(1e-12));
        CHECK(back.c == doctest::Approx(tern.c).epsilon(1e-12));
    }
}

TEST_CASE("park forward scales and rotates") {
    const Dq pure_scale = park_forward({1.0, 0.0}, 0.0, 310.0);
    CHECK(pure_scale.d == doctest::Approx(310.0));
    CHECK(pure_scale.q == doctest::Approx(0.0).epsilon(1e-12));

    const Dq quarter = park_forward({0.0, 1.0}, kPi / 2.0, 310.0);
    CHECK(quarter.d == doctest::Approx(310.0));
    CHECK(quarter.q == doctest::Approx(0.0).scale(310.0).epsilon(1e-15));
}

TEST_CASE("park round trip and norm preservation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const AlphaBeta w{0.3, -0.7};
    const AlphaBeta back = park_inverse(park_forward(w, 1.234, 310.0), 1.234, 310.0);
    CHECK(back.alpha == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(back.beta == doctest::Approx(-0.7).epsilon(1e-12));

    for (int i = 0; i < 100; ++i) {
        const AlphaBeta v{dist(rng), dist(rng)};
        const double theta = 10.0 * dist(rng);
        const Dq fwd = park_forward(v, theta, 310.0);
        CHECK(fwd.norm() == doctest::Approx(310.0 * v.norm()).epsilon(1e-12));
    }
}

TEST_CASE("park inverse rejects V_m = 0") {
    CHECK_THROWS_AS(park_inverse({1.0, 0.0}, 0.0, 0.0), InputError);
}

TEST_CASE("switch vertices reproduce the control-function table") {
    struct Row {
        SwitchVector legs;
        Abc abc;
        AlphaBeta ab;
    };
    const double r3 = 1.0 / std::sqrt(3.0);
    const Row rows[] = {
        {{0, 0, 0}, {0, 0, 0}, {0, 0}},
        {{1, 0, 0}, {2.0 / 3, -1.0 / 3, -1.0 / 3}, {2.0 / 3, 0}},
        {{1, 1, 0}, {1.0 / 3, 1.0 / 3, -2.0 / 3}, {1.0 / 3, r3}},
        {{0, 1, 0}, {-1.0 / 3, 2.0 / 3, -1.0 / 3}, {-1.0 / 3, r3}},
        {{0, 1, 1}, {-2.0 / 3, 1.0 / 3, 1.0 / 3}, {-2.0 / 3, 0}},
        {{0, 0, 1}, {-1.0 / 3, -1.0 / 3, 2.0 / 3}, {-1.0 / 3, -r3}},
        {{1, 0, 1}, {1.0 / 3, -2.0 / 3, 1.0 / 3}, {1.0 / 3, -r3}},
        {{1, 1, 1}, {0, 0, 0}, {0, 0}},
    };
    for (const Row& row : rows) {
        const SwitchImage img = switch_to_uabc(row.legs);
        CHECK(img.u_abc.a == doctest::Approx(row.abc.a).epsilon(1e-15));
        CHECK(img.u_abc.b == doctest::Approx(row.abc.b).epsilon(1e-15));
        CHECK(img.u_abc.c == doctest::Approx(row.abc.c).epsilon(1e-15));
        CHECK(img.u_ab.alpha == doctest::Approx(row.ab.alpha).epsilon(1e-15));
        CHECK(img.u_ab.beta ==
              doctest::Approx(row.ab.beta).scale(1.0).epsilon(1e-15));
        // the tern sums to zero exactly, by construction
        CHECK(img.u_abc.sum() == 0.0);
    }
}

TEST_CASE("switch command common mode is removed for fractional duties") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const SwitchImage img = switch_to_uabc({dist(rng), dist(rng), dist(rng)});
        CHECK(img.u_abc.sum() == 0.0);
    }
    CHECK_THROWS_AS(switch_to_uabc({1.2, 0.0, 0.0}), ConstraintError);
    CHECK_THROWS_AS(switch_to_uabc({0.0, -0.1, 0.0}), ConstraintError);
}

TEST_CASE("hexagon feasibility in both modes") {
    const HexagonVerdict origin = hexagon_check({0.0, 0.0}, HexagonMode::InscribedCircle);
    CHECK(origin.feasible);
    CHECK(origin.margin == doctest::Approx(kHexagonInradius));
    CHECK(hexagon_check({0.0, 0.0}, HexagonMode::ExactHexagon).margin ==
          doctest::Approx(kHexagonInradius));

    // a vertex lies outside the inscribed circle but on the hexagon
    const AlphaBeta vertex{2.0 / 3.0, 0.0};
    CHECK_FALSE(hexagon_check(vertex, HexagonMode::InscribedCircle).feasible);
    CHECK(hexagon_check(vertex, HexagonMode::ExactHexagon).feasible);
    CHECK(hexagon_check(vertex, HexagonMode::ExactHexagon).margin ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    const AlphaBeta outside{0.5, 0.5};
    CHECK_FALSE(hexagon_check(outside, HexagonMode::InscribedCircle).feasible);
    CHECK_FALSE(hexagon_check(outside, HexagonMode::ExactHexagon).feasible);
}

TEST_CASE("inscribed circle is contained in the exact hexagon") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> rad(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double r = rad(rng);
        const double a = ang(rng);
        const AlphaBeta u{r * std::cos(a), r * std::sin(a)};
        if (hexagon_check(u, HexagonMode::InscribedCircle).feasible) {
            CHECK(hexagon_check(u, HexagonMode::ExactHexagon).feasible);
        }
    }
}
