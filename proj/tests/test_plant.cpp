#include <doctest.h>

#include "saf/errors.hpp"
#include "saf/plant.hpp"

#include <cmath>
#include <random>

using namespace saf;

namespace {
PlantParams paper_params() {
    return make_plant_params(3.3e-3, 0.12, 4400e-6, 310.0, 50.0);
}
} // namespace

TEST_CASE("derived plant constants") {
    const PlantParams p = paper_params();
    CHECK(p.E_md == doctest::Approx(96100.0));
    CHECK(p.epsilon == doctest::Approx(3.0 / (4400e-6 * 96100.0)));
    CHECK(p.omega_m == doctest::Approx(2.0 * 3.14159265358979323846 * 50.0));
    CHECK_THROWS_AS(make_plant_params(0.0, 0.1, 1e-3, 310.0, 50.0), ConstraintError);
    CHECK_THROWS_AS(make_plant_params(1e-3, -0.1, 1e-3, 310.0, 50.0), ConstraintError);
}

TEST_CASE("constructed equilibrium has zero derivative") {
    const PlantParams p = paper_params();
    const PowerState s{0.0, 0.0, 800.0};
    const ControlVectorDq u{p.E_md / s.v, 0.0}; // (L/v) d0
    const PowerStateRate r = plant_derivative(s, u, p);
    CHECK(r.x_d_dot == doctest::Approx(0.0).scale(p.E_md / p.L).epsilon(1e-15));
    CHECK(r.x_q_dot == 0.0);
    CHECK(r.v_dot == 0.0);
}

TEST_CASE("dq model right-hand side at R = 0") {
    const PlantParams p = make_plant_params(3.3e-3, 0.0, 4400e-6, 310.0, 50.0);
    const PowerState s{1.0, 0.0, 750.0};
    const PowerStateRate r = plant_derivative(s, {0.0, 0.0}, p);
    CHECK(r.x_d_dot == doctest::Approx(p.E_md / p.L));
    CHECK(r.x_q_dot == doctest::Approx(-p.omega_m));
    CHECK(r.v_dot == 0.0);
}

TEST_CASE("v is stationary whenever u_dq vanishes") {
    const PlantParams p = paper_params();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-5000.0, 5000.0);
    for (int i = 0; i < 50; ++i) {
        const PowerState s{dist(rng), dist(rng), 820.0};
        CHECK(plant_derivative(s, {0.0, 0.0}, p).v_dot == 0.0);
    }
}

TEST_CASE("lossless free motion orbits the forced equilibrium") {
    const PlantParams p = make_plant_params(3.3e-3, 0.0, 4400e-6, 310.0, 50.0);
    // M x_eq + d0 = 0 at R = 0
    const double x_eq_q = -p.E_md / (p.L * p.omega_m);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-2000.0, 2000.0);
    for (int i = 0; i < 50; ++i) {
        const PowerState s{dist(rng), dist(rng), 800.0};
        const PowerStateRate r = plant_derivative(s, {0.0, 0.0}, p);
        // d/dt |x - x_eq|^2 = 2 (x - x_eq) . x_dot
        const double growth =
            2.0 * ((s.x_d - 0.0) * r.x_d_dot + (s.x_q - x_eq_q) * r.x_q_dot);
        CHECK(growth == doctest::Approx(0.0).scale(p.omega_m * 4e6).epsilon(1e-12));
    }
}

TEST_CASE("energy bookkeeping ties v_dot to the planar power") {
    const PlantParams p = paper_params();
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const PowerState s{5000.0 * dist(rng), 5000.0 * dist(rng), 700.0 + 100.0 * dist(rng)};
        const ControlVectorDq u{400.0 * dist(rng), 400.0 * dist(rng)};
        const PowerStateRate r = plant_derivative(s, u, p);
        const double expected = 0.5 * p.epsilon * (u.d * s.x_d + u.q * s.x_q);
        CHECK(r.v_dot == doctest::Approx(expected).epsilon(1e-15));
    }
}
