#include <doctest.h>

#include "saf/errors.hpp"
#include "saf/load.hpp"

#include <cmath>
#include <random>

using namespace saf;

namespace {
constexpr double kPi = 3.14159265358979323846;

PlantParams paper_params(double R = 0.12) {
    return make_plant_params(3.3e-3, R, 4400e-6, 310.0, 50.0);
}

LoadSpectrum random_spectrum(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(0.0, 2000.0);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    LoadSpectrum s;
    s.x_d0 = amp(rng);
    s.x_q0 = amp(rng) - 1000.0;
    int n = 1;
    std::uniform_int_distribution<int> gap(1, 4);
    const int harmonics = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < harmonics; ++i) {
        n += gap(rng);
        s.harmonics.push_back({n, amp(rng), phase(rng), amp(rng), phase(rng)});
    }
    return s;
}
} // namespace

TEST_CASE("eval_load on elementary spectra") {
    const double w = 2.0 * kPi * 50.0;
    LoadSpectrum dc;
    dc.x_d0 = 100.0;
    for (double t : {0.0, 1e-3, 17e-3}) {
        const Dq v = eval_load(dc, w, t);
        CHECK(v.d == 100.0);
        CHECK(v.q == 0.0);
    }

    LoadSpectrum one = dc;
    one.harmonics.push_back({6, 50.0, 0.0, 0.0, 0.0});
    const Dq at0 = eval_load(one, w, 0.0);
    CHECK(at0.d == doctest::Approx(150.0));
    CHECK(at0.q == 0.0);

    // 6 w t = pi/2 kills the cosine
    const double t_quarter = (kPi / 2.0) / (6.0 * w);
    const Dq at_quarter = eval_load(one, w, t_quarter);
    CHECK(at_quarter.d == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("load spectrum validation") {
    LoadSpectrum bad;
    bad.harmonics.push_back({0, 1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(bad.validate(), ConstraintError);
    bad.harmonics[0].n = 6;
    bad.harmonics.push_back({6, 1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(bad.validate(), ConstraintError);
    bad.harmonics.pop_back();
    bad.harmonics[0].amp_d = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConstraintError);
}

TEST_CASE("reference cancels the aligned fundamental") {
    const double w = 2.0 * kPi * 50.0;
    LoadSpectrum aligned;
    aligned.x_d0 = 5000.0;
    const ReferenceSignal ref = make_reference(aligned, w);
    for (double t : {0.0, 1e-3, 9e-3}) {
        CHECK(ref.value(t).d == 0.0);
        CHECK(ref.value(t).q == 0.0);
    }

    LoadSpectrum reactive;
    reactive.x_q0 = -30.0;
    const ReferenceSignal ref_q = make_reference(reactive, w);
    CHECK(ref_q.value(0.0).q == doctest::Approx(30.0));
    CHECK(ref_q.value(0.0).d == 0.0);
}

TEST_CASE("reference derivative agrees with finite differences") {
    const double w = 2.0 * kPi * 50.0;
    LoadSpectrum s;
    s.harmonics.push_back({7, 10.0, 0.4, 0.0, 0.0});
    const ReferenceSignal ref = make_reference(s, w);

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> tdist(0.0, 0.02);
    const double h = 1e-7;
    for (int i = 0; i < 10; ++i) {
        const double t = tdist(rng);
        const Dq d = ref.derivative(t);
        const Dq fd = (1.0 / (2.0 * h)) * (ref.value(t + h) - ref.value(t - h));
        CHECK(d.d == doctest::Approx(fd.d).epsilon(1e-6));
        CHECK(d.q == doctest::Approx(fd.q).epsilon(1e-6));
    }
}

TEST_CASE("reference d-component has zero period mean for any spectrum") {
    std::mt19937_64 rng(43);
    const double w = 2.0 * kPi * 50.0;
    for (int trial = 0; trial < 20; ++trial) {
        const LoadSpectrum s = random_spectrum(rng);
        const ReferenceSignal ref = make_reference(s, w);
        double amp_sum = 1e-12;
        for (const auto& h : s.harmonics) {
            amp_sum += h.amp_d;
        }
        const int n = 4096;
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            mean += ref.value(0.02 * i / n).d;
        }
        mean /= n;
        CHECK(std::abs(mean) < 1e-9 * amp_sum);
    }
}

TEST_CASE("phi0 solves the power-balance quadratic") {
    // Mean square 9.61e6 realized by a single d harmonic of amplitude
    // sqrt(2 * 9.61e6).
    const double w = 2.0 * kPi * 50.0;
    LoadSpectrum s;
    s.harmonics.push_back({6, std::sqrt(2.0 * 9.61e6), 0.0, 0.0, 0.0});
    const ReferenceSignal ref = make_reference(s, w);
    const PlantParams p = paper_params();

    const double ms = reference_mean_square(ref);
    CHECK(ms == doctest::Approx(9.61e6).epsilon(1e-9));

    const double phi0 = solve_phi0(ref, p);
    CHECK(phi0 == doctest::Approx(12.00021).epsilon(1e-6));

    // quadratic residual, independent evaluation
    const double residual = p.R * phi0 * phi0 - p.E_md * phi0 + p.R * ms;
    CHECK(std::abs(residual) < 1e-6 * p.E_md * phi0);

    // R = 0 degenerates to zero regardless of the reference
    CHECK(solve_phi0(ref, paper_params(0.0)) == 0.0);

    // zero reference with losses still needs no bias
    const ReferenceSignal empty = make_reference(LoadSpectrum{}, w);
    CHECK(solve_phi0(empty, p) == 0.0);
}

TEST_CASE("phi0 reports the violated realness condition") {
    const double w = 2.0 * kPi * 50.0;
    LoadSpectrum s;
    s.harmonics.push_back({6, 1e7, 0.0, 0.0, 0.0});
    const ReferenceSignal ref = make_reference(s, w);
    CHECK_THROWS_AS(solve_phi0(ref, paper_params()), InfeasibleError);
}

TEST_CASE("averaged drive has zero mean once phi0 is installed") {
    const double w = 2.0 * kPi * 50.0;
    const PlantParams p = paper_params();
    const LoadSpectrum s = two_harmonics_load(p.V_m, 10.0);
    ReferenceSignal ref = make_reference(s, w);
    ref.phi0 = solve_phi0(ref, p);

    // Psi(x*) = L (d0 + M x* - dx*)' x* with the phi0 bias on the d axis
    const int n = 8192;
    double mean = 0.0, peak = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = 0.02 * i / n;
        Dq x = ref.value(t);
        x.d += ref.phi0;
        const Dq dx = ref.derivative(t);
        const double md = -p.R / p.L * x.d + p.omega_m * x.q;
        const double mq = -p.omega_m * x.d - p.R / p.L * x.q;
        const double psi =
            p.L * ((p.E_md / p.L + md - dx.d) * x.d + (mq - dx.q) * x.q);
        mean += psi;
        peak = std::max(peak, std::abs(psi));
    }
    mean /= n;
    CHECK(std::abs(mean) < 1e-4 * peak);
}

TEST_CASE("fixed-frame mapping reproduces the phase-current lines") {
    const double V_m = 310.0;
    const LoadSpectrum s = diode_bridge_load(V_m);
    REQUIRE(s.harmonics.size() == 2);
    CHECK(s.harmonics[0].n == 6);
    CHECK(s.harmonics[1].n == 12);
    // 5th (negative) and 7th (positive) combine on order 6
    CHECK(s.harmonics[0].amp_d == doctest::Approx(V_m * (3.88 + 1.91)));
    CHECK(s.harmonics[0].amp_q == doctest::Approx(V_m * (3.88 - 1.91)));
    CHECK(s.harmonics[0].phase_q == doctest::Approx(kPi / 2.0));

    CHECK(natural_sequence(7) == Sequence::Positive);
    CHECK(natural_sequence(5) == Sequence::Negative);
    CHECK_THROWS_AS(natural_sequence(9), ConstraintError);
}
