#include "saf/load.hpp"

#include "saf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>

namespace saf {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_phase(double phase) {
    double p = std::remainder(phase, 2.0 * kPi);
    if (p <= -kPi) {
        p += 2.0 * kPi;
    }
    return p;
}
} // namespace

int LoadSpectrum::max_order() const {
    int n = 0;
    for (const auto& h : harmonics) {
        n = std::max(n, h.n);
    }
    return n;
}

void LoadSpectrum::validate() const {
    for (const auto& h : harmonics) {
        if (h.n < 1) {
            throw ConstraintError("load spectrum: harmonic order must be >= 1");
        }
        if (h.amp_d < 0.0 || h.amp_q < 0.0) {
            throw ConstraintError("load spectrum: amplitudes must be >= 0");
        }
        for (double p : {h.phase_d, h.phase_q}) {
            if (!(p > -kPi - 1e-12 && p <= kPi + 1e-12)) {
                throw ConstraintError("load spectrum: phases must lie in (-pi, pi]");
            }
        }
        const auto dup = std::count_if(harmonics.begin(), harmonics.end(),
                                       [&](const LoadHarmonic& o) { return o.n == h.n; });
        if (dup != 1) {
            throw ConstraintError("load spectrum: duplicate order " + std::to_string(h.n));
        }
    }
}

static Dq eval_spectrum(const LoadSpectrum& spectrum, double omega_m, double t) {
    Dq out{spectrum.x_d0, spectrum.x_q0};
    for (const auto& h : spectrum.harmonics) {
        const double arg = h.n * omega_m * t;
        out.d += h.amp_d * std::cos(arg + h.phase_d);
        out.q += h.amp_q * std::cos(arg + h.phase_q);
    }
    return out;
}

Dq eval_load(const LoadSpectrum& spectrum, double omega_m, double t) {
    return eval_spectrum(spectrum, omega_m, t);
}

Dq ReferenceSignal::value(double t) const {
    return eval_spectrum(negated, omega_m, t);
}

Dq ReferenceSignal::derivative(double t) const {
    Dq out{0.0, 0.0};
    for (const auto& h : negated.harmonics) {
        const double w = h.n * omega_m;
        const double arg = w * t;
        out.d -= h.amp_d * w * std::sin(arg + h.phase_d);
        out.q -= h.amp_q * w * std::sin(arg + h.phase_q);
    }
    return out;
}

ReferenceSignal make_reference(const LoadSpectrum& spectrum, double omega_m) {
    spectrum.validate();
    ReferenceSignal ref;
    ref.omega_m = omega_m;
    ref.negated.x_d0 = 0.0; // X_ld0 is the desired component and cancels
    ref.negated.x_q0 = -spectrum.x_q0;
    for (const auto& h : spectrum.harmonics) {
        LoadHarmonic neg = h;
        neg.phase_d = wrap_phase(h.phase_d + kPi); // -cos(x) = cos(x + pi)
        neg.phase_q = wrap_phase(h.phase_q + kPi);
        ref.negated.harmonics.push_back(neg);
    }
    return ref;
}

double reference_mean_square(const ReferenceSignal& reference, int samples) {
    if (samples < 2) {
        throw InputError("reference_mean_square: need at least 2 samples");
    }
    const double T = 2.0 * kPi / reference.omega_m;
    // Uniform trapezoid over one period; the integrand is T-periodic so the
    // endpoint samples coincide and the rule collapses to the midpoint sum.
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Dq x = reference.value(T * i / samples);
        acc += x.d * x.d + x.q * x.q;
    }
    return acc / samples;
}

double solve_phi0(const ReferenceSignal& reference, const PlantParams& params,
                  int samples) {
    if (samples < 2048) {
        samples = 2048;
    }
    if (params.R == 0.0) {
        return 0.0;
    }
    const double ms = reference_mean_square(reference, samples);
    const double ms_check = reference_mean_square(reference, 2 * samples);
    if (std::abs(ms - ms_check) > 1e-9 * std::max(std::abs(ms_check), 1e-300)) {
        throw InputError("solve_phi0: quadrature did not converge at " +
                         std::to_string(samples) + " samples");
    }
    const double disc = params.E_md * params.E_md - 4.0 * params.R * params.R * ms;
    if (disc < 0.0) {
        throw InfeasibleError(
            "solve_phi0: realness condition E_md^2 >= 4 R^2 f_m Int(x*^2) violated "
            "(load too large for the parasitic resistance)");
    }
    // Smaller positive root, written to avoid the subtractive cancellation.
    return 2.0 * params.R * ms / (params.E_md + std::sqrt(disc));
}

Sequence natural_sequence(int order) {
    const int r = order % 3;
    if (r == 1) {
        return Sequence::Positive;
    }
    if (r == 2) {
        return Sequence::Negative;
    }
    throw ConstraintError("triplen harmonic order " + std::to_string(order) +
                          " is zero-sequence and cannot flow in a three-wire system");
}

LoadSpectrum spectrum_from_fixed_frame(const std::vector<FixedFrameHarmonic>& lines,
                                       double V_m, double fundamental_amp) {
    if (V_m <= 0.0) {
        throw InputError("spectrum_from_fixed_frame: V_m must be positive");
    }
    // Each stationary-frame line contributes a phasor to one synchronous
    // order: cos for d, and -/+ 90 degrees on q for positive/negative
    // sequence. Lines landing on the same order add as complex amplitudes.
    std::map<int, std::pair<std::complex<double>, std::complex<double>>> by_order;
    for (const auto& line : lines) {
        if (line.order < 1) {
            throw ConstraintError("fixed-frame harmonic order must be >= 1");
        }
        if (line.amp < 0.0) {
            throw ConstraintError("fixed-frame harmonic amplitude must be >= 0");
        }
        const bool pos = line.seq == Sequence::Positive;
        const int n_dq = pos ? line.order - 1 : line.order + 1;
        if (n_dq == 0) {
            throw ConstraintError("fundamental positive-sequence line maps to DC; "
                                  "use the fundamental_amp argument instead");
        }
        const std::complex<double> cd = std::polar(V_m * line.amp, line.phase);
        const std::complex<double> cq =
            std::polar(V_m * line.amp, line.phase + (pos ? -kPi / 2.0 : kPi / 2.0));
        by_order[n_dq].first += cd;
        by_order[n_dq].second += cq;
    }
    LoadSpectrum spectrum;
    spectrum.x_d0 = V_m * fundamental_amp;
    for (const auto& [n, phasors] : by_order) {
        LoadHarmonic h;
        h.n = n;
        h.amp_d = std::abs(phasors.first);
        h.phase_d = h.amp_d > 0.0 ? wrap_phase(std::arg(phasors.first)) : 0.0;
        h.amp_q = std::abs(phasors.second);
        h.phase_q = h.amp_q > 0.0 ? wrap_phase(std::arg(phasors.second)) : 0.0;
        spectrum.harmonics.push_back(h);
    }
    spectrum.validate();
    return spectrum;
}

LoadSpectrum two_harmonics_load(double V_m, double amp, double fundamental_amp) {
    return spectrum_from_fixed_frame(
        {
            {7, amp, Sequence::Positive, 0.0},
            {13, amp, Sequence::Positive, 0.0},
        },
        V_m, fundamental_amp);
}

LoadSpectrum diode_bridge_load(double V_m, double fundamental_amp) {
    return spectrum_from_fixed_frame(
        {
            {5, 3.88, Sequence::Negative, 0.0},
            {7, 1.91, Sequence::Positive, 0.0},
            {11, 1.57, Sequence::Negative, 0.0},
            {13, 1.08, Sequence::Positive, 0.0},
        },
        V_m, fundamental_amp);
}

} // namespace saf
