#pragma once

#include "saf/plant.hpp"
#include "saf/types.hpp"

#include <vector>

namespace saf {

/// One synchronous-frame harmonic line of the load, order n >= 1.
struct LoadHarmonic {
    int n = 0;
    double amp_d = 0.0;   ///< X_ldn (V*A)
    double phase_d = 0.0; ///< psi_dn (rad), in (-pi, pi]
    double amp_q = 0.0;   ///< X_lqn (V*A)
    double phase_q = 0.0; ///< psi_qn (rad), in (-pi, pi]
};

/// Harmonic description of the polluting load in power variables:
///   x_lj(t) = X_lj0 + sum_n X_ljn cos(n w_m t + psi_jn),  j = d, q.
/// Orders are stored explicitly; there is no implicit summation bound.
struct LoadSpectrum {
    double x_d0 = 0.0; ///< X_ld0, DC real-power component (V*A)
    double x_q0 = 0.0; ///< X_lq0, DC virtual-power component (V*A)
    std::vector<LoadHarmonic> harmonics;

    int max_order() const;
    /// Distinct orders n >= 1, amplitudes >= 0, phases in (-pi, pi].
    void validate() const;
};

/// Evaluates the finite cosine sum at time t.
Dq eval_load(const LoadSpectrum& spectrum, double omega_m, double t);

/// Compensation reference in power variables. value() and derivative() are
/// exact term-wise evaluations of
///   x*_d(t) = -sum X_ldn cos(n w t + psi_dn)
///   x*_q(t) = -X_lq0 - sum X_lqn cos(n w t + psi_qn)
/// phi0 is the constant loss bias solved separately; it is carried as
/// metadata and is not folded into value().
struct ReferenceSignal {
    LoadSpectrum negated; ///< spectrum of -undesired components (x_d0 forced to 0)
    double omega_m = 0.0;
    double phi0 = 0.0;

    Dq value(double t) const;
    Dq derivative(double t) const;
};

/// Builds the tracking reference (X_ld0 cancels by construction).
ReferenceSignal make_reference(const LoadSpectrum& spectrum, double omega_m);

/// Smallest positive root of the power-balance quadratic
///   R phi0^2 - E_md phi0 + R f_m Int(x*_d^2 + x*_q^2) = 0.
/// The mean-square integral is a trapezoid quadrature over exactly one
/// period with `samples` points (>= 2048; doubling must move the result by
/// < 1e-9 relative, which is checked). Returns 0 for R = 0.
double solve_phi0(const ReferenceSignal& reference, const PlantParams& params,
                  int samples = 2048);

/// Period mean of x*_d^2 + x*_q^2 by the same quadrature (exposed for the
/// realness condition and for tests).
double reference_mean_square(const ReferenceSignal& reference, int samples = 2048);

/// Sequence of a stationary-frame harmonic tern.
enum class Sequence { Positive, Negative };

/// One stationary-frame (phase-current) harmonic: amplitude in ampere.
struct FixedFrameHarmonic {
    int order = 0; ///< multiple of the mains frequency
    double amp = 0.0;
    Sequence seq = Sequence::Positive;
    double phase = 0.0;
};

/// 3k+1 orders rotate with the mains, 3k-1 orders against it; triplen
/// orders are zero-sequence and cannot flow in a three-wire system.
Sequence natural_sequence(int order);

/// Maps stationary-frame current harmonics into the synchronous power
/// spectrum (order n maps to n-1 or n+1 depending on sequence; lines that
/// land on the same synchronous order are combined as phasors).
LoadSpectrum spectrum_from_fixed_frame(const std::vector<FixedFrameHarmonic>& lines,
                                       double V_m, double fundamental_amp = 0.0);

/// Two current harmonics of equal amplitude at 7 and 13 times the mains
/// frequency (350/650 Hz on a 50 Hz grid).
LoadSpectrum two_harmonics_load(double V_m, double amp = 10.0,
                                double fundamental_amp = 0.0);

/// Three-phase diode rectifier replaced by its dominant current lines:
/// 3.88 A / 1.91 A / 1.57 A / 1.08 A at orders 5 / 7 / 11 / 13.
LoadSpectrum diode_bridge_load(double V_m, double fundamental_amp = 0.0);

} // namespace saf
