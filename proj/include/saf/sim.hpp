#pragma once

#include "saf/control.hpp"
#include "saf/load.hpp"
#include "saf/plant.hpp"
#include "saf/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saf {

enum class SimMode { Continuous, Sampled, SampledPwm };

enum class InitMode {
    Zero,        ///< x = 0, xi = 0, theta = 0
    Equilibrium, ///< DC blocks of xi preloaded with the steady feedforward
};

enum class DutyMode {
    Centered,   ///< midpoint-clamp common mode, full hexagon inradius usable
    Sinusoidal, ///< plain 1/2 offset, saturates beyond 0.5 phase amplitude
};

struct ControllerConfig {
    std::vector<int> orders{0, 6, 12};
    double K_P = 0.3;
    double K_I = 3.7;
    std::optional<double> k = 200.0; ///< fixed loop gain; empty -> search k_bar
    double k_d = 1.0;
    double k_q = 1.0;
};

struct Scenario {
    PlantParams params;
    LoadSpectrum load;
    ControllerConfig controller;
    double v_m = 700.0; ///< safe window lower bound (V)
    double v_M = 900.0; ///< safe window upper bound (V)
    SimMode mode = SimMode::Continuous;
    int duration_periods = 30;
    double step = 1e-6;  ///< continuous-mode integrator step (s)
    double f_s = 7000.0; ///< controller/PWM rate in sampled modes (Hz)
    int substeps = 20;   ///< plant sub-steps per sampling period
    double v0 = 850.0;
    InitMode init = InitMode::Zero;
    int output_decimation = 1;
    DutyMode duty_mode = DutyMode::Centered;
    double v_floor = 50.0;
    bool open_loop = false;     ///< u_dq = 0 throughout (plant checks)
    bool voltage_loop = true;   ///< false pins eta at 0 (smooth-run checks)
    std::uint64_t seed = 42;

    double V_star_sq() const { return 0.5 * (v_m * v_m + v_M * v_M); }
    void validate() const;
};

struct SimEvent {
    double t = 0.0;
    std::string what;
};

struct RunMetadata {
    SimMode mode = SimMode::Continuous;
    double dt_record = 0.0;   ///< spacing of the recorded series (s)
    double dt_plant = 0.0;    ///< integrator step actually used (s)
    int steps_per_period = 0; ///< recorded samples per mains period
    int window_slots = 0;     ///< voltage-averaging ring size
    int output_decimation = 1;
    long clamped_duties = 0;
    std::string duty_mode;
    double k = 0.0, k_bar = 0.0, closed_loop_abscissa = 0.0;
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<double> t;
    std::vector<Dq> x, xref, xerr, xload, u_dq;
    std::vector<double> v, z_tilde, z_tilde_a;
    std::vector<double> eta, eta_a, d_eta, theta;
    std::vector<std::uint8_t> warmup;
    std::vector<Abc> i_filter, i_load, i_mains;
    std::vector<SimEvent> events;
    PowerState final_state;
    Eigen::VectorXd final_xi;
    RunMetadata meta;

    std::size_t samples() const { return t.size(); }
};

/// Runs the closed-loop scenario. Continuous mode integrates plant and
/// internal model as one smooth system with a classical 4-stage fixed-step
/// method; sampled modes hold the control over each sampling period, with
/// optional carrier-compare switching applied to the plant.
RunResult run_scenario(const Scenario& sc);

/// Rectangular-window harmonic magnitudes at multiples of f_m. The series
/// must span an integer number of mains periods; magnitudes use the
/// single-sided peak-amplitude convention.
std::vector<double> spectrum(std::span<const double> signal, double dt, double f_m,
                             int periods, int max_harmonic);

struct CompensationRow {
    double f_hz = 0.0;
    double i_ma = 0.0;
    double i_la = 0.0;
    double percent = 0.0;
    bool no_load_content = false;
};

/// Per-harmonic attenuation of the mains current relative to the load
/// current over a shared steady-state window:
/// percent = (1 - i_ma(f)/i_la(f)) * 100.
std::vector<CompensationRow> compensation_report(std::span<const double> i_mains,
                                                 std::span<const double> i_load,
                                                 double dt, double f_m, int periods,
                                                 std::span<const double> freqs_hz);

/// Leg duties for a commanded zero-sum u_abc; clamping is counted, not fatal.
Abc pwm_duties(const Abc& u_abc, DutyMode mode, long* clamp_count = nullptr);

/// Symmetric triangular carrier value at phase in [0,1).
double pwm_carrier(double carrier_phase);

/// Switch vector emitted at the given carrier phase for the commanded
/// (already zero-sum) u_abc: leg on iff duty >= carrier.
SwitchVector pwm_actuate(const Abc& u_abc, double carrier_phase,
                         DutyMode mode = DutyMode::Centered,
                         long* clamp_count = nullptr);

} // namespace saf
