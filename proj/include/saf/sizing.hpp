#pragma once

#include "saf/load.hpp"
#include "saf/plant.hpp"
#include "saf/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saf {

/// Peak-to-peak inductor current ripple for a PWM bridge held at DC-link
/// voltage V: V / (6 f_pwm L).
double peak_ripple(double V, double f_pwm, double L);

/// Smallest inductance keeping the ripple under delta_I_Mpp at the highest
/// DC-link voltage: v_M / (6 f_pwm delta_I_Mpp).
double min_inductance(double v_M, double f_pwm, double delta_I_Mpp);

struct FeasibilityVerdict {
    bool feasible = false;
    double margin = 0.0;
};

/// Inscribed-circle test of a sampled three-phase current trajectory
/// against the switch current limit: feasible iff max_t |i_ab(t)| <= I_max.
FeasibilityVerdict current_feasibility(std::span<const Abc> i_abc, double I_max);

/// dq trajectory with its analytic time derivative on a uniform grid.
struct DqTrajectory {
    std::vector<double> t;
    std::vector<Dq> value;
    std::vector<Dq> derivative;
};

struct BridgeVoltageDemand {
    std::vector<Dq> v_dq;
    double peak = 0.0; ///< max_t |v*(t)| (equals the stationary-frame peak)
};

/// Bridge voltage needed to impose a current reference with R neglected:
///   v*_dq = (V_m, 0) - L di*/dt + L [[0, w],[-w, 0]] i*_dq.
/// The supplied derivative is cross-checked against central differences.
BridgeVoltageDemand bridge_voltage_demand(const DqTrajectory& i_star,
                                          const PlantParams& params);

/// Lower DC-link voltage bound from the modulation inscribed circle:
/// v_m >= sqrt(3) * peak |v*_abc|.
double min_dc_voltage(double v_star_abc_peak);

struct EnergyCapacitorResult {
    double E_max = 0.0; ///< largest energy swing around the period mean (J)
    double C = 0.0;     ///< 2 E_max / (v_ref^2 - v_m^2), v_ref = (v_M+v_m)/2
    bool degenerate = false;
};

/// Integrates a zero-mean instantaneous filter power trajectory over one
/// period (cumulative trapezoid, mean removed) and sizes the capacitor so
/// the swing E_max corresponds to the excursion v_ref -> v_m.
EnergyCapacitorResult capacitor_from_energy(std::span<const double> p_filt, double dt,
                                            double v_m, double v_M);

/// Filter current spectrum in ampere for the switches-based search; same
/// shape as the load spectrum but in current variables.
struct CurrentHarmonic {
    int n = 0;
    double amp_d = 0.0, phase_d = 0.0;
    double amp_q = 0.0, phase_q = 0.0;
};

struct CurrentSpectrum {
    double i_d0 = 0.0;
    double i_q0 = 0.0;
    std::vector<CurrentHarmonic> harmonics;
};

struct WorstCaseOptions {
    int multistarts = 64;
    int refine_steps = 2000;   ///< single-coordinate probe iterations per start
    std::uint64_t seed = 42;
    int samples_per_period = 1024;
    bool include_dc = true;    ///< search over the DC terms I_d0, I_q0
    bool include_q_axis = true;///< search over the q-axis lines
};

struct WorstCaseResult {
    double e_max = 0.0;          ///< J
    CurrentSpectrum maximizer;
    bool converged = false;      ///< refinement stalled below step tolerance
    std::uint64_t seed = 0;
    long evaluations = 0;
};

/// Energy swing (max |E_filt|, mean-removed) produced by a candidate filter
/// current spectrum; the DC power product is excluded by integrating the
/// zero-mean part of p(t) = (3/2) v*_dq' i_dq. Exposed so independent
/// searches can share the objective.
double energy_swing(const CurrentSpectrum& z, const PlantParams& params,
                    int samples_per_period);

/// Constraint slacks for a candidate spectrum: current inscribed circle and
/// modulation inscribed circle evaluated at the lowest voltage v_m.
struct WorstCaseFeasibility {
    bool feasible = false;
    double current_slack = 0.0; ///< I_max - max_t |i(t)|
    double voltage_slack = 0.0; ///< v_m/sqrt(3) - max_t |v*(t)|
};

WorstCaseFeasibility worst_case_feasible(const CurrentSpectrum& z, double I_max,
                                         const PlantParams& params, double v_m,
                                         int samples_per_period);

/// Randomized multistart + coordinate refinement maximization of the energy
/// swing over amplitudes and phases of the given synchronous orders.
WorstCaseResult worst_case_energy(double I_max, const std::vector<int>& orders,
                                  const PlantParams& params, double v_m,
                                  const WorstCaseOptions& opts = {});

/// Inputs shared by both sizing approaches.
struct SizingInputs {
    double f_pwm = 7000.0;
    double delta_I_Mpp = 0.0;
    double v_M = 0.0;
    double I_max = 0.0;
    double V_m = 0.0;
    double f_m = 50.0;
    double safety_factor = 1.15; ///< applied to the v_m bound before choosing v_m
    int samples_per_period = 4096;
    // load-based mode
    std::optional<LoadSpectrum> spectrum;
    // switches-based mode
    std::vector<int> orders;
    double v_m_assumed = 0.0; ///< floor assumed during the worst-case search
    WorstCaseOptions search;
};

struct SizingReport {
    double L_min = 0.0;
    double v_m_bound = 0.0;    ///< raw inequality bound sqrt(3) * peak |v*|
    double v_m_chosen = 0.0;   ///< bound with the safety factor applied
    double E_max = 0.0;
    double C = 0.0;
    bool feasible = false;
    double peak_v_star = 0.0;
    double current_margin = 0.0;
    double voltage_slack = 0.0; ///< v_M - v_m_chosen
    std::vector<std::string> notes; ///< remediation list when infeasible
    std::optional<WorstCaseResult> worst_case;
};

/// Load-based pipeline: ripple inductance, current feasibility, bridge
/// voltage bound, energy swing, capacitor.
SizingReport size_from_load(const SizingInputs& in);

/// Switches-based pipeline: ripple inductance, worst-case energy over all
/// loads the switches can carry, capacitor.
SizingReport size_from_switches(const SizingInputs& in);

} // namespace saf
