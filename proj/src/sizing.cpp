#include "saf/sizing.hpp"

#include "saf/errors.hpp"
#include "saf/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace saf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt3 = 1.7320508075688772935;

double wrap_phase(double p) {
    double w = std::remainder(p, 2.0 * kPi);
    if (w <= -kPi) {
        w += 2.0 * kPi;
    }
    return w;
}
} // namespace

double peak_ripple(double V, double f_pwm, double L) {
    if (!(V > 0.0) || !(f_pwm > 0.0) || !(L > 0.0)) {
        throw InputError("peak_ripple: V, f_pwm, L must be positive");
    }
    return V / (6.0 * f_pwm * L);
}

double min_inductance(double v_M, double f_pwm, double delta_I_Mpp) {
    if (!(f_pwm > 0.0) || !(delta_I_Mpp > 0.0) || v_M < 0.0) {
        throw InputError("min_inductance: f_pwm, delta_I_Mpp must be positive");
    }
    return v_M / (6.0 * f_pwm * delta_I_Mpp); // v_M = 0 degenerates to 0
}

FeasibilityVerdict current_feasibility(std::span<const Abc> i_abc, double I_max) {
    if (i_abc.empty()) {
        throw InputError("current_feasibility: empty trajectory");
    }
    double peak = 0.0;
    for (const Abc& sample : i_abc) {
        peak = std::max(peak, clarke_forward(sample).norm());
    }
    const double margin = I_max - peak;
    return {margin >= -1e-9 * std::max(I_max, 1.0), margin};
}

BridgeVoltageDemand bridge_voltage_demand(const DqTrajectory& i_star,
                                          const PlantParams& params) {
    const std::size_t n = i_star.t.size();
    if (n < 3 || i_star.value.size() != n || i_star.derivative.size() != n) {
        throw InputError("bridge_voltage_demand: need >= 3 consistent samples");
    }
    double deriv_scale = 0.0;
    for (const Dq& d : i_star.derivative) {
        deriv_scale = std::max(deriv_scale, d.norm());
    }
    const double tol = 0.01 * std::max(deriv_scale, 1e-12);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h2 = i_star.t[i + 1] - i_star.t[i - 1];
        const Dq fd{(i_star.value[i + 1].d - i_star.value[i - 1].d) / h2,
                    (i_star.value[i + 1].q - i_star.value[i - 1].q) / h2};
        if ((fd - i_star.derivative[i]).norm() > tol) {
            throw InputError("bridge_voltage_demand: supplied derivative disagrees with "
                             "finite differences at sample " + std::to_string(i));
        }
    }

    const double w = params.omega_m;
    const double L = params.L;
    BridgeVoltageDemand out;
    out.v_dq.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Dq iv = i_star.value[i];
        const Dq di = i_star.derivative[i];
        const Dq v{params.V_m - L * di.d + L * w * iv.q, -L * di.q - L * w * iv.d};
        out.v_dq[i] = v;
        // stationary-frame amplitude via the inverse rotation
        const double theta = w * i_star.t[i];
        out.peak = std::max(out.peak, rotate_to_alphabeta(v, theta).norm());
    }
    return out;
}

double min_dc_voltage(double v_star_abc_peak) {
    if (v_star_abc_peak < 0.0) {
        throw InputError("min_dc_voltage: peak must be >= 0");
    }
    return kSqrt3 * v_star_abc_peak;
}

EnergyCapacitorResult capacitor_from_energy(std::span<const double> p_filt, double dt,
                                            double v_m, double v_M) {
    const std::size_t n = p_filt.size();
    if (n < 2 || !(dt > 0.0)) {
        throw InputError("capacitor_from_energy: need a sampled period");
    }
    if (!(v_M > v_m) || !(v_m > 0.0)) {
        throw InputError("capacitor_from_energy: need v_M > v_m > 0");
    }
    double peak = 0.0, mean = 0.0;
    for (double p : p_filt) {
        peak = std::max(peak, std::abs(p));
        mean += p;
    }
    mean /= static_cast<double>(n);
    if (peak == 0.0) {
        return {0.0, 0.0, true};
    }
    if (std::abs(mean) > 1e-3 * peak) {
        throw InputError("capacitor_from_energy: power trajectory has nonzero period "
                         "mean; not a steady state");
    }
    // Cumulative trapezoid of the mean-free power, then recenter the energy
    // so the swing is measured around its own period mean.
    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        energy[i] = energy[i - 1] + 0.5 * dt * ((p_filt[i - 1] - mean) + (p_filt[i] - mean));
    }
    double e_mean = 0.0;
    for (double e : energy) {
        e_mean += e;
    }
    e_mean /= static_cast<double>(n);
    double e_max = 0.0;
    for (double e : energy) {
        e_max = std::max(e_max, std::abs(e - e_mean));
    }
    const double v_ref = 0.5 * (v_M + v_m);
    return {e_max, 2.0 * e_max / (v_ref * v_ref - v_m * v_m), false};
}

namespace {

/// Shared sample grid with per-order cos/sin tables, so repeated objective
/// evaluations cost two fused multiplies per order and sample.
struct HarmonicTables {
    double omega = 0.0;
    double dt = 0.0;
    int samples = 0;
    std::vector<int> orders;
    std::vector<std::vector<double>> cosn, sinn;

    HarmonicTables(double omega_m, const std::vector<int>& ords, int samples_per_period)
        : omega(omega_m), samples(samples_per_period), orders(ords) {
        const double T = 2.0 * kPi / omega_m;
        dt = T / samples;
        cosn.resize(orders.size());
        sinn.resize(orders.size());
        for (std::size_t k = 0; k < orders.size(); ++k) {
            cosn[k].resize(samples);
            sinn[k].resize(samples);
            for (int i = 0; i < samples; ++i) {
                const double arg = orders[k] * omega_m * dt * i;
                cosn[k][i] = std::cos(arg);
                sinn[k][i] = std::sin(arg);
            }
        }
    }
};

struct EvalBuffers {
    std::vector<double> id, iq, did, diq;
};

void sample_spectrum(const CurrentSpectrum& z, const HarmonicTables& tab,
                     EvalBuffers& buf) {
    const int n = tab.samples;
    buf.id.assign(n, z.i_d0);
    buf.iq.assign(n, z.i_q0);
    buf.did.assign(n, 0.0);
    buf.diq.assign(n, 0.0);
    for (const CurrentHarmonic& h : z.harmonics) {
        const auto it = std::find(tab.orders.begin(), tab.orders.end(), h.n);
        const std::size_t k = static_cast<std::size_t>(it - tab.orders.begin());
        const double w = h.n * tab.omega;
        const double cd = h.amp_d * std::cos(h.phase_d), sd = h.amp_d * std::sin(h.phase_d);
        const double cq = h.amp_q * std::cos(h.phase_q), sq = h.amp_q * std::sin(h.phase_q);
        const auto& cn = tab.cosn[k];
        const auto& sn = tab.sinn[k];
        for (int i = 0; i < n; ++i) {
            // A cos(wt + p) = A cos p cos wt - A sin p sin wt
            buf.id[i] += cd * cn[i] - sd * sn[i];
            buf.iq[i] += cq * cn[i] - sq * sn[i];
            buf.did[i] += -w * (cd * sn[i] + sd * cn[i]);
            buf.diq[i] += -w * (cq * sn[i] + sq * cn[i]);
        }
    }
}

struct ObjectiveEval {
    double e_max = 0.0;
    double current_peak = 0.0;
    double voltage_peak = 0.0;
};

ObjectiveEval evaluate_candidate(const CurrentSpectrum& z, const PlantParams& params,
                                 const HarmonicTables& tab, EvalBuffers& buf) {
    sample_spectrum(z, tab, buf);
    const int n = tab.samples;
    const double L = params.L;
    const double w = params.omega_m;
    ObjectiveEval out;
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
        const double vd = params.V_m - L * buf.did[i] + L * w * buf.iq[i];
        const double vq = -L * buf.diq[i] - L * w * buf.id[i];
        out.current_peak = std::max(out.current_peak, std::hypot(buf.id[i], buf.iq[i]));
        out.voltage_peak = std::max(out.voltage_peak, std::hypot(vd, vq));
        p[i] = 1.5 * (vd * buf.id[i] + vq * buf.iq[i]);
    }
    double mean = 0.0;
    for (double v : p) {
        mean += v;
    }
    mean /= n;
    double e = 0.0, e_sum = 0.0, e_min = 0.0, e_maxv = 0.0;
    std::vector<double> energy(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0) {
            e += 0.5 * tab.dt * ((p[i - 1] - mean) + (p[i] - mean));
        }
        energy[i] = e;
        e_sum += e;
    }
    const double e_mean = e_sum / n;
    for (int i = 0; i < n; ++i) {
        e_min = std::min(e_min, energy[i] - e_mean);
        e_maxv = std::max(e_maxv, energy[i] - e_mean);
    }
    out.e_max = std::max(std::abs(e_min), std::abs(e_maxv));
    return out;
}

} // namespace

double energy_swing(const CurrentSpectrum& z, const PlantParams& params,
                    int samples_per_period) {
    std::vector<int> orders;
    for (const auto& h : z.harmonics) {
        orders.push_back(h.n);
    }
    HarmonicTables tab(params.omega_m, orders, samples_per_period);
    EvalBuffers buf;
    return evaluate_candidate(z, params, tab, buf).e_max;
}

WorstCaseFeasibility worst_case_feasible(const CurrentSpectrum& z, double I_max,
                                         const PlantParams& params, double v_m,
                                         int samples_per_period) {
    std::vector<int> orders;
    for (const auto& h : z.harmonics) {
        orders.push_back(h.n);
    }
    HarmonicTables tab(params.omega_m, orders, samples_per_period);
    EvalBuffers buf;
    const ObjectiveEval ev = evaluate_candidate(z, params, tab, buf);
    WorstCaseFeasibility out;
    out.current_slack = I_max - ev.current_peak;
    out.voltage_slack = v_m / kSqrt3 - ev.voltage_peak;
    out.feasible = out.current_slack >= 0.0 && out.voltage_slack >= 0.0;
    return out;
}

namespace {

/// Flat view of the search coordinates: amplitudes first (>= 0), then
/// phases (wrapped into (-pi, pi]).
struct SearchSpace {
    std::vector<double*> amps;
    std::vector<double*> phases;

    static SearchSpace bind(CurrentSpectrum& z, const WorstCaseOptions& opts) {
        SearchSpace s;
        if (opts.include_dc) {
            s.amps.push_back(&z.i_d0);
            if (opts.include_q_axis) {
                s.amps.push_back(&z.i_q0);
            }
        }
        for (auto& h : z.harmonics) {
            s.amps.push_back(&h.amp_d);
            s.phases.push_back(&h.phase_d);
            if (opts.include_q_axis) {
                s.amps.push_back(&h.amp_q);
                s.phases.push_back(&h.phase_q);
            }
        }
        return s;
    }
};

} // namespace

WorstCaseResult worst_case_energy(double I_max, const std::vector<int>& orders,
                                  const PlantParams& params, double v_m,
                                  const WorstCaseOptions& opts) {
    if (I_max < 0.0) {
        throw InputError("worst_case_energy: I_max must be >= 0");
    }
    if (orders.empty()) {
        throw InputError("worst_case_energy: need at least one harmonic order");
    }
    for (int n : orders) {
        if (n < 1 || std::count(orders.begin(), orders.end(), n) != 1) {
            throw InputError("worst_case_energy: orders must be distinct and >= 1");
        }
    }
    if (v_m / kSqrt3 < params.V_m) {
        throw InfeasibleError("worst_case_energy: v_m below sqrt(3) V_m, even the idle "
                              "bridge voltage is infeasible");
    }

    HarmonicTables tab(params.omega_m, orders, opts.samples_per_period);
    EvalBuffers buf;
    const double v_cap = v_m / kSqrt3;

    auto feasible = [&](const ObjectiveEval& ev) {
        return ev.current_peak <= I_max && ev.voltage_peak <= v_cap;
    };

    WorstCaseResult best;
    best.seed = opts.seed;
    long evals = 0;

    auto evaluate = [&](const CurrentSpectrum& z) {
        ++evals;
        return evaluate_candidate(z, params, tab, buf);
    };

    CurrentSpectrum zero;
    for (int n : orders) {
        zero.harmonics.push_back({n, 0.0, 0.0, 0.0, 0.0});
    }
    best.maximizer = zero;
    best.e_max = 0.0;

    for (int start = 0; start < opts.multistarts; ++start) {
        std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * (start + 1));
        std::uniform_real_distribution<double> amp_dist(0.0, std::max(I_max, 1e-12));
        std::uniform_real_distribution<double> phase_dist(-kPi, kPi);

        CurrentSpectrum z = zero;
        SearchSpace space = SearchSpace::bind(z, opts);
        for (double* a : space.amps) {
            *a = amp_dist(rng);
        }
        for (double* p : space.phases) {
            *p = phase_dist(rng);
        }
        // shrink amplitudes until the start point is feasible (z = 0 is)
        ObjectiveEval ev = evaluate(z);
        for (int tries = 0; !feasible(ev) && tries < 80; ++tries) {
            for (double* a : space.amps) {
                *a *= 0.8;
            }
            ev = evaluate(z);
        }
        if (!feasible(ev)) {
            z = zero;
            ev = evaluate(z);
        }
        double value = ev.e_max;

        double amp_step = 0.1 * std::max(I_max, 1e-12);
        double phase_step = 0.3;
        const double amp_step_tol = 1e-9 * std::max(I_max, 1e-12);
        bool improved_in_cycle = false;
        bool stalled = false;
        const std::size_t dims = space.amps.size() + space.phases.size();
        std::size_t coord = 0;
        for (int it = 0; it < opts.refine_steps; ++it) {
            const bool is_amp = coord < space.amps.size();
            double* target = is_amp ? space.amps[coord]
                                    : space.phases[coord - space.amps.size()];
            const double step = is_amp ? amp_step : phase_step;
            const double saved = *target;
            for (double dir : {+1.0, -1.0}) {
                double candidate = saved + dir * step;
                if (is_amp) {
                    candidate = std::max(candidate, 0.0);
                } else {
                    candidate = wrap_phase(candidate);
                }
                *target = candidate;
                const ObjectiveEval trial = evaluate(z);
                if (feasible(trial) && trial.e_max > value) {
                    value = trial.e_max;
                    improved_in_cycle = true;
                    break;
                }
                *target = saved;
            }
            coord = (coord + 1) % dims;
            if (coord == 0) {
                if (!improved_in_cycle) {
                    amp_step *= 0.5;
                    phase_step *= 0.5;
                    if (amp_step < amp_step_tol) {
                        stalled = true;
                        break;
                    }
                }
                improved_in_cycle = false;
            }
        }
        if (value > best.e_max) {
            best.e_max = value;
            best.maximizer = z;
            best.converged = stalled;
        } else if (start == 0 && best.e_max == 0.0) {
            best.converged = stalled;
        }
    }
    best.evaluations = evals;
    return best;
}

SizingReport size_from_load(const SizingInputs& in) {
    if (!in.spectrum) {
        throw InputError("size_from_load: no load spectrum configured");
    }
    SizingReport report;
    report.L_min = min_inductance(in.v_M, in.f_pwm, in.delta_I_Mpp);
    if (report.L_min <= 0.0) {
        report.notes.push_back("degenerate ripple bound: v_M = 0 gives L_min = 0");
    }

    // R is neglected in the sizing model; C enters nowhere below.
    const PlantParams params =
        make_plant_params(std::max(report.L_min, 1e-12), 0.0, 1.0, in.V_m, in.f_m);
    const ReferenceSignal ref = make_reference(*in.spectrum, params.omega_m);

    const int n = in.samples_per_period;
    const double T = 1.0 / in.f_m;
    const double dt = T / n;
    DqTrajectory traj;
    traj.t.resize(n);
    traj.value.resize(n);
    traj.derivative.resize(n);
    std::vector<Abc> i_abc(n);
    for (int i = 0; i < n; ++i) {
        const double t = dt * i;
        traj.t[i] = t;
        const Dq x = ref.value(t);
        const Dq dx = ref.derivative(t);
        traj.value[i] = {x.d / in.V_m, x.q / in.V_m};
        traj.derivative[i] = {dx.d / in.V_m, dx.q / in.V_m};
        i_abc[i] = clarke_inverse(park_inverse(x, params.omega_m * t, in.V_m));
    }

    const FeasibilityVerdict current = current_feasibility(i_abc, in.I_max);
    report.current_margin = current.margin;

    const BridgeVoltageDemand demand = bridge_voltage_demand(traj, params);
    report.peak_v_star = demand.peak;
    report.v_m_bound = min_dc_voltage(demand.peak);
    report.v_m_chosen = in.safety_factor * report.v_m_bound;
    if (report.v_m_chosen >= in.v_M && report.v_m_bound < in.v_M) {
        report.v_m_chosen = report.v_m_bound;
        report.notes.push_back("safety factor dropped: oversized v_m would exceed v_M");
    }
    report.voltage_slack = in.v_M - report.v_m_chosen;

    report.feasible = current.feasible && report.v_m_bound <= in.v_M;
    if (!current.feasible) {
        report.notes.push_back("current demand exceeds I_max: reduce the number of "
                               "compensated harmonics or split the load over two filters");
    }
    if (report.v_m_bound > in.v_M) {
        report.notes.push_back("voltage window empty: raise v_M (different capacitor), "
                               "reduce the compensated harmonics, or lower L and accept "
                               "more ripple");
    }

    if (report.feasible) {
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) {
            p[i] = 1.5 * (demand.v_dq[i].d * traj.value[i].d +
                          demand.v_dq[i].q * traj.value[i].q);
        }
        const EnergyCapacitorResult full =
            capacitor_from_energy(p, dt, report.v_m_chosen, in.v_M);
        // halving self-check on the energy quadrature
        std::vector<double> p_half(n / 2);
        for (int i = 0; i < n / 2; ++i) {
            p_half[i] = p[2 * i];
        }
        const EnergyCapacitorResult half =
            capacitor_from_energy(p_half, 2.0 * dt, report.v_m_chosen, in.v_M);
        if (full.E_max > 0.0 &&
            std::abs(full.E_max - half.E_max) > 1e-4 * full.E_max) {
            report.notes.push_back("energy quadrature not converged; raise "
                                   "samples_per_period");
        }
        report.E_max = full.E_max;
        report.C = full.C;
        if (full.degenerate) {
            report.notes.push_back("zero compensation power: capacitor unconstrained");
        }
    }
    return report;
}

SizingReport size_from_switches(const SizingInputs& in) {
    if (in.orders.empty()) {
        throw InputError("size_from_switches: no harmonic-order budget configured");
    }
    if (!(in.v_m_assumed > 0.0)) {
        throw InputError("size_from_switches: v_m_assumed must be positive");
    }
    SizingReport report;
    report.L_min = min_inductance(in.v_M, in.f_pwm, in.delta_I_Mpp);
    const PlantParams params =
        make_plant_params(std::max(report.L_min, 1e-12), 0.0, 1.0, in.V_m, in.f_m);

    WorstCaseOptions search = in.search;
    search.samples_per_period = std::min(search.samples_per_period, in.samples_per_period);
    const WorstCaseResult wc =
        worst_case_energy(in.I_max, in.orders, params, in.v_m_assumed, search);
    report.worst_case = wc;
    report.E_max = wc.e_max;
    report.v_m_bound = in.v_m_assumed;
    report.v_m_chosen = in.v_m_assumed;
    report.voltage_slack = in.v_M - in.v_m_assumed;
    report.feasible = in.v_M > in.v_m_assumed;
    if (report.feasible) {
        const double v_ref = 0.5 * (in.v_M + in.v_m_assumed);
        report.C = 2.0 * wc.e_max / (v_ref * v_ref - in.v_m_assumed * in.v_m_assumed);
    } else {
        report.notes.push_back("assumed v_m is not below v_M");
    }
    if (!wc.converged) {
        report.notes.push_back("worst-case search hit the refinement budget; result is "
                               "best-so-far");
    }
    return report;
}

} // namespace saf
