#include "saf/sim.hpp"

#include "saf/errors.hpp"
#include "saf/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace saf {

namespace {
constexpr double kPi = 3.14159265358979323846;

const char* mode_name(SimMode m) {
    switch (m) {
        case SimMode::Continuous: return "continuous";
        case SimMode::Sampled: return "sampled";
        case SimMode::SampledPwm: return "sampled_pwm";
    }
    return "?";
}
} // namespace

void Scenario::validate() const {
    if (!(v_M > v_m) || !(v_m > 0.0)) {
        throw InputError("scenario: need v_M > v_m > 0");
    }
    if (duration_periods < 1) {
        throw InputError("scenario: duration must cover at least one period");
    }
    if (mode == SimMode::Continuous) {
        if (!(step > 0.0)) {
            throw InputError("scenario: integrator step must be positive");
        }
    } else {
        if (!(f_s > 0.0) || substeps < 1) {
            throw InputError("scenario: need f_s > 0 and substeps >= 1");
        }
        const double ticks = f_s / params.f_m();
        if (std::abs(ticks - std::round(ticks)) > 1e-6) {
            throw InputError("scenario: sampling rate must divide the mains period");
        }
    }
    if (output_decimation < 1) {
        throw InputError("scenario: output decimation must be >= 1");
    }
    if (!(v0 > v_floor)) {
        throw InputError("scenario: initial voltage at or below the floor");
    }
    load.validate();
}

double pwm_carrier(double carrier_phase) {
    return std::abs(1.0 - 2.0 * carrier_phase);
}

Abc pwm_duties(const Abc& u_abc, DutyMode mode, long* clamp_count) {
    double offset = 0.5;
    if (mode == DutyMode::Centered) {
        const double hi = std::max({u_abc.a, u_abc.b, u_abc.c});
        const double lo = std::min({u_abc.a, u_abc.b, u_abc.c});
        offset = 0.5 - 0.5 * (hi + lo);
    }
    Abc duties{u_abc.a + offset, u_abc.b + offset, u_abc.c + offset};
    for (double* d : {&duties.a, &duties.b, &duties.c}) {
        if (*d < 0.0 || *d > 1.0) {
            if (clamp_count != nullptr) {
                ++*clamp_count;
            }
            *d = std::clamp(*d, 0.0, 1.0);
        }
    }
    return duties;
}

SwitchVector pwm_actuate(const Abc& u_abc, double carrier_phase, DutyMode mode,
                         long* clamp_count) {
    const Abc duties = pwm_duties(u_abc, mode, clamp_count);
    const double carrier = pwm_carrier(carrier_phase);
    return {duties.a >= carrier ? 1.0 : 0.0, duties.b >= carrier ? 1.0 : 0.0,
            duties.c >= carrier ? 1.0 : 0.0};
}

namespace {

struct Recorder {
    RunResult& out;
    const PlantParams& params;
    const ReferenceSignal& ref;
    int decimation = 1;
    long index = 0;

    void record(double t, const PowerState& s, Dq u_dq, double eta, double z_a,
                double eta_a, double d_eta, double theta, bool warm) {
        if (index++ % decimation != 0) {
            return;
        }
        const double theta_e = params.omega_m * t;
        const Dq xs = ref.value(t);
        out.t.push_back(t);
        out.x.push_back({s.x_d, s.x_q});
        Dq xref{xs.d + eta, xs.q};
        out.xref.push_back(xref);
        out.xerr.push_back({s.x_d - xref.d, s.x_q - xref.q});
        out.v.push_back(s.v);
        out.z_tilde.push_back(s.v * s.v - V_star_sq);
        out.z_tilde_a.push_back(z_a);
        out.eta.push_back(eta);
        out.eta_a.push_back(eta_a);
        out.d_eta.push_back(d_eta);
        out.theta.push_back(theta);
        out.u_dq.push_back(u_dq);
        out.warmup.push_back(warm ? 1 : 0);

        const Dq xl = load_value(t);
        out.xload.push_back(xl);
        const Abc i_f = clarke_inverse(park_inverse({s.x_d, s.x_q}, theta_e, params.V_m));
        const Abc i_l = clarke_inverse(park_inverse(xl, theta_e, params.V_m));
        out.i_filter.push_back(i_f);
        out.i_load.push_back(i_l);
        out.i_mains.push_back(i_l + i_f);
    }

    double V_star_sq = 0.0;
    const LoadSpectrum* load = nullptr;
    Dq load_value(double t) const { return eval_load(*load, params.omega_m, t); }
};

struct CoupledOde {
    const PlantParams& params;
    const GainSynthesis& gains;
    const ReferenceSignal& ref;
    double v_floor = 0.0;
    bool open_loop = false;
    double eta_hold = 0.0;

    // workspace
    Eigen::VectorXd y, dy, k1, k2, k3, k4, tmp;

    explicit CoupledOde(const PlantParams& p, const GainSynthesis& g,
                        const ReferenceSignal& r)
        : params(p), gains(g), ref(r) {
        const int n = 3 + static_cast<int>(g.Phi.rows());
        for (Eigen::VectorXd* w : {&y, &dy, &k1, &k2, &k3, &k4, &tmp}) {
            w->setZero(n);
        }
    }

    Dq u_bar_at(double t, const Eigen::VectorXd& s) const {
        if (open_loop) {
            return {0.0, 0.0};
        }
        Dq xs = ref.value(t);
        xs.d += eta_hold;
        const Eigen::Vector2d xt(s(0) - xs.d, s(1) - xs.q);
        Eigen::Vector2d ub = gains.K * xt;
        ub.noalias() += gains.Gamma * s.tail(gains.Phi.rows());
        return {ub(0), ub(1)};
    }

    void rhs(double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        const double v = s(2);
        if (v < v_floor) {
            throw ControllabilityLossError(
                "DC-link voltage " + std::to_string(v) + " V fell below the floor at t=" +
                std::to_string(t) + " s");
        }
        const double a = -params.R / params.L;
        const double w = params.omega_m;
        Dq xs = ref.value(t);
        xs.d += eta_hold;
        const double xt_d = s(0) - xs.d;
        const double xt_q = s(1) - xs.q;
        double ub_d = 0.0, ub_q = 0.0;
        const auto m2 = gains.Phi.rows();
        if (!open_loop) {
            ub_d = gains.K(0, 0) * xt_d;
            ub_q = gains.K(1, 1) * xt_q;
            ub_d += gains.Gamma.row(0).tail(m2).dot(s.tail(m2));
            ub_q += gains.Gamma.row(1).tail(m2).dot(s.tail(m2));
        }
        ds(0) = a * s(0) + w * s(1) - ub_d / params.L + params.E_md / params.L;
        ds(1) = -w * s(0) + a * s(1) - ub_q / params.L;
        ds(2) = 0.5 * params.epsilon * (ub_d * s(0) + ub_q * s(1)) / v;
        if (!open_loop) {
            ds.tail(m2).noalias() = gains.Phi * s.tail(m2);
            ds.tail(m2).noalias() += gains.Q.col(0) * xt_d;
            ds.tail(m2).noalias() += gains.Q.col(1) * xt_q;
        } else {
            ds.tail(m2).setZero();
        }
    }

    void step(double t, double h) {
        rhs(t, y, k1);
        tmp = y + (0.5 * h) * k1;
        rhs(t + 0.5 * h, tmp, k2);
        tmp = y + (0.5 * h) * k2;
        rhs(t + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        rhs(t + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
};

/// Plant-only 4-stage step with the control supplied per stage time.
template <typename ControlFn>
PowerState plant_rk4(const PowerState& s0, double t, double h, const PlantParams& p,
                     ControlFn&& u_at) {
    auto f = [&](double ti, const PowerState& s) {
        return plant_derivative(s, u_at(ti), p);
    };
    const PowerStateRate r1 = f(t, s0);
    const PowerState s1{s0.x_d + 0.5 * h * r1.x_d_dot, s0.x_q + 0.5 * h * r1.x_q_dot,
                        s0.v + 0.5 * h * r1.v_dot};
    const PowerStateRate r2 = f(t + 0.5 * h, s1);
    const PowerState s2{s0.x_d + 0.5 * h * r2.x_d_dot, s0.x_q + 0.5 * h * r2.x_q_dot,
                        s0.v + 0.5 * h * r2.v_dot};
    const PowerStateRate r3 = f(t + 0.5 * h, s2);
    const PowerState s3{s0.x_d + h * r3.x_d_dot, s0.x_q + h * r3.x_q_dot,
                        s0.v + h * r3.v_dot};
    const PowerStateRate r4 = f(t + h, s3);
    return {s0.x_d + h / 6.0 * (r1.x_d_dot + 2 * r2.x_d_dot + 2 * r3.x_d_dot + r4.x_d_dot),
            s0.x_q + h / 6.0 * (r1.x_q_dot + 2 * r2.x_q_dot + 2 * r3.x_q_dot + r4.x_q_dot),
            s0.v + h / 6.0 * (r1.v_dot + 2 * r2.v_dot + 2 * r3.v_dot + r4.v_dot)};
}

Eigen::VectorXd initial_xi(const Scenario& sc, const GainSynthesis& gains,
                           const ReferenceSignal& ref) {
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(gains.Phi.rows());
    if (sc.init == InitMode::Equilibrium) {
        // preload only the constant blocks with the DC part of the steady
        // feedforward L (d0 + M x* - dx*)
        const int m = gains.exo.dim();
        const double xq_dc = ref.negated.x_q0;
        const double dc_d = sc.params.E_md + sc.params.L * sc.params.omega_m * xq_dc;
        const double dc_q = -sc.params.R * xq_dc;
        xi(0) = dc_d / gains.exo.Gamma_d(0);
        xi(m) = dc_q / gains.exo.Gamma_q(0);
    }
    return xi;
}

void check_finite(const PowerState& s, double t) {
    if (!std::isfinite(s.x_d) || !std::isfinite(s.x_q) || !std::isfinite(s.v)) {
        throw Error("simulation diverged to a non-finite state at t=" +
                    std::to_string(t) + " s");
    }
}

} // namespace

RunResult run_scenario(const Scenario& sc) {
    sc.validate();
    const PlantParams& p = sc.params;
    const double T = 1.0 / p.f_m();

    const Exosystem exo = build_exosystem(sc.controller.orders, p.omega_m);
    GainOptions gopts;
    gopts.k_d = sc.controller.k_d;
    gopts.k_q = sc.controller.k_q;
    gopts.k = sc.controller.k;
    const GainSynthesis gains = synthesize_gains(exo, p, gopts);
    const ReferenceSignal ref = make_reference(sc.load, p.omega_m);
    const VoltageGains vg{sc.controller.K_P, sc.controller.K_I};

    RunResult out;
    out.meta.mode = sc.mode;
    out.meta.output_decimation = sc.output_decimation;
    out.meta.duty_mode = sc.duty_mode == DutyMode::Centered ? "centered" : "sinusoidal";
    out.meta.k = gains.k;
    out.meta.k_bar = gains.k_bar;
    out.meta.closed_loop_abscissa = gains.closed_loop_abscissa;
    out.meta.seed = sc.seed;

    Recorder rec{out, p, ref};
    rec.decimation = sc.output_decimation;
    rec.V_star_sq = sc.V_star_sq();
    rec.load = &sc.load;

    const double V_star_sq = sc.V_star_sq();

    if (sc.mode == SimMode::Continuous) {
        const int P = static_cast<int>(std::round(T / sc.step));
        if (P < 16) {
            throw InputError("scenario: continuous step too coarse for one period");
        }
        const double h = T / P;
        const long total = static_cast<long>(P) * sc.duration_periods;
        out.meta.dt_plant = h;
        out.meta.dt_record = h * sc.output_decimation;
        out.meta.steps_per_period = P / sc.output_decimation;
        out.meta.window_slots = P;

        ControllerState cs(static_cast<int>(gains.Phi.rows()), P);
        cs.xi = initial_xi(sc, gains, ref);

        CoupledOde ode(p, gains, ref);
        ode.v_floor = sc.v_floor;
        ode.open_loop = sc.open_loop;
        ode.y(0) = 0.0;
        ode.y(1) = 0.0;
        ode.y(2) = sc.v0;
        ode.y.tail(gains.Phi.rows()) = cs.xi;

        bool was_warm = true;
        for (long i = 0; i < total; ++i) {
            const double t = i * h;
            const double v = ode.y(2);
            const double z_tilde = v * v - V_star_sq;
            VoltageUpdateResult vu;
            if (sc.voltage_loop && !sc.open_loop) {
                vu = voltage_update(cs, z_tilde, vg, p.epsilon, T, h);
            }
            ode.eta_hold = vu.eta;
            if (was_warm && !vu.warming_up) {
                out.events.push_back({t, "warm-up complete"});
                was_warm = false;
            }

            const PowerState now{ode.y(0), ode.y(1), v};
            Dq u_dq{0.0, 0.0};
            if (!sc.open_loop) {
                u_dq = divide_by_voltage(ode.u_bar_at(t, ode.y), v, sc.v_floor);
            }
            rec.record(t, now, u_dq, vu.eta, vu.z_a, vu.eta_a, vu.d_eta, cs.theta,
                       vu.warming_up);

            ode.step(t, h);
            check_finite({ode.y(0), ode.y(1), ode.y(2)}, t + h);
        }
        out.final_state = {ode.y(0), ode.y(1), ode.y(2)};
        out.final_xi = ode.y.tail(gains.Phi.rows());
        return out;
    }

    // sampled modes
    const int W = static_cast<int>(std::round(T * sc.f_s));
    const double T_s = T / W;
    const double h = T_s / sc.substeps;
    const long ticks = static_cast<long>(W) * sc.duration_periods;
    out.meta.dt_plant = h;
    out.meta.dt_record = h * sc.output_decimation;
    out.meta.steps_per_period = W * sc.substeps / sc.output_decimation;
    out.meta.window_slots = W;

    ControllerState cs(static_cast<int>(gains.Phi.rows()), W);
    cs.xi = initial_xi(sc, gains, ref);
    const DiscreteImc zoh = discretize_imc(gains, T_s);

    PowerState s{0.0, 0.0, sc.v0};
    bool was_warm = true;
    long clamp_count = 0;

    for (long k = 0; k < ticks; ++k) {
        const double t_k = k * T_s;
        const double z_tilde = s.v * s.v - V_star_sq;
        VoltageUpdateResult vu;
        if (sc.voltage_loop && !sc.open_loop) {
            vu = voltage_update(cs, z_tilde, vg, p.epsilon, T, T_s);
        }
        if (was_warm && !vu.warming_up) {
            out.events.push_back({t_k, "warm-up complete"});
            was_warm = false;
        }

        Dq u_dq{0.0, 0.0};
        Dq xs = ref.value(t_k);
        xs.d += vu.eta;
        if (!sc.open_loop) {
            const Dq x_tilde{s.x_d - xs.d, s.x_q - xs.q};
            const ImcResult imc = imc_update(cs, x_tilde, gains, zoh);
            u_dq = divide_by_voltage(imc.u_bar, s.v, sc.v_floor);
        }

        if (sc.mode == SimMode::Sampled) {
            for (int i = 0; i < sc.substeps; ++i) {
                const double t = t_k + i * h;
                rec.record(t, s, u_dq, vu.eta, vu.z_a, vu.eta_a, vu.d_eta, cs.theta,
                           vu.warming_up);
                s = plant_rk4(s, t, h, p, [&](double) { return u_dq; });
            }
        } else {
            const double theta_k = p.omega_m * t_k;
            const Abc u_abc_cmd = clarke_inverse(park_inverse(u_dq, theta_k, p.V_m));
            const Abc duties = pwm_duties(u_abc_cmd, sc.duty_mode, &clamp_count);
            for (int i = 0; i < sc.substeps; ++i) {
                const double t = t_k + i * h;
                const double carrier = pwm_carrier((i + 0.5) / sc.substeps);
                const SwitchVector legs{duties.a >= carrier ? 1.0 : 0.0,
                                        duties.b >= carrier ? 1.0 : 0.0,
                                        duties.c >= carrier ? 1.0 : 0.0};
                const SwitchImage sw = switch_to_uabc(legs);
                rec.record(t, s, u_dq, vu.eta, vu.z_a, vu.eta_a, vu.d_eta, cs.theta,
                           vu.warming_up);
                s = plant_rk4(s, t, h, p, [&](double ti) {
                    return park_forward(sw.u_ab, p.omega_m * ti, p.V_m);
                });
                if (s.v < sc.v_floor) {
                    throw ControllabilityLossError(
                        "DC-link voltage fell below the floor at t=" + std::to_string(t));
                }
            }
        }
        check_finite(s, t_k + T_s);
    }
    out.final_state = s;
    out.final_xi = cs.xi;
    out.meta.clamped_duties = clamp_count;
    return out;
}

std::vector<double> spectrum(std::span<const double> signal, double dt, double f_m,
                             int periods, int max_harmonic) {
    const std::size_t n = signal.size();
    if (n < 2 || periods < 1) {
        throw InputError("spectrum: need samples spanning at least one period");
    }
    const double span_periods = static_cast<double>(n) * dt * f_m;
    if (std::abs(span_periods - periods) > 1e-6 * periods) {
        throw InputError("spectrum: window must cover an integer number of periods "
                         "(got " + std::to_string(span_periods) + ")");
    }
    std::vector<double> mags(static_cast<std::size_t>(max_harmonic) + 1, 0.0);
    for (int k = 0; k <= max_harmonic; ++k) {
        const double w = 2.0 * kPi * k * f_m * dt;
        // Goertzel-style direct correlation at the exact bin
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            acc += signal[i] * std::polar(1.0, -w * static_cast<double>(i));
        }
        const double scale = k == 0 ? 1.0 : 2.0;
        mags[static_cast<std::size_t>(k)] = scale * std::abs(acc) / static_cast<double>(n);
    }
    return mags;
}

std::vector<CompensationRow> compensation_report(std::span<const double> i_mains,
                                                 std::span<const double> i_load,
                                                 double dt, double f_m, int periods,
                                                 std::span<const double> freqs_hz) {
    if (i_mains.size() != i_load.size()) {
        throw InputError("compensation_report: series must share one clock");
    }
    int max_harm = 0;
    for (double f : freqs_hz) {
        const double k = f / f_m;
        if (std::abs(k - std::round(k)) > 1e-9) {
            throw InputError("compensation_report: frequency " + std::to_string(f) +
                             " is not a multiple of f_m");
        }
        max_harm = std::max(max_harm, static_cast<int>(std::round(k)));
    }
    const std::vector<double> mag_m = spectrum(i_mains, dt, f_m, periods, max_harm);
    const std::vector<double> mag_l = spectrum(i_load, dt, f_m, periods, max_harm);
    std::vector<CompensationRow> rows;
    for (double f : freqs_hz) {
        const auto k = static_cast<std::size_t>(std::round(f / f_m));
        CompensationRow row;
        row.f_hz = f;
        row.i_ma = mag_m[k];
        row.i_la = mag_l[k];
        if (row.i_la < 1e-6) {
            row.no_load_content = true;
            row.percent = 0.0;
        } else {
            row.percent = (1.0 - row.i_ma / row.i_la) * 100.0;
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace saf
