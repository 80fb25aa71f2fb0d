#include "saf/control.hpp"

#include "saf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace saf {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

Exosystem build_exosystem(std::vector<int> orders, double omega_m) {
    if (!(omega_m > 0.0)) {
        throw InputError("build_exosystem: omega_m must be positive");
    }
    for (int n : orders) {
        if (n < 0) {
            throw InputError("build_exosystem: orders must be >= 0");
        }
    }
    std::sort(orders.begin(), orders.end());
    if (std::adjacent_find(orders.begin(), orders.end()) != orders.end()) {
        throw InputError("build_exosystem: duplicate harmonic order");
    }
    if (orders.empty() || orders.front() != 0) {
        orders.insert(orders.begin(), 0);
    }

    const int n_osc = static_cast<int>(orders.size()) - 1;
    const int m = 2 * n_osc + 1;
    Exosystem exo;
    exo.orders = orders;
    exo.omega_m = omega_m;
    exo.Omega = Eigen::MatrixXd::Zero(m, m);
    exo.Gamma_d = Eigen::RowVectorXd::Zero(m);
    exo.Gamma_d(0) = 1.0; // constant-disturbance state
    int row = 1;
    for (int i = 1; i <= n_osc; ++i) {
        const double w = orders[static_cast<std::size_t>(i)] * omega_m;
        exo.Omega(row, row + 1) = w;
        exo.Omega(row + 1, row) = -w;
        exo.Gamma_d(row) = 1.0;
        row += 2;
    }
    exo.Gamma_q = exo.Gamma_d;

    // observability of (Gamma, Omega)
    Eigen::MatrixXd obs(m, m);
    Eigen::RowVectorXd r = exo.Gamma_d;
    for (int i = 0; i < m; ++i) {
        obs.row(i) = r;
        r = r * exo.Omega;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(obs);
    qr.setThreshold(1e-10);
    if (qr.rank() != m) {
        throw SynthesisError("build_exosystem: (Gamma, Omega) not observable");
    }
    return exo;
}

Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& F, const Eigen::VectorXd& G,
                                const Eigen::MatrixXd& Omega,
                                const Eigen::RowVectorXd& Gamma) {
    const Eigen::Index m = F.rows();
    const Eigen::Index p = Omega.rows();
    if (F.cols() != m || Omega.cols() != p || G.rows() != m || Gamma.cols() != p) {
        throw InputError("solve_sylvester: dimension mismatch");
    }
    // vec(F E - E Omega) = (I (x) F - Omega' (x) I) vec(E)
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m * p, m * p);
    const Eigen::MatrixXd I_m = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index bi = 0; bi < p; ++bi) {
        for (Eigen::Index bj = 0; bj < p; ++bj) {
            Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
            if (bi == bj) {
                block = F;
            }
            block -= Omega(bj, bi) * I_m;
            A.block(bi * m, bj * m, m, m) = block;
        }
    }
    const Eigen::MatrixXd rhs_mat = -G * Gamma;
    Eigen::VectorXd rhs(m * p);
    for (Eigen::Index j = 0; j < p; ++j) {
        rhs.segment(j * m, m) = rhs_mat.col(j);
    }
    const Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    Eigen::MatrixXd E(m, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        E.col(j) = x.segment(j * m, m);
    }
    const double rel = (F * E - E * Omega + G * Gamma).norm() /
                       std::max(E.norm(), 1e-300);
    if (Gamma.norm() > 0.0 && rel > 1e-10) {
        throw SynthesisError("solve_sylvester: residual " + std::to_string(rel) +
                             " above tolerance");
    }
    return E;
}

FgPair default_fg(const Exosystem& exo) {
    const int m = exo.dim();
    const int n_max = std::max(exo.orders.back(), 1);
    Eigen::VectorXd roots(m);
    if (m == 1) {
        roots(0) = -exo.omega_m;
    } else {
        const double lo = -2.0 * exo.omega_m * n_max;
        const double hi = -exo.omega_m;
        for (int i = 0; i < m; ++i) {
            roots(i) = hi + (lo - hi) * i / (m - 1);
        }
    }
    // characteristic polynomial by root convolution
    std::vector<double> coeff{1.0};
    for (int i = 0; i < m; ++i) {
        std::vector<double> next(coeff.size() + 1, 0.0);
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            next[j] += coeff[j];
            next[j + 1] -= roots(i) * coeff[j];
        }
        coeff = std::move(next);
    }
    FgPair fg;
    fg.F = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) {
        fg.F(i, i + 1) = 1.0;
    }
    for (int j = 0; j < m; ++j) {
        // coeff = [1, a_{m-1}, ..., a_0]; bottom row carries -a_j
        fg.F(m - 1, j) = -coeff[static_cast<std::size_t>(m - j)];
    }
    fg.G = Eigen::VectorXd::Zero(m);
    fg.G(m - 1) = 1.0;
    return fg;
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd closed_loop_matrix(const GainSynthesis& gains, const PlantParams& params) {
    const int m2 = static_cast<int>(gains.Phi.rows());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 + m2, 2 + m2);
    Eigen::Matrix2d M;
    M << -params.R / params.L, params.omega_m, -params.omega_m, -params.R / params.L;
    A.topLeftCorner(2, 2) = M - gains.K / params.L;
    A.topRightCorner(2, m2) = -gains.Gamma / params.L;
    A.bottomLeftCorner(m2, 2) = gains.Q;
    A.bottomRightCorner(m2, m2) = gains.Phi;
    return A;
}

Eigen::MatrixXd closed_loop_matrix_transformed(const GainSynthesis& gains,
                                               const PlantParams& params) {
    const int m = static_cast<int>(gains.E_d.rows());
    const int m2 = 2 * m;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m2, m2);
    E.topLeftCorner(m, m) = gains.E_d;
    E.bottomRightCorner(m, m) = gains.E_q;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m2, m2);
    F.topLeftCorner(m, m) = gains.F_d;
    F.bottomRightCorner(m, m) = gains.F_q;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m2, 2);
    G.col(0).head(m) = gains.G_d;
    G.col(1).tail(m) = gains.G_q;

    Eigen::Matrix2d M;
    M << -params.R / params.L, params.omega_m, -params.omega_m, -params.R / params.L;
    const Eigen::MatrixXd E_inv = E.partialPivLu().solve(Eigen::MatrixXd::Identity(m2, m2));

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 + m2, 2 + m2);
    A.topLeftCorner(2, 2) = M - gains.K / params.L + gains.Gamma * E_inv * G;
    A.topRightCorner(2, m2) = -(gains.Gamma * E_inv) / params.L;
    A.bottomLeftCorner(m2, 2) = -params.L * (F * G - G * M);
    A.bottomRightCorner(m2, m2) = F;
    return A;
}

GainSynthesis synthesize_gains(const Exosystem& exo, const PlantParams& params,
                               const GainOptions& opts,
                               const std::optional<FgPair>& fg) {
    if (!(opts.k_d > 0.0) || !(opts.k_q > 0.0)) {
        throw InputError("synthesize_gains: k_d, k_q must be positive");
    }
    GainSynthesis g;
    g.exo = exo;
    const FgPair pair = fg ? *fg : default_fg(exo);
    const int m = exo.dim();
    if (pair.F.rows() != m) {
        throw InputError("synthesize_gains: F dimension does not match the exosystem");
    }
    if (spectral_abscissa(pair.F) >= 0.0) {
        throw SynthesisError("synthesize_gains: F is not Hurwitz");
    }
    g.F_d = pair.F;
    g.F_q = pair.F;
    g.G_d = pair.G;
    g.G_q = pair.G;
    g.E_d = solve_sylvester(g.F_d, g.G_d, exo.Omega, exo.Gamma_d);
    g.E_q = solve_sylvester(g.F_q, g.G_q, exo.Omega, exo.Gamma_q);

    for (const Eigen::MatrixXd* E : {&g.E_d, &g.E_q}) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(*E);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (smin < 1e-8 * smax) {
            throw SynthesisError("synthesize_gains: Sylvester solution is numerically "
                                 "singular; pick a different (F, G)");
        }
        g.cond_E = std::max(g.cond_E, smax / smin);
    }

    const int m2 = 2 * m;
    g.Phi = Eigen::MatrixXd::Zero(m2, m2);
    g.Phi.topLeftCorner(m, m) = exo.Omega;
    g.Phi.bottomRightCorner(m, m) = exo.Omega;
    g.Gamma = Eigen::MatrixXd::Zero(2, m2);
    g.Gamma.row(0).head(m) = exo.Gamma_d;
    g.Gamma.row(1).tail(m) = exo.Gamma_q;

    g.R_xi = Eigen::VectorXd::Zero(m2);
    g.R_xi(0) = -params.R / exo.Gamma_d(0);
    g.R_xi(m) = -params.omega_m * params.L / exo.Gamma_q(0);

    const Eigen::VectorXd EinvG_d = g.E_d.partialPivLu().solve(g.G_d);
    const Eigen::VectorXd EinvG_q = g.E_q.partialPivLu().solve(g.G_q);

    auto assemble = [&](double k) {
        g.k = k;
        g.K = Eigen::Matrix2d::Zero();
        g.K(0, 0) = k * opts.k_d;
        g.K(1, 1) = k * opts.k_q;
        g.Q = Eigen::MatrixXd::Zero(m2, 2);
        g.Q.col(0).head(m) = EinvG_d * (k * opts.k_d);
        g.Q.col(1).tail(m) = EinvG_q * (k * opts.k_q);
    };
    auto abscissa_at = [&](double k) {
        assemble(k);
        const double a = spectral_abscissa(closed_loop_matrix_transformed(g, params));
        g.k_trace.emplace_back(k, a);
        return a;
    };

    if (opts.k) {
        const double a = abscissa_at(*opts.k);
        g.k_bar = *opts.k;
        g.closed_loop_abscissa = a;
        if (a >= 0.0) {
            throw SynthesisError("synthesize_gains: fixed k gives an unstable boundary "
                                 "layer (abscissa " + std::to_string(a) + ")");
        }
        return g;
    }

    // doubling until the margin is met, then bisection for the threshold
    double k_hi = 1.0;
    double a_hi = abscissa_at(k_hi);
    double k_lo = 0.0;
    while (a_hi >= -opts.margin) {
        k_lo = k_hi;
        k_hi *= 2.0;
        if (k_hi > opts.k_cap) {
            throw SynthesisError("synthesize_gains: no Hurwitz gain below the cap; "
                                 "eigenvalue locus recorded in k_trace");
        }
        a_hi = abscissa_at(k_hi);
    }
    while (k_hi - k_lo > 0.01 * k_hi) {
        const double mid = 0.5 * (k_lo + k_hi);
        if (abscissa_at(mid) < -opts.margin) {
            k_hi = mid;
        } else {
            k_lo = mid;
        }
    }
    g.k_bar = k_hi;
    g.closed_loop_abscissa = abscissa_at(2.0 * k_hi);
    if (g.closed_loop_abscissa >= 0.0) {
        // abscissa need not be monotone in k; fall back to the verified gain
        g.closed_loop_abscissa = abscissa_at(k_hi);
    }
    return g;
}

DiscreteImc discretize_imc(const GainSynthesis& gains, double T_s) {
    if (!(T_s > 0.0)) {
        throw InputError("discretize_imc: T_s must be positive");
    }
    const int m = gains.exo.dim();
    const int m2 = 2 * m;
    Eigen::MatrixXd A_axis = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd S_axis = Eigen::MatrixXd::Zero(m, m); // integral of exp(Omega t)
    A_axis(0, 0) = 1.0;
    S_axis(0, 0) = T_s;
    int row = 1;
    for (std::size_t i = 1; i < gains.exo.orders.size(); ++i) {
        const double w = gains.exo.orders[i] * gains.exo.omega_m;
        const double c = std::cos(w * T_s), s = std::sin(w * T_s);
        A_axis(row, row) = c;
        A_axis(row, row + 1) = s;
        A_axis(row + 1, row) = -s;
        A_axis(row + 1, row + 1) = c;
        // integral of the rotation block: (1/w) [[sin, 1-cos], [cos-1, sin]]
        S_axis(row, row) = s / w;
        S_axis(row, row + 1) = (1.0 - c) / w;
        S_axis(row + 1, row) = (c - 1.0) / w;
        S_axis(row + 1, row + 1) = s / w;
        row += 2;
    }
    DiscreteImc d;
    d.T_s = T_s;
    d.A_d = Eigen::MatrixXd::Zero(m2, m2);
    d.A_d.topLeftCorner(m, m) = A_axis;
    d.A_d.bottomRightCorner(m, m) = A_axis;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m2, m2);
    S.topLeftCorner(m, m) = S_axis;
    S.bottomRightCorner(m, m) = S_axis;
    d.B_d = S * gains.Q;
    return d;
}

ImcResult imc_update(ControllerState& state, Dq x_tilde, const GainSynthesis& gains,
                     const DiscreteImc& zoh) {
    Eigen::Vector2d xt(x_tilde.d, x_tilde.q);
    const Eigen::Vector2d out = gains.Gamma * state.xi + gains.K * xt;
    state.xi = (zoh.A_d * state.xi + zoh.B_d * xt).eval();
    return {{out(0), out(1)}};
}

ImcResult imc_update(ControllerState& state, Dq x_tilde, const GainSynthesis& gains,
                     double dt) {
    if (!(dt > 0.0)) {
        throw InputError("imc_update: dt must be positive");
    }
    Eigen::Vector2d xt(x_tilde.d, x_tilde.q);
    const Eigen::Vector2d out = gains.Gamma * state.xi + gains.K * xt;
    const Eigen::VectorXd drive = gains.Q * xt;
    const Eigen::VectorXd k1 = gains.Phi * state.xi + drive;
    const Eigen::VectorXd k2 = gains.Phi * (state.xi + 0.5 * dt * k1) + drive;
    const Eigen::VectorXd k3 = gains.Phi * (state.xi + 0.5 * dt * k2) + drive;
    const Eigen::VectorXd k4 = gains.Phi * (state.xi + dt * k3) + drive;
    state.xi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {{out(0), out(1)}};
}

VoltageUpdateResult voltage_update(ControllerState& state, double z_tilde,
                                   const VoltageGains& gains, double epsilon,
                                   double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) {
        throw InputError("voltage_update: T and dt must be positive");
    }
    const int W = state.z_window.size();

    const double oldest = state.z_window.push(z_tilde);
    // compensated running sum: window_sum += z_tilde - oldest
    const double delta = z_tilde - oldest;
    const double y = delta - state.window_comp;
    const double t = state.window_sum + y;
    state.window_comp = (t - state.window_sum) - y;
    state.window_sum = t;

    VoltageUpdateResult r;
    r.z_a = state.window_sum / W;
    r.z_a_dot = (z_tilde - oldest) / T;
    r.warming_up = state.warming_up();

    r.eta_a = -gains.K_P * r.z_a + state.theta;
    if (!r.warming_up) {
        state.theta += dt * (-epsilon * gains.K_I * r.z_a);
    }

    const double eta_a_half = state.eta_a_history.delayed(W / 2);
    const double eta_period = state.eta_history.delayed(W);
    r.d_eta = eta_period - eta_a_half;

    r.eta = r.warming_up
                ? 0.0
                : -T * gains.K_P * r.z_a_dot - epsilon * T * gains.K_I * r.z_a + eta_a_half;

    state.eta_a_history.push(r.eta_a);
    state.eta_history.push(r.eta);
    ++state.tick;
    return r;
}

Dq divide_by_voltage(Dq u_bar, double v, double v_floor) {
    if (!(v_floor > 0.0)) {
        throw InputError("divide_by_voltage: v_floor must be positive");
    }
    if (v < v_floor) {
        throw ControllabilityLossError(
            "DC-link voltage " + std::to_string(v) + " V fell below the floor " +
            std::to_string(v_floor) + " V: control authority lost");
    }
    return {u_bar.d / v, u_bar.q / v};
}

} // namespace saf
