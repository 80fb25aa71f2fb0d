#pragma once

#include "saf/plant.hpp"
#include "saf/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace saf {

/// Oscillator bank modelling the periodic disturbance on one axis:
/// Omega = blkdiag(0, Omega_n1, Omega_n2, ...) with 2x2 rotation generators
/// at n * omega_m, and Gamma reading the first coordinate of each block.
struct Exosystem {
    std::vector<int> orders; ///< {0} followed by the nonzero orders, ascending
    double omega_m = 0.0;
    Eigen::MatrixXd Omega;   ///< m x m, m = 2 * (#nonzero orders) + 1
    Eigen::RowVectorXd Gamma_d;
    Eigen::RowVectorXd Gamma_q;

    int dim() const { return static_cast<int>(Omega.rows()); }
};

/// Builds the exosystem for the given orders (0 is inserted automatically)
/// and verifies observability of (Gamma, Omega).
Exosystem build_exosystem(std::vector<int> orders, double omega_m);

/// Solves F E - E Omega = -G Gamma through the equivalent dense linear
/// system in the entries of E. Spectra of F and Omega must be disjoint
/// (F Hurwitz, Omega neutrally stable), which makes the solution unique.
Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& F, const Eigen::VectorXd& G,
                                const Eigen::MatrixXd& Omega,
                                const Eigen::RowVectorXd& Gamma);

/// One axis of the stabilizer synthesis input: an arbitrary Hurwitz F with
/// a G making (F, G) controllable.
struct FgPair {
    Eigen::MatrixXd F;
    Eigen::VectorXd G;
};

/// Companion-form F with eigenvalues uniformly spread over
/// [-2 omega_m n_max, -omega_m] and the canonical injection column.
FgPair default_fg(const Exosystem& exo);

struct GainOptions {
    double k_d = 1.0;
    double k_q = 1.0;
    std::optional<double> k; ///< fixed gain; when absent k_bar is searched
    double margin = 1.0;     ///< required spectral-abscissa margin (1/s)
    double k_cap = 1e9;
};

/// Everything the power tracking loop needs at runtime plus the synthesis
/// artifacts used by the stability checks.
struct GainSynthesis {
    Exosystem exo;
    Eigen::MatrixXd F_d, F_q, E_d, E_q;
    Eigen::VectorXd G_d, G_q;
    Eigen::Matrix2d K;
    Eigen::MatrixXd Q;     ///< 2m x 2, block-diagonal in the two axes
    Eigen::MatrixXd Phi;   ///< 2m x 2m, blkdiag(Omega, Omega)
    Eigen::MatrixXd Gamma; ///< 2 x 2m, blkdiag(Gamma_d, Gamma_q)
    Eigen::VectorXd R_xi;  ///< offset vector of the stability change of coordinates
    double k = 0.0;
    double k_bar = 0.0; ///< smallest gain found with the required margin
    double closed_loop_abscissa = 0.0;
    double cond_E = 0.0;
    std::vector<std::pair<double, double>> k_trace; ///< (k, abscissa) search record
};

/// Boundary-layer closed-loop state matrix [[M - K/L, -Gamma/L], [Q, Phi]].
Eigen::MatrixXd closed_loop_matrix(const GainSynthesis& gains, const PlantParams& params);

/// Same spectrum written in the transformed coordinates
/// chi = E xi - E R_xi(.) + L G x; used as a cross-check of the synthesis.
Eigen::MatrixXd closed_loop_matrix_transformed(const GainSynthesis& gains,
                                               const PlantParams& params);

double spectral_abscissa(const Eigen::MatrixXd& A);

/// Solves the Sylvester pair, forms K and Q, and either verifies a fixed k
/// or locates k_bar by doubling/bisection on the closed-loop abscissa,
/// returning the gains at 2 k_bar.
GainSynthesis synthesize_gains(const Exosystem& exo, const PlantParams& params,
                               const GainOptions& opts = {},
                               const std::optional<FgPair>& fg = std::nullopt);

/// Exact zero-order-hold discretization of (Phi, Q), block closed forms.
struct DiscreteImc {
    Eigen::MatrixXd A_d;
    Eigen::MatrixXd B_d;
    double T_s = 0.0;
};

DiscreteImc discretize_imc(const GainSynthesis& gains, double T_s);

/// Fixed-size ring buffer preloaded with zeros; push evicts the oldest.
class RingBuffer {
  public:
    explicit RingBuffer(int slots = 1) : data_(static_cast<std::size_t>(slots), 0.0) {}
    double push(double value) {
        const double evicted = data_[head_];
        data_[head_] = value;
        head_ = (head_ + 1) % data_.size();
        return evicted;
    }
    /// Value pushed `delay` steps ago (delay in [1, size]).
    double delayed(int delay) const {
        const std::size_t n = data_.size();
        return data_[(head_ + n - static_cast<std::size_t>(delay)) % n];
    }
    int size() const { return static_cast<int>(data_.size()); }

  private:
    std::vector<double> data_;
    std::size_t head_ = 0;
};

/// Mutable per-run controller memory: internal-model state, PI integrator,
/// and the one-period windows of the averaging voltage loop.
struct ControllerState {
    Eigen::VectorXd xi;      ///< length 2m
    double theta = 0.0;      ///< PI integrator (V^2-scaled)
    RingBuffer z_window;     ///< z-tilde samples spanning exactly one period
    RingBuffer eta_history;  ///< emitted eta, one period (d_eta diagnostic)
    RingBuffer eta_a_history;///< averaged command, one period (T/2 delay tap)
    double window_sum = 0.0; ///< compensated running sum of z_window
    double window_comp = 0.0;
    long tick = 0;

    ControllerState() = default;
    ControllerState(int xi_dim, int window_slots)
        : xi(Eigen::VectorXd::Zero(xi_dim)),
          z_window(window_slots),
          eta_history(window_slots),
          eta_a_history(window_slots) {}

    bool warming_up() const { return tick < z_window.size(); }
};

struct ImcResult {
    Dq u_bar; ///< output at the pre-update internal state
};

/// One sampled-mode step of the internal model: emits u_bar = Gamma xi + K x
/// at the current state, then advances xi with the exact ZOH map.
ImcResult imc_update(ControllerState& state, Dq x_tilde, const GainSynthesis& gains,
                     const DiscreteImc& zoh);

/// Continuous-flavour step: same output convention, xi advanced by a classical
/// 4-stage step of xi' = Phi xi + Q x with x held over dt.
ImcResult imc_update(ControllerState& state, Dq x_tilde, const GainSynthesis& gains,
                     double dt);

struct VoltageUpdateResult {
    double eta = 0.0;
    double eta_a = 0.0;
    double z_a = 0.0;
    double z_a_dot = 0.0;
    double d_eta = 0.0; ///< eta(t-T) - eta_a(t-T/2), zero mean at steady state
    bool warming_up = false;
};

struct VoltageGains {
    double K_P = 0.3;
    double K_I = 3.7;
};

/// Averaging voltage-loop step. Maintains the one-period window mean of
/// z-tilde, its difference-identity derivative, the epsilon-scaled PI
/// integrator, and emits
///   eta = -T K_P dz_a - epsilon T K_I z_a + eta_a(t - T/2).
/// During the first period eta is held at zero and the integrator is frozen.
VoltageUpdateResult voltage_update(ControllerState& state, double z_tilde,
                                   const VoltageGains& gains, double epsilon,
                                   double T, double dt);

/// Division law u_dq = u_bar / v, guarded by the voltage floor.
Dq divide_by_voltage(Dq u_bar, double v, double v_floor);

} // namespace saf
