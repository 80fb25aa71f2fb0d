#pragma once

#include "saf/types.hpp"

namespace saf {

/// Electrical constants of the filter plus the derived scale factors used
/// throughout the model. Build through make_plant_params so the derived
/// members stay consistent with the primitive ones.
struct PlantParams {
    double L = 0.0;       ///< boost inductance (H)
    double R = 0.0;       ///< parasitic series resistance (ohm)
    double C = 0.0;       ///< DC-link capacitance (F)
    double V_m = 0.0;     ///< mains phase-voltage amplitude (V)
    double omega_m = 0.0; ///< grid angular frequency (rad/s)
    double E_md = 0.0;    ///< V_m^2 (V^2)
    double epsilon = 0.0; ///< 3 / (C * E_md), voltage-dynamics scale (1/(V^2 s))

    double f_m() const { return omega_m / (2.0 * 3.14159265358979323846); }
};

/// Validates positivity and fills the derived fields (E_md, epsilon, omega_m).
PlantParams make_plant_params(double L, double R, double C, double V_m, double f_m);

/// dq power variables plus the DC-link voltage: the full plant state.
struct PowerState {
    double x_d = 0.0; ///< real power variable (V*A)
    double x_q = 0.0; ///< virtual power variable (V*A)
    double v = 0.0;   ///< DC-link voltage (V)
};

struct PowerStateRate {
    double x_d_dot = 0.0;
    double x_q_dot = 0.0;
    double v_dot = 0.0;
};

/// Per-leg bridge commands; component range [0,1] (0/1 at the vertices,
/// fractional values read as averaged duties).
struct SwitchVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Synchronous-frame control vector in the same scaling as the dq model
/// (the alpha-beta modulation image is recovered by the inverse synchronous
/// transform, i.e. dividing by V_m and rotating back).
using ControlVectorDq = Dq;

/// Right-hand side of the dq model:
///   x_dot = M(R,L) x - (v/L) u_dq + d0,   v_dot = (epsilon/2) u_dq' x
/// with M = [[-R/L, w],[-w, -R/L]] and d0 = (E_md/L, 0).
PowerStateRate plant_derivative(const PowerState& state, ControlVectorDq u_dq,
                                const PlantParams& params);

} // namespace saf
