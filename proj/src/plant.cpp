#include "saf/plant.hpp"

#include "saf/errors.hpp"

#include <cmath>

namespace saf {

PlantParams make_plant_params(double L, double R, double C, double V_m, double f_m) {
    if (!(L > 0.0) || !(C > 0.0) || !(V_m > 0.0) || !(f_m > 0.0) || !(R >= 0.0)) {
        throw ConstraintError("plant params: need L, C, V_m, f_m > 0 and R >= 0");
    }
    PlantParams p;
    p.L = L;
    p.R = R;
    p.C = C;
    p.V_m = V_m;
    p.omega_m = 2.0 * 3.14159265358979323846 * f_m;
    p.E_md = V_m * V_m;
    p.epsilon = 3.0 / (C * p.E_md);
    return p;
}

PowerStateRate plant_derivative(const PowerState& state, ControlVectorDq u_dq,
                                const PlantParams& params) {
    const double a = -params.R / params.L;
    const double w = params.omega_m;
    const double g = state.v / params.L;
    PowerStateRate rate;
    rate.x_d_dot = a * state.x_d + w * state.x_q - g * u_dq.d + params.E_md / params.L;
    rate.x_q_dot = -w * state.x_d + a * state.x_q - g * u_dq.q;
    rate.v_dot = 0.5 * params.epsilon * (u_dq.d * state.x_d + u_dq.q * state.x_q);
    return rate;
}

} // namespace saf
