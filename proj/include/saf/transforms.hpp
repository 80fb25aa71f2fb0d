#pragma once

#include "saf/plant.hpp"
#include "saf/types.hpp"

namespace saf {

/// 2/3-scaled Clarke transform of a zero-sum tern. Inputs whose components
/// do not sum to zero within 1e-9 (relative to the largest magnitude) are
/// rejected: a three-wire system cannot carry a zero-sequence component.
AlphaBeta clarke_forward(const Abc& tern);

/// Reconstructs the zero-sum tern for a planar vector; exact inverse of
/// clarke_forward on its range.
Abc clarke_inverse(const AlphaBeta& v);

/// Pure rotation into the synchronous frame (no amplitude scaling); used
/// for voltage and current vectors.
Dq rotate_to_dq(const AlphaBeta& v, double theta);
AlphaBeta rotate_to_alphabeta(const Dq& v, double theta);

/// Synchronous transform with the V_m scaling: maps planar current vectors
/// to power variables. Forward multiplies by V_m and rotates by -theta.
Dq park_forward(const AlphaBeta& v, double theta, double V_m);
AlphaBeta park_inverse(const Dq& v, double theta, double V_m);

struct SwitchImage {
    Abc u_abc;        ///< zero-sum bridge voltage pattern (per unit of v)
    AlphaBeta u_ab;   ///< its planar image
};

/// Removes the common mode from the leg commands and maps to the plane.
/// The eight 0/1 vertices reproduce the canonical control-function table.
SwitchImage switch_to_uabc(const SwitchVector& legs);

enum class HexagonMode {
    InscribedCircle, ///< norm test against r_in = 1/sqrt(3) (design use)
    ExactHexagon,    ///< membership in the hull of the six vertices
};

struct HexagonVerdict {
    bool feasible = false;
    double margin = 0.0; ///< distance to the limiting constraint (>=0 inside)
};

/// Feasibility of a planar modulation vector against the switch hexagon.
HexagonVerdict hexagon_check(const AlphaBeta& u, HexagonMode mode);

inline constexpr double kHexagonInradius = 0.57735026918962576451; // 1/sqrt(3)

} // namespace saf
