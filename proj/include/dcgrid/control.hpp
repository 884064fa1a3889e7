#pragma once

#include "dcgrid/types.hpp"

namespace dcgrid::control {

/// References resolved against a disturbance: the raw targets plus the
/// derived grid-side equilibrium voltages and the full equilibrium point.
/// The engine refreshes this whenever the active reference interval changes.
struct ResolvedReferences {
    ReferenceSet refs;
    double x2_star = 0;
    double x5_star = 0;
    PhysicalState xe = PhysicalState::Zero();
};

ResolvedReferences resolve(const ReferenceSet& refs, const Disturbance& d,
                           const GridParameters& p);

/// Backstepping scratch owned by one engine instance. z7_dot_prev feeds the
/// backward difference that approximates the second derivative of z7;
/// it starts at zero (cold start) unless the scenario warm-starts it.
struct ControllerScratch {
    double z3 = 0, z6 = 0, z7 = 0, z8 = 0;
    double z7_dot = 0;
    double z7_dot_prev = 0;
    bool first_step = true;
};

struct DutyResult {
    double u_raw = 0;
    double z = 0; // z3 for u1, z6 for u2
};

/// PV duty law. Throws on the x2 + (R01-R02) x3 denominator guard.
DutyResult u1_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                  const GridParameters& p, const Disturbance& d);

/// Battery duty law. Throws when |x5| is below the divide guard.
DutyResult u2_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                  const GridParameters& p, const Disturbance& d);

struct U3Result {
    double u_raw = 0;
    double z7 = 0;
    double z8 = 0;
    double z7_dot = 0;
};

/// Acquisition protection for the grid-voltage law: the x8 reference and
/// its rate feedforward are magnitude-limited so that far-from-manifold
/// transients cannot demand slews beyond the converter's authority. Both
/// limits sit far above anything commanded in operation near the manifold,
/// where the law runs verbatim. K8 * z8_limit and z8_dot_limit should be
/// sized so the commanded duty stays within [0,1] for realizable currents
/// (L8 * K8 * 2 * z8_limit and L8 * z8_dot_limit below a fraction of V_S).
struct U3Protection {
    double z8_limit = 1000.0;      // A
    double z8_dot_limit = 1.0e5;   // A/s
};

/// Grid-voltage backstepping law. u1/u2 must be the duties actually applied
/// this step (clamped); sat1/sat2 tell the internal chain rule to treat a
/// clamped channel as constant. Updates scratch.z7_dot_prev.
U3Result u3_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                const GridParameters& p, const Disturbance& d, double u1, double u2,
                bool sat1, bool sat2, ControllerScratch& scratch, double dt,
                const U3Protection& prot = U3Protection{});

/// Backstepping targets for the inductor currents.
double z3_target(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                 const GridParameters& p, const Disturbance& d);
double z6_target(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                 const GridParameters& p, const Disturbance& d);

/// Per-channel integral freeze decisions (conditional anti-windup): an
/// integral state holds when its channel is clamped and advancing it would
/// push the raw duty further outside [0,1].
struct IntegralFreeze {
    bool a1 = false, a3 = false, a4 = false, a6 = false;
};

/// Clamps the raw duties to [0,1] and decides which integral channels to
/// freeze for the coming step.
DutyTriple saturate(const DutyTriple& raw_only, const StateVector& s,
                    const ResolvedReferences& rr, const GainSet& g, const GridParameters& p,
                    const Disturbance& d, IntegralFreeze& freeze);

}  // namespace dcgrid::control
