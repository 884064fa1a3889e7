#pragma once

#include "dcgrid/types.hpp"

namespace dcgrid::model {

/// Steady-state operating point for one reference triple. Voltages solved
/// from the exact steady-state quadratics of the averaged dynamics; the
/// published closed-form values are kept alongside for auditing.
struct Equilibrium {
    PhysicalState x = PhysicalState::Zero();
    double x2_star_published = 0; // closed-form value as printed
    double x5_star_published = 0;
    bool root_choice_warning = false; // both quadratic roots positive
};

/// Time derivative of the 13-component augmented state. The first nine
/// lines are the averaged converter network; the last four are the
/// integral-error channels (driven by the tracking errors against z3, z6).
StateVector rhs(const StateVector& state, const DutyTriple& u, const Disturbance& d,
                const GridParameters& p, const ReferenceSet& refs, const GainSet& gains);

/// Derivative of the nine physical states only (no integral channels).
PhysicalState rhs_physical(const PhysicalState& x, double u1, double u2, double u3,
                           const Disturbance& d, const GridParameters& p);

/// Closed-loop equilibrium for given references. x2^e and x5^e are the
/// positive roots of the steady-state residuals of the x2/x5 lines with the
/// equilibrium duties substituted.
Equilibrium equilibrium(const ReferenceSet& refs, const Disturbance& d, const GridParameters& p);

/// Duty cycles that hold the network at xe (from the zero conditions of the
/// three inductor-current lines).
DutyTriple equilibrium_duties(const PhysicalState& xe, const Disturbance& d,
                              const GridParameters& p);

/// Steady-state residual of the x2 line at the equilibrium duty, as a
/// function of the candidate x2 value. Root of this function == x2^e.
double x2_residual(double x2, const ReferenceSet& refs, const Disturbance& d,
                   const GridParameters& p);

/// Same for the x5 line as a function of the candidate x5 value, given x4*.
double x5_residual(double x5, const ReferenceSet& refs, const Disturbance& d,
                   const GridParameters& p);

/// Grid-side voltages evaluated from the published closed forms verbatim
/// (comparison path only; see the audit report for their deviation from the
/// residual-rooted values).
double x2_star_published(const ReferenceSet& refs, const Disturbance& d, const GridParameters& p);
double x5_star_published(const ReferenceSet& refs, const Disturbance& d, const GridParameters& p);

}  // namespace dcgrid::model
