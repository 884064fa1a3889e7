#pragma once

#include "dcgrid/types.hpp"

#include <vector>

namespace dcgrid::refs {

/// Admissible reference ranges implied by keeping the duty laws inside [0,1].
struct AdmissibleBounds {
    double gamma1 = 0;  // x1* >= gamma1 * V_PV
    double gamma2 = 0;  // x4* >= gamma2 * V_B
    double beta = 0;    // x4* <= beta(x9*, V_B)
    double x1_lo = 0, x1_hi = 0;
    double x4_lo = 0, x4_hi = 0;
};

AdmissibleBounds bounds(const Disturbance& d, double x9_star, const GridParameters& p);

/// True when max(V_PV, V_B) < x9* < V_S.
bool x9_star_admissible(const Disturbance& d, double x9_star);

struct X4Solution {
    double x4_star = 0;
    double root_lo = 0, root_hi = 0;   // both quadratic roots (lo <= hi)
    bool lo_admissible = false, hi_admissible = false;
    double x2_star = 0, x5_star = 0;   // grid-side voltages behind the balance
    double battery_current = 0;        // (V_B - x4*)/R4, negative = charging
};

/// Battery reference that balances the bus currents for the given load.
/// Of the two quadratic roots the one closest to V_B wins (minimal battery
/// stress); the alternative is reported. Throws "R_L outside Omega_RL" when
/// no root lies in [gamma2 V_B, beta] -- this is the load-admissibility test.
X4Solution solve_x4_star(double x1_star, double x9_star, const Disturbance& d,
                         const GridParameters& p);

/// One interval of a dispatch plan.
struct PlanInterval {
    ReferenceSet refs;
    Disturbance d;
};

struct EnergyInterval {
    double t0 = 0, t1 = 0;
    double imbalance_energy = 0; // |integral of (P_PV + P_B - P_L)| over the interval (J)
    double budget = 0;           // (1/2) * sc_power_limit * T (J)
    double margin = 0;           // budget - imbalance_energy
};

struct EnergyReport {
    std::vector<EnergyInterval> intervals;
    double worst_margin = 0;
    bool pass = true;
};

/// Sizing check for the storage branch: per interval the accumulated source/
/// load mismatch (at equilibrium power levels, taken at the bus interface)
/// must stay within half the supercapacitor power budget.
EnergyReport energy_balance_check(const std::vector<PlanInterval>& plan,
                                  double sc_power_limit, const GridParameters& p);

}  // namespace dcgrid::refs
