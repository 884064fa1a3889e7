#include "dcgrid/references.hpp"

#include "dcgrid/model.hpp"

#include <algorithm>
#include <cmath>

namespace dcgrid::refs {

AdmissibleBounds bounds(const Disturbance& d, double x9_star, const GridParameters& p) {
    d.validate();
    AdmissibleBounds b;
    const double q1 = p.R01 / p.R1;
    const double q2 = p.R04 / p.R4;
    b.gamma1 = q1 / (1.0 + q1);
    b.gamma2 = q2 / (1.0 + q2);
    const double w = (p.R5 - p.R04) / p.R4;
    b.beta = (x9_star + w * d.v_b) / (1.0 + w);
    b.x1_lo = b.gamma1 * d.v_pv;
    b.x1_hi = d.v_pv;
    b.x4_lo = b.gamma2 * d.v_b;
    b.x4_hi = b.beta;
    return b;
}

bool x9_star_admissible(const Disturbance& d, double x9_star) {
    return std::max(d.v_pv, d.v_b) < x9_star && x9_star < d.v_s;
}

X4Solution solve_x4_star(double x1_star, double x9_star, const Disturbance& d,
                         const GridParameters& p) {
    p.validate();
    d.validate();
    const AdmissibleBounds b = bounds(d, x9_star, p);

    // Grid-side PV voltage for the requested x1*; independent of x4*.
    ReferenceSet probe;
    probe.x1_star = x1_star;
    probe.x4_star = d.v_b; // placeholder; only x2* is consumed here
    probe.x9_star = x9_star;
    const model::Equilibrium eq = model::equilibrium(probe, d, p);

    X4Solution sol;
    sol.x2_star = eq.x[sx::x2];

    // Current balance pins the battery grid-side voltage.
    sol.x5_star = x9_star + p.R5 * (x9_star * d.g_load - (sol.x2_star - x9_star) / p.R2);

    // Battery-side power demanded at the x5 node:
    //   i (x4 - R04 i) = x5*(x5* - x9*)/R5   with   i = (V_B - x4)/R4
    // which expands to the quadratic below in x4.
    const double w = sol.x5_star * (sol.x5_star - x9_star) / p.R5;
    const double qa = p.R4 + p.R04;
    const double qb = -d.v_b * (p.R4 + 2.0 * p.R04);
    const double qc = p.R04 * d.v_b * d.v_b + w * p.R4 * p.R4;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) {
        throw Error("R_L outside Omega_RL");
    }
    const double sq = std::sqrt(disc);
    sol.root_lo = (-qb - sq) / (2.0 * qa);
    sol.root_hi = (-qb + sq) / (2.0 * qa);

    auto admissible = [&](double x4) { return x4 >= b.x4_lo && x4 <= b.x4_hi; };
    sol.lo_admissible = admissible(sol.root_lo);
    sol.hi_admissible = admissible(sol.root_hi);
    if (!sol.lo_admissible && !sol.hi_admissible) {
        throw Error("R_L outside Omega_RL");
    }
    if (sol.lo_admissible && sol.hi_admissible) {
        sol.x4_star = std::abs(sol.root_lo - d.v_b) <= std::abs(sol.root_hi - d.v_b)
                          ? sol.root_lo
                          : sol.root_hi;
    } else {
        sol.x4_star = sol.lo_admissible ? sol.root_lo : sol.root_hi;
    }
    sol.battery_current = (d.v_b - sol.x4_star) / p.R4;
    return sol;
}

EnergyReport energy_balance_check(const std::vector<PlanInterval>& plan,
                                  double sc_power_limit, const GridParameters& p) {
    EnergyReport rep;
    rep.pass = true;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const PlanInterval& iv : plan) {
        const model::Equilibrium eq = model::equilibrium(iv.refs, iv.d, p);
        const double x9s = iv.refs.x9_star;
        // Branch powers at the bus interface at equilibrium.
        const double p_pv = x9s * (eq.x[sx::x2] - x9s) / p.R2;
        const double p_bat = x9s * (eq.x[sx::x5] - x9s) / p.R5;
        const double p_load = x9s * x9s * iv.d.g_load;
        const double T = iv.refs.valid_to - iv.refs.valid_from;

        EnergyInterval e;
        e.t0 = iv.refs.valid_from;
        e.t1 = iv.refs.valid_to;
        // Trapezoid over constant power levels.
        e.imbalance_energy = std::abs(p_pv + p_bat - p_load) * T;
        e.budget = 0.5 * sc_power_limit * T;
        e.margin = e.budget - e.imbalance_energy;
        rep.worst_margin = std::min(rep.worst_margin, e.margin);
        if (e.margin < 0.0) rep.pass = false;
        rep.intervals.push_back(e);
    }
    if (rep.intervals.empty()) {
        rep.worst_margin = 0.0;
    }
    return rep;
}

}  // namespace dcgrid::refs
