#include "dcgrid/model.hpp"

#include "dcgrid/control.hpp"

#include <cmath>

namespace dcgrid::model {

namespace {

// Positive root of the grid-side steady-state quadratic
//   (x - x9*)(x + shift) - drive = 0.
// Prefers the "+sqrt" branch; if both roots are positive the one closest to
// x9* wins and the caller is told so.
double grid_side_root(double x9s, double shift, double drive, bool& warning) {
    const double b = shift - x9s;           // x^2 + b x + c = 0
    const double c = -shift * x9s - drive;
    const double disc = b * b - 4.0 * c;
    if (disc < 0.0) {
        throw Error("no steady state for given references");
    }
    const double sq = std::sqrt(disc);
    const double r_plus = 0.5 * (-b + sq);
    const double r_minus = 0.5 * (-b - sq);
    if (r_plus <= 0.0 && r_minus <= 0.0) {
        throw Error("no steady state for given references");
    }
    if (r_plus > 0.0 && r_minus > 0.0) {
        warning = true;
        return std::abs(r_plus - x9s) <= std::abs(r_minus - x9s) ? r_plus : r_minus;
    }
    return r_plus > 0.0 ? r_plus : r_minus;
}

}  // namespace

PhysicalState rhs_physical(const PhysicalState& x, double u1, double u2, double u3,
                           const Disturbance& d, const GridParameters& p) {
    PhysicalState dx;
    const double x1 = x[sx::x1], x2 = x[sx::x2], x3 = x[sx::x3];
    const double x4 = x[sx::x4], x5 = x[sx::x5], x6 = x[sx::x6];
    const double x7 = x[sx::x7], x8 = x[sx::x8], x9 = x[sx::x9];

    dx[sx::x1] = (-x1 + d.v_pv) / (p.R1 * p.C1) - x3 / p.C1;
    dx[sx::x2] = (-x2 + x9) / (p.R2 * p.C2) + x3 * (1.0 - u1) / p.C2;
    dx[sx::x3] = (x1 - x2 - p.R01 * x3 + (x2 + (p.R01 - p.R02) * x3) * u1) / p.L3;
    dx[sx::x4] = (-x4 + d.v_b) / (p.R4 * p.C4) - x6 / p.C4;
    dx[sx::x5] = (-x5 + x9) / (p.R5 * p.C5) + x6 * (1.0 - u2) / p.C5;
    dx[sx::x6] = (x4 - x5 - p.R04 * x6 + x5 * u2) / p.L6;
    dx[sx::x7] = (-x7 + x9) / (p.R7 * p.C7) - x8 / p.C7;
    dx[sx::x8] = (d.v_s * u3 - p.R08 * x8 - x7) / p.L8;
    dx[sx::x9] = ((x2 - x9) / p.R2 + (x5 - x9) / p.R5 + (x7 - x9) / p.R7 - x9 * d.g_load) / p.C9;
    return dx;
}

StateVector rhs(const StateVector& state, const DutyTriple& u, const Disturbance& d,
                const GridParameters& p, const ReferenceSet& refs, const GainSet& gains) {
    if (!state.allFinite()) {
        throw Error("invalid state");
    }
    StateVector dx;
    dx.head<9>() = rhs_physical(state.head<9>(), u.u1, u.u2, u.u3, d, p);

    // Integral channels track the voltage errors and the backstepping
    // current errors. z3/z6 are needed only when the channel is active.
    control::ResolvedReferences rr;
    rr.refs = refs;
    dx[sx::a1] = gains.K1a * (state[sx::x1] - refs.x1_star);
    dx[sx::a4] = gains.K4a * (state[sx::x4] - refs.x4_star);
    dx[sx::a3] = gains.K3a == 0.0
                     ? 0.0
                     : gains.K3a * (state[sx::x3] - control::z3_target(state, rr, gains, p, d));
    dx[sx::a6] = gains.K6a == 0.0
                     ? 0.0
                     : gains.K6a * (state[sx::x6] - control::z6_target(state, rr, gains, p, d));
    return dx;
}

double x2_residual(double x2, const ReferenceSet& refs, const Disturbance& d,
                   const GridParameters& p) {
    const double i_pv = (d.v_pv - refs.x1_star) / p.R1;
    const double a2 = (p.R01 - p.R02) * i_pv;
    return (x2 - refs.x9_star) * (x2 + a2) - p.R2 * i_pv * (refs.x1_star - p.R02 * i_pv);
}

double x5_residual(double x5, const ReferenceSet& refs, const Disturbance& d,
                   const GridParameters& p) {
    const double i_b = (d.v_b - refs.x4_star) / p.R4;
    return (x5 - refs.x9_star) * x5 - p.R5 * i_b * (refs.x4_star - p.R04 * i_b);
}

double x2_star_published(const ReferenceSet& refs, const Disturbance& d,
                         const GridParameters& p) {
    const double dv = d.v_pv - refs.x1_star;
    const double delta2 = dv * (refs.x1_star - (p.R02 / p.R1) * dv) / (p.R1 * p.C2);
    const double a2 = (p.R01 - p.R02) * dv / p.R1;
    const double x9s = refs.x9_star;
    const double under = (x9s - a2) * (x9s - a2) + 4.0 * p.R2 * p.C2 * (delta2 + a2 * x9s);
    if (under < 0.0) {
        throw Error("no steady state for given references");
    }
    return 0.5 * (x9s - a2) + 0.5 * std::sqrt(under);
}

double x5_star_published(const ReferenceSet& refs, const Disturbance& d,
                         const GridParameters& p) {
    const double dv = d.v_b - refs.x4_star;
    const double delta5 = dv * (-refs.x4_star + (p.R04 / p.R4) * dv) / (p.R4 * p.C5);
    const double x9s = refs.x9_star;
    const double under = x9s * x9s + 4.0 * p.R5 * p.C5 * delta5;
    if (under < 0.0) {
        throw Error("no steady state for given references");
    }
    return 0.5 * x9s + 0.5 * std::sqrt(under);
}

Equilibrium equilibrium(const ReferenceSet& refs, const Disturbance& d,
                        const GridParameters& p) {
    p.validate();
    d.validate();
    if (!(refs.x9_star > 0.0) || !(refs.x4_star > 0.0) || !(refs.x1_star > 0.0)) {
        throw Error("no steady state for given references");
    }

    Equilibrium eq;
    const double i_pv = (d.v_pv - refs.x1_star) / p.R1;
    const double i_b = (d.v_b - refs.x4_star) / p.R4;

    const double a2 = (p.R01 - p.R02) * i_pv;
    const double drive2 = p.R2 * i_pv * (refs.x1_star - p.R02 * i_pv);
    const double x2e = grid_side_root(refs.x9_star, a2, drive2, eq.root_choice_warning);

    const double drive5 = p.R5 * i_b * (refs.x4_star - p.R04 * i_b);
    const double x5e = grid_side_root(refs.x9_star, 0.0, drive5, eq.root_choice_warning);

    eq.x[sx::x1] = refs.x1_star;
    eq.x[sx::x2] = x2e;
    eq.x[sx::x3] = i_pv;
    eq.x[sx::x4] = refs.x4_star;
    eq.x[sx::x5] = x5e;
    eq.x[sx::x6] = i_b;
    eq.x[sx::x7] = refs.x9_star;
    eq.x[sx::x8] = 0.0;
    eq.x[sx::x9] = refs.x9_star;
    eq.x2_star_published = x2_star_published(refs, d, p);
    eq.x5_star_published = x5_star_published(refs, d, p);
    return eq;
}

DutyTriple equilibrium_duties(const PhysicalState& xe, const Disturbance& d,
                              const GridParameters& p) {
    const double den1 = xe[sx::x2] + (p.R01 - p.R02) * xe[sx::x3];
    if (std::abs(den1) < kEpsDiv || std::abs(xe[sx::x5]) < kEpsDiv ||
        std::abs(d.v_s) < kEpsDiv) {
        throw Error("degenerate equilibrium");
    }
    DutyTriple u;
    u.u1_raw = (xe[sx::x2] + p.R01 * xe[sx::x3] - xe[sx::x1]) / den1;
    u.u2_raw = (xe[sx::x5] + p.R04 * xe[sx::x6] - xe[sx::x4]) / xe[sx::x5];
    u.u3_raw = (xe[sx::x7] + p.R08 * xe[sx::x8]) / d.v_s;
    u.u1 = clamp01(u.u1_raw);
    u.u2 = clamp01(u.u2_raw);
    u.u3 = clamp01(u.u3_raw);
    u.sat1 = u.u1 != u.u1_raw;
    u.sat2 = u.u2 != u.u2_raw;
    u.sat3 = u.u3 != u.u3_raw;
    return u;
}

}  // namespace dcgrid::model
