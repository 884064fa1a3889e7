#include "dcgrid/control.hpp"

#include "dcgrid/model.hpp"

#include <algorithm>
#include <cmath>

namespace dcgrid::control {

ResolvedReferences resolve(const ReferenceSet& refs, const Disturbance& d,
                           const GridParameters& p) {
    ResolvedReferences rr;
    rr.refs = refs;
    const model::Equilibrium eq = model::equilibrium(refs, d, p);
    rr.xe = eq.x;
    rr.x2_star = eq.x[sx::x2];
    rr.x5_star = eq.x[sx::x5];
    return rr;
}

double z3_target(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                 const GridParameters& p, const Disturbance& d) {
    return (d.v_pv - s[sx::x1]) / p.R1 + p.C1 * g.K1 * (s[sx::x1] - rr.refs.x1_star) +
           p.C1 * g.Kbar1 * s[sx::a1];
}

double z6_target(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                 const GridParameters& p, const Disturbance& d) {
    return (d.v_b - s[sx::x4]) / p.R4 + p.C4 * g.K4 * (s[sx::x4] - rr.refs.x4_star) +
           p.C4 * g.Kbar4 * s[sx::a4];
}

namespace {

double v1_value(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                const GridParameters& p, double z3) {
    const double e1 = s[sx::x1] - rr.refs.x1_star;
    return g.K3 * (s[sx::x3] - z3) + g.Kbar3 * s[sx::a3] - p.C1 * g.Kbar1 * g.K1a * e1 +
           (p.C1 * g.K1 - 1.0 / p.R1) * (g.K1 * e1 + g.Kbar1 * s[sx::a1]);
}

double v2_value(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                const GridParameters& p, double z6) {
    const double e4 = s[sx::x4] - rr.refs.x4_star;
    return -g.K6 * (s[sx::x6] - z6) - g.Kbar6 * s[sx::a6] + p.C4 * g.Kbar4 * g.K4a * e4 -
           (p.C4 * g.K4 - 1.0 / p.R4) * (g.K4 * e4 + g.Kbar4 * s[sx::a4]);
}

}  // namespace

DutyResult u1_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                  const GridParameters& p, const Disturbance& d) {
    const double den = s[sx::x2] + (p.R01 - p.R02) * s[sx::x3];
    if (std::abs(den) < kEpsDiv) {
        throw Error("singular PV duty denominator");
    }
    DutyResult r;
    r.z = z3_target(s, rr, g, p, d);
    const double v1 = v1_value(s, rr, g, p, r.z);
    r.u_raw = (-s[sx::x1] + s[sx::x2] + p.R01 * s[sx::x3] - p.L3 * v1) / den;
    return r;
}

DutyResult u2_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                  const GridParameters& p, const Disturbance& d) {
    if (std::abs(s[sx::x5]) < kEpsDiv) {
        throw Error("singular battery duty denominator");
    }
    DutyResult r;
    r.z = z6_target(s, rr, g, p, d);
    const double v2 = v2_value(s, rr, g, p, r.z);
    r.u_raw = (-s[sx::x4] + s[sx::x5] + p.R04 * s[sx::x6] + p.L6 * v2) / s[sx::x5];
    return r;
}

U3Result u3_law(const StateVector& s, const ResolvedReferences& rr, const GainSet& g,
                const GridParameters& p, const Disturbance& d, double u1, double u2,
                bool sat1, bool sat2, ControllerScratch& scratch, double dt,
                const U3Protection& prot) {
    const double x9 = s[sx::x9];
    if (std::abs(x9) < kEpsDiv || d.v_s < kEpsDiv) {
        throw Error("singular grid/source voltage");
    }
    if (!(dt > 0.0)) {
        throw Error("u3_law requires dt > 0");
    }

    const double x2s = rr.x2_star, x5s = rr.x5_star, x9s = rr.refs.x9_star;
    const double e2 = s[sx::x2] - x2s;
    const double e5 = s[sx::x5] - x5s;

    // State rates under the duties actually applied over this step.
    const PhysicalState dx = model::rhs_physical(s.head<9>(), u1, u2, 0.0, d, p);
    // dx[x8] depends on u3 (unknown yet) but x8's rate never enters the z7
    // chain, so the placeholder duty above is irrelevant.

    const double z3 = z3_target(s, rr, g, p, d);
    const double z6 = z6_target(s, rr, g, p, d);
    const double a1_dot = g.K1a * (s[sx::x1] - rr.refs.x1_star);
    const double a3_dot = g.K3a * (s[sx::x3] - z3);
    const double a4_dot = g.K4a * (s[sx::x4] - rr.refs.x4_star);
    const double a6_dot = g.K6a * (s[sx::x6] - z6);

    // du1/dt along the trajectory. A clamped channel is constant over the
    // step, so its rate is zero.
    double u1_dot = 0.0;
    if (!sat1) {
        const double den = s[sx::x2] + (p.R01 - p.R02) * s[sx::x3];
        const double z3_dot = (p.C1 * g.K1 - 1.0 / p.R1) * dx[sx::x1] + p.C1 * g.Kbar1 * a1_dot;
        const double v1 = v1_value(s, rr, g, p, z3);
        const double v1_dot = g.K3 * (dx[sx::x3] - z3_dot) + g.Kbar3 * a3_dot -
                              p.C1 * g.Kbar1 * g.K1a * dx[sx::x1] +
                              (p.C1 * g.K1 - 1.0 / p.R1) *
                                  (g.K1 * dx[sx::x1] + g.Kbar1 * a1_dot);
        const double num = -s[sx::x1] + s[sx::x2] + p.R01 * s[sx::x3] - p.L3 * v1;
        const double num_dot = -dx[sx::x1] + dx[sx::x2] + p.R01 * dx[sx::x3] - p.L3 * v1_dot;
        const double den_dot = dx[sx::x2] + (p.R01 - p.R02) * dx[sx::x3];
        u1_dot = (num_dot * den - num * den_dot) / (den * den);
    }

    double u2_dot = 0.0;
    if (!sat2) {
        const double z6_dot = (p.C4 * g.K4 - 1.0 / p.R4) * dx[sx::x4] + p.C4 * g.Kbar4 * a4_dot;
        const double v2 = v2_value(s, rr, g, p, z6);
        const double v2_dot = -g.K6 * (dx[sx::x6] - z6_dot) - g.Kbar6 * a6_dot +
                              p.C4 * g.Kbar4 * g.K4a * dx[sx::x4] -
                              (p.C4 * g.K4 - 1.0 / p.R4) *
                                  (g.K4 * dx[sx::x4] + g.Kbar4 * a4_dot);
        const double num = -s[sx::x4] + s[sx::x5] + p.R04 * s[sx::x6] + p.L6 * v2;
        const double num_dot = -dx[sx::x4] + dx[sx::x5] + p.R04 * dx[sx::x6] + p.L6 * v2_dot;
        u2_dot = (num_dot * s[sx::x5] - num * dx[sx::x5]) / (s[sx::x5] * s[sx::x5]);
    }

    // z7 collects the bus-side error injections plus the load feedforward;
    // its analytic rate follows by the chain rule with the model rates above.
    const double f2 = (x9 - x2s) / p.R2 + s[sx::x3] * (1.0 - u1);
    const double f5 = (x9 - x5s) / p.R5 + s[sx::x6] * (1.0 - u2);
    const double f2_dot = dx[sx::x9] / p.R2 + dx[sx::x3] * (1.0 - u1) - s[sx::x3] * u1_dot;
    const double f5_dot = dx[sx::x9] / p.R5 + dx[sx::x6] * (1.0 - u2) - s[sx::x6] * u2_dot;

    const double sum = e2 * f2 + e5 * f5;
    const double sum_dot = dx[sx::x2] * f2 + e2 * f2_dot + dx[sx::x5] * f5 + e5 * f5_dot;

    const double bal = x9 * d.g_load - (e2 + x2s - x9) / p.R2 - (e5 + x5s - x9) / p.R5;
    const double bal_dot =
        dx[sx::x9] * d.g_load - (dx[sx::x2] - dx[sx::x9]) / p.R2 - (dx[sx::x5] - dx[sx::x9]) / p.R5;

    U3Result r;
    r.z7 = -p.R7 * sum / x9 + p.R7 * bal + 2.0 * x9s - x9s * x9s / x9;
    r.z7_dot = -p.R7 * (sum_dot * x9 - sum * dx[sx::x9]) / (x9 * x9) + p.R7 * bal_dot +
               x9s * x9s * dx[sx::x9] / (x9 * x9);

    const double z7_ddot =
        scratch.first_step ? r.z7_dot / dt : (r.z7_dot - scratch.z7_dot_prev) / dt;
    scratch.z7_dot_prev = r.z7_dot;
    scratch.first_step = false;

    r.z8 = p.C7 * g.K7 * (s[sx::x7] - r.z7) - (s[sx::x7] - x9) / p.R7 - p.C7 * r.z7_dot;
    r.z8 = std::clamp(r.z8, -prot.z8_limit, prot.z8_limit);
    double z8_dot = p.C7 * g.K7 * (dx[sx::x7] - r.z7_dot) -
                    (dx[sx::x7] - dx[sx::x9]) / p.R7 - p.C7 * z7_ddot;
    z8_dot = std::clamp(z8_dot, -prot.z8_dot_limit, prot.z8_dot_limit);
    r.u_raw = (s[sx::x7] + p.R08 * s[sx::x8] + p.L8 * z8_dot -
               p.L8 * g.K8 * (s[sx::x8] - r.z8)) /
              d.v_s;

    scratch.z7 = r.z7;
    scratch.z8 = r.z8;
    scratch.z7_dot = r.z7_dot;
    return r;
}

DutyTriple saturate(const DutyTriple& raw_only, const StateVector& s,
                    const ResolvedReferences& rr, const GainSet& g, const GridParameters& p,
                    const Disturbance& d, IntegralFreeze& freeze) {
    DutyTriple u = raw_only;
    u.u1 = clamp01(u.u1_raw);
    u.u2 = clamp01(u.u2_raw);
    u.u3 = clamp01(u.u3_raw);
    u.sat1 = u.u1 != u.u1_raw;
    u.sat2 = u.u2 != u.u2_raw;
    u.sat3 = u.u3 != u.u3_raw;

    freeze = IntegralFreeze{};

    // Conditional integration: an integral state holds while its channel is
    // clamped and integrating would push the raw duty deeper out of range.
    auto deepens = [](double raw, double du_dalpha, double alpha_rate) {
        const double push = du_dalpha * alpha_rate;
        return raw > 1.0 ? push > 0.0 : push < 0.0;
    };

    if (u.sat1) {
        const double den = s[sx::x2] + (p.R01 - p.R02) * s[sx::x3];
        const double z3 = z3_target(s, rr, g, p, d);
        const double du_da1 = -p.L3 * (p.C1 * g.K1 - 1.0 / p.R1) * g.Kbar1 / den;
        const double du_da3 = -p.L3 * g.Kbar3 / den;
        freeze.a1 = deepens(u.u1_raw, du_da1, g.K1a * (s[sx::x1] - rr.refs.x1_star));
        freeze.a3 = deepens(u.u1_raw, du_da3, g.K3a * (s[sx::x3] - z3));
    }
    if (u.sat2) {
        const double z6 = z6_target(s, rr, g, p, d);
        const double du_da4 = -p.L6 * (p.C4 * g.K4 - 1.0 / p.R4) * g.Kbar4 / s[sx::x5];
        const double du_da6 = -p.L6 * g.Kbar6 / s[sx::x5];
        freeze.a4 = deepens(u.u2_raw, du_da4, g.K4a * (s[sx::x4] - rr.refs.x4_star));
        freeze.a6 = deepens(u.u2_raw, du_da6, g.K6a * (s[sx::x6] - z6));
    }
    return u;
}

}  // namespace dcgrid::control
