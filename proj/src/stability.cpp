#include "dcgrid/stability.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace dcgrid::stability {

namespace {

Eigen::Matrix4d build_pair_matrix(double R, double C, double Kp, double Kbar_p, double Ka_p,
                                  double Kc, double Kbar_c, double Ka_c) {
    // Rows/cols ordered [voltage, voltage-integral, current, current-integral].
    const double sigma = 1.0 / (R * C);
    const double a31 = (Kc - Kp) * (C * Kp - 1.0 / R) + C * Kbar_p * Ka_p;
    const double a32 = Kbar_p * (Kc * C - Kp * C + 1.0 / R);
    Eigen::Matrix4d A;
    A << -sigma, 0.0, -1.0 / C, 0.0,
         Ka_p, 0.0, 0.0, 0.0,
         a31, a32, -Kc, -Kbar_c,
         Ka_c * (1.0 / R - C * Kp), -Ka_c * C * Kbar_p, Ka_c, 0.0;
    return A;
}

QuarticCoefficients pair_char_poly(double R, double C, double Kp, double Kbar_p, double Ka_p,
                                   double Kc, double Kbar_c, double Ka_c) {
    // det(lambda I - A) factors exactly as
    //   (l^2 + Kp l + Kbar_p Ka_p)(l^2 + (Kc - Kp + 1/(RC)) l + Kbar_c Ka_c)
    const double sigma = 1.0 / (R * C);
    QuarticCoefficients q;
    q.p3 = Kc + sigma;
    q.p2 = Kbar_c * Ka_c + sigma * Kc + Kbar_p * Ka_p + (Kc - Kp) * (Kp - sigma);
    q.p1 = Kbar_p * Ka_p * (Kc - Kp + sigma) + Kbar_c * Ka_c * Kp;
    q.p0 = Kbar_p * Kbar_c * Ka_p * Ka_c;
    return q;
}

Verdict combine(double worst, bool any_zero) {
    if (worst < 0.0) return Verdict::Unstable;
    if (any_zero || worst == 0.0) return Verdict::Marginal;
    return Verdict::Stable;
}

}  // namespace

Eigen::Matrix4d build_A13(const GainSet& g, const GridParameters& p) {
    return build_pair_matrix(p.R1, p.C1, g.K1, g.Kbar1, g.K1a, g.K3, g.Kbar3, g.K3a);
}

Eigen::Matrix4d build_A46(const GainSet& g, const GridParameters& p) {
    return build_pair_matrix(p.R4, p.C4, g.K4, g.Kbar4, g.K4a, g.K6, g.Kbar6, g.K6a);
}

QuarticCoefficients char_poly(const GainSet& g, const GridParameters& p) {
    return pair_char_poly(p.R1, p.C1, g.K1, g.Kbar1, g.K1a, g.K3, g.Kbar3, g.K3a);
}

QuarticCoefficients char_poly_battery(const GainSet& g, const GridParameters& p) {
    return pair_char_poly(p.R4, p.C4, g.K4, g.Kbar4, g.K4a, g.K6, g.Kbar6, g.K6a);
}

QuarticCoefficients char_poly_published(const GainSet& g, const GridParameters& p) {
    const double sigma = 1.0 / (p.R1 * p.C1);
    QuarticCoefficients q;
    q.p3 = g.K3 + sigma;
    q.p2 = g.Kbar3 * g.K3a + sigma * g.K3 + g.Kbar1 * g.K1a +
           (g.K3 - g.K1) * (g.K1 - sigma);
    q.p1 = sigma * (g.Kbar3 * g.K3a + g.Kbar1 * g.K1a) +
           g.Kbar1 * g.K1a * (g.K3 - g.K1) + g.K3a * (g.K1 - sigma);
    q.p0 = g.Kbar1 * g.Kbar3 * g.K3a * g.K1a;
    return q;
}

RouthReport routh_stable(const QuarticCoefficients& c) {
    RouthReport r;
    r.c_p3 = c.p3;
    r.c_p0 = c.p0;
    r.c_d1 = c.p3 * c.p2 - c.p1;
    r.c_d2 = c.p1 * r.c_d1 - c.p3 * c.p3 * c.p0;
    r.margin = std::min(std::min(r.c_p3, r.c_p0), std::min(r.c_d1, r.c_d2));

    const bool any_zero = r.c_p3 == 0.0 || r.c_p0 == 0.0 || r.c_d1 == 0.0 || r.c_d2 == 0.0;
    r.standard = combine(r.margin, any_zero);

    // Printed conditions: positive coefficients plus the two table rows.
    double worst_pub = std::min(std::min(c.p3, c.p2), std::min(c.p1, c.p0));
    if (c.p3 != 0.0) {
        const double row3 = c.p2 - c.p1 / c.p3;
        worst_pub = std::min(worst_pub, row3);
        if (row3 != 0.0) {
            worst_pub = std::min(worst_pub, c.p2 - c.p0 * c.p1 / row3);
        }
    }
    r.published = combine(worst_pub, worst_pub == 0.0);
    return r;
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
        throw Error("lyapunov_solve: dimension mismatch");
    }
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
    if (ev.real().maxCoeff() >= 0.0) {
        throw Error("Lyapunov equation has no PD solution");
    }

    // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P), column-major.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
    const Eigen::MatrixXd At = A.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        M.block(i * n, i * n, n, n) += At;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                M(i * n + k, j * n + k) += At(i, j);
            }
        }
    }
    Eigen::VectorXd q(n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        q.segment(j * n, n) = -Q.col(j);
    }
    const Eigen::VectorXd pvec = M.fullPivLu().solve(q);
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        P.col(j) = pvec.segment(j * n, n);
    }
    return 0.5 * (P + P.transpose());
}

BranchCertificate branch_certificate(const GainSet& g, const GridParameters& p,
                                     bool battery) {
    const bool integrators = battery ? g.has_bat_integrators() : g.has_pv_integrators();
    BranchCertificate cert;
    if (integrators) {
        const Eigen::Matrix4d A = battery ? build_A46(g, p) : build_A13(g, p);
        cert.P = lyapunov_solve(A, Eigen::Matrix4d::Identity());
        return cert;
    }
    // Integral channels are inert; certify the active 2x2 block.
    const double R = battery ? p.R4 : p.R1;
    const double C = battery ? p.C4 : p.C1;
    const double Kp = battery ? g.K4 : g.K1;
    const double Kc = battery ? g.K6 : g.K3;
    Eigen::Matrix2d A;
    A << -1.0 / (R * C), -1.0 / C,
         (Kc - Kp) * (C * Kp - 1.0 / R), -Kc;
    cert.P = lyapunov_solve(A, Eigen::Matrix2d::Identity());
    cert.reduced = true;
    return cert;
}

namespace {

double branch_value(const BranchCertificate& cert, double ev, double ea_v, double ec,
                    double ea_c) {
    if (cert.reduced) {
        Eigen::Vector2d e(ev, ec);
        return 0.5 * e.dot(cert.P * e);
    }
    Eigen::Vector4d e(ev, ea_v, ec, ea_c);
    return 0.5 * e.dot(cert.P * e);
}

}  // namespace

MonitorResult lyapunov_monitor(const engine::Trace& trace,
                               const control::ResolvedReferences& rr,
                               [[maybe_unused]] const GainSet& g, const GridParameters& p,
                               const BranchCertificate& P13, const BranchCertificate& P46) {
    MonitorResult res;
    if (trace.records.empty()) {
        res.inconclusive = true;
        res.message = "monitor inconclusive (empty trace)";
        return res;
    }

    res.samples.reserve(trace.records.size());
    for (const engine::TraceRecord& rec : trace.records) {
        LyapunovSample s;
        s.t = rec.t;
        const double x1e = rr.refs.x1_star;
        const double x3e = (rec.d.v_pv - rr.refs.x1_star) / p.R1;
        const double x4e = rr.refs.x4_star;
        const double x6e = (rec.d.v_b - rr.refs.x4_star) / p.R4;
        s.v13 = branch_value(P13, rec.state[sx::x1] - x1e, rec.state[sx::a1],
                             rec.state[sx::x3] - x3e, rec.state[sx::a3]);
        s.v46 = branch_value(P46, rec.state[sx::x4] - x4e, rec.state[sx::a4],
                             rec.state[sx::x6] - x6e, rec.state[sx::a6]);
        const double e2 = rec.state[sx::x2] - rr.x2_star;
        const double e5 = rec.state[sx::x5] - rr.x5_star;
        s.v259 = 0.5 * p.C2 * e2 * e2 + 0.5 * p.C5 * e5 * e5 +
                 0.5 * p.C9 * rec.state[sx::x9] * rec.state[sx::x9];
        const double e7 = rec.state[sx::x7] - rec.z7;
        const double e8 = rec.state[sx::x8] - rec.z8;
        s.v7 = 0.5 * e7 * e7;
        s.v8 = 0.5 * e8 * e8;
        s.v_total = s.v13 + s.v46 + s.v259 + s.v7 + s.v8;
        res.samples.push_back(s);
    }
    res.v_floor = 0.5 * p.C9 * rr.refs.x9_star * rr.refs.x9_star;

    // The cold-start transient may clamp the duties for a few steps; skip
    // those leading samples, then demand an unsaturated window.
    std::size_t i0 = 0;
    while (i0 < trace.records.size() && trace.records[i0].duties.any_saturated()) ++i0;
    res.first_clean = i0;
    if (i0 == trace.records.size()) {
        res.inconclusive = true;
        res.message = "monitor inconclusive (outside Omega_K): window fully saturated";
        return res;
    }
    for (std::size_t k = i0; k < trace.records.size(); ++k) {
        if (trace.records[k].duties.any_saturated()) {
            res.inconclusive = true;
            std::ostringstream os;
            os << "monitor inconclusive (outside Omega_K): saturation at t = "
               << trace.records[k].t << " s";
            res.message = os.str();
            return res;
        }
    }

    // Allowed per-interval increase: relative floor plus the O(h) injection
    // of the backward-differenced z7 acceleration, scaled by the samples
    // folded into one recording interval.
    const double v0 = res.samples[i0].v_total;
    res.tol = 1e-6 * v0 + 1e-9 * v0 * static_cast<double>(trace.record_every);
    for (std::size_t k = i0; k + 1 < res.samples.size(); ++k) {
        if (res.samples[k + 1].v_total - res.samples[k].v_total > res.tol) {
            res.violations.push_back(k);
        }
    }
    res.message = res.violations.empty() ? "monotone within allowance"
                                         : "composite V increased beyond allowance";
    return res;
}

}  // namespace dcgrid::stability
