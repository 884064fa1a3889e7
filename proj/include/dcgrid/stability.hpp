#pragma once

#include "dcgrid/engine.hpp"
#include "dcgrid/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dcgrid::stability {

/// Closed-loop matrix of the augmented PV pair [x1 a1 x3 a3] (the duty law
/// cancels the converter nonlinearity exactly, so this is not a
/// linearization). build_A46 is the battery analogue.
Eigen::Matrix4d build_A13(const GainSet& g, const GridParameters& p);
Eigen::Matrix4d build_A46(const GainSet& g, const GridParameters& p);

struct QuarticCoefficients {
    double p3 = 0, p2 = 0, p1 = 0, p0 = 0;
};

/// Coefficients of det(lambda I - A13), in closed form.
QuarticCoefficients char_poly(const GainSet& g, const GridParameters& p);
QuarticCoefficients char_poly_battery(const GainSet& g, const GridParameters& p);

/// The printed closed forms, kept verbatim for the audit report. The printed
/// lambda^1 coefficient disagrees with det(lambda I - A13) whenever
/// K1 != 1/(R1 C1) and Kbar3 != 1.
QuarticCoefficients char_poly_published(const GainSet& g, const GridParameters& p);

enum class Verdict { Stable, Marginal, Unstable };

struct RouthReport {
    Verdict standard = Verdict::Unstable;
    Verdict published = Verdict::Unstable;
    double margin = 0;  // min over the standard first-column conditions
    double c_p3 = 0, c_p0 = 0, c_d1 = 0, c_d2 = 0;
};

/// Standard quartic Routh-Hurwitz test plus the printed conditions.
RouthReport routh_stable(const QuarticCoefficients& c);

/// Solves A^T P + P A = -Q for symmetric P (dense, via the vectorized
/// linear system). Requires A Hurwitz and Q SPD.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Quadratic-form certificate for one branch. With zero integral gains the
/// integral channels are frozen and the certificate shrinks to the active
/// [x, current] pair.
struct BranchCertificate {
    Eigen::MatrixXd P;
    bool reduced = false;  // 2x2 certificate on [voltage, current] only
};

BranchCertificate branch_certificate(const GainSet& g, const GridParameters& p, bool battery);

struct LyapunovSample {
    double t = 0;
    double v13 = 0, v46 = 0, v259 = 0, v7 = 0, v8 = 0;
    double v_total = 0;
};

struct MonitorResult {
    std::vector<LyapunovSample> samples;
    std::vector<std::size_t> violations;  // k where v(k+1) - v(k) > tol
    double tol = 0;
    double v_floor = 0;       // composite value at the equilibrium point
    std::size_t first_clean = 0;
    bool inconclusive = false;  // saturation inside the window
    std::string message;
};

/// Evaluates the composite function V13+V46+V7+V8+V259 along a trace and
/// flags any sampled increase beyond the documented allowance. Requires
/// constant references over the window; saturated samples after the leading
/// startup transient make the verdict inconclusive (outside the invariant
/// region the decrease claim does not apply).
MonitorResult lyapunov_monitor(const engine::Trace& trace,
                               const control::ResolvedReferences& rr, const GainSet& g,
                               const GridParameters& p, const BranchCertificate& P13,
                               const BranchCertificate& P46);

}  // namespace dcgrid::stability
