#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcgrid {

/// Error type thrown by every operation in this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// 9 physical states followed by the 4 integral-error states.
using StateVector = Eigen::Matrix<double, 13, 1>;
using PhysicalState = Eigen::Matrix<double, 9, 1>;

// Index constants for StateVector / PhysicalState components.
namespace sx {
inline constexpr Eigen::Index x1 = 0;  // PV-side capacitor voltage (V)
inline constexpr Eigen::Index x2 = 1;  // PV grid-side capacitor voltage (V)
inline constexpr Eigen::Index x3 = 2;  // PV inductor current (A)
inline constexpr Eigen::Index x4 = 3;  // battery-side capacitor voltage (V)
inline constexpr Eigen::Index x5 = 4;  // battery grid-side capacitor voltage (V)
inline constexpr Eigen::Index x6 = 5;  // battery inductor current (A)
inline constexpr Eigen::Index x7 = 6;  // supercap grid-side capacitor voltage (V)
inline constexpr Eigen::Index x8 = 7;  // supercap inductor current (A)
inline constexpr Eigen::Index x9 = 8;  // DC bus voltage (V)
inline constexpr Eigen::Index a1 = 9;  // integral of K1a*(x1 - x1*)
inline constexpr Eigen::Index a3 = 10; // integral of K3a*(x3 - z3)
inline constexpr Eigen::Index a4 = 11; // integral of K4a*(x4 - x4*)
inline constexpr Eigen::Index a6 = 12; // integral of K6a*(x6 - z6)
}  // namespace sx

/// Circuit constants of the converter network. All strictly positive.
struct GridParameters {
    double C1 = 0.1;    // F
    double C2 = 0.01;   // F
    double C4 = 0.1;    // F
    double C5 = 0.01;   // F
    double C7 = 0.01;   // F
    double C9 = 0.0001; // F
    double L3 = 0.033;  // H
    double L6 = 0.033;  // H
    double L8 = 0.0033; // H
    double R1 = 0.1;    // Ohm
    double R2 = 0.1;    // Ohm
    double R4 = 0.1;    // Ohm
    double R5 = 0.01;   // Ohm
    double R7 = 0.1;    // Ohm
    double R01 = 0.01;  // Ohm, PV converter parasitic
    double R02 = 0.01;  // Ohm, PV converter parasitic
    double R04 = 0.01;  // Ohm, battery converter parasitic
    double R08 = 0.01;  // Ohm, supercap converter parasitic

    void validate() const {
        const double v[] = {C1, C2, C4, C5, C7, C9, L3, L6, L8,
                            R1, R2, R4, R5, R7, R01, R02, R04, R08};
        for (double x : v) {
            if (!(x > 0.0) || !std::isfinite(x)) {
                throw Error("invalid grid parameters: every field must be strictly positive");
            }
        }
    }
};

/// Exogenous inputs: source voltages and load conductance.
struct Disturbance {
    double v_pv = 800.0;  // PV array voltage (V), > 0
    double v_b = 600.0;   // battery voltage (V), > 0
    double v_s = 1500.0;  // supercapacitor voltage (V), > 0
    double g_load = 0.1;  // load conductance 1/R_L (S), >= 0 (0 = disconnected)

    void validate() const {
        if (!(v_pv > 0.0) || !(v_b > 0.0) || !(v_s > 0.0) || !(g_load >= 0.0) ||
            !std::isfinite(v_pv) || !std::isfinite(v_b) || !std::isfinite(v_s) ||
            !std::isfinite(g_load)) {
            throw Error("invalid disturbance: v_pv, v_b, v_s must be positive, g_load >= 0");
        }
    }
};

/// Per-interval voltage targets handed down by the higher-level dispatch.
struct ReferenceSet {
    double x1_star = 780.0;  // PV-side voltage target (V)
    double x4_star = 600.0;  // battery-side voltage target (V)
    double x9_star = 1000.0; // DC bus voltage target (V)
    double valid_from = 0.0; // s
    double valid_to = 0.0;   // s
};

/// Controller gains. All nonnegative; zero integral gains disable PI action.
struct GainSet {
    // PV branch
    double K1 = 0, Kbar1 = 0, K1a = 0;
    double K3 = 0, Kbar3 = 0, K3a = 0;
    // battery branch
    double K4 = 0, Kbar4 = 0, K4a = 0;
    double K6 = 0, Kbar6 = 0, K6a = 0;
    // supercapacitor branch
    double K7 = 0, K8 = 0;

    void validate() const {
        const double v[] = {K1, Kbar1, K1a, K3, Kbar3, K3a,
                            K4, Kbar4, K4a, K6, Kbar6, K6a, K7, K8};
        for (double x : v) {
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw Error("invalid gain set: gains must be finite and >= 0");
            }
        }
        if (!(K7 > 0.0) || !(K8 > 0.0)) {
            throw Error("invalid gain set: K7 and K8 must be > 0");
        }
    }

    bool has_pv_integrators() const { return Kbar1 > 0 || K1a > 0 || Kbar3 > 0 || K3a > 0; }
    bool has_bat_integrators() const { return Kbar4 > 0 || K4a > 0 || Kbar6 > 0 || K6a > 0; }

    /// Gain choice used in the controller-existence proof: pure proportional
    /// action, K1 = 1/(R1 C1), K3 = R01/L3 and the analogous battery and
    /// supercapacitor pairs.
    static GainSet proof_defaults(const GridParameters& p) {
        GainSet g;
        g.K1 = 1.0 / (p.R1 * p.C1);
        g.K3 = p.R01 / p.L3;
        g.K4 = 1.0 / (p.R4 * p.C4);
        g.K6 = p.R04 / p.L6;
        g.K7 = 1.0 / (p.R7 * p.C7);
        g.K8 = p.R08 / p.L8;
        return g;
    }
};

/// One controller output sample: raw law values plus the [0,1]-clamped
/// duties that are actually applied to the converters.
struct DutyTriple {
    double u1_raw = 0, u2_raw = 0, u3_raw = 0;
    double u1 = 0, u2 = 0, u3 = 0;
    bool sat1 = false, sat2 = false, sat3 = false;

    bool any_saturated() const { return sat1 || sat2 || sat3; }
};

/// Denominator guard for the duty-cycle laws (volt scale).
inline constexpr double kEpsDiv = 1e-6;

inline double clamp01(double u) { return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u); }

}  // namespace dcgrid
