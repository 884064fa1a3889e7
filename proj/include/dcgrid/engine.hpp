#pragma once

#include "dcgrid/control.hpp"
#include "dcgrid/types.hpp"

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dcgrid::engine {

/// One classical 4-stage explicit step of y' = f(t, y).
template <class F, class V>
V rk4_step(F&& f, double t, const V& y, double h) {
    const V k1 = f(t, y);
    const V k2 = f(t + 0.5 * h, V(y + 0.5 * h * k1));
    const V k3 = f(t + 0.5 * h, V(y + 0.5 * h * k2));
    const V k4 = f(t + h, V(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Piecewise-linear breakpoint schedule. A repeated abscissa encodes a jump
/// (right-continuous); queries outside the breakpoints clamp to the ends.
struct Schedule {
    std::vector<std::pair<double, double>> points;

    Schedule() = default;
    Schedule(std::initializer_list<std::pair<double, double>> pts) : points(pts) {}
    static Schedule constant(double v) { return Schedule{{0.0, v}}; }

    double at(double t) const;
    void validate() const;
};

struct DisturbanceSchedule {
    Schedule v_pv = Schedule::constant(800.0);
    Schedule v_b = Schedule::constant(600.0);
    Schedule v_s = Schedule::constant(1500.0);
    Schedule r_load = Schedule::constant(10.0);

    Disturbance at(double t) const {
        Disturbance d;
        d.v_pv = v_pv.at(t);
        d.v_b = v_b.at(t);
        d.v_s = v_s.at(t);
        const double rl = r_load.at(t);
        if (!(rl > 0.0)) throw Error("invalid disturbance: R_L must be > 0");
        d.g_load = 1.0 / rl;
        return d;
    }
};

struct Scenario {
    std::string name = "scenario";
    GridParameters params;
    GainSet gains;
    DisturbanceSchedule disturbance;
    std::vector<ReferenceSet> plan;  // must tile [0, t_end]
    double t_end = 1.0;
    double h = 1e-6;
    long record_every = 1000;
    std::optional<StateVector> initial_state;  // default: equilibrium of plan[0], alphas 0
    bool warm_start = false;
    double warm_z7_dot = 0.0;  // seeds the z7-rate history when warm_start is set
    control::U3Protection u3_protection;

    void validate() const;
};

struct TraceRecord {
    double t = 0;
    StateVector state = StateVector::Zero();
    DutyTriple duties;
    Disturbance d;
    double z3 = 0, z6 = 0, z7 = 0, z8 = 0;
    double v_total = std::numeric_limits<double>::quiet_NaN();  // filled by the monitor
};

struct Trace {
    std::vector<TraceRecord> records;
    double h = 0;
    long record_every = 0;
    // Reference intervals as resolved while running, keyed by switch time.
    std::vector<std::pair<double, control::ResolvedReferences>> ref_history;

    const control::ResolvedReferences& refs_at(double t) const;
};

/// Owns one scenario run: schedules reference swaps, evaluates the three
/// duty laws once per step (zero-order hold) and advances the 13-state
/// augmented system.
class Engine {
public:
    explicit Engine(Scenario sc);

    /// Duties for the current state (also applies anti-windup decisions for
    /// the coming step).
    DutyTriple evaluate_controls();

    /// One h-step: controls, then the 4-stage advance.
    void step();

    /// Runs from t=0 to t_end, recording every record_every steps.
    Trace run();

    double time() const { return static_cast<double>(step_count_) * scenario_.h; }
    const StateVector& state() const { return state_; }
    const Scenario& scenario() const { return scenario_; }
    const control::ResolvedReferences& active_refs() const { return refs_; }
    control::ControllerScratch& scratch() { return scratch_; }

private:
    void activate_interval(std::size_t idx);
    void advance();

    Scenario scenario_;
    StateVector state_ = StateVector::Zero();
    control::ControllerScratch scratch_;
    control::ResolvedReferences refs_;
    control::IntegralFreeze freeze_;
    std::size_t plan_index_ = 0;
    long long step_count_ = 0;
    Trace* trace_ = nullptr;  // set during run()

    DutyTriple last_duties_;
    double last_z3_ = 0, last_z6_ = 0;
};

Trace simulate(const Scenario& sc);

}  // namespace dcgrid::engine
