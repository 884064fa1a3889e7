#include "dcgrid/engine.hpp"

#include "dcgrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dcgrid::engine {

double Schedule::at(double t) const {
    if (points.empty()) throw Error("empty schedule");
    if (t <= points.front().first) return points.front().second;
    if (t >= points.back().first) return points.back().second;
    // Last breakpoint with abscissa <= t keeps jumps right-continuous.
    auto it = std::upper_bound(points.begin(), points.end(), t,
                               [](double v, const auto& pt) { return v < pt.first; });
    const auto hi = it;
    const auto lo = it - 1;
    const double t0 = lo->first, t1 = hi->first;
    if (t1 == t0) return hi->second;
    const double w = (t - t0) / (t1 - t0);
    return lo->second + w * (hi->second - lo->second);
}

void Schedule::validate() const {
    if (points.empty()) throw Error("empty schedule");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].first < points[i - 1].first) {
            throw Error("schedule breakpoints must be nondecreasing in time");
        }
    }
}

void Scenario::validate() const {
    params.validate();
    gains.validate();
    disturbance.v_pv.validate();
    disturbance.v_b.validate();
    disturbance.v_s.validate();
    disturbance.r_load.validate();
    if (!(h > 0.0)) throw Error("invalid scenario: h must be > 0");
    if (!(t_end >= h)) throw Error("invalid scenario: t_end must be >= h");
    if (record_every < 1) throw Error("invalid scenario: record_every must be >= 1");
    if (plan.empty()) throw Error("invalid scenario: empty reference plan");
    const double tol = 0.5 * h;
    if (std::abs(plan.front().valid_from) > tol) {
        throw Error("invalid scenario: reference plan must start at t = 0");
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!(plan[i].valid_to > plan[i].valid_from)) {
            throw Error("invalid scenario: reference interval must have positive length");
        }
        if (i + 1 < plan.size() &&
            std::abs(plan[i + 1].valid_from - plan[i].valid_to) > tol) {
            throw Error("invalid scenario: reference intervals must be contiguous");
        }
    }
    if (plan.back().valid_to < t_end - tol) {
        throw Error("invalid scenario: reference plan must cover [0, t_end]");
    }
}

const control::ResolvedReferences& Trace::refs_at(double t) const {
    if (ref_history.empty()) throw Error("trace has no reference history");
    const control::ResolvedReferences* best = &ref_history.front().second;
    for (const auto& [ts, rr] : ref_history) {
        if (ts <= t) best = &rr;
    }
    return *best;
}

Engine::Engine(Scenario sc) : scenario_(std::move(sc)) {
    scenario_.validate();
    activate_interval(0);
    if (scenario_.initial_state) {
        state_ = *scenario_.initial_state;
        if (!state_.allFinite()) throw Error("invalid state");
    } else {
        state_.setZero();
        state_.head<9>() = refs_.xe;
    }
    if (scenario_.warm_start) {
        scratch_.z7_dot_prev = scenario_.warm_z7_dot;
        scratch_.first_step = false;
    }
}

void Engine::activate_interval(std::size_t idx) {
    plan_index_ = idx;
    const Disturbance d = scenario_.disturbance.at(scenario_.plan[idx].valid_from);
    refs_ = control::resolve(scenario_.plan[idx], d, scenario_.params);
    // Controllers restart cold on every interval, like at t = 0.
    if (idx > 0) {
        scratch_.z7_dot_prev = 0.0;
        scratch_.first_step = true;
    }
    if (trace_) {
        trace_->ref_history.emplace_back(scenario_.plan[idx].valid_from, refs_);
    }
}

DutyTriple Engine::evaluate_controls() {
    const double t = time();
    const Disturbance d = scenario_.disturbance.at(t);

    const control::DutyResult r1 = control::u1_law(state_, refs_, scenario_.gains,
                                                   scenario_.params, d);
    const control::DutyResult r2 = control::u2_law(state_, refs_, scenario_.gains,
                                                   scenario_.params, d);
    DutyTriple u;
    u.u1_raw = r1.u_raw;
    u.u2_raw = r2.u_raw;
    u.u1 = clamp01(u.u1_raw);
    u.u2 = clamp01(u.u2_raw);
    u.sat1 = u.u1 != u.u1_raw;
    u.sat2 = u.u2 != u.u2_raw;

    const control::U3Result r3 =
        control::u3_law(state_, refs_, scenario_.gains, scenario_.params, d, u.u1, u.u2,
                        u.sat1, u.sat2, scratch_, scenario_.h, scenario_.u3_protection);
    u.u3_raw = r3.u_raw;

    last_duties_ = control::saturate(u, state_, refs_, scenario_.gains, scenario_.params,
                                     d, freeze_);
    last_z3_ = r1.z;
    last_z6_ = r2.z;
    return last_duties_;
}

void Engine::step() {
    const double t = time();
    if (plan_index_ + 1 < scenario_.plan.size() &&
        t >= scenario_.plan[plan_index_].valid_to - 0.5 * scenario_.h) {
        activate_interval(plan_index_ + 1);
    }

    try {
        evaluate_controls();
    } catch (const Error& e) {
        std::ostringstream os;
        os << e.what() << " at t = " << t << " s";
        throw Error(os.str());
    }
    advance();
}

void Engine::advance() {
    const auto f = [&](double tt, const StateVector& y) -> StateVector {
        StateVector dy = model::rhs(y, last_duties_, scenario_.disturbance.at(tt),
                                    scenario_.params, refs_.refs, scenario_.gains);
        if (freeze_.a1) dy[sx::a1] = 0.0;
        if (freeze_.a3) dy[sx::a3] = 0.0;
        if (freeze_.a4) dy[sx::a4] = 0.0;
        if (freeze_.a6) dy[sx::a6] = 0.0;
        return dy;
    };
    state_ = rk4_step(f, time(), state_, scenario_.h);
    ++step_count_;

    if (!state_.allFinite()) {
        std::ostringstream os;
        os << "integration diverged (reduce h) at t = " << time() << " s";
        throw Error(os.str());
    }
}

Trace Engine::run() {
    Trace trace;
    trace.h = scenario_.h;
    trace.record_every = scenario_.record_every;
    trace_ = &trace;
    trace.ref_history.emplace_back(scenario_.plan[plan_index_].valid_from, refs_);

    const long long n_steps = std::llround(scenario_.t_end / scenario_.h);
    const long re = std::max<long>(1, scenario_.record_every);
    trace.records.reserve(static_cast<std::size_t>(n_steps / re) + 2);

    auto record = [&]() {
        TraceRecord rec;
        rec.t = time();
        rec.d = scenario_.disturbance.at(rec.t);
        rec.duties = last_duties_;
        rec.state = state_;
        rec.z3 = last_z3_;
        rec.z6 = last_z6_;
        rec.z7 = scratch_.z7;
        rec.z8 = scratch_.z8;
        trace.records.push_back(rec);
    };

    for (long long k = 0; k < n_steps; ++k) {
        if (plan_index_ + 1 < scenario_.plan.size() &&
            time() >= scenario_.plan[plan_index_].valid_to - 0.5 * scenario_.h) {
            activate_interval(plan_index_ + 1);
        }
        try {
            evaluate_controls();
        } catch (const Error& e) {
            std::ostringstream os;
            os << e.what() << " at t = " << time() << " s";
            throw Error(os.str());
        }
        if (k % re == 0) record();
        advance();
    }
    if (n_steps % re == 0) {
        evaluate_controls();
        record();
    }
    trace_ = nullptr;
    return trace;
}

Trace simulate(const Scenario& sc) { return Engine(sc).run(); }

}  // namespace dcgrid::engine
