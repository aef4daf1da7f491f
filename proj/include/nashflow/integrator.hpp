#pragma once

// The alpha-extension procedure: integrate the piecewise-constant thin-flow
// vector field into the unique equilibrium trajectory, with exact event
// detection, plus the reconstruction of the induced flow over time.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nashflow/thin_flow.hpp"

namespace nashflow {

struct Phase {
    Rational start;                   // theta_k
    Labeling labels;                  // l(theta_k), always feasible
    std::vector<Rational> direction;  // thin flow direction on [theta_k, theta_{k+1})
    ThinFlow thin_flow;
    Configuration config;           // actres sets at the left endpoint
    Configuration interior_config;  // actres sets in the phase interior
};

enum class StopReason {
    steady,       // direction equals lambda and no slack or queue is shrinking
    certified,    // certified bound reached with direction lambda
    horizon,      // stop policy horizon reached
    phase_limit,  // stop policy phase count reached
    cap_exceeded  // phase cap hit (possible left accumulation of phases)
};

struct Trajectory {
    std::vector<Phase> phases;  // starts strictly increasing, phases[0].start = 0
    bool steady = false;        // terminal direction is valid on [end_time, infinity)
    StopReason reason = StopReason::steady;

    const std::vector<Rational>& terminal_direction() const { return phases.back().direction; }
    const Rational& end_time() const { return phases.back().start; }
    int phase_count() const { return static_cast<int>(phases.size()); }
};

struct StopPolicy {
    enum class Kind { steady, horizon, phase_count };
    Kind kind = Kind::steady;
    Rational horizon_value;
    int max_phases = 0;
    int phase_cap = 10000;
    // Optional sharpening: once theta reaches this certified bound while the
    // direction equals lambda, the trajectory is steady and integration stops
    // even if queues or slacks are still moving.
    std::optional<Rational> certified_bound;

    static StopPolicy steady() { return {}; }
    static StopPolicy horizon(Rational h) {
        StopPolicy p;
        p.kind = Kind::horizon;
        p.horizon_value = std::move(h);
        return p;
    }
    static StopPolicy phases(int n) {
        StopPolicy p;
        p.kind = Kind::phase_count;
        p.max_phases = n;
        return p;
    }
};

struct PhaseDirection {
    std::vector<Rational> direction;
    ThinFlow thin_flow;
    Configuration config;
};

inline PhaseDirection phase_direction(const Network& net, const Labeling& labels,
                                      const ThinFlowSolveOptions& options = {}) {
    Configuration cfg = configuration_of(net, labels);
    if (!is_valid_configuration(net, cfg))
        fail(Errc::infeasible_labeling, "labeling is not feasible");
    ThinFlow tf = solve_thin_flow(net, cfg, options);
    return {tf.label_rate, std::move(tf), std::move(cfg)};
}

// Time until the next sign change: an inactive arc whose slack shrinks to
// zero, or a resetting (non-free) arc whose queue drains to zero. Free arcs
// never trigger events; their queues may pass through zero. Returns nullopt
// when no slack or queue is strictly decreasing.
inline std::optional<Rational> next_event(const Network& net, const Labeling& labels,
                                          const std::vector<Rational>& direction) {
    auto qs = queue_and_slack(net, labels);
    std::optional<Rational> alpha;
    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        if (a.free_arc) continue;
        Rational rate = direction[a.head] - direction[a.tail];  // = q', = -s'
        std::optional<Rational> candidate;
        if (qs.slack[i] > 0 && rate > 0)
            candidate = qs.slack[i] / rate;  // slack shrinking
        else if (qs.queue[i] > 0 && rate < 0)
            candidate = qs.queue[i] / -rate;  // queue draining
        if (candidate) {
            if (*candidate <= 0)
                fail(Errc::non_positive_event, "event time <= 0 on arc '" + a.id + "'");
            if (!alpha || *candidate < *alpha) alpha = candidate;
        }
    }
    return alpha;
}

struct IntegrateResult {
    Trajectory trajectory;
    StopReason reason = StopReason::steady;
};

inline IntegrateResult try_integrate(const Network& net, const Labeling& start,
                                     const StopPolicy& stop = {},
                                     const ThinFlowSolveOptions& options = {}) {
    if (!is_feasible_labeling(net, start))
        fail(Errc::infeasible_labeling, "initial labeling is not feasible");

    const std::vector<Rational> lambda = solve_steady_direction(net, options).lambda;
    Rational kappa = lipschitz_constant(net);
    if (kappa < 1) kappa = 1;

    Trajectory traj;
    Labeling labels = start;
    Rational theta(0);

    auto push_phase = [&](const Labeling& l, const Rational& th) {
        Configuration cfg = configuration_of(net, l);
        if (!is_valid_configuration(net, cfg))
            fail(Errc::infeasible_labeling,
                 "labeling left the feasible set at theta = " + to_fraction_string(th));
        ThinFlow tf = solve_thin_flow(net, cfg, options);
        for (const Rational& d : tf.label_rate)
            if (d < 0 || d > kappa)
                fail(Errc::no_solution, "internal: phase direction outside [0, kappa]");
        Phase ph;
        ph.start = th;
        ph.labels = l;
        ph.direction = tf.label_rate;
        ph.thin_flow = std::move(tf);
        ph.config = std::move(cfg);
        traj.phases.push_back(std::move(ph));
    };

    while (true) {
        push_phase(labels, theta);
        Phase& phase = traj.phases.back();
        std::optional<Rational> alpha = next_event(net, labels, phase.direction);

        // Interior configuration: sets can differ from the left endpoint on
        // arcs that are exactly tight there; any interior point decides them.
        {
            Rational step = alpha ? *alpha / 2 : Rational(1);
            Labeling mid = labels;
            for (int v = 0; v < net.node_count(); ++v) mid[v] += step * phase.direction[v];
            phase.interior_config = configuration_of(net, mid);
        }

        bool at_steady = (phase.direction == lambda) && !alpha;
        if (at_steady) {
            traj.steady = true;
            traj.reason = StopReason::steady;
            break;
        }
        if (stop.certified_bound && phase.direction == lambda && theta >= *stop.certified_bound) {
            traj.steady = true;
            traj.reason = StopReason::certified;
            break;
        }
        if (!alpha)
            fail(Errc::theorem_violated,
                 "internal: phase without further events but direction differs from lambda");
        if (stop.kind == StopPolicy::Kind::horizon && theta + *alpha > stop.horizon_value) {
            traj.reason = StopReason::horizon;
            break;
        }
        if (stop.kind == StopPolicy::Kind::phase_count &&
            traj.phase_count() >= stop.max_phases) {
            traj.reason = StopReason::phase_limit;
            break;
        }
        if (traj.phase_count() >= stop.phase_cap) {
            traj.reason = StopReason::cap_exceeded;
            break;
        }

        for (int v = 0; v < net.node_count(); ++v) labels[v] += *alpha * phase.direction[v];
        theta += *alpha;
    }
    return {std::move(traj), traj.reason};
}

inline Trajectory integrate(const Network& net, const Labeling& start, const StopPolicy& stop = {},
                            const ThinFlowSolveOptions& options = {}) {
    IntegrateResult res = try_integrate(net, start, stop, options);
    if (res.reason == StopReason::cap_exceeded)
        fail(Errc::phase_cap_exceeded,
             "phase cap of " + std::to_string(stop.phase_cap) +
                 " reached at theta = " + to_fraction_string(res.trajectory.end_time()) +
                 " (possible accumulation of phases)");
    return std::move(res.trajectory);
}

// Piecewise-linear evaluation; beyond the last breakpoint the terminal
// direction extends the trajectory.
inline Labeling evaluate(const Trajectory& traj, const Rational& theta) {
    if (theta < 0) fail(Errc::invalid_input, "evaluation time must be nonnegative");
    size_t k = traj.phases.size() - 1;
    while (k > 0 && traj.phases[k].start > theta) --k;
    const Phase& ph = traj.phases[k];
    Labeling out = ph.labels;
    Rational dt = theta - ph.start;
    for (size_t v = 0; v < out.size(); ++v) out[v] += dt * ph.direction[v];
    return out;
}

// Exact uniform distance over [0, H]: the supremum of a piecewise-linear
// difference is attained at a breakpoint of either trajectory (or at H).
inline Rational trajectory_distance(const Trajectory& a, const Trajectory& b, const Rational& horizon) {
    if (horizon < 0) fail(Errc::invalid_input, "horizon must be nonnegative");
    if (a.phases.front().labels.size() != b.phases.front().labels.size())
        fail(Errc::invalid_input, "trajectories live on different node sets");
    std::vector<Rational> times{Rational(0), horizon};
    for (const auto& t : {std::cref(a), std::cref(b)})
        for (const Phase& ph : t.get().phases)
            if (ph.start <= horizon) times.push_back(ph.start);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    Rational dist(0);
    for (const Rational& th : times) {
        Labeling la = evaluate(a, th), lb = evaluate(b, th);
        for (size_t v = 0; v < la.size(); ++v) {
            Rational d = rational_abs(la[v] - lb[v]);
            if (d > dist) dist = d;
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Flow over time reconstruction.

struct PiecewiseConstant {
    std::vector<Rational> breaks;  // ascending; 0 before the first break
    std::vector<Rational> values;  // values[i] on [breaks[i], breaks[i+1]), last extends

    Rational value_at(const Rational& t) const {
        if (breaks.empty() || t < breaks.front()) return Rational(0);
        size_t i = breaks.size() - 1;
        while (i > 0 && breaks[i] > t) --i;
        return values[i];
    }

    // Integral from the domain start to t.
    Rational integral_to(const Rational& t) const {
        Rational total(0);
        for (size_t i = 0; i < breaks.size(); ++i) {
            if (t <= breaks[i]) break;
            Rational upper = (i + 1 < breaks.size() && breaks[i + 1] < t) ? breaks[i + 1] : t;
            total += values[i] * (upper - breaks[i]);
        }
        return total;
    }
};

struct PiecewiseLinearFn {
    std::vector<Rational> xs;  // ascending breakpoints
    std::vector<Rational> ys;
    Rational final_slope;  // slope beyond the last breakpoint

    Rational value_at(const Rational& x) const {
        if (x <= xs.front()) return ys.front();
        size_t i = xs.size() - 1;
        if (x >= xs[i]) return ys[i] + final_slope * (x - xs[i]);
        while (i > 0 && xs[i] > x) --i;
        Rational w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
    }
};

struct ArcFlow {
    Rational capacity;
    PiecewiseConstant inflow_rate;   // f+ over entry time
    PiecewiseConstant outflow_rate;  // f- over exit time
    PiecewiseLinearFn queue_volume;  // z over entry time; signed on free arcs
    PiecewiseLinearFn cumulative;    // x_e over departure time theta
    Rational initial_volume;         // queue content present at the start

    // The exit breakpoints start at l_w(0); before that the initial queue is
    // still draining at capacity rate.
    Rational outflow_rate_at(const Rational& exit_time) const {
        const Rational& first = outflow_rate.breaks.front();
        if (exit_time >= first) return outflow_rate.value_at(exit_time);
        if (initial_volume > 0 && exit_time >= first - initial_volume / capacity)
            return capacity;
        return Rational(0);
    }
};

struct FlowOverTime {
    std::vector<ArcFlow> arcs;

    // Cumulative inflow F+ measured from the start of the trajectory; the
    // initial queue content counts as already entered.
    Rational cumulative_inflow_at(int arc, const Rational& entry_time) const {
        const ArcFlow& f = arcs[arc];
        return f.initial_volume + f.inflow_rate.integral_to(entry_time);
    }

    // Cumulative outflow F-, with the pre-breakpoint drain accounted for.
    Rational cumulative_outflow_at(int arc, const Rational& exit_time) const {
        const ArcFlow& f = arcs[arc];
        const Rational& first = f.outflow_rate.breaks.front();
        if (exit_time >= first) return f.initial_volume + f.outflow_rate.integral_to(exit_time);
        Rational drained = f.initial_volume - f.capacity * (first - exit_time);
        return drained > 0 ? drained : Rational(0);
    }
};

inline FlowOverTime reconstruct_flow_over_time(const Network& net, const Trajectory& traj) {
    for (const Phase& ph : traj.phases)
        for (int v = 0; v < net.node_count(); ++v)
            if (ph.direction[v] == 0)
                fail(Errc::division_by_zero_rate,
                     "label derivative of node '" + net.node_name(v) +
                         "' vanishes in the phase starting at theta = " +
                         to_fraction_string(ph.start));

    FlowOverTime fot;
    fot.arcs.resize(net.arc_count());
    auto qs0 = queue_and_slack(net, traj.phases.front().labels);
    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        ArcFlow& f = fot.arcs[i];
        f.capacity = a.capacity;
        Rational gap0 = traj.phases.front().labels[a.head] - traj.phases.front().labels[a.tail] -
                        a.transit;
        f.initial_volume = a.free_arc ? Rational(a.capacity * gap0) : Rational(a.capacity * qs0.queue[i]);

        Rational cumulative = f.initial_volume;
        for (size_t k = 0; k < traj.phases.size(); ++k) {
            const Phase& ph = traj.phases[k];
            const Rational& x = ph.thin_flow.flow[i];
            f.inflow_rate.breaks.push_back(ph.labels[a.tail]);
            f.inflow_rate.values.push_back(x / ph.direction[a.tail]);
            f.outflow_rate.breaks.push_back(ph.labels[a.head]);
            f.outflow_rate.values.push_back(x / ph.direction[a.head]);

            Rational gap = ph.labels[a.head] - ph.labels[a.tail] - a.transit;
            Rational volume = a.free_arc ? Rational(a.capacity * gap)
                                         : Rational(gap > 0 ? a.capacity * gap : Rational(0));
            f.queue_volume.xs.push_back(ph.labels[a.tail]);
            f.queue_volume.ys.push_back(volume);

            f.cumulative.xs.push_back(ph.start);
            f.cumulative.ys.push_back(cumulative);
            if (k + 1 < traj.phases.size())
                cumulative += x * (traj.phases[k + 1].start - ph.start);
        }
        const Phase& last = traj.phases.back();
        Rational drate = last.direction[a.head] - last.direction[a.tail];
        f.queue_volume.final_slope = a.capacity * drate / last.direction[a.tail];
        if (!a.free_arc) {
            // The clamped queue only moves while present or starting to grow.
            Rational gap_last = last.labels[a.head] - last.labels[a.tail] - a.transit;
            if (!(gap_last > 0 || (gap_last == 0 && drate > 0))) f.queue_volume.final_slope = 0;
        }
        f.cumulative.final_slope = last.thin_flow.flow[i];
    }
    return fot;
}

// Exact feasibility audit of a reconstructed flow over time: conservation on
// every constancy interval, the queue operation rule at capacity, volumes
// nonnegative, and the equilibrium identity F+(l_v) = F-(l_w) at every
// breakpoint. Returns human-readable violations (empty = pass). Free arcs
// represent virtual queues and are exempt from the queue rule and sign check.
inline std::vector<std::string> verify_flow_over_time(const Network& net, const Trajectory& traj,
                                                      const FlowOverTime& fot) {
    std::vector<std::string> bad;
    auto target = flow_divergence_target(net);

    for (size_t k = 0; k < traj.phases.size(); ++k) {
        const Phase& ph = traj.phases[k];
        // Conservation: within phase k all rates at node v are constant.
        for (int v = 0; v < net.node_count(); ++v) {
            Rational lhs(0);
            for (int i = 0; i < net.arc_count(); ++i) {
                if (net.arc(i).tail == v) lhs += ph.thin_flow.flow[i] / ph.direction[v];
                if (net.arc(i).head == v) lhs -= ph.thin_flow.flow[i] / ph.direction[v];
            }
            if (lhs != target[v] / ph.direction[v])
                bad.push_back("conservation fails at node '" + net.node_name(v) +
                              "' in phase starting at theta = " + to_fraction_string(ph.start));
        }

        // Queue operation rule sampled at the interior of the phase.
        Rational step = (k + 1 < traj.phases.size())
                            ? Rational((traj.phases[k + 1].start - ph.start) / 2)
                            : Rational(1);
        for (int i = 0; i < net.arc_count(); ++i) {
            const Arc& a = net.arc(i);
            if (a.free_arc) continue;
            Rational entry = ph.labels[a.tail] + step * ph.direction[a.tail];
            Rational z = fot.arcs[i].queue_volume.value_at(entry);
            Rational fminus = fot.arcs[i].outflow_rate_at(entry + a.transit);
            if (z < 0)
                bad.push_back("negative queue volume on arc '" + a.id + "'");
            if (z > 0) {
                if (fminus != a.capacity)
                    bad.push_back("queue rule fails on arc '" + a.id + "' (queued, outflow " +
                                  to_fraction_string(fminus) + " != capacity)");
            } else {
                Rational fplus = fot.arcs[i].inflow_rate.value_at(entry);
                Rational expected = fplus < a.capacity ? fplus : Rational(a.capacity);
                if (fminus != expected)
                    bad.push_back("queue rule fails on arc '" + a.id + "' (empty, outflow " +
                                  to_fraction_string(fminus) + " != min(capacity, inflow))");
            }
        }
    }

    // Equilibrium identity and the two-route queue volume at breakpoints.
    for (size_t k = 0; k < traj.phases.size(); ++k) {
        const Phase& ph = traj.phases[k];
        for (int i = 0; i < net.arc_count(); ++i) {
            const Arc& a = net.arc(i);
            Rational x_theta = fot.arcs[i].cumulative.value_at(ph.start);
            Rational fin = fot.cumulative_inflow_at(i, ph.labels[a.tail]);
            Rational fout = fot.cumulative_outflow_at(i, ph.labels[a.head]);
            if (fin != x_theta || fout != x_theta)
                bad.push_back("equilibrium identity fails on arc '" + a.id +
                              "' at theta = " + to_fraction_string(ph.start));
            if (!a.free_arc) {
                Rational z = fot.arcs[i].queue_volume.value_at(ph.labels[a.tail]);
                Rational z2 = fin - fot.cumulative_outflow_at(i, ph.labels[a.tail] + a.transit);
                if (z != z2)
                    bad.push_back("queue volume mismatch on arc '" + a.id +
                                  "' at theta = " + to_fraction_string(ph.start));
            }
        }
    }
    return bad;
}

}  // namespace nashflow
