#pragma once

// Executable uniqueness, scaling and continuity results: local networks with
// their conic vector fields, trajectory rescaling, re-integration audits,
// perturbation sweeps over transit/capacity/inflow/initial labels, and
// capacity changes during an evolution.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nashflow/integrator.hpp"

namespace nashflow {

struct LocalNetwork {
    Network net;      // restricted to the active arcs; resetting arcs became free
    Labeling center;  // the cone apex
};

// Restriction to the active arcs at the center, with the resetting arcs made
// free. Every region boundary hyperplane then passes through the center:
// structurally, every non-free arc is tight there.
inline LocalNetwork local_network(const Network& net, const Labeling& center) {
    Configuration cfg = configuration_of(net, center);
    if (!is_valid_configuration(net, cfg))
        fail(Errc::infeasible_labeling, "center labeling is not feasible");
    LocalNetwork ln{restrict_to_local_network(net, cfg), center};
    for (const Arc& a : ln.net.arcs())
        if (!a.free_arc && center[a.head] != center[a.tail] + a.transit)
            fail(Errc::no_solution, "internal: non-free local arc '" + a.id +
                                        "' is not tight at the center");
    return ln;
}

// theta -> alpha * traj(theta/alpha) + (1-alpha) * center, phase by phase.
// The configurations are preserved exactly (the conic structure of the local
// vector field); this is asserted on every breakpoint.
inline Trajectory scale_trajectory(const LocalNetwork& ln, const Trajectory& traj,
                                   const Rational& alpha) {
    if (alpha <= 0) fail(Errc::invalid_input, "scaling factor must be positive");
    if (!is_feasible_labeling(ln.net, traj.phases.front().labels))
        fail(Errc::not_in_local_feasible_set, "trajectory does not start in the local feasible set");

    auto scale_labels = [&](const Labeling& l) {
        Labeling out(l.size());
        for (size_t v = 0; v < l.size(); ++v)
            out[v] = alpha * l[v] + (1 - alpha) * ln.center[v];
        return out;
    };
    if (!is_feasible_labeling(ln.net, scale_labels(traj.phases.front().labels)))
        fail(Errc::not_in_local_feasible_set, "scaled start leaves the local feasible set");

    Trajectory out = traj;
    for (size_t k = 0; k < traj.phases.size(); ++k) {
        Phase& ph = out.phases[k];
        ph.start = alpha * traj.phases[k].start;
        ph.labels = scale_labels(traj.phases[k].labels);
        if (configuration_of(ln.net, ph.labels) != traj.phases[k].config)
            fail(Errc::no_solution,
                 "internal: scaling changed the configuration at theta = " +
                     to_fraction_string(ph.start));
        // directions, thin flows and interior configurations carry over.
    }
    return out;
}

// Re-integrate from a point on the trajectory and compare the tail exactly.
inline bool uniqueness_audit(const Network& net, const Trajectory& traj, const Rational& theta0,
                             const ThinFlowSolveOptions& options = {}) {
    if (theta0 < 0) fail(Errc::invalid_input, "audit time must be nonnegative");
    Labeling mid = evaluate(traj, theta0);
    Trajectory tail = integrate(net, mid, StopPolicy::steady(), options);

    if (traj.steady && tail.terminal_direction() != traj.terminal_direction()) return false;

    Rational horizon = traj.end_time() + tail.end_time() + theta0 + 1;
    std::vector<Rational> times{theta0, horizon};
    for (const Phase& ph : traj.phases)
        if (ph.start >= theta0 && ph.start <= horizon) times.push_back(ph.start);
    for (const Phase& ph : tail.phases)
        if (theta0 + ph.start <= horizon) times.push_back(theta0 + ph.start);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (const Rational& th : times)
        if (evaluate(traj, th) != evaluate(tail, th - theta0)) return false;
    return true;
}

inline bool uniqueness_audit(const Network& net, const Labeling& start, const Rational& theta0,
                             const ThinFlowSolveOptions& options = {}) {
    Trajectory traj = integrate(net, start, StopPolicy::steady(), options);
    return uniqueness_audit(net, traj, theta0, options);
}

// ---------------------------------------------------------------------------
// Continuity sweeps.

struct PerturbationSweep {
    enum class Target { transit, capacity, inflow, label };
    Network base;
    Target target = Target::transit;
    std::string arc_id;            // transit/capacity targets
    std::vector<Rational> deltas;  // strictly decreasing, positive
    Rational horizon;
};

struct SweepRow {
    Rational delta;
    Rational distance;
    int phases_base = 0;
    int phases_perturbed = 0;
};

inline const char* sweep_target_name(PerturbationSweep::Target t) {
    switch (t) {
        case PerturbationSweep::Target::transit: return "transit";
        case PerturbationSweep::Target::capacity: return "capacity";
        case PerturbationSweep::Target::inflow: return "inflow";
        case PerturbationSweep::Target::label: return "label";
    }
    return "?";
}

// Integrates the base instance and each perturbed instance from the
// empty-network labeling (the label target perturbs the sink's initial label
// instead) and reports the exact uniform distance over [0, horizon].
inline std::vector<SweepRow> continuity_sweep(const PerturbationSweep& sweep,
                                              const ThinFlowSolveOptions& options = {}) {
    if (sweep.deltas.empty()) fail(Errc::invalid_input, "sweep needs at least one delta");
    for (size_t i = 0; i < sweep.deltas.size(); ++i) {
        if (sweep.deltas[i] <= 0) fail(Errc::invalid_input, "sweep deltas must be positive");
        if (i > 0 && sweep.deltas[i] >= sweep.deltas[i - 1])
            fail(Errc::invalid_input, "sweep deltas must be strictly decreasing");
    }
    if (sweep.horizon < 0) fail(Errc::invalid_input, "horizon must be nonnegative");

    using Target = PerturbationSweep::Target;
    int arc = -1;
    if (sweep.target == Target::transit || sweep.target == Target::capacity)
        arc = sweep.base.arc_index(sweep.arc_id);

    Trajectory base_traj = integrate(sweep.base, empty_network_labeling(sweep.base),
                                     StopPolicy::steady(), options);
    std::vector<SweepRow> rows;
    for (const Rational& delta : sweep.deltas) {
        Network pert = sweep.base;
        Labeling start;
        switch (sweep.target) {
            case Target::transit:
                pert = with_transit(sweep.base, arc, sweep.base.arc(arc).transit + delta);
                start = empty_network_labeling(pert);
                break;
            case Target::capacity:
                pert = with_capacity(sweep.base, arc, sweep.base.arc(arc).capacity + delta);
                start = empty_network_labeling(pert);
                break;
            case Target::inflow:
                pert = with_inflow(sweep.base, sweep.base.inflow() + delta);
                start = empty_network_labeling(pert);
                break;
            case Target::label: {
                start = empty_network_labeling(pert);
                Labeling bumped = start;
                bumped[pert.sink()] += delta;
                if (is_feasible_labeling(pert, bumped)) {
                    start = bumped;
                } else {
                    // Raising the sink label can strand nodes fed through the
                    // sink; fall back to moving delta along the initial phase
                    // direction, which stays feasible on every instance.
                    PhaseDirection pd = phase_direction(pert, start, options);
                    for (int v = 0; v < pert.node_count(); ++v)
                        start[v] += delta * pd.direction[v];
                }
                break;
            }
        }
        Trajectory pert_traj = integrate(pert, start, StopPolicy::steady(), options);
        rows.push_back({delta, trajectory_distance(base_traj, pert_traj, sweep.horizon),
                        base_traj.phase_count(), pert_traj.phase_count()});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Capacity change during an evolution: the switch applies from absolute queue
// time xi_hat onward; the departure time theta_hat it corresponds to solves
// l_v(theta) + q_e(theta) = xi_hat, i.e. max(l_v, l_w - tau) = xi_hat.

inline Rational switch_departure_time(const Network& net, const Trajectory& traj, int arc,
                                      const Rational& xi_hat) {
    const Arc& a = net.arc(arc);
    auto value = [&](const Labeling& l) {
        Rational entry = l[a.tail];
        Rational via_queue = l[a.head] - a.transit;
        return via_queue > entry ? via_queue : entry;
    };
    if (value(traj.phases.front().labels) > xi_hat)
        fail(Errc::switch_time_unreachable,
             "switch time " + to_fraction_string(xi_hat) + " lies before the trajectory start");

    for (size_t k = 0; k < traj.phases.size(); ++k) {
        const Phase& ph = traj.phases[k];
        bool last_phase = k + 1 == traj.phases.size();
        Rational phase_end(0);  // offset; meaningful unless last_phase
        if (!last_phase) phase_end = traj.phases[k + 1].start - ph.start;

        // Within a phase the map is the maximum of two linear functions; cut
        // at their crossing to obtain exact linear segments.
        Rational av = ph.labels[a.tail], dv = ph.direction[a.tail];
        Rational aw = ph.labels[a.head] - a.transit, dw = ph.direction[a.head];
        std::vector<Rational> cuts{Rational(0)};
        if (dv != dw) {
            Rational cross = (av - aw) / (dw - dv);
            if (cross > 0 && (last_phase || cross < phase_end)) cuts.push_back(cross);
        }
        std::sort(cuts.begin(), cuts.end());
        for (size_t j = 0; j < cuts.size(); ++j) {
            Rational t0 = cuts[j];
            std::optional<Rational> t1;  // nullopt on the unbounded terminal segment
            if (j + 1 < cuts.size())
                t1 = cuts[j + 1];
            else if (!last_phase)
                t1 = phase_end;
            Rational v0_a = av + dv * t0, v0_b = aw + dw * t0;
            Rational value0 = v0_a > v0_b ? v0_a : v0_b;
            Rational slope = (v0_a > v0_b || (v0_a == v0_b && dv >= dw)) ? dv : dw;
            if (value0 == xi_hat) return ph.start + t0;
            if (value0 < xi_hat && slope > 0) {
                Rational dt = (xi_hat - value0) / slope;
                if (!t1 || dt <= *t1 - t0) return ph.start + t0 + dt;
            }
        }
    }
    fail(Errc::switch_time_unreachable,
         "switch time " + to_fraction_string(xi_hat) + " is never attained");
}

// Prefix of the original trajectory up to theta_hat, then the evolution of
// the modified instance from l(theta_hat). Phases that continue with the
// same direction and flow across the switch are merged, so an unchanged
// capacity reproduces the original trajectory exactly.
inline Trajectory capacity_change_during_evolution(const Network& net, const Trajectory& traj,
                                                   const std::string& arc_id,
                                                   const Rational& xi_hat,
                                                   const Rational& new_capacity,
                                                   const ThinFlowSolveOptions& options = {}) {
    int arc = net.arc_index(arc_id);
    Rational theta_hat = switch_departure_time(net, traj, arc, xi_hat);
    Network modified = with_capacity(net, arc, new_capacity);
    Trajectory tail = integrate(modified, evaluate(traj, theta_hat), StopPolicy::steady(), options);

    Trajectory out;
    for (const Phase& ph : traj.phases)
        if (ph.start < theta_hat) out.phases.push_back(ph);
    size_t first_tail = 0;
    if (!out.phases.empty() && !tail.phases.empty() &&
        tail.phases.front().direction == out.phases.back().direction &&
        tail.phases.front().thin_flow.flow == out.phases.back().thin_flow.flow) {
        first_tail = 1;  // no kink at the switch; continue the running phase
    }
    for (size_t k = first_tail; k < tail.phases.size(); ++k) {
        Phase ph = tail.phases[k];
        ph.start += theta_hat;
        out.phases.push_back(std::move(ph));
    }
    out.steady = tail.steady;
    out.reason = tail.reason;
    return out;
}

}  // namespace nashflow
