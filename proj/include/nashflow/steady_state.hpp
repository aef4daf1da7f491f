#pragma once

// Steady-state machinery: the steady direction lambda and queue rates sigma,
// the arc classification with scaled capacities/costs, the primal-dual pair
// (P)/(D) characterizing steady states, the potential bounded by OPT and
// nondecreasing along equilibria, and the quantitative convergence bounds.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nashflow/integrator.hpp"

namespace nashflow {

enum class ArcSign : char { up, down, level, free_arc };

inline const char* arc_sign_name(ArcSign s) {
    switch (s) {
        case ArcSign::up: return ">";
        case ArcSign::down: return "<";
        case ArcSign::level: return "=";
        case ArcSign::free_arc: return "inf";
    }
    return "?";
}

struct ArcClassification {
    std::vector<ArcSign> sign;              // per augmented arc
    std::vector<Rational> scaled_capacity;  // nu_hat = nu * lambda_head
    std::vector<Rational> scaled_cost;      // tau_hat = tau / lambda_head
};

struct SteadyCert {
    Network augmented;  // instance plus the free return arc ts
    int original_arc_count = 0;
    std::vector<Rational> lambda;  // steady direction, one per node
    std::vector<Rational> sigma;   // steady queue rates, per augmented arc
    ThinFlow steady_flow;          // circulation witness (y, lambda) on the augmented network
    ArcClassification cls;
    std::vector<Rational> primal;  // f, per augmented arc
    std::vector<Rational> dual_d;  // per node
    std::vector<Rational> dual_p;  // per augmented arc
    Rational opt;

    bool has_bounds = false;
    std::string eta_mode;
    Rational eta, delta, t1, t2, t;
};

enum class EtaMode { exhaustive, observed };

// ---------------------------------------------------------------------------
// lambda, sigma and the classification.

inline SteadyCert steady_direction(const Network& net, const ThinFlowSolveOptions& options = {}) {
    SteadyDirectionResult sd = solve_steady_direction(net, options);
    SteadyCert cert;
    cert.augmented = std::move(sd.augmented);
    cert.original_arc_count = net.arc_count();
    cert.lambda = std::move(sd.lambda);
    cert.steady_flow = std::move(sd.circulation);
    for (const Rational& lv : cert.lambda)
        if (lv <= 0) fail(Errc::no_solution, "internal: steady direction has a nonpositive entry");

    const Network& aug = cert.augmented;
    cert.sigma.reserve(aug.arc_count());
    cert.cls.sign.reserve(aug.arc_count());
    cert.cls.scaled_capacity.reserve(aug.arc_count());
    cert.cls.scaled_cost.reserve(aug.arc_count());
    for (const Arc& a : aug.arcs()) {
        Rational gap = cert.lambda[a.head] - cert.lambda[a.tail];
        if (a.free_arc)
            cert.sigma.push_back(gap);
        else
            cert.sigma.push_back(gap > 0 ? gap : Rational(0));
        if (a.free_arc)
            cert.cls.sign.push_back(ArcSign::free_arc);
        else if (gap > 0)
            cert.cls.sign.push_back(ArcSign::up);
        else if (gap < 0)
            cert.cls.sign.push_back(ArcSign::down);
        else
            cert.cls.sign.push_back(ArcSign::level);
        cert.cls.scaled_capacity.push_back(a.capacity * cert.lambda[a.head]);
        cert.cls.scaled_cost.push_back(a.transit / cert.lambda[a.head]);
    }
    return cert;
}

// ---------------------------------------------------------------------------
// (P): min sum tau_hat f over circulations with f = nu_hat on free and up
// arcs, f = 0 on down arcs, 0 <= f <= nu_hat on level arcs. Solved as a
// min-cost flow over the level arcs against the imbalances the fixed arcs
// induce; the node potentials double as the dual solution.

inline void solve_primal(const Network& net, SteadyCert& cert) {
    (void)net;
    const Network& aug = cert.augmented;
    cert.primal.assign(aug.arc_count(), Rational(0));
    std::vector<Rational> divergence(aug.node_count(), Rational(0));
    std::vector<CapCostArc> level_arcs;
    std::vector<int> level_index;
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        switch (cert.cls.sign[i]) {
            case ArcSign::free_arc:
            case ArcSign::up:
                cert.primal[i] = cert.cls.scaled_capacity[i];
                divergence[a.tail] -= cert.primal[i];
                divergence[a.head] += cert.primal[i];
                break;
            case ArcSign::down:
                break;
            case ArcSign::level:
                level_arcs.push_back({a.tail, a.head, cert.cls.scaled_capacity[i],
                                      cert.cls.scaled_cost[i]});
                level_index.push_back(i);
                break;
        }
    }
    MinCostFlowResult mcf = min_cost_flow(aug.node_count(), level_arcs, divergence);
    if (!mcf.feasible)
        fail(Errc::primal_infeasible, "internal: steady-state primal has no feasible circulation");
    for (size_t j = 0; j < level_index.size(); ++j) cert.primal[level_index[j]] = mcf.flow[j];
    cert.dual_d = std::move(mcf.potential);
}

// (D): recover the pointwise-minimal p from the potentials and check strong
// duality exactly.
inline void solve_dual(const Network& net, SteadyCert& cert) {
    (void)net;
    const Network& aug = cert.augmented;
    if (cert.dual_d.empty()) fail(Errc::invalid_input, "solve_primal must run first");
    cert.dual_p.assign(aug.arc_count(), Rational(0));
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        Rational reduced = cert.dual_d[a.head] - cert.dual_d[a.tail] - cert.cls.scaled_cost[i];
        switch (cert.cls.sign[i]) {
            case ArcSign::free_arc:
            case ArcSign::up:
                cert.dual_p[i] = reduced;
                break;
            case ArcSign::level:
                cert.dual_p[i] = reduced > 0 ? reduced : Rational(0);
                break;
            case ArcSign::down:
                cert.dual_p[i] = 0;
                break;
        }
    }
    // Feasibility of (D).
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        if (cert.cls.sign[i] != ArcSign::down) {
            if (cert.dual_d[a.head] - cert.dual_d[a.tail] - cert.dual_p[i] >
                cert.cls.scaled_cost[i])
                fail(Errc::duality_gap, "internal: dual constraint violated on arc '" + a.id + "'");
        }
        if ((cert.cls.sign[i] == ArcSign::level || cert.cls.sign[i] == ArcSign::down) &&
            cert.dual_p[i] < 0)
            fail(Errc::duality_gap, "internal: dual sign violated on arc '" + a.id + "'");
    }
    Rational primal_cost(0), dual_objective(0);
    for (int i = 0; i < aug.arc_count(); ++i) {
        primal_cost += cert.cls.scaled_cost[i] * cert.primal[i];
        dual_objective -= cert.cls.scaled_capacity[i] * cert.dual_p[i];
    }
    if (primal_cost != dual_objective)
        fail(Errc::duality_gap, "internal: strong duality fails exactly (primal " +
                                    to_fraction_string(primal_cost) + ", dual " +
                                    to_fraction_string(dual_objective) + ")");
    cert.opt = primal_cost;
}

inline SteadyCert make_steady_certificate(const Network& net,
                                          const ThinFlowSolveOptions& options = {}) {
    SteadyCert cert = steady_direction(net, options);
    solve_primal(net, cert);
    solve_dual(net, cert);
    return cert;
}

// ---------------------------------------------------------------------------
// The potential.

inline Rational potential(const Network& net, const SteadyCert& cert, const Labeling& labels) {
    (void)net;
    const Network& aug = cert.augmented;
    Configuration cfg = configuration_of(aug, labels);
    QueueSlack qs = queue_and_slack(aug, labels);
    Rational phi(0);
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        ArcSign sign = cert.cls.sign[i];
        if (sign == ArcSign::free_arc || sign == ArcSign::up) {
            phi -= cert.cls.scaled_capacity[i] *
                   (labels[a.head] / cert.lambda[a.head] - labels[a.tail] / cert.lambda[a.tail] -
                    cert.cls.scaled_cost[i]);
            if (sign == ArcSign::up && !cfg.active[i]) phi -= a.capacity * qs.slack[i];
        } else if (cfg.resetting[i]) {
            phi -= a.capacity * qs.queue[i];
        }
    }
    return phi;
}

// Slope of the potential for a phase with the given interior configuration
// and direction; the potential is linear on each phase.
inline Rational potential_slope(const SteadyCert& cert, const Configuration& interior_aug,
                                const std::vector<Rational>& rate) {
    const Network& aug = cert.augmented;
    Rational slope(0);
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        ArcSign sign = cert.cls.sign[i];
        Rational drate = rate[a.head] - rate[a.tail];
        if (sign == ArcSign::free_arc || sign == ArcSign::up) {
            slope -= cert.cls.scaled_capacity[i] *
                     (rate[a.head] / cert.lambda[a.head] - rate[a.tail] / cert.lambda[a.tail]);
            if (sign == ArcSign::up && !interior_aug.active[i]) slope -= a.capacity * (-drate);
        } else if (interior_aug.resetting[i]) {
            slope -= a.capacity * drate;
        }
    }
    return slope;
}

// Per-phase potential slopes of a trajectory, computed from exact potential
// differences (and the terminal direction for the last phase).
inline std::vector<Rational> potential_slopes(const Network& net, const SteadyCert& cert,
                                              const Trajectory& traj) {
    std::vector<Rational> slopes;
    slopes.reserve(traj.phases.size());
    for (size_t k = 0; k < traj.phases.size(); ++k) {
        const Phase& ph = traj.phases[k];
        if (k + 1 < traj.phases.size()) {
            const Phase& nx = traj.phases[k + 1];
            slopes.push_back((potential(net, cert, nx.labels) - potential(net, cert, ph.labels)) /
                             (nx.start - ph.start));
        } else {
            Labeling ahead = ph.labels;
            for (size_t v = 0; v < ahead.size(); ++v) ahead[v] += ph.direction[v];
            slopes.push_back(potential(net, cert, ahead) - potential(net, cert, ph.labels));
        }
    }
    return slopes;
}

// ---------------------------------------------------------------------------
// The dual solution read off a labeling; its objective equals the potential
// and never exceeds OPT.

struct DualFromLabeling {
    std::vector<Rational> d;
    std::vector<Rational> p;
    Rational objective;
};

inline DualFromLabeling dual_from_labeling(const Network& net, const SteadyCert& cert,
                                           const Labeling& labels) {
    const Network& aug = cert.augmented;
    Configuration cfg = configuration_of(aug, labels);
    QueueSlack qs = queue_and_slack(aug, labels);
    DualFromLabeling out;
    out.d.reserve(aug.node_count());
    for (int v = 0; v < aug.node_count(); ++v) out.d.push_back(labels[v] / cert.lambda[v]);
    out.p.assign(aug.arc_count(), Rational(0));
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        Rational reduced =
            out.d[a.head] - out.d[a.tail] - cert.cls.scaled_cost[i];
        switch (cert.cls.sign[i]) {
            case ArcSign::free_arc:
                out.p[i] = reduced;
                break;
            case ArcSign::up:
                out.p[i] = cfg.active[i] ? reduced
                                         : Rational(reduced + qs.slack[i] / cert.lambda[a.head]);
                break;
            case ArcSign::level:
            case ArcSign::down:
                out.p[i] = cfg.resetting[i] ? Rational(qs.queue[i] / cert.lambda[a.head])
                                            : Rational(0);
                break;
        }
    }
    // Exact feasibility for (D).
    out.objective = 0;
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        if (cert.cls.sign[i] != ArcSign::down &&
            out.d[a.head] - out.d[a.tail] - out.p[i] > cert.cls.scaled_cost[i])
            fail(Errc::feasibility_violation,
                 "internal: labeling dual violates the cost constraint on arc '" + a.id + "'");
        if ((cert.cls.sign[i] == ArcSign::level || cert.cls.sign[i] == ArcSign::down) &&
            out.p[i] < 0)
            fail(Errc::feasibility_violation,
                 "internal: labeling dual violates p >= 0 on arc '" + a.id + "'");
        out.objective -= cert.cls.scaled_capacity[i] * out.p[i];
    }
    if (out.objective != potential(net, cert, labels))
        fail(Errc::feasibility_violation,
             "internal: labeling dual objective differs from the potential");
    return out;
}

// ---------------------------------------------------------------------------
// Steady-direction characterizations (three equivalent tests) and the
// primal-dual optimality test; the pair must agree.

struct SteadyVerdict {
    bool moving = false;  // conjunction; all three sub-verdicts agree
    bool by_queue_rates = false;
    bool by_cut = false;
    bool by_membership = false;
};

namespace detail {

// Augmented view of a thin flow on the original network: the return arc
// carries the full inflow.
inline std::vector<Rational> augment_flow(const SteadyCert& cert, const Network& net,
                                          const ThinFlow& tf) {
    std::vector<Rational> x(tf.flow);
    x.resize(cert.augmented.arc_count(), Rational(0));
    for (int i = net.arc_count(); i < cert.augmented.arc_count(); ++i)
        x[i] = cert.augmented.arc(i).free_arc && cert.augmented.arc(i).id == "ts"
                   ? net.inflow()
                   : Rational(0);
    return x;
}

}  // namespace detail

inline SteadyVerdict is_steady_direction(const Network& net, const SteadyCert& cert,
                                         const Labeling& labels, const ThinFlow& tf) {
    const Network& aug = cert.augmented;
    std::vector<Rational> x = detail::augment_flow(cert, net, tf);
    Configuration cfg = configuration_of(aug, labels);
    std::vector<char> in_s(aug.node_count(), 0);
    for (int v = 0; v < aug.node_count(); ++v) in_s[v] = tf.label_rate[v] == cert.lambda[v];

    // Right-limit resetting set: an exactly tight arc whose queue is about to
    // grow counts as resetting, matching the right-continuous phase
    // convention (at interior points this coincides with the plain set).
    std::vector<char> resetting_fwd(aug.arc_count(), 0);
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        Rational drate = tf.label_rate[a.head] - tf.label_rate[a.tail];
        resetting_fwd[i] = cfg.resetting[i] || (cfg.active[i] && drate > 0);
    }

    SteadyVerdict verdict;

    verdict.by_queue_rates = true;
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        Rational drate = tf.label_rate[a.head] - tf.label_rate[a.tail];
        Rational qrate(0);
        if (cfg.resetting[i])
            qrate = drate;
        else if (cfg.active[i] && drate > 0)
            qrate = drate;
        if (qrate != cert.sigma[i]) verdict.by_queue_rates = false;
    }

    verdict.by_cut = true;
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        if (in_s[a.tail] && !in_s[a.head] && x[i] != 0) verdict.by_cut = false;
    }

    verdict.by_membership = true;
    for (int i = 0; i < aug.arc_count(); ++i) {
        const Arc& a = aug.arc(i);
        bool inside = in_s[a.tail] && in_s[a.head];
        if (!inside && x[i] != 0) verdict.by_membership = false;
        if (cert.cls.sign[i] == ArcSign::up && !resetting_fwd[i]) verdict.by_membership = false;
        if (resetting_fwd[i] && !inside) verdict.by_membership = false;
        if (cert.cls.sign[i] == ArcSign::down && resetting_fwd[i]) verdict.by_membership = false;
    }

    if (verdict.by_queue_rates != verdict.by_cut || verdict.by_cut != verdict.by_membership)
        fail(Errc::equivalence_broken,
             "internal: the three steady-direction characterizations disagree (" +
                 std::to_string(verdict.by_queue_rates) + "," + std::to_string(verdict.by_cut) +
                 "," + std::to_string(verdict.by_membership) + ")");
    verdict.moving = verdict.by_queue_rates;
    return verdict;
}

// Primal feasibility of x' plus the two complementary slackness conditions
// against d = l / lambda; agrees with is_steady_direction by the optimality
// theorem.
inline bool check_optimality(const Network& net, const SteadyCert& cert, const Labeling& labels,
                             const ThinFlow& tf) {
    const Network& aug = cert.augmented;
    std::vector<Rational> x = detail::augment_flow(cert, net, tf);

    bool ok = true;
    for (int i = 0; i < aug.arc_count() && ok; ++i) {
        switch (cert.cls.sign[i]) {
            case ArcSign::free_arc:
            case ArcSign::up:
                if (x[i] != cert.cls.scaled_capacity[i]) ok = false;
                break;
            case ArcSign::down:
                if (x[i] != 0) ok = false;
                break;
            case ArcSign::level:
                if (x[i] < 0 || x[i] > cert.cls.scaled_capacity[i]) ok = false;
                break;
        }
    }
    // Complementary slackness with the pointwise-minimal p: on free and up
    // arcs p is unrestricted in sign, so the cost constraint is tight by
    // choice and only the level arcs carry conditions.
    for (int i = 0; i < aug.arc_count() && ok; ++i) {
        const Arc& a = aug.arc(i);
        if (cert.cls.sign[i] != ArcSign::level) continue;
        Rational dtilde =
            labels[a.head] / cert.lambda[a.head] - labels[a.tail] / cert.lambda[a.tail];
        if (x[i] > 0 && dtilde < cert.cls.scaled_cost[i]) ok = false;
        if (dtilde > cert.cls.scaled_cost[i] && x[i] != cert.cls.scaled_capacity[i]) ok = false;
    }

    bool steady = is_steady_direction(net, cert, labels, tf).moving;
    if (ok != steady)
        fail(Errc::theorem_violated,
             "internal: primal-dual optimality and the steady-direction test disagree");
    return ok;
}

// ---------------------------------------------------------------------------
// Shortest slack labels from s in (V, E minus down arcs); nullopt marks nodes
// unreachable in the restricted graph.

inline std::vector<std::optional<Rational>> slack_labels(const Network& net,
                                                         const SteadyCert& cert,
                                                         const Labeling& labels) {
    (void)net;
    const Network& aug = cert.augmented;
    QueueSlack qs = queue_and_slack(aug, labels);
    std::vector<CostArc> arcs;
    for (int i = 0; i < aug.arc_count(); ++i) {
        if (cert.cls.sign[i] == ArcSign::down) continue;
        arcs.push_back({aug.arc(i).tail, aug.arc(i).head, qs.slack[i]});
    }
    return shortest_paths(aug.node_count(), arcs, aug.source());
}

// ---------------------------------------------------------------------------
// Quantitative convergence bounds.

struct ConvergenceBounds {
    std::string mode;
    Rational eta;  // positive lower bound on the potential slope off steady state
    Rational delta;
    Rational t1, t2, t;
};

namespace detail {

// Enumerates every valid configuration (E', E*) with the free arcs contained
// in E*, invoking fn(cfg). Arcs are ternary: inactive / active / resetting.
template <typename Fn>
void for_each_valid_configuration(const Network& net, Fn&& fn) {
    std::vector<int> nonfree;
    for (int i = 0; i < net.arc_count(); ++i)
        if (!net.arc(i).free_arc) nonfree.push_back(i);
    Configuration cfg;
    cfg.active.assign(net.arc_count(), 1);
    cfg.resetting.assign(net.arc_count(), 0);
    for (int i = 0; i < net.arc_count(); ++i) cfg.resetting[i] = net.arc(i).free_arc;

    long long total = 1;
    for (size_t j = 0; j < nonfree.size(); ++j) total *= 3;
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        for (int idx : nonfree) {
            int state = static_cast<int>(c % 3);
            c /= 3;
            cfg.active[idx] = state >= 1;
            cfg.resetting[idx] = state == 2;
        }
        if (!is_valid_configuration(net, cfg)) continue;
        fn(cfg);
    }
}

}  // namespace detail

inline ConvergenceBounds convergence_bounds(const Network& net, const SteadyCert& cert,
                                            const Labeling& start, EtaMode mode,
                                            const Trajectory* observed = nullptr,
                                            int exhaustive_arc_budget = 12,
                                            const ThinFlowSolveOptions& options = {}) {
    ConvergenceBounds out;
    Rational phi0 = potential(net, cert, start);
    if (phi0 > cert.opt)
        fail(Errc::no_solution, "internal: potential exceeds OPT at the start labeling");

    // delta = max 1/|lambda_v - lambda_w| over distinct values, 0 if constant.
    out.delta = 0;
    for (int v = 0; v < cert.augmented.node_count(); ++v)
        for (int w = v + 1; w < cert.augmented.node_count(); ++w) {
            Rational gap = rational_abs(cert.lambda[v] - cert.lambda[w]);
            if (gap > 0) {
                Rational inv = 1 / gap;
                if (inv > out.delta) out.delta = inv;
            }
        }

    std::optional<Rational> eta;
    if (mode == EtaMode::exhaustive) {
        out.mode = "exhaustive";
        if (net.arc_count() > exhaustive_arc_budget)
            fail(Errc::budget_exceeded,
                 "exhaustive eta enumeration limited to " +
                     std::to_string(exhaustive_arc_budget) + " arcs");
        // Neighbouring configurations mostly share their thin flow direction;
        // recently seen directions are tried first (an exact shortcut), and
        // the partition search only runs on misses.
        std::vector<std::vector<Rational>> direction_cache;
        detail::for_each_valid_configuration(net, [&](const Configuration& cfg) {
            ThinFlow tf;
            bool solved = false;
            for (auto it = direction_cache.rbegin(); it != direction_cache.rend(); ++it) {
                if (auto hit = thin_flow_from_direction(net, cfg, *it)) {
                    tf = std::move(*hit);
                    solved = true;
                    break;
                }
            }
            if (!solved) {
                tf = solve_thin_flow(net, cfg, options);
                direction_cache.push_back(tf.label_rate);
                if (direction_cache.size() > 24) direction_cache.erase(direction_cache.begin());
            }
            Configuration aug_cfg;
            aug_cfg.active.assign(cert.augmented.arc_count(), 1);
            aug_cfg.resetting.assign(cert.augmented.arc_count(), 1);
            for (int i = 0; i < net.arc_count(); ++i) {
                aug_cfg.active[i] = cfg.active[i];
                aug_cfg.resetting[i] = cfg.resetting[i];
            }
            Rational slope = potential_slope(cert, aug_cfg, tf.label_rate);
            if (slope > 0 && (!eta || slope < *eta)) eta = slope;
        });
    } else {
        out.mode = "observed";
        if (!observed) fail(Errc::invalid_input, "observed eta requires a trajectory");
        auto slopes = potential_slopes(net, cert, *observed);
        for (const Rational& s : slopes)
            if (s > 0 && (!eta || s < *eta)) eta = s;
    }

    if (phi0 == cert.opt) {
        out.t1 = 0;
        out.eta = eta ? *eta : Rational(0);
    } else {
        if (!eta)
            fail(Errc::no_solution,
                 "internal: no positive potential slope found although OPT is not reached");
        out.eta = *eta;
        out.t1 = (cert.opt - phi0) / out.eta;
    }

    // T2 = delta * |E| * (T1 * kappa + max slack at the start over non-down arcs).
    Rational kappa = lipschitz_constant(net);
    if (kappa < 1) kappa = 1;
    QueueSlack qs = queue_and_slack(cert.augmented, start);
    Rational max_slack(0);
    for (int i = 0; i < cert.augmented.arc_count(); ++i) {
        if (cert.cls.sign[i] == ArcSign::down) continue;
        if (qs.slack[i] > max_slack) max_slack = qs.slack[i];
    }
    out.t2 = out.delta * cert.augmented.arc_count() * (out.t1 * kappa + max_slack);
    out.t = out.t1 + out.t2;
    return out;
}

inline void attach_bounds(SteadyCert& cert, const ConvergenceBounds& bounds) {
    cert.has_bounds = true;
    cert.eta_mode = bounds.mode;
    cert.eta = bounds.eta;
    cert.delta = bounds.delta;
    cert.t1 = bounds.t1;
    cert.t2 = bounds.t2;
    cert.t = bounds.t;
}

}  // namespace nashflow
