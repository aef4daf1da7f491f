#pragma once

// Thin flows with resetting for a fixed configuration: the nonlinear
// conditions TF-1..TF-4, an exact solver based on guessing the ordering
// between label derivatives (one linear system per ordered partition of the
// nodes), a verifier, and a brute-force enumeration oracle.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nashflow/network.hpp"

namespace nashflow {

struct ThinFlow {
    std::vector<Rational> flow;        // x' per arc; 0 on inactive arcs
    std::vector<Rational> label_rate;  // l' per node

    bool operator==(const ThinFlow&) const = default;
};

struct OrderedPartition {
    std::vector<int> part;  // node -> 0-based part index; parts 0..part_count-1 all nonempty
    int part_count = 0;

    bool operator==(const OrderedPartition&) const = default;
};

struct TfViolation {
    std::string condition;  // "TF-1".."TF-4"
    std::string detail;
};

struct TfVerifyResult {
    bool ok = true;
    std::vector<TfViolation> violations;

    explicit operator bool() const { return ok; }
};

struct ThinFlowSolveOptions {
    long long partition_budget = 20'000'000;  // systems examined before SearchExhausted
    int enumeration_node_budget = 9;          // for enumerate_valid_partitions
};

// Conservation targets: an s-t flow of value u0, or a circulation once the
// return arc is present.
inline std::vector<Rational> flow_divergence_target(const Network& net) {
    std::vector<Rational> b(net.node_count(), Rational(0));
    if (!net.circulation_form()) {
        b[net.source()] += net.inflow();
        b[net.sink()] -= net.inflow();
    }
    return b;
}

inline Rational thin_flow_rho(const Arc& arc, bool resetting, const Rational& tail_rate,
                              const Rational& flow) {
    Rational by_capacity = flow / arc.capacity;
    if (resetting) return by_capacity;
    return by_capacity > tail_rate ? by_capacity : tail_rate;
}

// ---------------------------------------------------------------------------
// Verification of TF-1..TF-4 (exact; produces witnesses).

inline TfVerifyResult verify_thin_flow(const Network& net, const Configuration& cfg,
                                       const ThinFlow& cand) {
    TfVerifyResult res;
    auto violate = [&](const char* cond, std::string detail) {
        res.ok = false;
        res.violations.push_back({cond, std::move(detail)});
    };
    if (static_cast<int>(cand.flow.size()) != net.arc_count() ||
        static_cast<int>(cand.label_rate.size()) != net.node_count()) {
        violate("TF-1", "candidate has wrong dimensions");
        return res;
    }

    std::vector<Rational> divergence(net.node_count(), Rational(0));
    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        if (cand.flow[i] < 0)
            violate("TF-1", "negative flow on arc '" + a.id + "'");
        if (!cfg.active[i] && cand.flow[i] != 0)
            violate("TF-1", "flow on inactive arc '" + a.id + "'");
        divergence[a.tail] += cand.flow[i];
        divergence[a.head] -= cand.flow[i];
    }
    auto target = flow_divergence_target(net);
    for (int v = 0; v < net.node_count(); ++v) {
        if (divergence[v] != target[v])
            violate("TF-1", "conservation fails at node '" + net.node_name(v) + "': divergence " +
                                to_fraction_string(divergence[v]) + " != " +
                                to_fraction_string(target[v]));
    }

    if (cand.label_rate[net.source()] != 1)
        violate("TF-2", "l'_s = " + to_fraction_string(cand.label_rate[net.source()]) + " != 1");

    for (int w = 0; w < net.node_count(); ++w) {
        if (w == net.source()) continue;
        std::optional<Rational> min_rho;
        int witness = -1;
        for (int i = 0; i < net.arc_count(); ++i) {
            const Arc& a = net.arc(i);
            if (a.head != w || !cfg.active[i]) continue;
            Rational r = thin_flow_rho(a, cfg.resetting[i], cand.label_rate[a.tail], cand.flow[i]);
            if (!min_rho || r < *min_rho) {
                min_rho = r;
                witness = i;
            }
        }
        if (!min_rho) {
            violate("TF-3", "node '" + net.node_name(w) + "' has no incoming active arc");
            continue;
        }
        if (cand.label_rate[w] != *min_rho)
            violate("TF-3", "at node '" + net.node_name(w) + "': l' = " +
                                to_fraction_string(cand.label_rate[w]) + " but min rho = " +
                                to_fraction_string(*min_rho) + " (via arc '" +
                                net.arc(witness).id + "')");
    }

    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        if (!cfg.active[i] || cand.flow[i] <= 0) continue;
        Rational r = thin_flow_rho(a, cfg.resetting[i], cand.label_rate[a.tail], cand.flow[i]);
        if (cand.label_rate[a.head] != r)
            violate("TF-4", "flow-carrying arc '" + a.id + "': rho = " + to_fraction_string(r) +
                                " != l'_" + net.node_name(a.head) + " = " +
                                to_fraction_string(cand.label_rate[a.head]));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Flow completion: given the label derivatives, the flow part is pinned on
// resetting arcs and on strict up/down arcs; the remaining (level, active,
// non-resetting) arcs form a bounded flow problem, resolved to the
// lexicographically least witness by arc id.

namespace detail {

enum class ArcRole : char { inactive, forced, zero, free_flow };

inline std::optional<std::vector<Rational>> complete_flow(const Network& net,
                                                          const std::vector<ArcRole>& role,
                                                          const std::vector<Rational>& label_rate) {
    std::vector<Rational> x(net.arc_count(), Rational(0));
    std::vector<Rational> divergence = flow_divergence_target(net);
    std::vector<FlowArc> free_arcs;
    std::vector<int> free_index;
    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        switch (role[i]) {
            case ArcRole::inactive:
            case ArcRole::zero:
                break;
            case ArcRole::forced: {
                Rational value = a.capacity * label_rate[a.head];
                if (value < 0) return std::nullopt;
                x[i] = value;
                divergence[a.tail] -= value;
                divergence[a.head] += value;
                break;
            }
            case ArcRole::free_flow: {
                Rational cap = a.capacity * label_rate[a.head];
                if (cap < 0) return std::nullopt;
                free_arcs.push_back({a.tail, a.head, cap});
                free_index.push_back(i);
                break;
            }
        }
    }
    std::vector<int> order(free_arcs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return net.arc(free_index[a]).id < net.arc(free_index[b]).id; });
    auto completion = lex_min_flow(net.node_count(), free_arcs, divergence, order);
    if (!completion) return std::nullopt;
    for (size_t i = 0; i < free_index.size(); ++i) x[free_index[i]] = (*completion)[i];
    return x;
}

// Role assignment induced by known label derivatives (the canonical,
// partition-independent classification).
inline std::vector<ArcRole> roles_for_direction(const Network& net, const Configuration& cfg,
                                                const std::vector<Rational>& label_rate) {
    std::vector<ArcRole> role(net.arc_count(), ArcRole::inactive);
    for (int i = 0; i < net.arc_count(); ++i) {
        if (!cfg.active[i]) continue;
        const Arc& a = net.arc(i);
        if (cfg.resetting[i] || label_rate[a.head] > label_rate[a.tail])
            role[i] = ArcRole::forced;
        else if (label_rate[a.head] < label_rate[a.tail])
            role[i] = ArcRole::zero;
        else
            role[i] = ArcRole::free_flow;
    }
    return role;
}

// Dense exact Gaussian elimination. Rows are (coefficients..., rhs).
// Returns 0 with the unique solution, 1 if inconsistent, 2 if underdetermined.
inline int solve_linear_system(std::vector<std::vector<Rational>> rows, int unknowns,
                               std::vector<Rational>& out) {
    int m = static_cast<int>(rows.size());
    std::vector<int> pivot_row(unknowns, -1);
    int rank = 0;
    for (int col = 0; col < unknowns && rank < m; ++col) {
        int pr = -1;
        for (int r = rank; r < m; ++r)
            if (rows[r][col] != 0) {
                pr = r;
                break;
            }
        if (pr == -1) continue;
        std::swap(rows[rank], rows[pr]);
        Rational inv = rows[rank][col];
        for (int c = col; c <= unknowns; ++c) rows[rank][c] /= inv;
        for (int r = 0; r < m; ++r) {
            if (r == rank || rows[r][col] == 0) continue;
            Rational factor = rows[r][col];
            for (int c = col; c <= unknowns; ++c) rows[r][c] -= factor * rows[rank][c];
        }
        pivot_row[col] = rank;
        ++rank;
    }
    for (int r = 0; r < m; ++r) {
        bool zero_coeffs = true;
        for (int c = 0; c < unknowns; ++c)
            if (rows[r][c] != 0) {
                zero_coeffs = false;
                break;
            }
        if (zero_coeffs && rows[r][unknowns] != 0) return 1;
    }
    for (int col = 0; col < unknowns; ++col)
        if (pivot_row[col] == -1) return 2;
    out.assign(unknowns, Rational(0));
    for (int col = 0; col < unknowns; ++col) out[col] = rows[pivot_row[col]][unknowns];
    return 0;
}

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); }
    void join(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// The linear system of one ordered partition. Within a part the label
// derivatives agree; arcs that are resetting or climb to a later part carry
// capacity * l'_head; non-resetting arcs descending to an earlier part carry
// nothing; conservation closes the system. A solution is returned only if it
// exists, is unique in the label derivatives, respects the flow bounds, and
// passes full verification.

inline std::optional<ThinFlow> linear_system_for_partition(const Network& net,
                                                           const Configuration& cfg,
                                                           const OrderedPartition& partition) {
    const int n = net.node_count();
    const int k = partition.part_count;
    if (static_cast<int>(partition.part.size()) != n)
        fail(Errc::invalid_input, "partition has wrong size");

    std::vector<detail::ArcRole> role(net.arc_count(), detail::ArcRole::inactive);
    for (int i = 0; i < net.arc_count(); ++i) {
        if (!cfg.active[i]) continue;
        const Arc& a = net.arc(i);
        int pt = partition.part[a.tail], ph = partition.part[a.head];
        if (cfg.resetting[i] || ph > pt)
            role[i] = detail::ArcRole::forced;
        else if (ph < pt)
            role[i] = detail::ArcRole::zero;
        else
            role[i] = detail::ArcRole::free_flow;
    }

    // Components of the free-flow subgraph: the flow on free arcs can realize
    // any divergence summing to zero per component, so exactly the
    // per-component aggregated conservation constrains the part values.
    detail::DisjointSets dsu(n);
    for (int i = 0; i < net.arc_count(); ++i)
        if (role[i] == detail::ArcRole::free_flow) dsu.join(net.arc(i).tail, net.arc(i).head);

    auto b = flow_divergence_target(net);
    std::vector<std::vector<Rational>> rows;
    std::vector<int> row_of_component(n, -1);
    for (int v = 0; v < n; ++v) {
        int root = dsu.find(v);
        if (row_of_component[root] == -1) {
            row_of_component[root] = static_cast<int>(rows.size());
            rows.emplace_back(k + 1, Rational(0));
        }
        rows[row_of_component[root]][k] += b[v];
    }
    for (int i = 0; i < net.arc_count(); ++i) {
        if (role[i] != detail::ArcRole::forced) continue;
        const Arc& a = net.arc(i);
        int ct = dsu.find(a.tail), ch = dsu.find(a.head);
        if (ct == ch) continue;
        // value nu * mu[part(head)] leaves ct and enters ch; rhs holds the
        // constant side, so move the coefficients left.
        rows[row_of_component[ct]][partition.part[a.head]] += a.capacity;
        rows[row_of_component[ch]][partition.part[a.head]] -= a.capacity;
    }
    {
        std::vector<Rational> source_row(k + 1, Rational(0));
        source_row[partition.part[net.source()]] = 1;
        source_row[k] = 1;
        rows.push_back(std::move(source_row));
    }

    std::vector<Rational> mu;
    if (detail::solve_linear_system(std::move(rows), k, mu) != 0) return std::nullopt;

    ThinFlow tf;
    tf.label_rate.resize(n);
    for (int v = 0; v < n; ++v) tf.label_rate[v] = mu[partition.part[v]];
    auto x = detail::complete_flow(net, role, tf.label_rate);
    if (!x) return std::nullopt;
    tf.flow = std::move(*x);
    if (!verify_thin_flow(net, cfg, tf)) return std::nullopt;
    return tf;
}

// ---------------------------------------------------------------------------
// Ordered-partition enumeration.

namespace detail {

// Visits every ordered partition of {0..n-1} as a surjection onto
// {0..k-1}, for k = 1..n. `min_part(node, partial)` supplies a lower bound on
// the admissible part of `node` (used for pruning; return 0 for none).
// Visitor returns true to stop the enumeration. Returns true if stopped.
template <typename Visitor, typename MinPart>
bool enumerate_partitions(int n, const std::vector<int>& node_order, Visitor&& visit,
                          MinPart&& min_part, long long budget, bool& budget_hit) {
    OrderedPartition partition;
    partition.part.assign(n, -1);
    std::vector<int> part_size;
    std::vector<int> next(n + 1, 0);
    long long visited = 0;

    for (int k = 1; k <= n; ++k) {
        partition.part_count = k;
        part_size.assign(k, 0);
        int distinct_used = 0;

        int pos = 0;
        next[0] = 0;
        while (pos >= 0) {
            if (pos == n) {
                if (distinct_used == k) {
                    if (++visited > budget) {
                        budget_hit = true;
                        return false;
                    }
                    if (visit(partition)) return true;
                }
                --pos;
                continue;
            }
            int node = node_order[pos];
            if (partition.part[node] >= 0) {  // undo the previous attempt at this depth
                if (--part_size[partition.part[node]] == 0) --distinct_used;
                partition.part[node] = -1;
            }
            int p = next[pos]++;
            if (p >= k) {
                --pos;
                continue;
            }
            // Surjectivity: the nodes after this one must be able to cover
            // the parts still unused after assigning `node` to p.
            int unused = k - distinct_used - (part_size[p] == 0 ? 1 : 0);
            if (unused > n - pos - 1) continue;
            if (p < min_part(node, partition)) continue;
            partition.part[node] = p;
            if (part_size[p]++ == 0) ++distinct_used;
            ++pos;
            next[pos] = 0;
        }
    }
    return false;
}

inline std::vector<int> partition_search_order(const Network& net, const Configuration& cfg) {
    // Topological order of the active arcs when acyclic (so that incoming
    // neighbours are assigned before their heads); natural order otherwise.
    int n = net.node_count();
    std::vector<int> indeg(n, 0);
    for (int i = 0; i < net.arc_count(); ++i)
        if (cfg.active[i]) ++indeg[net.arc(i).head];
    std::vector<int> order, stack;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) stack.push_back(v);
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        order.push_back(u);
        for (int i = 0; i < net.arc_count(); ++i)
            if (cfg.active[i] && net.arc(i).tail == u && --indeg[net.arc(i).head] == 0)
                stack.push_back(net.arc(i).head);
    }
    if (static_cast<int>(order.size()) != n) {
        order.resize(n);
        for (int v = 0; v < n; ++v) order[v] = v;
    }
    return order;
}

}  // namespace detail

// All ordered partitions whose linear system yields a verified thin flow.
inline std::vector<std::pair<OrderedPartition, ThinFlow>> enumerate_valid_partitions(
    const Network& net, const Configuration& cfg, int node_budget = 9) {
    if (net.node_count() > node_budget)
        fail(Errc::budget_exceeded, "instance exceeds the partition enumeration budget of " +
                                        std::to_string(node_budget) + " nodes");
    require(is_valid_configuration(net, cfg), Errc::invalid_input,
            "configuration is not valid");
    std::vector<int> natural(net.node_count());
    for (int v = 0; v < net.node_count(); ++v) natural[v] = v;

    std::vector<std::pair<OrderedPartition, ThinFlow>> results;
    bool budget_hit = false;
    detail::enumerate_partitions(
        net.node_count(), natural,
        [&](const OrderedPartition& partition) {
            auto tf = linear_system_for_partition(net, cfg, partition);
            if (tf) results.emplace_back(partition, std::move(*tf));
            return false;
        },
        [](int, const OrderedPartition&) { return 0; },
        std::numeric_limits<long long>::max(), budget_hit);

    for (const auto& [partition, tf] : results)
        if (tf.label_rate != results.front().second.label_rate)
            fail(Errc::no_solution,
                 "internal: partition enumeration produced distinct label derivatives");
    return results;
}

// ---------------------------------------------------------------------------
// Solver: enumerate ordered partitions (few parts first, with a structural
// prune) until one verifies; then rebuild the flow witness canonically from
// the unique label derivatives so the answer does not depend on which
// partition was found first.

inline ThinFlow solve_thin_flow(const Network& net, const Configuration& cfg,
                                const ThinFlowSolveOptions& options = {}) {
    require(is_valid_configuration(net, cfg), Errc::invalid_input, "configuration is not valid");
    const int n = net.node_count();

    // Structural prune: a node without incoming resetting arcs obeys
    // l'_w >= min over active in-neighbours of l'_v (TF-3 with rho >= l'_v),
    // so in the sorted-by-value canonical partition its part is at least the
    // smallest in-neighbour part. Applied only when all in-neighbours are
    // already assigned; the canonical partition always survives.
    std::vector<std::vector<int>> active_in(n);
    std::vector<char> has_resetting_in(n, 0);
    for (int i = 0; i < net.arc_count(); ++i) {
        if (!cfg.active[i]) continue;
        active_in[net.arc(i).head].push_back(net.arc(i).tail);
        if (cfg.resetting[i]) has_resetting_in[net.arc(i).head] = 1;
    }
    auto min_part = [&](int node, const OrderedPartition& partial) {
        if (node == net.source() || has_resetting_in[node]) return 0;
        int lo = std::numeric_limits<int>::max();
        for (int v : active_in[node]) {
            if (partial.part[v] < 0) return 0;  // not all assigned yet
            lo = std::min(lo, partial.part[v]);
        }
        return lo == std::numeric_limits<int>::max() ? 0 : lo;
    };

    std::optional<ThinFlow> found;
    bool budget_hit = false;
    detail::enumerate_partitions(
        n, detail::partition_search_order(net, cfg),
        [&](const OrderedPartition& partition) {
            auto tf = linear_system_for_partition(net, cfg, partition);
            if (tf) {
                found = std::move(*tf);
                return true;
            }
            return false;
        },
        min_part, options.partition_budget, budget_hit);
    if (budget_hit)
        fail(Errc::search_exhausted, "partition enumeration budget exhausted");
    if (!found)
        fail(Errc::no_solution,
             "internal: no ordered partition yields a thin flow for a valid configuration");

    // Canonical flow witness for the unique direction.
    auto role = detail::roles_for_direction(net, cfg, found->label_rate);
    auto x = detail::complete_flow(net, role, found->label_rate);
    if (!x) fail(Errc::no_solution, "internal: canonical flow completion failed");
    found->flow = std::move(*x);
    if (auto check = verify_thin_flow(net, cfg, *found); !check)
        fail(Errc::no_solution, "internal: canonical thin flow failed verification: " +
                                    check.violations.front().condition + " " +
                                    check.violations.front().detail);

    // Sign assertions: label derivatives are never negative, and strictly
    // positive whenever every node lies on an active s-t path.
    for (const auto& rate : found->label_rate)
        if (rate < 0) fail(Errc::no_solution, "internal: negative label derivative");
    auto reach_s = detail::reachable_from(n, net.arcs(), net.source(), cfg.active, true);
    auto reach_t = detail::reachable_from(n, net.arcs(), net.sink(), cfg.active, false);
    bool all_on_paths = true;
    for (int v = 0; v < n; ++v)
        if (!reach_s[v] || !reach_t[v]) all_on_paths = false;
    if (all_on_paths)
        for (const auto& rate : found->label_rate)
            if (rate <= 0) fail(Errc::no_solution, "internal: nonpositive label derivative");

    return *found;
}

// Checks whether a candidate direction is the thin flow direction of the
// configuration by completing the flow part and verifying TF-1..TF-4; far
// cheaper than a partition search when a good guess is available, and exact
// (only the unique true direction can verify).
inline std::optional<ThinFlow> thin_flow_from_direction(const Network& net,
                                                        const Configuration& cfg,
                                                        const std::vector<Rational>& direction) {
    if (static_cast<int>(direction.size()) != net.node_count()) return std::nullopt;
    auto role = detail::roles_for_direction(net, cfg, direction);
    auto x = detail::complete_flow(net, role, direction);
    if (!x) return std::nullopt;
    ThinFlow tf{std::move(*x), direction};
    if (!verify_thin_flow(net, cfg, tf)) return std::nullopt;
    return tf;
}

// The steady direction lambda: thin flow for the configuration (E, E_inf) on
// the ts-augmented network, in circulation form. Shared by the integrator's
// stopping rule and by the steady-state module.
struct SteadyDirectionResult {
    Network augmented;
    ThinFlow circulation;             // on augmented arcs
    std::vector<Rational> lambda;     // = circulation.label_rate
};

inline SteadyDirectionResult solve_steady_direction(const Network& net,
                                                    const ThinFlowSolveOptions& options = {}) {
    Configuration instance_cfg;
    instance_cfg.active.assign(net.arc_count(), 1);
    instance_cfg.resetting.assign(net.arc_count(), 0);
    for (int i = 0; i < net.arc_count(); ++i) instance_cfg.resetting[i] = net.arc(i).free_arc;
    require(is_valid_configuration(net, instance_cfg), Errc::invalid_input,
            "(E, E_inf) is not a valid configuration");

    SteadyDirectionResult out{augment_with_return_arc(net), {}, {}};
    Configuration cfg;
    cfg.active.assign(out.augmented.arc_count(), 1);
    cfg.resetting.assign(out.augmented.arc_count(), 0);
    for (int i = 0; i < out.augmented.arc_count(); ++i)
        cfg.resetting[i] = out.augmented.arc(i).free_arc;
    out.circulation = solve_thin_flow(out.augmented, cfg, options);
    out.lambda = out.circulation.label_rate;
    return out;
}

}  // namespace nashflow
