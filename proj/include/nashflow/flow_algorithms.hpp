#pragma once

// Exact combinatorial flow primitives on small index-based graphs. Everything
// runs on Rational capacities and costs; instances in this engine are
// desk-scale, so the simple O(V*E^2) / O(V^2) variants are the right tool.

#include <optional>
#include <queue>
#include <vector>

#include "nashflow/rational.hpp"

namespace nashflow {

struct FlowArc {
    int from = 0;
    int to = 0;
    Rational capacity;  // upper bound; lower bound is always 0
};

namespace detail {

// Residual network with paired forward/backward edges (rev = idx ^ 1).
class Residual {
public:
    Residual(int node_count, const std::vector<FlowArc>& arcs)
        : adj_(node_count), frozen_(arcs.size(), false) {
        edges_.reserve(arcs.size() * 2);
        for (const auto& a : arcs) {
            adj_[a.from].push_back(static_cast<int>(edges_.size()));
            edges_.push_back({a.to, a.capacity});
            adj_[a.to].push_back(static_cast<int>(edges_.size()));
            edges_.push_back({a.from, Rational(0)});
        }
    }

    // Flow currently on original arc i (= residual of the backward edge).
    Rational flow(int i) const { return edges_[2 * i + 1].residual; }

    void freeze(int i) { frozen_[i] = true; }

    // Directly remove `amount` of flow from arc i (callers restore
    // conservation through a matching augmentation elsewhere).
    void cancel_flow(int i, const Rational& amount) {
        edges_[2 * i].residual += amount;
        edges_[2 * i + 1].residual -= amount;
    }

    // BFS augmentation from s to t, bounded by `limit` in total (negative
    // limit means unbounded). Returns the value pushed.
    Rational augment_max(int s, int t, Rational limit) {
        Rational total(0);
        if (s == t) return total;
        while (limit < 0 || total < limit) {
            std::vector<int> pred(adj_.size(), -1);
            std::vector<char> seen(adj_.size(), 0);
            seen[s] = 1;
            std::queue<int> q;
            q.push(s);
            while (!q.empty() && !seen[t]) {
                int u = q.front();
                q.pop();
                for (int ei : adj_[u]) {
                    if (frozen_[static_cast<size_t>(ei) / 2]) continue;
                    const Edge& e = edges_[ei];
                    if (!seen[e.to] && e.residual > 0) {
                        seen[e.to] = 1;
                        pred[e.to] = ei;
                        q.push(e.to);
                    }
                }
            }
            if (!seen[t]) break;
            Rational push(-1);
            for (int v = t; v != s;) {
                const Edge& e = edges_[pred[v]];
                if (push < 0 || e.residual < push) push = e.residual;
                v = edges_[pred[v] ^ 1].to;
            }
            if (limit >= 0 && total + push > limit) push = limit - total;
            for (int v = t; v != s;) {
                edges_[pred[v]].residual -= push;
                edges_[pred[v] ^ 1].residual += push;
                v = edges_[pred[v] ^ 1].to;
            }
            total += push;
        }
        return total;
    }

private:
    struct Edge {
        int to;
        Rational residual;
    };
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
    std::vector<char> frozen_;
};

// Shared setup for divergence-prescribed problems: append super-source /
// super-sink arcs realizing the prescription. Returns the required total.
inline Rational append_divergence_arcs(int node_count, const std::vector<Rational>& divergence,
                                       std::vector<FlowArc>& arcs) {
    int super_s = node_count, super_t = node_count + 1;
    Rational need(0);
    for (int v = 0; v < node_count; ++v) {
        if (divergence[v] > 0) {
            arcs.push_back({super_s, v, divergence[v]});
            need += divergence[v];
        } else if (divergence[v] < 0) {
            arcs.push_back({v, super_t, -divergence[v]});
        }
    }
    return need;
}

}  // namespace detail

struct MaxFlowResult {
    Rational value;
    std::vector<Rational> flow;  // per input arc
};

inline MaxFlowResult max_flow(int node_count, const std::vector<FlowArc>& arcs, int s, int t) {
    detail::Residual g(node_count, arcs);
    MaxFlowResult r;
    r.value = g.augment_max(s, t, Rational(-1));
    r.flow.reserve(arcs.size());
    for (size_t i = 0; i < arcs.size(); ++i) r.flow.push_back(g.flow(static_cast<int>(i)));
    return r;
}

// Feasible flow with divergence prescription: find 0 <= g <= cap with
// sum(out) - sum(in) = divergence[v] at every node.
inline std::optional<std::vector<Rational>> feasible_flow(int node_count,
                                                          const std::vector<FlowArc>& arcs,
                                                          const std::vector<Rational>& divergence) {
    Rational total(0);
    for (const auto& d : divergence) total += d;
    if (total != 0) return std::nullopt;

    std::vector<FlowArc> ext = arcs;
    Rational need = detail::append_divergence_arcs(node_count, divergence, ext);
    detail::Residual g(node_count + 2, ext);
    if (g.augment_max(node_count, node_count + 1, Rational(-1)) != need) return std::nullopt;
    std::vector<Rational> out;
    out.reserve(arcs.size());
    for (size_t i = 0; i < arcs.size(); ++i) out.push_back(g.flow(static_cast<int>(i)));
    return out;
}

// Lexicographically minimal feasible flow: among all g with the prescribed
// divergence and 0 <= g <= cap, the one minimizing
// (g[order[0]], g[order[1]], ...) lexicographically. `order` must be a
// permutation of the arc indices. The lex-minimum of a flow polytope is a
// vertex and is found by minimizing one coordinate at a time: flow on an arc
// can be reduced by exactly what reroutes tail -> head through the rest of
// the residual network; afterwards the arc is frozen.
inline std::optional<std::vector<Rational>> lex_min_flow(int node_count,
                                                         const std::vector<FlowArc>& arcs,
                                                         const std::vector<Rational>& divergence,
                                                         const std::vector<int>& order) {
    Rational total(0);
    for (const auto& d : divergence) total += d;
    if (total != 0) return std::nullopt;

    std::vector<FlowArc> ext = arcs;
    Rational need = detail::append_divergence_arcs(node_count, divergence, ext);
    detail::Residual g(node_count + 2, ext);
    if (g.augment_max(node_count, node_count + 1, Rational(-1)) != need) return std::nullopt;

    for (int idx : order) {
        Rational current = g.flow(idx);
        g.freeze(idx);
        if (current > 0) {
            Rational rerouted = g.augment_max(arcs[idx].from, arcs[idx].to, current);
            if (rerouted > 0) g.cancel_flow(idx, rerouted);
        }
    }
    std::vector<Rational> out;
    out.reserve(arcs.size());
    for (size_t i = 0; i < arcs.size(); ++i) out.push_back(g.flow(static_cast<int>(i)));
    return out;
}

struct CostArc {
    int from = 0;
    int to = 0;
    Rational weight;  // must be >= 0 for shortest_paths
};

// Single-source shortest paths with nonnegative weights (Dijkstra, O(V^2)).
// Unreachable nodes get nullopt.
inline std::vector<std::optional<Rational>> shortest_paths(int node_count,
                                                           const std::vector<CostArc>& arcs,
                                                           int source) {
    std::vector<std::optional<Rational>> dist(node_count);
    std::vector<char> done(node_count, 0);
    dist[source] = Rational(0);
    for (int round = 0; round < node_count; ++round) {
        int u = -1;
        for (int v = 0; v < node_count; ++v)
            if (!done[v] && dist[v] && (u == -1 || *dist[v] < *dist[u])) u = v;
        if (u == -1) break;
        done[u] = 1;
        for (const auto& a : arcs) {
            if (a.from != u) continue;
            Rational cand = *dist[u] + a.weight;
            if (!dist[a.to] || cand < *dist[a.to]) dist[a.to] = cand;
        }
    }
    return dist;
}

struct CapCostArc {
    int from = 0;
    int to = 0;
    Rational capacity;
    Rational cost;  // must be >= 0
};

struct MinCostFlowResult {
    bool feasible = false;
    std::vector<Rational> flow;       // per input arc
    std::vector<Rational> potential;  // per node: d with d_w - d_v <= cost on residual arcs
};

// Min-cost flow meeting a divergence prescription, successive shortest paths
// with node potentials (costs are nonnegative, so Dijkstra applies
// throughout). The returned potentials are feasible for the final residual
// network, i.e. they certify optimality exactly.
inline MinCostFlowResult min_cost_flow(int node_count, const std::vector<CapCostArc>& arcs,
                                       const std::vector<Rational>& divergence) {
    MinCostFlowResult result;
    Rational total(0);
    for (const auto& d : divergence) total += d;
    if (total != 0) return result;

    struct Edge {
        int to;
        Rational residual;
        Rational cost;
    };
    int n = node_count + 2;
    int super_s = node_count, super_t = node_count + 1;
    std::vector<Edge> edges;
    std::vector<std::vector<int>> adj(n);
    auto add_edge = [&](int from, int to, const Rational& cap, const Rational& cost) {
        adj[from].push_back(static_cast<int>(edges.size()));
        edges.push_back({to, cap, cost});
        adj[to].push_back(static_cast<int>(edges.size()));
        edges.push_back({from, Rational(0), Rational(-cost)});
    };
    for (const auto& a : arcs) add_edge(a.from, a.to, a.capacity, a.cost);
    Rational need(0);
    for (int v = 0; v < node_count; ++v) {
        if (divergence[v] > 0) {
            add_edge(super_s, v, divergence[v], Rational(0));
            need += divergence[v];
        } else if (divergence[v] < 0) {
            add_edge(v, super_t, -divergence[v], Rational(0));
        }
    }

    std::vector<Rational> pot(n, Rational(0));
    Rational sent(0);
    while (sent < need) {
        // Dijkstra over reduced costs.
        std::vector<std::optional<Rational>> dist(n);
        std::vector<int> pred(n, -1);
        std::vector<char> done(n, 0);
        dist[super_s] = Rational(0);
        for (int round = 0; round < n; ++round) {
            int u = -1;
            for (int v = 0; v < n; ++v)
                if (!done[v] && dist[v] && (u == -1 || *dist[v] < *dist[u])) u = v;
            if (u == -1) break;
            done[u] = 1;
            for (int ei : adj[u]) {
                const Edge& e = edges[ei];
                if (e.residual <= 0) continue;
                Rational cand = *dist[u] + e.cost + pot[u] - pot[e.to];
                if (!dist[e.to] || cand < *dist[e.to]) {
                    dist[e.to] = cand;
                    pred[e.to] = ei;
                }
            }
        }
        if (!dist[super_t]) return result;  // infeasible prescription
        for (int v = 0; v < n; ++v)
            if (dist[v]) pot[v] += (*dist[v] < *dist[super_t]) ? *dist[v] : *dist[super_t];
        Rational push = need - sent;
        for (int v = super_t; v != super_s;) {
            if (edges[pred[v]].residual < push) push = edges[pred[v]].residual;
            v = edges[pred[v] ^ 1].to;
        }
        for (int v = super_t; v != super_s;) {
            edges[pred[v]].residual -= push;
            edges[pred[v] ^ 1].residual += push;
            v = edges[pred[v] ^ 1].to;
        }
        sent += push;
    }

    // Exact potentials for the final residual network via Bellman-Ford from a
    // virtual root (optimality means no negative residual cycle exists).
    std::vector<Rational> d(n, Rational(0));
    for (int round = 0; round < n; ++round) {
        bool changed = false;
        for (size_t ei = 0; ei < edges.size(); ++ei) {
            if (edges[ei].residual <= 0) continue;
            int u = edges[ei ^ 1].to;
            Rational cand = d[u] + edges[ei].cost;
            if (cand < d[edges[ei].to]) {
                d[edges[ei].to] = cand;
                changed = true;
            }
        }
        if (!changed) break;
    }

    result.feasible = true;
    result.flow.reserve(arcs.size());
    for (size_t i = 0; i < arcs.size(); ++i) result.flow.push_back(edges[2 * i + 1].residual);
    result.potential.assign(d.begin(), d.begin() + node_count);
    return result;
}

}  // namespace nashflow
