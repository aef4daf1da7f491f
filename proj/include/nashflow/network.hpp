#pragma once

// Instance model: directed graph with transit times, capacities, a constant
// source inflow and an optional set of free (permanently resetting) arcs;
// labelings, configurations and the feasibility predicates shared by all
// other modules.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nashflow/flow_algorithms.hpp"
#include "nashflow/rational.hpp"

namespace nashflow {

struct Arc {
    std::string id;
    int tail = 0;
    int head = 0;
    Rational transit;   // tau >= 0
    Rational capacity;  // nu > 0
    bool free_arc = false;

    bool operator==(const Arc&) const = default;
};

// Raw parsed instance description; build_network validates it.
struct NetworkSpec {
    std::vector<std::string> nodes;
    std::string source;
    std::string sink;
    Rational inflow;
    struct ArcSpec {
        std::string id, tail, head;
        Rational transit, capacity;
    };
    std::vector<ArcSpec> arcs;
    std::vector<std::string> free_arcs;
};

// One exact label value per node.
using Labeling = std::vector<Rational>;

// Active/resetting arc sets, stored as per-arc flags.
struct Configuration {
    std::vector<char> active;
    std::vector<char> resetting;

    bool operator==(const Configuration&) const = default;
};

class Network {
public:
    int node_count() const { return static_cast<int>(node_names_.size()); }
    int arc_count() const { return static_cast<int>(arcs_.size()); }
    int source() const { return source_; }
    int sink() const { return sink_; }
    const Rational& inflow() const { return inflow_; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const Arc& arc(int i) const { return arcs_[i]; }
    const std::string& node_name(int i) const { return node_names_[i]; }
    const std::vector<std::string>& node_names() const { return node_names_; }

    // Circulation form holds after the return-arc augmentation: flow
    // conservation is then required at every node including source and sink.
    bool circulation_form() const { return circulation_form_; }

    bool has_free_arcs() const {
        for (const auto& a : arcs_)
            if (a.free_arc) return true;
        return false;
    }

    int node_index(const std::string& name) const {
        auto it = node_index_.find(name);
        if (it == node_index_.end()) fail(Errc::invalid_input, "unknown node '" + name + "'");
        return it->second;
    }

    std::optional<int> find_arc(const std::string& id) const {
        auto it = arc_index_.find(id);
        if (it == arc_index_.end()) return std::nullopt;
        return it->second;
    }

    int arc_index(const std::string& id) const {
        auto a = find_arc(id);
        if (!a) fail(Errc::invalid_input, "unknown arc '" + id + "'");
        return *a;
    }

    // Arc indices sorted by arc id; this is the tie-breaking order used for
    // the lexicographically minimal flow witness.
    std::vector<int> arcs_by_id() const {
        std::vector<int> order(arcs_.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return arcs_[a].id < arcs_[b].id; });
        return order;
    }

    bool operator==(const Network& o) const {
        return node_names_ == o.node_names_ && source_ == o.source_ && sink_ == o.sink_ &&
               inflow_ == o.inflow_ && arcs_ == o.arcs_ && circulation_form_ == o.circulation_form_;
    }

private:
    friend Network build_network(const NetworkSpec&);
    friend Network augment_with_return_arc(const Network&);
    friend Network restrict_to_local_network(const Network&, const Configuration&);
    friend Network with_capacity(const Network&, int, const Rational&);
    friend Network with_transit(const Network&, int, const Rational&);
    friend Network with_inflow(const Network&, const Rational&);

    std::vector<std::string> node_names_;
    std::map<std::string, int> node_index_;
    std::map<std::string, int> arc_index_;
    int source_ = 0;
    int sink_ = 0;
    Rational inflow_;
    std::vector<Arc> arcs_;
    bool circulation_form_ = false;
};

namespace detail {

inline std::vector<char> reachable_from(int n, const std::vector<Arc>& arcs, int start,
                                        const std::vector<char>& arc_enabled, bool forward) {
    std::vector<char> seen(n, 0);
    seen[start] = 1;
    std::vector<int> stack{start};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (size_t i = 0; i < arcs.size(); ++i) {
            if (!arc_enabled.empty() && !arc_enabled[i]) continue;
            int from = forward ? arcs[i].tail : arcs[i].head;
            int to = forward ? arcs[i].head : arcs[i].tail;
            if (from == u && !seen[to]) {
                seen[to] = 1;
                stack.push_back(to);
            }
        }
    }
    return seen;
}

inline bool has_directed_cycle(int n, const std::vector<Arc>& arcs,
                               const std::vector<char>& arc_enabled) {
    std::vector<int> indeg(n, 0);
    for (size_t i = 0; i < arcs.size(); ++i)
        if (arc_enabled.empty() || arc_enabled[i]) ++indeg[arcs[i].head];
    std::vector<int> stack;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) stack.push_back(v);
    int removed = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++removed;
        for (size_t i = 0; i < arcs.size(); ++i) {
            if (!arc_enabled.empty() && !arc_enabled[i]) continue;
            if (arcs[i].tail == u && --indeg[arcs[i].head] == 0) stack.push_back(arcs[i].head);
        }
    }
    return removed != n;
}

inline void validate_network(const Network& net, bool require_sink_reachability) {
    int n = net.node_count();
    for (const auto& a : net.arcs()) {
        if (a.capacity <= 0)
            fail(Errc::non_positive_capacity, "arc '" + a.id + "' has capacity <= 0");
        if (a.transit < 0) fail(Errc::negative_transit, "arc '" + a.id + "' has transit < 0");
    }
    if (net.inflow() <= 0) fail(Errc::invalid_input, "network inflow must be positive");

    std::vector<char> all;  // empty = every arc enabled
    auto from_source = reachable_from(n, net.arcs(), net.source(), all, true);
    for (int v = 0; v < n; ++v)
        if (!from_source[v])
            fail(Errc::unreachable, "node '" + net.node_name(v) + "' is not reachable from the source");
    if (require_sink_reachability) {
        auto to_sink = reachable_from(n, net.arcs(), net.sink(), all, false);
        for (int v = 0; v < n; ++v)
            if (!to_sink[v])
                fail(Errc::unreachable, "node '" + net.node_name(v) + "' cannot reach the sink");
    }

    std::vector<char> zero_arcs(net.arc_count(), 0);
    for (int i = 0; i < net.arc_count(); ++i) zero_arcs[i] = net.arc(i).transit == 0;
    if (has_directed_cycle(n, net.arcs(), zero_arcs))
        fail(Errc::zero_cycle, "network contains a directed cycle of 0-length arcs");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configurations and labelings

// Active and resetting arcs induced by a labeling; free arcs are always both.
inline Configuration configuration_of(const Network& net, const Labeling& labels) {
    if (static_cast<int>(labels.size()) != net.node_count())
        fail(Errc::invalid_input, "labeling has wrong size");
    Configuration cfg;
    cfg.active.resize(net.arc_count());
    cfg.resetting.resize(net.arc_count());
    for (int i = 0; i < net.arc_count(); ++i) {
        const Arc& a = net.arc(i);
        Rational gap = labels[a.head] - labels[a.tail] - a.transit;
        cfg.active[i] = a.free_arc || gap >= 0;
        cfg.resetting[i] = a.free_arc || gap > 0;
    }
    return cfg;
}

// The three validity conditions, with free arcs exempt from the on-a-path and
// acyclicity requirements (a free arc is active and resetting by fiat, the
// return arc ts being the paradigm case).
inline bool is_valid_configuration(const Network& net, const Configuration& cfg) {
    if (static_cast<int>(cfg.active.size()) != net.arc_count() ||
        static_cast<int>(cfg.resetting.size()) != net.arc_count())
        fail(Errc::invalid_input, "configuration has wrong size");
    for (int i = 0; i < net.arc_count(); ++i) {
        if (cfg.resetting[i] && !cfg.active[i])
            fail(Errc::invalid_input,
                 "resetting set is not contained in the active set (arc '" + net.arc(i).id + "')");
        if (net.arc(i).free_arc && !cfg.resetting[i])
            fail(Errc::invalid_input, "free arc '" + net.arc(i).id + "' must be resetting");
    }

    int n = net.node_count();
    auto reach_s = detail::reachable_from(n, net.arcs(), net.source(), cfg.active, true);
    for (int v = 0; v < n; ++v)
        if (!reach_s[v]) return false;

    auto reach_t = detail::reachable_from(n, net.arcs(), net.sink(), cfg.active, false);
    bool any_nonfree_resetting = false;
    for (int i = 0; i < net.arc_count(); ++i) {
        if (!cfg.resetting[i] || net.arc(i).free_arc) continue;
        any_nonfree_resetting = true;
        // On an s-t path within the active arcs: s reaches the tail and the
        // head reaches t (the arc itself is active).
        if (!reach_s[net.arc(i).tail] || !reach_t[net.arc(i).head]) return false;
    }

    if (any_nonfree_resetting) {
        std::vector<char> nonfree_active(net.arc_count(), 0);
        for (int i = 0; i < net.arc_count(); ++i)
            nonfree_active[i] = cfg.active[i] && !net.arc(i).free_arc;
        if (detail::has_directed_cycle(n, net.arcs(), nonfree_active)) return false;
    }
    return true;
}

inline bool is_feasible_labeling(const Network& net, const Labeling& labels) {
    return is_valid_configuration(net, configuration_of(net, labels));
}

struct QueueSlack {
    std::vector<Rational> queue;  // q_e >= 0
    std::vector<Rational> slack;  // s_e >= 0; 0 on free arcs
};

inline QueueSlack queue_and_slack(const Network& net, const Labeling& labels) {
    QueueSlack qs;
    qs.queue.reserve(net.arc_count());
    qs.slack.reserve(net.arc_count());
    for (const Arc& a : net.arcs()) {
        Rational gap = labels[a.head] - labels[a.tail] - a.transit;
        qs.queue.push_back(gap > 0 ? gap : Rational(0));
        qs.slack.push_back((a.free_arc || gap >= 0) ? Rational(0) : Rational(-gap));
    }
    return qs;
}

inline Rational lipschitz_constant(const Network& net) {
    Rational min_cap = net.arc(0).capacity;
    for (const Arc& a : net.arcs())
        if (a.capacity < min_cap) min_cap = a.capacity;
    return net.inflow() / min_cap;
}

// Minimum total capacity over s-t cuts of the network without its free arcs.
inline Rational min_cut_capacity(const Network& net) {
    std::vector<FlowArc> arcs;
    for (const Arc& a : net.arcs())
        if (!a.free_arc) arcs.push_back({a.tail, a.head, a.capacity});
    return max_flow(net.node_count(), arcs, net.source(), net.sink()).value;
}

// ---------------------------------------------------------------------------
// Construction

inline Network build_network(const NetworkSpec& spec) {
    Network net;
    for (const auto& name : spec.nodes) {
        if (net.node_index_.count(name)) fail(Errc::invalid_input, "duplicate node '" + name + "'");
        net.node_index_[name] = static_cast<int>(net.node_names_.size());
        net.node_names_.push_back(name);
    }
    if (!net.node_index_.count(spec.source)) fail(Errc::invalid_input, "source node not listed");
    if (!net.node_index_.count(spec.sink)) fail(Errc::invalid_input, "sink node not listed");
    net.source_ = net.node_index_[spec.source];
    net.sink_ = net.node_index_[spec.sink];
    net.inflow_ = spec.inflow;
    for (const auto& a : spec.arcs) {
        if (net.arc_index_.count(a.id)) fail(Errc::duplicate_arc, "duplicate arc id '" + a.id + "'");
        if (!net.node_index_.count(a.tail) || !net.node_index_.count(a.head))
            fail(Errc::invalid_input, "arc '" + a.id + "' references an unknown node");
        net.arc_index_[a.id] = static_cast<int>(net.arcs_.size());
        net.arcs_.push_back(
            {a.id, net.node_index_[a.tail], net.node_index_[a.head], a.transit, a.capacity, false});
    }
    for (const auto& id : spec.free_arcs) {
        auto it = net.arc_index_.find(id);
        if (it == net.arc_index_.end())
            fail(Errc::invalid_input, "free arc '" + id + "' is not a declared arc");
        net.arcs_[it->second].free_arc = true;
    }
    detail::validate_network(net, true);

    if (net.has_free_arcs()) {
        Configuration everything;
        everything.active.assign(net.arc_count(), 1);
        everything.resetting.assign(net.arc_count(), 0);
        for (int i = 0; i < net.arc_count(); ++i) everything.resetting[i] = net.arc(i).free_arc;
        // (E, E_inf) must itself be a valid configuration when free arcs exist.
        std::vector<char> nonfree(net.arc_count(), 0);
        for (int i = 0; i < net.arc_count(); ++i) nonfree[i] = !net.arc(i).free_arc;
        if (detail::has_directed_cycle(net.node_count(), net.arcs(), nonfree))
            fail(Errc::invalid_input, "(E, E_inf) is not a valid configuration: non-free arcs are cyclic");
    }
    return net;
}

// Adds the free return arc ts (capacity u0, transit 0) and switches the
// network to circulation form. Used only inside steady-state computations.
inline Network augment_with_return_arc(const Network& net) {
    if (net.find_arc("ts")) fail(Errc::duplicate_arc, "network already has an arc with id 'ts'");
    Network out = net;
    out.arc_index_["ts"] = out.arc_count();
    out.arcs_.push_back({"ts", net.sink(), net.source(), Rational(0), net.inflow(), true});
    out.circulation_form_ = true;
    return out;
}

// Keeps only the arcs of cfg.active, turning cfg.resetting into free arcs.
// Nodes that cannot reach the sink may remain; that is fine for a local
// instance.
inline Network restrict_to_local_network(const Network& net, const Configuration& cfg) {
    Network out;
    out.node_names_ = net.node_names();
    out.node_index_ = net.node_index_;
    out.source_ = net.source();
    out.sink_ = net.sink();
    out.inflow_ = net.inflow();
    for (int i = 0; i < net.arc_count(); ++i) {
        if (!cfg.active[i]) continue;
        Arc a = net.arc(i);
        a.free_arc = cfg.resetting[i];
        out.arc_index_[a.id] = static_cast<int>(out.arcs_.size());
        out.arcs_.push_back(a);
    }
    detail::validate_network(out, false);
    return out;
}

// Parameter perturbations cannot affect reachability, so only the cheap
// invariants are rechecked (positivity, 0-length cycles).
inline Network with_capacity(const Network& net, int arc, const Rational& capacity) {
    if (capacity <= 0)
        fail(Errc::non_positive_capacity, "arc '" + net.arc(arc).id + "' has capacity <= 0");
    Network out = net;
    out.arcs_[arc].capacity = capacity;
    return out;
}

inline Network with_transit(const Network& net, int arc, const Rational& transit) {
    if (transit < 0) fail(Errc::negative_transit, "arc '" + net.arc(arc).id + "' has transit < 0");
    Network out = net;
    out.arcs_[arc].transit = transit;
    std::vector<char> zero_arcs(out.arc_count(), 0);
    for (int i = 0; i < out.arc_count(); ++i) zero_arcs[i] = out.arc(i).transit == 0;
    if (detail::has_directed_cycle(out.node_count(), out.arcs(), zero_arcs))
        fail(Errc::zero_cycle, "perturbation creates a directed cycle of 0-length arcs");
    return out;
}

inline Network with_inflow(const Network& net, const Rational& inflow) {
    if (net.circulation_form())
        fail(Errc::invalid_input, "cannot change inflow of an augmented network");
    if (inflow <= 0) fail(Errc::invalid_input, "network inflow must be positive");
    Network out = net;
    out.inflow_ = inflow;
    return out;
}

// Earliest-arrival labeling of the initially empty network: shortest-path
// distances from the source under the transit times.
inline Labeling empty_network_labeling(const Network& net) {
    std::vector<CostArc> arcs;
    for (const Arc& a : net.arcs()) arcs.push_back({a.tail, a.head, a.transit});
    auto dist = shortest_paths(net.node_count(), arcs, net.source());
    Labeling l(net.node_count());
    for (int v = 0; v < net.node_count(); ++v) {
        if (!dist[v]) fail(Errc::unreachable, "node '" + net.node_name(v) + "' unreachable");
        l[v] = *dist[v];
    }
    return l;
}

}  // namespace nashflow
