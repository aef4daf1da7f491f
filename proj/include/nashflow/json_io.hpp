#pragma once

// Instance files, labeling files and certificate JSON. All rationals are
// serialized as "p/q" strings (integers may omit the denominator); parsing is
// bit-exact and floating-point literals are rejected.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nashflow/steady_state.hpp"
#include "nashflow/thin_flow.hpp"

namespace nashflow {

using json = nlohmann::json;

inline Rational rational_from_json(const json& j, const std::string& what) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(static_cast<long>(j.get<long long>()));
    fail(Errc::parse_error, what + " must be a \"p/q\" string (got " + j.dump() + ")");
}

inline Network parse_instance_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("instance is not valid JSON: ") + e.what());
    }
    try {
        NetworkSpec spec;
        if (!j.is_object()) fail(Errc::parse_error, "instance must be a JSON object");
        for (const char* key : {"nodes", "source", "sink", "inflow", "arcs"})
            if (!j.contains(key))
                fail(Errc::parse_error, std::string("instance is missing \"") + key + "\"");
        for (const auto& n : j.at("nodes")) spec.nodes.push_back(n.get<std::string>());
        spec.source = j.at("source").get<std::string>();
        spec.sink = j.at("sink").get<std::string>();
        spec.inflow = rational_from_json(j.at("inflow"), "inflow");
        for (const auto& a : j.at("arcs")) {
            NetworkSpec::ArcSpec arc;
            arc.id = a.at("id").get<std::string>();
            arc.tail = a.at("tail").get<std::string>();
            arc.head = a.at("head").get<std::string>();
            arc.transit = rational_from_json(a.at("transit"), "transit of arc " + arc.id);
            arc.capacity = rational_from_json(a.at("capacity"), "capacity of arc " + arc.id);
            spec.arcs.push_back(std::move(arc));
        }
        if (j.contains("free_arcs"))
            for (const auto& f : j.at("free_arcs")) spec.free_arcs.push_back(f.get<std::string>());
        return build_network(spec);
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("malformed instance: ") + e.what());
    }
}

inline json instance_to_json(const Network& net) {
    json j;
    j["nodes"] = json::array();
    for (const auto& name : net.node_names()) j["nodes"].push_back(name);
    j["source"] = net.node_name(net.source());
    j["sink"] = net.node_name(net.sink());
    j["inflow"] = to_fraction_string(net.inflow());
    j["arcs"] = json::array();
    j["free_arcs"] = json::array();
    for (const Arc& a : net.arcs()) {
        j["arcs"].push_back({{"id", a.id},
                             {"tail", net.node_name(a.tail)},
                             {"head", net.node_name(a.head)},
                             {"transit", to_fraction_string(a.transit)},
                             {"capacity", to_fraction_string(a.capacity)}});
        if (a.free_arc) j["free_arcs"].push_back(a.id);
    }
    return j;
}

inline std::string write_instance_json(const Network& net) { return instance_to_json(net).dump(2) + "\n"; }

inline Labeling parse_labeling_json(const Network& net, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("labeling is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("labels") || !j.at("labels").is_object())
        fail(Errc::parse_error, "labeling file must be {\"labels\": {node: \"p/q\"}}");
    Labeling l(net.node_count(), Rational(0));
    std::vector<char> seen(net.node_count(), 0);
    for (const auto& [name, value] : j.at("labels").items()) {
        int v = net.node_index(name);
        l[v] = rational_from_json(value, "label of node " + name);
        seen[v] = 1;
    }
    for (int v = 0; v < net.node_count(); ++v)
        if (!seen[v])
            fail(Errc::parse_error, "labeling misses node '" + net.node_name(v) + "'");
    return l;
}

inline json labeling_to_json(const Network& net, const Labeling& l) {
    json labels = json::object();
    for (int v = 0; v < net.node_count(); ++v)
        labels[net.node_name(v)] = to_fraction_string(l[v]);
    return json{{"labels", labels}};
}

// The level-set partition of a direction, parts ordered by increasing value.
inline OrderedPartition canonical_partition(const std::vector<Rational>& rates) {
    std::vector<Rational> values = rates;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    OrderedPartition p;
    p.part_count = static_cast<int>(values.size());
    p.part.reserve(rates.size());
    for (const Rational& r : rates)
        p.part.push_back(static_cast<int>(
            std::lower_bound(values.begin(), values.end(), r) - values.begin()));
    return p;
}

inline json thinflow_certificate_json(const Network& net, const Configuration& cfg,
                                      const ThinFlow& tf) {
    json active = json::array(), resetting = json::array();
    for (int i = 0; i < net.arc_count(); ++i) {
        if (cfg.active[i]) active.push_back(net.arc(i).id);
        if (cfg.resetting[i]) resetting.push_back(net.arc(i).id);
    }
    json lp = json::object(), xp = json::object();
    for (int v = 0; v < net.node_count(); ++v)
        lp[net.node_name(v)] = to_fraction_string(tf.label_rate[v]);
    for (int i = 0; i < net.arc_count(); ++i)
        xp[net.arc(i).id] = to_fraction_string(tf.flow[i]);
    OrderedPartition part = canonical_partition(tf.label_rate);
    json parts = json::array();
    for (int p = 0; p < part.part_count; ++p) {
        json group = json::array();
        for (int v = 0; v < net.node_count(); ++v)
            if (part.part[v] == p) group.push_back(net.node_name(v));
        parts.push_back(group);
    }
    return json{{"configuration", {{"active", active}, {"resetting", resetting}}},
                {"l_prime", lp},
                {"x_prime", xp},
                {"partition", parts}};
}

inline json steady_certificate_json(const Network& net, const SteadyCert& cert) {
    json j;
    json lambda = json::object();
    for (int v = 0; v < net.node_count(); ++v)
        lambda[net.node_name(v)] = to_fraction_string(cert.lambda[v]);
    j["lambda"] = lambda;
    json sigma = json::object();
    for (int i = 0; i < cert.original_arc_count; ++i)
        sigma[net.arc(i).id] = to_fraction_string(cert.sigma[i]);
    j["sigma"] = sigma;
    json cls = json::object(), primal = json::object(), dual_p = json::object();
    for (int i = 0; i < cert.augmented.arc_count(); ++i) {
        const std::string& id = cert.augmented.arc(i).id;
        cls[id] = arc_sign_name(cert.cls.sign[i]);
        primal[id] = to_fraction_string(cert.primal[i]);
        dual_p[id] = to_fraction_string(cert.dual_p[i]);
    }
    j["classification"] = cls;
    j["primal"] = primal;
    json dual_d = json::object();
    for (int v = 0; v < cert.augmented.node_count(); ++v)
        dual_d[cert.augmented.node_name(v)] = to_fraction_string(cert.dual_d[v]);
    j["dual"] = {{"d", dual_d}, {"p", dual_p}};
    j["opt"] = to_fraction_string(cert.opt);
    if (cert.has_bounds) {
        j["eta_mode"] = cert.eta_mode;
        j["eta"] = to_fraction_string(cert.eta);
        j["delta"] = to_fraction_string(cert.delta);
        j["t1"] = to_fraction_string(cert.t1);
        j["t2"] = to_fraction_string(cert.t2);
        j["t"] = to_fraction_string(cert.t);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Small file helpers shared by the CLI and the tests.

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse_error, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::invalid_input, "cannot write '" + path + "'");
    out << content;
}

// FNV-1a digest of the canonical instance serialization; identifies the
// instance in run reports.
inline std::string instance_digest(const Network& net) {
    std::string text = write_instance_json(net);
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return std::string(buf);
}

}  // namespace nashflow
