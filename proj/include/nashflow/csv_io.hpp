#pragma once

// CSV emission for trajectories, reconstructed flows over time and
// perturbation sweeps. Exact "p/q" columns carry the data; decimal columns
// (20 significant digits) are display-only conveniences and are never read
// back.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "nashflow/integrator.hpp"
#include "nashflow/perturbation.hpp"

namespace nashflow {

inline std::string trajectory_to_csv(const Network& net, const Trajectory& traj) {
    std::ostringstream out;
    out << "theta,node,label,direction,theta_decimal,label_decimal,direction_decimal\n";
    for (const Phase& ph : traj.phases) {
        for (int v = 0; v < net.node_count(); ++v) {
            out << to_fraction_string(ph.start) << ',' << net.node_name(v) << ','
                << to_fraction_string(ph.labels[v]) << ',' << to_fraction_string(ph.direction[v])
                << ',' << to_decimal_string(ph.start) << ',' << to_decimal_string(ph.labels[v])
                << ',' << to_decimal_string(ph.direction[v]) << '\n';
        }
    }
    return out.str();
}

// Breakpoint rows read back from a trajectory CSV (exact columns only).
struct TrajectoryTable {
    std::vector<Rational> thetas;
    std::vector<Labeling> labels;
    std::vector<std::vector<Rational>> directions;
};

inline TrajectoryTable parse_trajectory_csv(const Network& net, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(Errc::parse_error, "empty trajectory CSV");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        return cells;
    };
    auto header = split(line);
    int col_theta = -1, col_node = -1, col_label = -1, col_direction = -1;
    for (size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "theta") col_theta = static_cast<int>(c);
        if (header[c] == "node") col_node = static_cast<int>(c);
        if (header[c] == "label") col_label = static_cast<int>(c);
        if (header[c] == "direction") col_direction = static_cast<int>(c);
    }
    if (col_theta < 0 || col_node < 0 || col_label < 0 || col_direction < 0)
        fail(Errc::parse_error, "trajectory CSV must have theta,node,label,direction columns");

    TrajectoryTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        size_t needed = static_cast<size_t>(std::max({col_theta, col_node, col_label, col_direction}));
        if (cells.size() <= needed) fail(Errc::parse_error, "short trajectory CSV row");
        Rational theta = parse_rational(cells[col_theta]);
        int v = net.node_index(cells[col_node]);
        if (table.thetas.empty() || theta != table.thetas.back()) {
            if (!table.thetas.empty() && theta < table.thetas.back())
                fail(Errc::parse_error, "trajectory CSV rows are not sorted by theta");
            table.thetas.push_back(theta);
            table.labels.emplace_back(net.node_count(), Rational(0));
            table.directions.emplace_back(net.node_count(), Rational(0));
        }
        table.labels.back()[v] = parse_rational(cells[col_label]);
        table.directions.back()[v] = parse_rational(cells[col_direction]);
    }
    if (table.thetas.empty()) fail(Errc::parse_error, "trajectory CSV has no rows");
    return table;
}

inline std::string flow_over_time_to_csv(const Network& net, const FlowOverTime& fot) {
    std::ostringstream out;
    out << "arc,time,f_plus,f_minus,queue_volume,"
           "time_decimal,f_plus_decimal,f_minus_decimal,queue_volume_decimal\n";
    for (int i = 0; i < net.arc_count(); ++i) {
        const ArcFlow& f = fot.arcs[i];
        std::vector<Rational> times = f.inflow_rate.breaks;
        times.insert(times.end(), f.outflow_rate.breaks.begin(), f.outflow_rate.breaks.end());
        times.insert(times.end(), f.queue_volume.xs.begin(), f.queue_volume.xs.end());
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        for (const Rational& t : times) {
            Rational fp = f.inflow_rate.value_at(t);
            Rational fm = f.outflow_rate.value_at(t);
            Rational z = f.queue_volume.value_at(t);
            out << net.arc(i).id << ',' << to_fraction_string(t) << ',' << to_fraction_string(fp)
                << ',' << to_fraction_string(fm) << ',' << to_fraction_string(z) << ','
                << to_decimal_string(t) << ',' << to_decimal_string(fp) << ','
                << to_decimal_string(fm) << ',' << to_decimal_string(z) << '\n';
        }
    }
    return out.str();
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows, const Rational& horizon) {
    std::ostringstream out;
    out << "delta,distance,horizon,phases_base,phases_perturbed,delta_decimal,distance_decimal\n";
    for (const SweepRow& r : rows) {
        out << to_fraction_string(r.delta) << ',' << to_fraction_string(r.distance) << ','
            << to_fraction_string(horizon) << ',' << r.phases_base << ',' << r.phases_perturbed
            << ',' << to_decimal_string(r.delta) << ',' << to_decimal_string(r.distance) << '\n';
    }
    return out.str();
}

}  // namespace nashflow
