// Command-line surface of the equilibrium engine: thin-flow solving,
// trajectory integration, steady-state certificates, the invariant check
// suite, and perturbation sweeps.
//
// Exit codes: 0 success / all properties pass, 1 property failure, 2 parse
// error, 3 solver error, 4 phase cap exceeded (partial output retained),
// 5 enumeration budget exceeded, 6 invalid perturbed instance.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nashflow/csv_io.hpp"
#include "nashflow/json_io.hpp"
#include "nashflow/perturbation.hpp"
#include "nashflow/steady_state.hpp"

namespace {

using namespace nashflow;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitParseError = 2;
constexpr int kExitSolverError = 3;
constexpr int kExitPhaseCap = 4;
constexpr int kExitBudget = 5;
constexpr int kExitBadPerturbation = 6;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::parse_error:
        case Errc::zero_cycle:      // instance-file validation failures
        case Errc::unreachable:
        case Errc::non_positive_capacity:
        case Errc::negative_transit:
        case Errc::duplicate_arc:
            return kExitParseError;
        case Errc::phase_cap_exceeded:
            return kExitPhaseCap;
        case Errc::budget_exceeded:
            return kExitBudget;
        default:
            return kExitSolverError;
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int phase_cap_from_env() {
    if (const char* cap = std::getenv("NASHFLOW_PHASE_CAP")) {
        int value = std::atoi(cap);
        if (value > 0) return value;
    }
    return 10000;
}

StopPolicy parse_stop(const std::string& text) {
    StopPolicy stop;
    stop.phase_cap = phase_cap_from_env();
    if (text == "steady" || text.empty()) return stop;
    if (text.rfind("horizon=", 0) == 0) {
        stop.kind = StopPolicy::Kind::horizon;
        stop.horizon_value = parse_rational(text.substr(8));
        return stop;
    }
    if (text.rfind("phases=", 0) == 0) {
        stop.kind = StopPolicy::Kind::phase_count;
        stop.max_phases = std::atoi(text.substr(7).c_str());
        if (stop.max_phases <= 0) fail(Errc::parse_error, "phases= needs a positive count");
        return stop;
    }
    fail(Errc::parse_error, "unknown stop policy '" + text + "'");
}

Labeling load_start(const Network& net, const std::string& start) {
    if (start == "empty" || start.empty()) return empty_network_labeling(net);
    return parse_labeling_json(net, read_file(start));
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty())
        std::cout << content;
    else
        write_file(path, content);
}

// ---------------------------------------------------------------------------

int cmd_solve_thinflow(const std::string& instance_path, const std::string& active_list,
                       const std::string& resetting_list, const std::string& out_path) {
    Network net = parse_instance_json(read_file(instance_path));
    Configuration cfg;
    cfg.active.assign(net.arc_count(), 0);
    cfg.resetting.assign(net.arc_count(), 0);
    for (const auto& id : split_list(active_list)) cfg.active[net.arc_index(id)] = 1;
    for (const auto& id : split_list(resetting_list)) cfg.resetting[net.arc_index(id)] = 1;
    for (int i = 0; i < net.arc_count(); ++i)
        if (net.arc(i).free_arc) cfg.active[i] = cfg.resetting[i] = 1;

    ThinFlow tf = solve_thin_flow(net, cfg);
    TfVerifyResult check = verify_thin_flow(net, cfg, tf);
    emit(out_path, thinflow_certificate_json(net, cfg, tf).dump(2) + "\n");
    return check.ok ? kExitOk : kExitSolverError;
}

int cmd_integrate(const std::string& instance_path, const std::string& start,
                  const std::string& stop_text, const std::string& out_path,
                  const std::string& flow_out_path, const std::string& report_path) {
    Network net = parse_instance_json(read_file(instance_path));
    Labeling l0 = load_start(net, start);
    StopPolicy stop = parse_stop(stop_text);
    IntegrateResult res = try_integrate(net, l0, stop);
    const Trajectory& traj = res.trajectory;

    emit(out_path, trajectory_to_csv(net, traj));
    if (!flow_out_path.empty() && res.reason != StopReason::cap_exceeded)
        write_file(flow_out_path, flow_over_time_to_csv(net, reconstruct_flow_over_time(net, traj)));

    SteadyCert cert = make_steady_certificate(net);
    json phi = json::array();
    for (const Phase& ph : traj.phases)
        phi.push_back({{"theta", to_fraction_string(ph.start)},
                       {"phi", to_fraction_string(potential(net, cert, ph.labels))}});
    json report{{"instance", instance_digest(net)},
                {"command", "integrate"},
                {"phases", traj.phase_count()},
                {"steady", traj.steady},
                {"truncated", !traj.steady},
                {"stop_reason", res.reason == StopReason::steady       ? "steady"
                                : res.reason == StopReason::certified  ? "certified"
                                : res.reason == StopReason::horizon    ? "horizon"
                                : res.reason == StopReason::phase_limit ? "phases"
                                                                        : "phase_cap"},
                {"opt", to_fraction_string(cert.opt)},
                {"phi", phi}};
    if (traj.steady) report["steady_time"] = to_fraction_string(traj.end_time());
    json outputs = json::array();
    if (!out_path.empty()) outputs.push_back(out_path);
    if (!flow_out_path.empty()) outputs.push_back(flow_out_path);
    report["outputs"] = outputs;
    if (!report_path.empty())
        write_file(report_path, report.dump(2) + "\n");
    else if (!out_path.empty())
        std::cout << report.dump(2) << "\n";

    if (res.reason == StopReason::cap_exceeded) {
        std::cerr << "phase cap exceeded; partial trajectory retained\n";
        return kExitPhaseCap;
    }
    return kExitOk;
}

int cmd_steady_state(const std::string& instance_path, const std::string& eta_mode,
                     const std::string& start, const std::string& out_path) {
    Network net = parse_instance_json(read_file(instance_path));
    Labeling l0 = load_start(net, start);
    SteadyCert cert = make_steady_certificate(net);
    if (eta_mode == "observed") {
        Trajectory traj = integrate(net, l0, parse_stop("steady"));
        attach_bounds(cert, convergence_bounds(net, cert, l0, EtaMode::observed, &traj));
    } else if (eta_mode == "exhaustive") {
        attach_bounds(cert, convergence_bounds(net, cert, l0, EtaMode::exhaustive));
    } else {
        fail(Errc::parse_error, "unknown eta mode '" + eta_mode + "'");
    }
    emit(out_path, steady_certificate_json(net, cert).dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// check: the full invariant suite on one instance (or on a supplied
// trajectory file). Every failure carries a concrete witness.

struct CheckReport {
    json checks = json::array();
    bool all_ok = true;

    void add(const std::string& name, bool pass, const std::string& witness = "") {
        checks.push_back({{"name", name}, {"pass", pass}, {"witness", witness}});
        all_ok = all_ok && pass;
        std::cout << (pass ? "[ok]   " : "[FAIL] ") << name
                  << (pass || witness.empty() ? "" : ": " + witness) << "\n";
    }
};

int check_supplied_trajectory(const Network& net, const std::string& csv_text,
                              CheckReport& report) {
    TrajectoryTable table = parse_trajectory_csv(net, csv_text);
    for (size_t k = 0; k < table.thetas.size(); ++k) {
        std::string at = " at theta = " + to_fraction_string(table.thetas[k]);
        if (!is_feasible_labeling(net, table.labels[k])) {
            report.add("trajectory-feasible", false, "infeasible labeling" + at);
            continue;
        }
        report.add("trajectory-feasible" + at, true);
        Configuration cfg = configuration_of(net, table.labels[k]);
        ThinFlow reference = solve_thin_flow(net, cfg);
        if (reference.label_rate == table.directions[k]) {
            report.add("trajectory-thinflow" + at, true);
        } else {
            ThinFlow candidate{reference.flow, table.directions[k]};
            TfVerifyResult vr = verify_thin_flow(net, cfg, candidate);
            std::string witness = "direction is not the thin flow direction";
            if (!vr.ok)
                witness = vr.violations.front().condition + " violated: " +
                          vr.violations.front().detail;
            report.add("trajectory-thinflow" + at, false, witness);
        }
        if (k + 1 < table.thetas.size()) {
            Labeling expect = table.labels[k];
            Rational dt = table.thetas[k + 1] - table.thetas[k];
            for (size_t v = 0; v < expect.size(); ++v) expect[v] += dt * table.directions[k][v];
            if (expect != table.labels[k + 1])
                report.add("trajectory-linear" + at, false,
                           "labels at the next breakpoint do not extend linearly");
            else
                report.add("trajectory-linear" + at, true);
        }
    }
    return report.all_ok ? kExitOk : kExitPropertyFailure;
}

int cmd_check(const std::string& instance_path, const std::string& trajectory_path,
              const std::string& report_path) {
    Network net = parse_instance_json(read_file(instance_path));
    CheckReport report;

    if (!trajectory_path.empty()) {
        int code = check_supplied_trajectory(net, read_file(trajectory_path), report);
        if (!report_path.empty())
            write_file(report_path, json{{"instance", instance_digest(net)},
                                         {"command", "check"},
                                         {"checks", report.checks}}
                                            .dump(2) +
                                        "\n");
        return code;
    }

    report.add("roundtrip", parse_instance_json(write_instance_json(net)) == net,
               "serialization round trip changed the instance");

    StopPolicy stop;
    stop.phase_cap = phase_cap_from_env();
    Labeling l0 = empty_network_labeling(net);
    Trajectory traj = integrate(net, l0, stop);
    report.add("integrate-steady", traj.steady, "integration did not reach steady state");

    SteadyCert cert = make_steady_certificate(net);
    Rational kappa = lipschitz_constant(net);
    if (kappa < 1) kappa = 1;

    {
        bool ok = true;
        std::string witness;
        for (const Phase& ph : traj.phases) {
            if (!is_feasible_labeling(net, ph.labels)) {
                ok = false;
                witness = "infeasible at theta = " + to_fraction_string(ph.start);
                break;
            }
            for (const Rational& d : ph.direction)
                if (d < 0 || d > kappa) {
                    ok = false;
                    witness = "direction outside [0, kappa] at theta = " +
                              to_fraction_string(ph.start);
                }
        }
        report.add("breakpoints-feasible", ok, witness);
    }

    {
        bool ok = true;
        std::string witness;
        for (const Phase& ph : traj.phases) {
            TfVerifyResult vr = verify_thin_flow(net, ph.interior_config, ph.thin_flow);
            if (!vr.ok) {
                ok = false;
                witness = "theta = " + to_fraction_string(ph.start) + ": " +
                          vr.violations.front().condition + " " + vr.violations.front().detail;
                break;
            }
        }
        report.add("thinflow-per-phase", ok, witness);
    }

    {
        bool bounded = true, monotone = true;
        std::string witness_b, witness_m;
        auto slopes = potential_slopes(net, cert, traj);
        for (size_t k = 0; k < traj.phases.size(); ++k) {
            Rational phi = potential(net, cert, traj.phases[k].labels);
            if (phi > cert.opt) {
                bounded = false;
                witness_b = "phi = " + to_fraction_string(phi) + " > OPT at theta = " +
                            to_fraction_string(traj.phases[k].start);
            }
            if (slopes[k] < 0 || (phi < cert.opt && slopes[k] <= 0)) {
                monotone = false;
                witness_m = "phi slope " + to_fraction_string(slopes[k]) + " in phase " +
                            std::to_string(k);
            }
        }
        report.add("potential-bounded", bounded, witness_b);
        report.add("potential-monotone", monotone, witness_m);
    }

    {
        bool ok = true;
        std::string witness;
        for (size_t k = 0; k < traj.phases.size() && ok; ++k) {
            const Phase& ph = traj.phases[k];
            Rational step = (k + 1 < traj.phases.size())
                                ? Rational((traj.phases[k + 1].start - ph.start) / 2)
                                : Rational(1);
            Labeling mid = ph.labels;
            for (size_t v = 0; v < mid.size(); ++v) mid[v] += step * ph.direction[v];
            try {
                SteadyVerdict v = is_steady_direction(net, cert, mid, ph.thin_flow);
                (void)check_optimality(net, cert, mid, ph.thin_flow);
                (void)v;
            } catch (const Error& e) {
                ok = false;
                witness = e.what();
            }
        }
        report.add("characterization-agreement", ok, witness);
    }

    {
        bool ok = true;
        std::string witness;
        std::vector<Rational> thetas;
        Rational end = traj.end_time();
        if (end > 0)
            thetas = {end / 4, end / 2, Rational(3 * end / 4)};
        else
            thetas = {Rational(1)};
        for (const Rational& th : thetas)
            if (!uniqueness_audit(net, traj, th)) {
                ok = false;
                witness = "re-integration from theta = " + to_fraction_string(th) + " differs";
            }
        report.add("uniqueness-audit", ok, witness);
    }

    {
        auto bounds = convergence_bounds(net, cert, l0, EtaMode::observed, &traj);
        bool ok = traj.steady && traj.end_time() <= bounds.t;
        report.add("convergence-bound-observed", ok,
                   ok ? "" : "steady at " + to_fraction_string(traj.end_time()) + " > T = " +
                                 to_fraction_string(bounds.t));
        if (net.arc_count() <= 12) {
            auto ex = convergence_bounds(net, cert, l0, EtaMode::exhaustive);
            bool ok2 = traj.steady && traj.end_time() <= ex.t;
            report.add("convergence-bound-exhaustive", ok2,
                       ok2 ? "" : "steady at " + to_fraction_string(traj.end_time()) + " > T = " +
                                      to_fraction_string(ex.t));
        }
    }

    if (net.inflow() <= min_cut_capacity(net)) {
        bool ok = true;
        for (const Rational& lv : cert.lambda)
            if (lv != 1) ok = false;
        for (int i = 0; i < cert.original_arc_count; ++i)
            if (cert.sigma[i] != 0) ok = false;
        report.add("bounded-queues-special-case", ok,
                   ok ? "" : "inflow within capacity but lambda != 1 or sigma != 0");
    }

    {
        FlowOverTime fot = reconstruct_flow_over_time(net, traj);
        auto bad = verify_flow_over_time(net, traj, fot);
        report.add("flow-reconstruction", bad.empty(), bad.empty() ? "" : bad.front());
    }

    // Informational: cycles in an active set are possible only through free
    // arcs; they are accepted but flagged.
    {
        std::string witness;
        for (const Phase& ph : traj.phases)
            if (detail::has_directed_cycle(net.node_count(), net.arcs(), ph.config.active))
                witness = "active set contains a cycle (through free arcs) at theta = " +
                          to_fraction_string(ph.start);
        report.add("active-sets-acyclic", true, witness);
    }
    // Informational: the length of the first phase (a usable radius for
    // local-continuity experiments around the start).
    {
        auto alpha = next_event(net, l0, traj.phases.front().direction);
        report.add("first-phase-length", true,
                   alpha ? to_fraction_string(*alpha) : std::string("unbounded"));
    }

    if (!report_path.empty())
        write_file(report_path, json{{"instance", instance_digest(net)},
                                     {"command", "check"},
                                     {"checks", report.checks}}
                                        .dump(2) +
                                    "\n");
    return report.all_ok ? kExitOk : kExitPropertyFailure;
}

int cmd_perturb(const std::string& instance_path, const std::string& target,
                const std::string& arc_id, const std::string& delta_list,
                const std::string& horizon_text, const std::string& out_path) {
    Network net = parse_instance_json(read_file(instance_path));
    PerturbationSweep sweep;
    sweep.base = net;
    if (target == "transit")
        sweep.target = PerturbationSweep::Target::transit;
    else if (target == "capacity")
        sweep.target = PerturbationSweep::Target::capacity;
    else if (target == "inflow")
        sweep.target = PerturbationSweep::Target::inflow;
    else if (target == "label")
        sweep.target = PerturbationSweep::Target::label;
    else
        fail(Errc::parse_error, "unknown target '" + target + "'");
    sweep.arc_id = arc_id;
    if ((target == "transit" || target == "capacity") && arc_id.empty())
        fail(Errc::parse_error, "--arc is required for transit/capacity sweeps");
    for (const auto& d : split_list(delta_list)) {
        Rational delta = parse_rational(d);
        if (delta <= 0) fail(Errc::parse_error, "deltas must be positive");
        if (!sweep.deltas.empty() && delta >= sweep.deltas.back())
            fail(Errc::parse_error, "deltas must be strictly decreasing");
        sweep.deltas.push_back(delta);
    }
    if (sweep.deltas.empty()) fail(Errc::parse_error, "--deltas must not be empty");
    sweep.horizon = parse_rational(horizon_text);

    std::vector<SweepRow> rows;
    try {
        rows = continuity_sweep(sweep);
    } catch (const Error& e) {
        switch (e.code()) {
            case Errc::zero_cycle:
            case Errc::non_positive_capacity:
            case Errc::negative_transit:
            case Errc::infeasible_labeling:
                std::cerr << "invalid perturbed instance: " << e.what() << "\n";
                return kExitBadPerturbation;
            default:
                throw;
        }
    }
    emit(out_path, sweep_to_csv(rows, sweep.horizon));
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].distance > rows[i - 1].distance) return kExitPropertyFailure;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact dynamic-equilibrium engine for the fluid queueing model"};
    app.require_subcommand(1);

    std::string instance, active, resetting, out, flow_out, report, start = "empty";
    std::string stop = "steady", eta = "observed", trajectory, target, arc, deltas, horizon;

    auto* tf_cmd = app.add_subcommand("solve-thinflow", "solve TF-1..TF-4 for a configuration");
    tf_cmd->add_option("instance", instance)->required();
    tf_cmd->add_option("--active", active, "comma-separated active arc ids");
    tf_cmd->add_option("--resetting", resetting, "comma-separated resetting arc ids");
    tf_cmd->add_option("--out", out);

    auto* in_cmd = app.add_subcommand("integrate", "integrate the equilibrium trajectory");
    in_cmd->add_option("instance", instance)->required();
    in_cmd->add_option("--start", start, "empty or a labeling JSON path");
    in_cmd->add_option("--stop", stop, "steady | horizon=R | phases=N");
    in_cmd->add_option("--out", out, "trajectory CSV path (default stdout)");
    in_cmd->add_option("--flow-out", flow_out, "flow-over-time CSV path");
    in_cmd->add_option("--report", report, "run report JSON path");

    auto* ss_cmd = app.add_subcommand("steady-state", "steady-state certificate with bounds");
    ss_cmd->add_option("instance", instance)->required();
    ss_cmd->add_option("--eta", eta, "exhaustive | observed");
    ss_cmd->add_option("--start", start, "empty or a labeling JSON path");
    ss_cmd->add_option("--out", out);

    auto* ck_cmd = app.add_subcommand("check", "run the invariant suite");
    ck_cmd->add_option("instance", instance)->required();
    ck_cmd->add_option("--trajectory", trajectory, "verify this trajectory CSV instead");
    ck_cmd->add_option("--report", report, "run report JSON path");

    auto* pb_cmd = app.add_subcommand("perturb", "continuity sweep");
    pb_cmd->add_option("instance", instance)->required();
    pb_cmd->add_option("--target", target, "transit | capacity | inflow | label")->required();
    pb_cmd->add_option("--arc", arc, "arc id for transit/capacity");
    pb_cmd->add_option("--deltas", deltas, "comma-separated positive decreasing rationals")
        ->required();
    pb_cmd->add_option("--horizon", horizon, "comparison horizon")->required();
    pb_cmd->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (tf_cmd->parsed()) return cmd_solve_thinflow(instance, active, resetting, out);
        if (in_cmd->parsed()) return cmd_integrate(instance, start, stop, out, flow_out, report);
        if (ss_cmd->parsed()) return cmd_steady_state(instance, eta, start, out);
        if (ck_cmd->parsed()) return cmd_check(instance, trajectory, report);
        if (pb_cmd->parsed()) return cmd_perturb(instance, target, arc, deltas, horizon, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolverError;
    }
    return kExitOk;
}
