#include <catch2/catch_amalgamated.hpp>

#include "nashflow/integrator.hpp"
#include "nashflow/perturbation.hpp"
#include "support/test_instances.hpp"

using namespace nashflow;
using namespace nashflow::testing;

// Hand integration of the reference instances (the oracle for the golden
// values below; each phase direction was cross-checked with
// enumerate_valid_partitions):
//
// Net-C (e1: tau 1 / nu 1, e2: tau 3 / nu 2, u0 = 2), empty start (0, 1):
//   phase 1: only e1 active and tight. TF forces x'_e1 = 2, l'_t = max{1, 2} = 2,
//            so d = (1,2). The slack of e2 is 3 + 0 - 1 = 2 and shrinks at
//            rate d_t - d_s = 1: event at alpha = 2, labels (2, 5).
//   phase 2: e1 resetting (queue 2), e2 tight. Resetting forces x'_e1 = l'_t,
//            conservation gives x'_e2 = 2 - l'_t, and TF-3 at t forces
//            l'_t = 1 with x' = (1, 1): d = (1,1). Queue of e1 is frozen,
//            nothing shrinks: steady.
//
// Net-D (same arcs, u0 = 4), empty start (0, 1):
//   phase 1: x'_e1 = 4, d = (1, 4); slack 2 of e2 shrinks at rate 3:
//            event at 2/3, labels (2/3, 11/3).
//   phase 2: e1 resetting, e2 tight: x'_e1 = l'_t, x'_e2 = 2 l'_t,
//            conservation 3 l'_t = 4: d = (1, 4/3), steady with
//            sigma = (1/3, 1/3).
TEST_CASE("golden trajectories of the reference instances") {
    SECTION("Net-C: two phases, steady at theta = 2") {
        Network c = net_c();
        Trajectory traj = integrate(c, empty_network_labeling(c));
        REQUIRE(traj.phase_count() == 2);
        CHECK(traj.phases[0].start == 0);
        CHECK(traj.phases[0].labels == Labeling{rat(0), rat(1)});
        CHECK(traj.phases[0].direction == std::vector<Rational>{rat(1), rat(2)});
        CHECK(traj.phases[1].start == 2);
        CHECK(traj.phases[1].labels == Labeling{rat(2), rat(5)});
        CHECK(traj.phases[1].direction == std::vector<Rational>{rat(1), rat(1)});
        CHECK(traj.steady);
        CHECK(traj.terminal_direction() == std::vector<Rational>{rat(1), rat(1)});
    }
    SECTION("Net-D: terminal direction (1, 4/3)") {
        Network d = net_d();
        Trajectory traj = integrate(d, empty_network_labeling(d));
        REQUIRE(traj.phase_count() == 2);
        CHECK(traj.phases[1].start == rat(2, 3));
        CHECK(traj.terminal_direction() == std::vector<Rational>{rat(1), rat(4, 3)});
        CHECK(traj.steady);
    }
    SECTION("Net-B: a single immediately-steady phase; e2 never activates") {
        Network b = net_b();
        Trajectory traj = integrate(b, empty_network_labeling(b));
        CHECK(traj.phase_count() == 1);
        CHECK(traj.steady);
        CHECK(traj.end_time() == 0);
        CHECK(traj.terminal_direction() == std::vector<Rational>{rat(1), rat(1)});
    }
    SECTION("Net-A: one breakpoint, queue grows forever") {
        Network a = net_a();
        Trajectory traj = integrate(a, Labeling{rat(0), rat(1)});
        CHECK(traj.phase_count() == 1);
        CHECK(traj.terminal_direction() == std::vector<Rational>{rat(1), rat(2)});
    }
}

TEST_CASE("phase directions") {
    Network c = net_c();
    auto pd = phase_direction(c, Labeling{rat(0), rat(1)});
    CHECK(pd.direction == std::vector<Rational>{rat(1), rat(2)});
    CHECK(pd.config.active[0]);
    CHECK_FALSE(pd.config.active[1]);
    auto pd2 = phase_direction(c, Labeling{rat(2), rat(5)});
    CHECK(pd2.direction == std::vector<Rational>{rat(1), rat(1)});
    CHECK_THROWS_AS(phase_direction(c, Labeling{rat(0), rat(0)}), Error);
}

TEST_CASE("event detection") {
    Network c = net_c();
    SECTION("shrinking slack of e2") {
        auto alpha = next_event(c, Labeling{rat(0), rat(1)}, {rat(1), rat(2)});
        REQUIRE(alpha);
        CHECK(*alpha == 2);
    }
    SECTION("growing queue never triggers") {
        CHECK_FALSE(next_event(net_a(), Labeling{rat(0), rat(1)}, {rat(1), rat(2)}));
    }
    SECTION("constant queue and slack never trigger") {
        CHECK_FALSE(next_event(c, Labeling{rat(2), rat(5)}, {rat(1), rat(1)}));
    }
}

TEST_CASE("evaluation is exact piecewise-linear interpolation") {
    Network c = net_c();
    Trajectory traj = integrate(c, empty_network_labeling(c));
    CHECK(evaluate(traj, rat(1)) == Labeling{rat(1), rat(3)});
    CHECK(evaluate(traj, rat(0)) == empty_network_labeling(c));
    CHECK(evaluate(traj, rat(3)) == Labeling{rat(3), rat(6)});
    for (const Phase& ph : traj.phases) CHECK(evaluate(traj, ph.start) == ph.labels);
}

TEST_CASE("trajectory distance") {
    Network a = net_a();
    Trajectory t1 = integrate(a, Labeling{rat(0), rat(1)});
    CHECK(trajectory_distance(t1, t1, rat(10)) == 0);
    Trajectory t2 = integrate(a, Labeling{rat(0), rat(11, 10)});
    CHECK(trajectory_distance(t1, t2, rat(0)) == rat(1, 10));
}

TEST_CASE("stop policies") {
    Network c = net_c();
    Labeling l0 = empty_network_labeling(c);
    SECTION("horizon truncates before the first event") {
        IntegrateResult res = try_integrate(c, l0, StopPolicy::horizon(rat(1)));
        CHECK(res.reason == StopReason::horizon);
        CHECK(res.trajectory.phase_count() == 1);
        CHECK_FALSE(res.trajectory.steady);
    }
    SECTION("an inclusive horizon still reaches the steady stop") {
        IntegrateResult res = try_integrate(c, l0, StopPolicy::horizon(rat(2)));
        CHECK(res.reason == StopReason::steady);
    }
    SECTION("phase count") {
        IntegrateResult res = try_integrate(c, l0, StopPolicy::phases(1));
        CHECK(res.reason == StopReason::phase_limit);
        CHECK(res.trajectory.phase_count() == 1);
    }
    SECTION("phase cap") {
        StopPolicy stop;
        stop.phase_cap = 1;
        IntegrateResult res = try_integrate(c, l0, stop);
        CHECK(res.reason == StopReason::cap_exceeded);
        CHECK_THROWS_AS(integrate(c, l0, stop), Error);
    }
    SECTION("degenerate starts are rejected, not repaired") {
        CHECK_THROWS_AS(integrate(c, Labeling{rat(0), rat(1, 2)}), Error);  // below distance
    }
}

TEST_CASE("trajectory invariants on the corpus") {
    for (const Network& net : acceptance_corpus()) {
        Trajectory traj = integrate(net, empty_network_labeling(net));
        Rational kappa = lipschitz_constant(net);
        if (kappa < 1) kappa = 1;
        REQUIRE(traj.steady);
        for (size_t k = 0; k < traj.phases.size(); ++k) {
            const Phase& ph = traj.phases[k];
            CHECK(is_feasible_labeling(net, ph.labels));
            CHECK(evaluate(traj, ph.start) == ph.labels);
            for (int v = 0; v < net.node_count(); ++v) {
                CHECK(ph.direction[v] > 0);
                CHECK(ph.direction[v] <= kappa);
                if (k + 1 < traj.phases.size())
                    CHECK(traj.phases[k + 1].labels[v] >= ph.labels[v]);
            }
            if (k + 1 < traj.phases.size()) {
                CHECK(traj.phases[k + 1].start > ph.start);
                Labeling extended = ph.labels;
                Rational dt = traj.phases[k + 1].start - ph.start;
                for (int v = 0; v < net.node_count(); ++v) extended[v] += dt * ph.direction[v];
                CHECK(extended == traj.phases[k + 1].labels);
            }
        }
    }
}

TEST_CASE("flow over time reconstruction") {
    SECTION("Net-A golden: inflow 2 from entry time 0, outflow at capacity, z(xi) = xi") {
        Network a = net_a();
        Trajectory traj = integrate(a, Labeling{rat(0), rat(1)});
        FlowOverTime fot = reconstruct_flow_over_time(a, traj);
        CHECK(fot.arcs[0].inflow_rate.value_at(rat(0)) == 2);
        CHECK(fot.arcs[0].inflow_rate.value_at(rat(100)) == 2);
        // first particle enters at time 0 and exits at time tau = 1
        CHECK(fot.arcs[0].outflow_rate.breaks.front() == 1);
        CHECK(fot.arcs[0].outflow_rate.value_at(rat(5)) == 1);
        for (long xi : {0L, 1L, 3L, 10L})
            CHECK(fot.arcs[0].queue_volume.value_at(rat(xi)) == rat(xi));
        CHECK(verify_flow_over_time(a, traj, fot).empty());
    }
    SECTION("Net-B golden: no queues at all") {
        Network b = net_b();
        Trajectory traj = integrate(b, empty_network_labeling(b));
        FlowOverTime fot = reconstruct_flow_over_time(b, traj);
        CHECK(fot.arcs[0].inflow_rate.value_at(rat(2)) == 1);
        CHECK(fot.arcs[0].queue_volume.value_at(rat(9)) == 0);
        CHECK(fot.arcs[1].inflow_rate.value_at(rat(2)) == 0);
        CHECK(verify_flow_over_time(b, traj, fot).empty());
    }
    SECTION("Net-C phase 2: both routes carry inflow rate 1 from entry time 2") {
        Network c = net_c();
        Trajectory traj = integrate(c, empty_network_labeling(c));
        FlowOverTime fot = reconstruct_flow_over_time(c, traj);
        CHECK(fot.arcs[0].inflow_rate.value_at(rat(3)) == 1);
        CHECK(fot.arcs[1].inflow_rate.value_at(rat(3)) == 1);
        CHECK(fot.arcs[1].inflow_rate.value_at(rat(1)) == 0);
        CHECK(verify_flow_over_time(c, traj, fot).empty());
    }
    SECTION("initial queues are carried as already-entered volume") {
        // Start Net-C with a unit queue on e1: labels (0, 2).
        Network c = net_c();
        Trajectory traj = integrate(c, Labeling{rat(0), rat(2)});
        FlowOverTime fot = reconstruct_flow_over_time(c, traj);
        CHECK(fot.arcs[0].initial_volume == 1);
        CHECK(fot.arcs[0].queue_volume.value_at(rat(0)) == 1);
        auto bad = verify_flow_over_time(c, traj, fot);
        std::string first_violation = bad.empty() ? std::string() : bad.front();
        INFO(first_violation);
        CHECK(bad.empty());
    }
    SECTION("the full audit passes on the corpus") {
        for (const Network& net : acceptance_corpus()) {
            Trajectory traj = integrate(net, empty_network_labeling(net));
            FlowOverTime fot = reconstruct_flow_over_time(net, traj);
            auto bad = verify_flow_over_time(net, traj, fot);
            std::string first_violation = bad.empty() ? std::string() : bad.front();
            INFO(first_violation);
            CHECK(bad.empty());
        }
    }
}

TEST_CASE("integration from queued feasible starts") {
    // Random feasible starts away from the empty labeling: raise labels by
    // random bumps and keep the draws that stay feasible.
    Rng rng(0xd1ce);
    int exercised = 0;
    for (const Network& net : acceptance_corpus()) {
        Labeling base = empty_network_labeling(net);
        for (int attempt = 0; attempt < 12 && exercised < 25; ++attempt) {
            Labeling start = base;
            for (int v = 0; v < net.node_count(); ++v)
                if (v != net.source())
                    start[v] += rat(static_cast<long>(rng.below(5)), 2);
            if (start == base || !is_feasible_labeling(net, start)) continue;
            ++exercised;
            Trajectory traj = integrate(net, start);
            CHECK(traj.steady);
            for (const Phase& ph : traj.phases) CHECK(is_feasible_labeling(net, ph.labels));
            FlowOverTime fot = reconstruct_flow_over_time(net, traj);
            auto bad = verify_flow_over_time(net, traj, fot);
            std::string first_violation = bad.empty() ? std::string() : bad.front();
            INFO(first_violation);
            CHECK(bad.empty());
            CHECK(uniqueness_audit(net, traj, traj.end_time() / 2 + rat(1, 3)));
        }
    }
    CHECK(exercised >= 10);
}
