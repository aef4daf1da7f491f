#include <catch2/catch_amalgamated.hpp>

#include "nashflow/steady_state.hpp"
#include "support/test_instances.hpp"

using namespace nashflow;
using namespace nashflow::testing;

TEST_CASE("steady direction, queue rates and classification") {
    SECTION("Net-A: the single arc grows a queue at rate 1") {
        SteadyCert cert = steady_direction(net_a());
        CHECK(cert.lambda == std::vector<Rational>{rat(1), rat(2)});
        CHECK(cert.sigma[0] == 1);
        CHECK(cert.cls.sign[0] == ArcSign::up);
    }
    SECTION("Net-C: inflow within capacity, lambda = 1") {
        SteadyCert cert = steady_direction(net_c());
        CHECK(cert.lambda == std::vector<Rational>{rat(1), rat(1)});
        CHECK(cert.sigma[0] == 0);
        CHECK(cert.sigma[1] == 0);
        CHECK(cert.cls.sign[0] == ArcSign::level);
        CHECK(cert.cls.sign[1] == ArcSign::level);
    }
    SECTION("Net-D: over-saturated, both arcs queue at rate 1/3") {
        SteadyCert cert = steady_direction(net_d());
        CHECK(cert.lambda == std::vector<Rational>{rat(1), rat(4, 3)});
        CHECK(cert.sigma[0] == rat(1, 3));
        CHECK(cert.sigma[1] == rat(1, 3));
        CHECK(cert.cls.sign[0] == ArcSign::up);
        CHECK(cert.cls.sign[1] == ArcSign::up);
    }
}

TEST_CASE("primal circulations") {
    SECTION("Net-A") {
        SteadyCert cert = make_steady_certificate(net_a());
        CHECK(cert.primal == std::vector<Rational>{rat(2), rat(2)});
        Rational cost(0);
        for (size_t i = 0; i < cert.primal.size(); ++i)
            cost += cert.cls.scaled_cost[i] * cert.primal[i];
        CHECK(cost == 1);
    }
    SECTION("Net-C: cheap route saturates first") {
        SteadyCert cert = make_steady_certificate(net_c());
        CHECK(cert.primal == std::vector<Rational>{rat(1), rat(1), rat(2)});
        CHECK(cert.opt == 4);
    }
    SECTION("Net-D: everything fixed, scaled costs 3/4 and 9/4") {
        SteadyCert cert = make_steady_certificate(net_d());
        CHECK(cert.primal == std::vector<Rational>{rat(4, 3), rat(8, 3), rat(4)});
        CHECK(cert.cls.scaled_cost[0] == rat(3, 4));
        CHECK(cert.cls.scaled_cost[1] == rat(9, 4));
        CHECK(cert.opt == 7);
    }
}

TEST_CASE("strong duality holds exactly on the corpus") {
    for (const Network& net : acceptance_corpus()) {
        SteadyCert cert = make_steady_certificate(net);
        Rational primal(0), dual(0);
        for (int i = 0; i < cert.augmented.arc_count(); ++i) {
            primal += cert.cls.scaled_cost[i] * cert.primal[i];
            dual -= cert.cls.scaled_capacity[i] * cert.dual_p[i];
        }
        CHECK(primal == dual);
        CHECK(primal == cert.opt);
    }
}

TEST_CASE("potential golden values") {
    Network a = net_a(), c = net_c(), d = net_d();
    SteadyCert ca = make_steady_certificate(a);
    SteadyCert cc = make_steady_certificate(c);
    SteadyCert cd = make_steady_certificate(d);
    CHECK(potential(c, cc, {rat(0), rat(1)}) == 2);
    CHECK(potential(c, cc, {rat(2), rat(5)}) == 4);  // = OPT
    CHECK(potential(a, ca, {rat(0), rat(1)}) == 1);  // = OPT
    CHECK(potential(d, cd, {rat(0), rat(1)}) == 3);
}

TEST_CASE("the dual read off a labeling") {
    Network a = net_a(), c = net_c();
    SteadyCert ca = make_steady_certificate(a);
    SteadyCert cc = make_steady_certificate(c);
    SECTION("Net-C at the empty start") {
        auto dual = dual_from_labeling(c, cc, {rat(0), rat(1)});
        CHECK(dual.d == std::vector<Rational>{rat(0), rat(1)});
        CHECK(dual.objective == 2);
    }
    SECTION("Net-A at the empty start") {
        auto dual = dual_from_labeling(a, ca, {rat(0), rat(1)});
        CHECK(dual.d == std::vector<Rational>{rat(0), rat(1, 2)});
        CHECK(dual.p[0] == 0);
        CHECK(dual.p[1] == rat(-1, 2));
        CHECK(dual.objective == 1);
    }
    SECTION("objective equals the potential and never exceeds OPT") {
        for (const Network& net : acceptance_corpus()) {
            SteadyCert cert = make_steady_certificate(net);
            Trajectory traj = integrate(net, empty_network_labeling(net));
            Rng rng(23);
            for (const Phase& ph : traj.phases) {
                auto dual = dual_from_labeling(net, cert, ph.labels);
                CHECK(dual.objective == potential(net, cert, ph.labels));
                CHECK(dual.objective <= cert.opt);
            }
            // a few interior and extrapolated points as well
            for (int i = 0; i < 3; ++i) {
                Rational th = traj.end_time() + rat(static_cast<long>(rng.below(9)) + 1, 3);
                auto dual = dual_from_labeling(net, cert, evaluate(traj, th));
                CHECK(dual.objective <= cert.opt);
            }
        }
    }
}

TEST_CASE("steady-direction characterizations and optimality") {
    Network a = net_a(), c = net_c();
    SteadyCert ca = make_steady_certificate(a);
    SteadyCert cc = make_steady_certificate(c);
    Trajectory tc = integrate(c, empty_network_labeling(c));
    SECTION("Net-C phase 2 is steady") {
        SteadyVerdict v = is_steady_direction(c, cc, {rat(2), rat(5)}, tc.phases[1].thin_flow);
        CHECK(v.moving);
        CHECK(v.by_queue_rates);
        CHECK(v.by_cut);
        CHECK(v.by_membership);
        CHECK(check_optimality(c, cc, {rat(2), rat(5)}, tc.phases[1].thin_flow));
    }
    SECTION("Net-C phase 1 is not steady") {
        SteadyVerdict v = is_steady_direction(c, cc, {rat(0), rat(1)}, tc.phases[0].thin_flow);
        CHECK_FALSE(v.moving);
        CHECK_FALSE(check_optimality(c, cc, {rat(0), rat(1)}, tc.phases[0].thin_flow));
    }
    SECTION("Net-A is steady from the start") {
        Trajectory ta = integrate(a, Labeling{rat(0), rat(1)});
        SteadyVerdict v = is_steady_direction(a, ca, {rat(0), rat(1)}, ta.phases[0].thin_flow);
        CHECK(v.moving);
        CHECK(check_optimality(a, ca, {rat(0), rat(1)}, ta.phases[0].thin_flow));
    }
}

TEST_CASE("slack labels") {
    Network c = net_c();
    SteadyCert cc = make_steady_certificate(c);
    SECTION("zero along active paths") {
        auto g = slack_labels(c, cc, {rat(2), rat(5)});
        CHECK((g[0] && *g[0] == 0));
        CHECK((g[1] && *g[1] == 0));
        auto g0 = slack_labels(c, cc, {rat(0), rat(1)});
        CHECK((g0[1] && *g0[1] == 0));  // via the tight short arc
    }
    SECTION("gamma is zero everywhere whenever no down arcs exist") {
        for (const Network& net : acceptance_corpus()) {
            SteadyCert cert = make_steady_certificate(net);
            bool has_down = false;
            for (ArcSign s : cert.cls.sign)
                if (s == ArcSign::down) has_down = true;
            if (has_down) continue;
            Trajectory traj = integrate(net, empty_network_labeling(net));
            for (const Phase& ph : traj.phases)
                for (const auto& gv : slack_labels(net, cert, ph.labels)) {
                    REQUIRE(gv);
                    CHECK(*gv == 0);
                }
        }
    }
}

TEST_CASE("convergence bounds") {
    Network a = net_a(), c = net_c(), d = net_d();
    SteadyCert ca = make_steady_certificate(a);
    SteadyCert cc = make_steady_certificate(c);
    SteadyCert cd = make_steady_certificate(d);
    SECTION("Net-C observed: eta 1, T1 = 2, delta 0") {
        Trajectory traj = integrate(c, empty_network_labeling(c));
        auto b = convergence_bounds(c, cc, empty_network_labeling(c), EtaMode::observed, &traj);
        CHECK(b.eta == 1);
        CHECK(b.delta == 0);
        CHECK(b.t1 == 2);
        CHECK(b.t2 == 0);
        CHECK(b.t == 2);
    }
    SECTION("Net-A: potential starts at OPT, T1 = 0") {
        Trajectory traj = integrate(a, Labeling{rat(0), rat(1)});
        auto b = convergence_bounds(a, ca, Labeling{rat(0), rat(1)}, EtaMode::observed, &traj);
        CHECK(b.t1 == 0);
    }
    SECTION("Net-D: delta = 3") {
        Trajectory traj = integrate(d, empty_network_labeling(d));
        auto b = convergence_bounds(d, cd, empty_network_labeling(d), EtaMode::observed, &traj);
        CHECK(b.delta == 3);
    }
    SECTION("exhaustive eta is more conservative but still certifies Net-C") {
        auto b = convergence_bounds(c, cc, empty_network_labeling(c), EtaMode::exhaustive);
        CHECK(b.eta == rat(1, 3));
        Trajectory traj = integrate(c, empty_network_labeling(c));
        CHECK(traj.end_time() <= b.t);
    }
    SECTION("exhaustive mode rejects oversized instances") {
        Rng rng(29);
        (void)rng;
        CHECK_THROWS_AS(convergence_bounds(c, cc, empty_network_labeling(c),
                                           EtaMode::exhaustive, nullptr, 1),
                        Error);
    }
}

TEST_CASE("potential laws along corpus trajectories") {
    for (const Network& net : acceptance_corpus()) {
        SteadyCert cert = make_steady_certificate(net);
        Trajectory traj = integrate(net, empty_network_labeling(net));
        auto slopes = potential_slopes(net, cert, traj);
        for (size_t k = 0; k < traj.phases.size(); ++k) {
            Rational phi = potential(net, cert, traj.phases[k].labels);
            CHECK(phi <= cert.opt);
            CHECK(slopes[k] >= 0);
            if (phi < cert.opt) CHECK(slopes[k] > 0);
        }
        // the slope computed from the interior configuration formula agrees
        for (size_t k = 0; k < traj.phases.size(); ++k) {
            Configuration aug_cfg;
            aug_cfg.active.assign(cert.augmented.arc_count(), 1);
            aug_cfg.resetting.assign(cert.augmented.arc_count(), 1);
            for (int i = 0; i < net.arc_count(); ++i) {
                aug_cfg.active[i] = traj.phases[k].interior_config.active[i];
                aug_cfg.resetting[i] = traj.phases[k].interior_config.resetting[i];
            }
            CHECK(potential_slope(cert, aug_cfg, traj.phases[k].direction) == slopes[k]);
        }
    }
}
