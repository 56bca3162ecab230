#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mscrowd/stepper.hpp"

using namespace mscrowd;

namespace {

constexpr double pi = std::numbers::pi;

MicroState agents_at(const std::vector<Vec2>& pts) {
    MicroState m;
    int id = 0;
    for (const Vec2& p : pts) m.agents.push_back({id++, p, Role::follower});
    return m;
}

// Exact overlap formula written cell pair by cell pair, no CFL shortcuts.
MacroDensity overlap_oracle(const MacroDensity& d, const std::vector<Vec2>& vel, double dt) {
    const Grid& g = d.grid;
    MacroDensity out(g);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        if (d.rho[k] == 0.0) continue;
        const CellIndex c = g.unflat(k);
        const Rect moved = g.cell_rect(c.i, c.j).translated(vel[k] * dt);
        for (std::size_t q = 0; q < g.cell_count(); ++q) {
            const CellIndex e = g.unflat(q);
            out.rho[q] += d.rho[k] * rect_overlap_area(g.cell_rect(e.i, e.j), moved) / (g.h * g.h);
        }
    }
    return out;
}

// Random interior density (outer ring empty) with velocities below the CFL bound.
struct Instance {
    MacroDensity density;
    std::vector<Vec2> velocity;
    double dt;
};

Instance random_instance(std::mt19937& rng, int n = 20, double h = 0.1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Grid g({0, 0}, h, n, n);
    Instance in{MacroDensity(g), std::vector<Vec2>(g.cell_count()), 0.05};
    for (int j = 1; j + 1 < n; ++j)
        for (int i = 1; i + 1 < n; ++i) {
            if (u(rng) < 0.2) continue;
            in.density.at(i, j) = 5.0 * u(rng);
            const double s = u(rng) * h / in.dt, a = 2 * pi * u(rng);
            in.velocity[g.flat(i, j)] = {s * std::cos(a), s * std::sin(a)};
        }
    return in;
}

Population population(const std::string& name, CrowdMeasure m, KernelParams k, DesiredField desired = ZeroWithHeading{}) {
    Population p;
    p.name = name;
    p.mass = std::move(m);
    p.interaction.endogenous = k;
    p.interaction.exogenous = k;
    p.desired = std::move(desired);
    return p;
}

World random_world(std::mt19937& rng, double theta, bool with_obstacle) {
    std::uniform_real_distribution<double> u(0.3, 2.7);
    const Grid g({0, 0}, 0.1, 30, 30);
    std::vector<Obstacle> obs;
    if (with_obstacle) obs.push_back({{{1.4, 1.4}, {1.8, 1.8}}});
    World w;
    w.geometry = Geometry(g, obs, {});
    std::vector<Vec2> pts;
    while (pts.size() < 25) {
        const Vec2 p{u(rng), u(rng)};
        if (!w.geometry.inside_obstacle(p)) pts.push_back(p);
    }
    MacroDensity d(g);
    for (std::size_t k = 0; k < g.cell_count(); ++k)
        if (!w.geometry.cell_blocked(k)) d.rho[k] = u(rng);
    const KernelParams kp{0.1, 0.05, 0.5, 0.8, pi / 2};
    w.populations.push_back(population("a", {agents_at(pts), d, theta, 10.0}, kp, TowardTarget{{3.0, 1.5}, 1.0}));
    w.controls = {0.05, 1.0, 10.0};
    return w;
}

}  // namespace

TEST(ComputeDt, Examples) {
    const StepControls big{1e9, 1.0, 1.0};
    const std::vector<Vec2> two{{0, 0}, {2, 0}, {1, 1}};
    EXPECT_DOUBLE_EQ(compute_dt(two, 0.1, big), 0.05);
    const std::vector<Vec2> zero(5);
    EXPECT_EQ(compute_dt(zero, 0.1, {0.3, 1.0, 1.0}), 0.3);
    const std::vector<Vec2> one{{0.6, 0.8}};
    EXPECT_DOUBLE_EQ(compute_dt(one, 0.1, big), 0.1);
    EXPECT_DOUBLE_EQ(compute_dt(one, 0.1, {1e9, 0.5, 1.0}), 0.05);
    EXPECT_EQ(compute_dt(one, 0.1, {0.02, 1.0, 1.0}), 0.02);
    EXPECT_THROW(compute_dt(one, 0.0, big), std::invalid_argument);
}

TEST(AdvanceMicro, Examples) {
    const Geometry geo(Grid({-1, -1}, 0.1, 20, 20), {}, {});
    const std::vector<Vec2> v{{1, 0}, {0, 0}};
    const MicroAdvance r = advance_micro(agents_at({{0, 0}, {0.3, 0.3}}), v, 0.1, geo);
    EXPECT_EQ(r.next.agents[0].position, (Vec2{0.1, 0}));
    EXPECT_EQ(r.next.agents[1].position, (Vec2{0.3, 0.3}));
    EXPECT_EQ(r.moves.size(), 2u);
    EXPECT_THROW(advance_micro(agents_at({{0, 0}}), v, 0.1, geo), std::invalid_argument);
}

TEST(AdvanceMicro, SlidesAlongWallAfterProjection) {
    const Geometry geo(Grid({0, 0}, 0.1, 10, 10), {}, {});
    const Vec2 x{0.5, 0.0};
    const Vec2 v = geo.project_admissible({0.3, -0.4}, x);
    const std::vector<Vec2> vel{v};
    const MicroAdvance r = advance_micro(agents_at({x}), vel, 0.1, geo);
    EXPECT_DOUBLE_EQ(r.next.agents[0].position.x, 0.53);
    EXPECT_EQ(r.next.agents[0].position.y, 0.0);
}

TEST(AdvanceMicro, ExitRemovesAgent) {
    const Geometry geo(Grid({0, 0}, 0.1, 10, 10), {}, {{{1, 0.4}, {1, 0.6}, {1, 0}}});
    const std::vector<Vec2> vel{{1, 0}, {1, 0}};
    const MicroAdvance r = advance_micro(agents_at({{0.95, 0.5}, {0.95, 0.8}}), vel, 0.1, geo);
    ASSERT_EQ(r.next.size(), 1u);
    EXPECT_EQ(r.next.agents[0].id, 1);
    EXPECT_TRUE(r.moves[0].exited);
    EXPECT_EQ(r.moves[0].door, 0);
    EXPECT_LT(r.next.agents[0].position.x, 1.0);
}

TEST(AdvanceMacro, WholeCellShift) {
    const Grid g({0, 0}, 0.1, 8, 8);
    const Geometry geo(g, {}, {});
    MacroDensity d(g);
    d.at(2, 3) = 4.0;
    d.at(5, 5) = 1.5;
    const std::vector<Vec2> vel(g.cell_count(), Vec2{0.1 / 0.05, 0.0});
    const MacroAdvance r = advance_macro(d, vel, 0.05, geo);
    EXPECT_DOUBLE_EQ(r.next.at(3, 3), 4.0);
    EXPECT_DOUBLE_EQ(r.next.at(6, 5), 1.5);
    EXPECT_EQ(r.next.at(2, 3), 0.0);
    EXPECT_EQ(r.outflow, 0.0);
    EXPECT_EQ(r.redeposited, 0.0);
}

TEST(AdvanceMacro, HalfCellSplit) {
    const Grid g({0, 0}, 0.1, 8, 8);
    const Geometry geo(g, {}, {});
    MacroDensity d(g);
    d.at(2, 3) = 4.0;
    const std::vector<Vec2> vel(g.cell_count(), Vec2{0.1 / (2 * 0.05), 0.0});
    const MacroAdvance r = advance_macro(d, vel, 0.05, geo);
    EXPECT_DOUBLE_EQ(r.next.at(2, 3), 2.0);
    EXPECT_DOUBLE_EQ(r.next.at(3, 3), 2.0);
    EXPECT_NEAR(r.next.total_mass(), d.total_mass(), 1e-15);
}

TEST(AdvanceMacro, ZeroVelocityUnchanged) {
    std::mt19937 rng(1);
    Instance in = random_instance(rng);
    const Geometry geo(in.density.grid, {}, {});
    std::fill(in.velocity.begin(), in.velocity.end(), Vec2{});
    EXPECT_EQ(advance_macro(in.density, in.velocity, 0.05, geo).next.rho, in.density.rho);
}

TEST(AdvanceMacro, RejectsCflViolation) {
    const Grid g({0, 0}, 0.1, 8, 8);
    const Geometry geo(g, {}, {});
    MacroDensity d(g);
    d.at(4, 4) = 1.0;
    const std::vector<Vec2> vel(g.cell_count(), Vec2{2.5, 0.0});
    EXPECT_THROW(advance_macro(d, vel, 0.05, geo), CflViolation);
    EXPECT_NO_THROW(advance_macro(d, vel, 0.04, geo));
}

TEST(AdvanceMacro, MatchesExactOverlapOracle) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = random_instance(rng);
        const Geometry geo(in.density.grid, {}, {});
        const MacroAdvance r = advance_macro(in.density, in.velocity, in.dt, geo);
        const MacroDensity o = overlap_oracle(in.density, in.velocity, in.dt);
        for (std::size_t k = 0; k < o.rho.size(); ++k) ASSERT_NEAR(r.next.rho[k], o.rho[k], 1e-12);
    }
}

TEST(AdvanceMacro, MatchesMonteCarloPushForward) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Instance in = random_instance(rng);
    const Grid& g = in.density.grid;
    const Geometry geo(g, {}, {});
    const MacroDensity scheme = advance_macro(in.density, in.velocity, in.dt, geo).next;
    const int per_cell = 1000;
    MacroDensity mc(g);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        if (in.density.rho[k] == 0.0) continue;
        const CellIndex c = g.unflat(k);
        const double w = in.density.rho[k] / per_cell;
        for (int s = 0; s < per_cell; ++s) {
            const Vec2 x{g.edge_x(c.i) + u(rng) * g.h, g.edge_y(c.j) + u(rng) * g.h};
            const auto e = cell_index(x + in.velocity[k] * in.dt, g);
            ASSERT_TRUE(e);
            mc.at(e->i, e->j) += w;
        }
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < g.cell_count(); ++k) diff += std::abs(mc.rho[k] - scheme.rho[k]) * g.cell_area();
    EXPECT_LT(diff / scheme.total_mass(), 0.03);
}

TEST(AdvanceMacro, PositivityAndConservationInClosedBox) {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Grid g({0, 0}, 0.1, 16, 16);
    const Geometry geo(g, {{{{0.6, 0.6}, {1.0, 0.9}}}}, {});
    for (int trial = 0; trial < 50; ++trial) {
        MacroDensity d(g);
        std::vector<Vec2> vel(g.cell_count());
        for (std::size_t k = 0; k < g.cell_count(); ++k) {
            if (geo.cell_blocked(k)) continue;
            d.rho[k] = u(rng) < 0.3 ? 0.0 : u(rng);
            const double a = 2 * pi * u(rng);
            vel[k] = geo.project_admissible_cell({2 * u(rng) * std::cos(a), 2 * u(rng) * std::sin(a)}, k);
        }
        const MacroAdvance r = advance_macro(d, vel, 0.05, geo);
        for (std::size_t k = 0; k < g.cell_count(); ++k) {
            ASSERT_GE(r.next.rho[k], 0.0);
            if (geo.cell_blocked(k)) { ASSERT_EQ(r.next.rho[k], 0.0); }
        }
        EXPECT_NEAR(r.next.total_mass(), d.total_mass(), 1e-12 * d.total_mass());
        EXPECT_EQ(r.outflow, 0.0);
    }
}

TEST(AdvanceMacro, OutflowThroughExitDoor) {
    const Grid g({0, 0}, 0.1, 10, 10);
    const DoorSegment door{{1, 0.4}, {1, 0.6}, {1, 0}};
    const Geometry geo(g, {}, {door});
    MacroDensity d(g);
    d.at(9, 4) = 2.0;  // fully in front of the door
    d.at(9, 8) = 3.0;  // against the wall
    std::vector<Vec2> vel(g.cell_count(), Vec2{1.0, 0.0});
    for (std::size_t k = 0; k < g.cell_count(); ++k) vel[k] = geo.project_admissible_cell(vel[k], k);
    const MacroAdvance r = advance_macro(d, vel, 0.05, geo);
    EXPECT_DOUBLE_EQ(r.outflow, 2.0 * 0.5 * 0.01);
    EXPECT_DOUBLE_EQ(r.outflow_per_door[0], r.outflow);
    EXPECT_DOUBLE_EQ(r.next.at(9, 4), 1.0);
    EXPECT_DOUBLE_EQ(r.next.at(9, 8), 3.0);
    EXPECT_NEAR(r.next.total_mass() + r.outflow, d.total_mass(), 1e-15);
    // sealed doors keep everything
    const Geometry closed(g, {}, {door}, true);
    const MacroAdvance s = advance_macro(d, vel, 0.05, closed);
    EXPECT_EQ(s.outflow, 0.0);
    EXPECT_NEAR(s.next.total_mass(), d.total_mass(), 1e-15);
}

TEST(Step, ClosedDomainConservesBothScales) {
    std::mt19937 rng(17);
    for (double theta : {0.0, 0.3, 1.0}) {
        World w = random_world(rng, theta, true);
        const double m0 = w.populations[0].mass.macro.total_mass();
        const std::size_t n0 = w.populations[0].mass.micro.size();
        for (int s = 0; s < 20; ++s) {
            step(w);
            const auto& pm = w.populations[0].mass;
            ASSERT_EQ(pm.micro.size(), n0);
            ASSERT_NEAR(pm.macro.total_mass(), m0, 1e-12 * m0);
            ASSERT_TRUE(audit_structure(w).empty());
        }
        EXPECT_EQ(w.steps, 20);
    }
}

TEST(Step, TimeStepRespectsCflAndHorizon) {
    std::mt19937 rng(19);
    World w = random_world(rng, 0.5, false);
    w.controls.t_final = 0.12;
    double t = 0.0;
    while (w.time < w.controls.t_final) {
        const StepReport r = step(w);
        EXPECT_LE(r.dt, w.controls.dt_max);
        for (const Vec2& v : r.populations[0].cell_velocities) EXPECT_LE(norm(v) * r.dt, w.geometry.grid().h * (1 + 1e-12));
        t += r.dt;
    }
    EXPECT_EQ(w.time, 0.12);
    EXPECT_NEAR(t, 0.12, 1e-12);
}

TEST(Step, MicroOnlyTracersAtThetaZero) {
    std::mt19937 rng(23);
    World a = random_world(rng, 0.0, false);
    World b = a;
    for (Agent& ag : b.populations[0].mass.micro.agents) ag.position = ag.position + Vec2{0.05, -0.03};
    const StepReport ra = step(a);
    const StepReport rb = step(b);
    // agent positions do not feed back into the density
    EXPECT_EQ(a.populations[0].mass.macro.rho, b.populations[0].mass.macro.rho);
    EXPECT_EQ(ra.dt, rb.dt);
    // agents follow the macro-assembled field
    World c = random_world(rng, 0.0, false);
    const Population frozen = c.populations[0];
    const StepReport rc = step(c);
    for (std::size_t j = 0; j < frozen.mass.micro.size(); ++j) {
        const Vec2 x = frozen.mass.micro.agents[j].position;
        const Vec2 heading = heading_at(frozen.desired, x, frozen.heading);
        const Vec2 v = eval_desired(frozen.desired, x) +
                       frozen.mass.lambda * nu_macro_at(x, frozen.mass.macro, heading, frozen.interaction.endogenous);
        const Vec2 pv = c.geometry.project_admissible(v, x);
        EXPECT_NEAR(rc.populations[0].agent_velocities[j].x, pv.x, 1e-12);
        EXPECT_NEAR(rc.populations[0].agent_velocities[j].y, pv.y, 1e-12);
    }
}

TEST(Step, DecoupledAdvectionMovesBothScalesAlike) {
    const Grid g({0, 0}, 0.1, 30, 30);
    World w;
    w.geometry = Geometry(g, {}, {});
    MacroDensity d(g);
    d.at(10, 10) = 1.0;
    d.at(11, 10) = 2.0;
    d.at(10, 11) = 0.5;
    const Vec2 com0 = (0.01 * (1.0 * g.center(10, 10) + 2.0 * g.center(11, 10) + 0.5 * g.center(10, 11))) * (1.0 / d.total_mass());
    const KernelParams none{0.0, 0.0, 0.5, 0.5, pi / 2};
    w.populations.push_back(population("a", {agents_at({com0}), d, 0.5, 1.0}, none, ConstantField{{0.3, 0.1}}));
    w.controls = {0.1, 1.0, 1.0};
    for (int s = 0; s < 5; ++s) step(w);
    const Vec2 expected = com0 + Vec2{0.3, 0.1} * w.time;
    const auto& m = w.populations[0].mass;
    EXPECT_NEAR(m.micro.agents[0].position.x, expected.x, 1e-12);
    EXPECT_NEAR(m.micro.agents[0].position.y, expected.y, 1e-12);
    Vec2 com;
    for (std::size_t k = 0; k < g.cell_count(); ++k) com += (m.macro.rho[k] * g.cell_area()) * g.center(k);
    com = com * (1.0 / m.macro.total_mass());
    EXPECT_NEAR(com.x, expected.x, 1e-12);
    EXPECT_NEAR(com.y, expected.y, 1e-12);
}

TEST(Step, LeaderWaitsForFollowers) {
    const Grid g({0, 0}, 0.1, 60, 30);
    World w;
    w.geometry = Geometry(g, {}, {});
    MicroState m = agents_at({{1.0, 1.5}, {1.2, 1.5}});
    m.agents.push_back({2, {4.0, 1.5}, Role::leader});
    Population p = population("group", {m, MacroDensity(g), 1.0, 1.0}, {0.0, 0.0, 1.0, 1.0, pi / 2});
    p.leader = LeaderRule{{0.4, 0.0}, 1.5};
    w.populations.push_back(p);
    w.controls = {0.05, 1.0, 10.0};
    StepReport r = step(w);
    EXPECT_TRUE(r.populations[0].leader_halted);
    EXPECT_EQ(w.populations[0].mass.micro.agents[2].position, (Vec2{4.0, 1.5}));
    w.populations[0].mass.micro.agents[2].position = {2.0, 1.5};
    r = step(w);
    EXPECT_FALSE(r.populations[0].leader_halted);
    EXPECT_NEAR(w.populations[0].mass.micro.agents[2].position.x, 2.0 + 0.4 * 0.05, 1e-15);
}

TEST(Step, WorkerCountDoesNotChangeResult) {
    std::mt19937 rng(29);
    World a = random_world(rng, 0.4, true);
    World b = a;
    for (int s = 0; s < 5; ++s) {
        step(a, 1);
        step(b, 4);
    }
    EXPECT_EQ(a.populations[0].mass.macro.rho, b.populations[0].mass.macro.rho);
    EXPECT_EQ(a.populations[0].mass.micro, b.populations[0].mass.micro);
    EXPECT_EQ(a.time, b.time);
}

TEST(AuditStructure, FlagsBrokenStates) {
    std::mt19937 rng(31);
    World w = random_world(rng, 0.5, true);
    EXPECT_TRUE(audit_structure(w).empty());
    World neg = w;
    neg.populations[0].mass.macro.rho[3] = -1e-3;
    EXPECT_FALSE(audit_structure(neg).empty());
    World inside = w;
    inside.populations[0].mass.micro.agents[0].position = {1.6, 1.6};
    EXPECT_FALSE(audit_structure(inside).empty());
}
