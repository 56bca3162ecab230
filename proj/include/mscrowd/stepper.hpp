#pragma once

// One explicit time step of the coupled agent/density system. Both scales of
// every population are moved by the same piecewise flow map x -> x + v dt.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mscrowd/desired_velocity.hpp"
#include "mscrowd/interaction.hpp"
#include "mscrowd/parallel.hpp"

namespace mscrowd {

struct StepControls {
    double dt_max = 0.01;
    double cfl = 1.0;
    double t_final = 1.0;

    bool valid() const noexcept { return dt_max > 0.0 && cfl > 0.0 && cfl <= 1.0 && t_final >= 0.0; }
    friend bool operator==(const StepControls&, const StepControls&) = default;
};

/// The leader ignores interactions, walks at `velocity`, and waits while the
/// followers' center of mass is farther than `stop_distance`.
struct LeaderRule {
    Vec2 velocity;
    double stop_distance = 1.5;
};

struct Population {
    std::string name;
    CrowdMeasure mass;
    InteractionSpec interaction;
    DesiredField desired = ZeroWithHeading{};
    Vec2 heading{1.0, 0.0};
    std::optional<LeaderRule> leader;
};

struct World {
    Geometry geometry;
    std::vector<Population> populations;
    StepControls controls;
    double time = 0.0;
    long steps = 0;
};

class CflViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// dt = min(dt_max, cfl h / max |v_i|); dt_max when every velocity vanishes.
inline double compute_dt(std::span<const Vec2> velocities, double h, const StepControls& c) {
    if (!(h > 0.0)) throw std::invalid_argument("compute_dt: h must be positive");
    double vmax = 0.0;
    for (const Vec2& v : velocities) vmax = std::max(vmax, norm(v));
    if (vmax == 0.0) return c.dt_max;
    return std::min(c.dt_max, c.cfl * h / vmax);
}

struct AgentMove {
    int id = 0;
    Vec2 from;
    Vec2 to;  // final position; for exits, the unconstrained target
    bool exited = false;
    int door = -1;
    Role role = Role::follower;
};

struct MicroAdvance {
    MicroState next;
    std::vector<AgentMove> moves;
};

/// P_j <- P_j + v_j dt, stopped by walls and obstacles; agents leaving through
/// an exit door are dropped.
inline MicroAdvance advance_micro(const MicroState& micro, std::span<const Vec2> velocities, double dt,
                                  const Geometry& geometry) {
    if (velocities.size() != micro.size()) throw std::invalid_argument("advance_micro: one velocity per agent required");
    MicroAdvance out;
    out.next.agents.reserve(micro.size());
    out.moves.reserve(micro.size());
    for (std::size_t k = 0; k < micro.size(); ++k) {
        const Agent& a = micro.agents[k];
        const Vec2 target = a.position + velocities[k] * dt;
        const MoveResult m = geometry.constrain_move(a.position, target);
        out.moves.push_back({a.id, a.position, m.position, m.exited, m.exit_door, a.role});
        if (!m.exited) out.next.agents.push_back({a.id, m.position, a.role});
    }
    return out;
}

struct MacroAdvance {
    MacroDensity next;
    std::vector<double> outflow_per_door;  // mass (unscaled) leaving through each door
    double outflow = 0.0;
    double redeposited = 0.0;  // mass kept in its source cell instead of entering a wall
};

/// rho_i^{n+1} = (1/h^2) sum_k rho_k^n |E_i ∩ (E_k + v_k dt)|. Each translated
/// cell meets at most a 2x2 block; pieces leaving through exit doors are
/// recorded as outflow, pieces that would enter walls or solid cells stay in
/// the source cell.
inline MacroAdvance advance_macro(const MacroDensity& density, std::span<const Vec2> cell_velocities, double dt,
                                  const Geometry& geometry) {
    const Grid& g = density.grid;
    if (cell_velocities.size() != g.cell_count()) throw std::invalid_argument("advance_macro: one velocity per cell required");
    MacroAdvance out;
    out.next = MacroDensity(g);
    out.outflow_per_door.assign(geometry.doors().size(), 0.0);
    const double h = g.h;
    const double area = g.cell_area();
    constexpr double cfl_slack = 1e-12;

    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        const double rho = density.rho[k];
        if (rho == 0.0) continue;
        const Vec2 disp = cell_velocities[k] * dt;
        if (norm(disp) > h * (1.0 + cfl_slack))
            throw CflViolation("advance_macro: CFL condition violated (|v| dt / h = " + std::to_string(norm(disp) / h) + ")");
        const double sx = std::clamp(disp.x / h, -1.0, 1.0);
        const double sy = std::clamp(disp.y / h, -1.0, 1.0);
        const CellIndex c = g.unflat(k);
        // per-axis destination slots and the fraction of the cell width landing in each
        const int ax[2] = {sx >= 0.0 ? c.i : c.i - 1, sx >= 0.0 ? c.i + 1 : c.i};
        const double fx[2] = {sx >= 0.0 ? 1.0 - sx : -sx, sx >= 0.0 ? sx : 1.0 + sx};
        const int ay[2] = {sy >= 0.0 ? c.j : c.j - 1, sy >= 0.0 ? c.j + 1 : c.j};
        const double fy[2] = {sy >= 0.0 ? 1.0 - sy : -sy, sy >= 0.0 ? sy : 1.0 + sy};
        const Rect moved = g.cell_rect(c.i, c.j).translated(disp);

        double kept = 0.0;
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const double frac = fx[a] * fy[b];
                if (frac == 0.0) continue;
                const int di = ax[a], dj = ay[b];
                if (g.in_range(di, dj)) {
                    const std::size_t dk = g.flat(di, dj);
                    if (geometry.cell_blocked(dk)) kept += frac;
                    else out.next.rho[dk] += rho * frac;
                    continue;
                }
                // piece outside the grid: only a single-wall ghost cell can be an exit
                const bool out_x = di < 0 || di >= g.nx;
                const bool out_y = dj < 0 || dj >= g.ny;
                double exited = 0.0;
                if (out_x != out_y) {
                    const Wall wall = out_x ? (di < 0 ? Wall::left : Wall::right) : (dj < 0 ? Wall::bottom : Wall::top);
                    const Rect piece{{std::max(moved.lo.x, g.edge_x(di)), std::max(moved.lo.y, g.edge_y(dj))},
                                     {std::min(moved.hi.x, g.edge_x(di + 1)), std::min(moved.hi.y, g.edge_y(dj + 1))}};
                    const double t0 = out_x ? piece.lo.y : piece.lo.x;
                    const double t1 = out_x ? piece.hi.y : piece.hi.x;
                    if (t1 > t0) {
                        for (std::size_t d = 0; d < geometry.doors().size(); ++d) {
                            if (!geometry.is_exit(d) || geometry.exit_wall(d) != wall) continue;
                            const DoorSegment& door = geometry.doors()[d];
                            const double share = interval_overlap(t0, t1, door.lo(), door.hi()) / (t1 - t0);
                            if (share <= 0.0) continue;
                            const double m = rho * frac * share * area;
                            out.outflow_per_door[d] += m;
                            out.outflow += m;
                            exited += frac * share;
                        }
                    }
                }
                kept += frac - exited;
            }
        if (kept > 0.0) {
            out.next.rho[k] += rho * kept;
            out.redeposited += rho * kept * area;
        }
    }
    return out;
}

struct PopulationStep {
    MicroAdvance micro;
    MacroAdvance macro;
    std::vector<Vec2> agent_velocities;
    std::vector<Vec2> cell_velocities;
    bool leader_halted = false;
};

struct StepReport {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<PopulationStep> populations;
};

namespace detail {

/// Center of mass of the follower part of a population's multiscale mass.
inline std::optional<Vec2> follower_centroid(const CrowdMeasure& cm) {
    Vec2 s;
    double m = 0.0;
    if (cm.theta > 0.0)
        for (const Agent& a : cm.micro.agents) {
            if (a.role != Role::follower) continue;
            s += cm.theta * a.position;
            m += cm.theta;
        }
    if (cm.theta < 1.0) {
        const Grid& g = cm.macro.grid;
        const double w = (1.0 - cm.theta) * cm.lambda * g.cell_area();
        for (std::size_t k = 0; k < g.cell_count(); ++k) {
            const double r = cm.macro.rho[k];
            if (r == 0.0) continue;
            s += (w * r) * g.center(k);
            m += w * r;
        }
    }
    if (!(m > 0.0)) return std::nullopt;
    return s * (1.0 / m);
}

struct Source {
    const CrowdMeasure* mass = nullptr;
    std::vector<Vec2> points;
    std::vector<std::size_t> cells;  // flat cell of each point
    NeighborGrid index;
};

inline constexpr std::size_t no_cell = static_cast<std::size_t>(-1);

// `cell` is the target cell for macroscopic targets, no_cell for agents.
inline Vec2 nu_from(const Vec2& x, std::size_t cell, const Source& src, const Vec2& heading, const KernelParams& p,
                    std::vector<std::size_t>& scratch) {
    const CrowdMeasure& cm = *src.mass;
    Vec2 v;
    if (cm.theta > 0.0) {
        v += cm.theta * (cell == no_cell ? nu_micro_at(x, src.points, src.index, heading, p, scratch)
                                         : nu_micro_at_cell(cell, cm.macro.grid, src.points, src.cells, src.index,
                                                            heading, p, scratch));
    }
    if (cm.theta < 1.0) v += ((1.0 - cm.theta) * cm.lambda) * nu_macro_at(x, cm.macro, heading, p);
    return v;
}

}  // namespace detail

/// Velocity field of population `p` at x: desired velocity plus the blended
/// endogenous/exogenous interaction, before projection. For a cell target
/// (x its center) the agents inside that cell are skipped.
inline Vec2 population_velocity(const World& world, std::size_t p, const Vec2& x, std::size_t cell,
                                const std::vector<detail::Source>& sources, std::vector<std::size_t>& scratch) {
    const Population& pop = world.populations[p];
    const Vec2 heading = heading_at(pop.desired, x, pop.heading);
    Vec2 v = eval_desired(pop.desired, x);
    const InteractionSpec& is = pop.interaction;
    const bool has_other = world.populations.size() == 2;
    const double w = has_other ? is.exogenous_weight : 0.0;
    if (w < 1.0) v += (1.0 - w) * detail::nu_from(x, cell, sources[p], heading, is.endogenous, scratch);
    if (has_other && w > 0.0) v += w * detail::nu_from(x, cell, sources[1 - p], heading, is.exogenous, scratch);
    return v;
}

/// Advances the world by one step. The step is a pure function of the frozen
/// state at t_n; `workers` only splits the per-target evaluations.
inline StepReport step(World& world, unsigned workers = 1) {
    const Geometry& geo = world.geometry;
    const Grid& g = geo.grid();
    const std::size_t np = world.populations.size();
    if (np == 0 || np > 2) throw std::invalid_argument("step: one or two populations supported");

    std::vector<detail::Source> sources(np);
    for (std::size_t p = 0; p < np; ++p) {
        const Population& pop = world.populations[p];
        double bucket = pop.interaction.endogenous.support();
        if (np == 2) bucket = std::max(bucket, world.populations[1 - p].interaction.exogenous.support());
        sources[p].mass = &pop.mass;
        sources[p].points = positions_of(pop.mass.micro);
        for (const Vec2& q : sources[p].points) {
            const auto c = cell_index(q, g);
            sources[p].cells.push_back(c ? g.flat(*c) : detail::no_cell);
        }
        sources[p].index = NeighborGrid(sources[p].points, bucket);
    }

    StepReport report;
    report.t0 = world.time;
    report.populations.resize(np);
    std::vector<std::vector<Vec2>> massive_velocities(np);

    for (std::size_t p = 0; p < np; ++p) {
        const Population& pop = world.populations[p];
        PopulationStep& ps = report.populations[p];

        // macroscopic targets: cell centers carrying mass
        std::vector<std::size_t> cells;
        for (std::size_t k = 0; k < g.cell_count(); ++k)
            if (pop.mass.macro.rho[k] > 0.0) cells.push_back(k);
        ps.cell_velocities.assign(g.cell_count(), Vec2{});
        parallel_for(cells.size(), workers, [&](std::size_t n) {
            thread_local std::vector<std::size_t> scratch;
            const std::size_t k = cells[n];
            const Vec2 v = population_velocity(world, p, g.center(k), k, sources, scratch);
            ps.cell_velocities[k] = geo.project_admissible_cell(v, k);
        });
        massive_velocities[p].reserve(cells.size());
        for (std::size_t k : cells) massive_velocities[p].push_back(ps.cell_velocities[k]);

        // microscopic targets
        const auto& agents = pop.mass.micro.agents;
        if (pop.leader) {
            const auto centroid = detail::follower_centroid(pop.mass);
            for (const Agent& a : agents)
                if (a.role == Role::leader && centroid && norm(a.position - *centroid) > pop.leader->stop_distance)
                    ps.leader_halted = true;
        }
        ps.agent_velocities.assign(agents.size(), Vec2{});
        parallel_for(agents.size(), workers, [&](std::size_t j) {
            thread_local std::vector<std::size_t> scratch;
            const Agent& a = agents[j];
            Vec2 v;
            if (a.role == Role::leader && pop.leader) v = ps.leader_halted ? Vec2{} : pop.leader->velocity;
            else v = population_velocity(world, p, a.position, detail::no_cell, sources, scratch);
            ps.agent_velocities[j] = geo.project_admissible(v, a.position);
        });
    }

    double dt = world.controls.dt_max;
    for (std::size_t p = 0; p < np; ++p) dt = std::min(dt, compute_dt(massive_velocities[p], g.h, world.controls));
    const double remaining = world.controls.t_final - world.time;
    if (remaining > 0.0 && remaining < dt) dt = remaining;
    report.dt = dt;

    for (std::size_t p = 0; p < np; ++p) {
        Population& pop = world.populations[p];
        PopulationStep& ps = report.populations[p];
        ps.micro = advance_micro(pop.mass.micro, ps.agent_velocities, dt, geo);
        ps.macro = advance_macro(pop.mass.macro, ps.cell_velocities, dt, geo);
    }
    for (std::size_t p = 0; p < np; ++p) {
        Population& pop = world.populations[p];
        pop.mass.micro = report.populations[p].micro.next;
        pop.mass.macro = report.populations[p].macro.next;
    }
    world.time = (remaining > 0.0 && dt == remaining) ? world.controls.t_final : world.time + dt;
    ++world.steps;
    return report;
}

/// Checks that every population is still exactly (agent list, nonnegative
/// cell density) on the world grid with agents in free space.
inline std::vector<std::string> audit_structure(const World& world) {
    std::vector<std::string> issues;
    const Geometry& geo = world.geometry;
    const Rect box = geo.domain();
    for (const Population& pop : world.populations) {
        const MacroDensity& d = pop.mass.macro;
        if (!(d.grid == geo.grid())) issues.push_back(pop.name + ": density grid differs from domain grid");
        if (d.rho.size() != geo.grid().cell_count()) issues.push_back(pop.name + ": coefficient count mismatch");
        for (std::size_t k = 0; k < d.rho.size(); ++k) {
            if (!std::isfinite(d.rho[k]) || d.rho[k] < 0.0) { issues.push_back(pop.name + ": negative or non-finite density"); break; }
            if (d.rho[k] != 0.0 && geo.cell_blocked(k)) { issues.push_back(pop.name + ": mass inside an obstacle"); break; }
        }
        for (const Agent& a : pop.mass.micro.agents) {
            if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y) || !box.contains(a.position))
                issues.push_back(pop.name + ": agent " + std::to_string(a.id) + " outside the domain");
            else if (geo.inside_obstacle(a.position))
                issues.push_back(pop.name + ": agent " + std::to_string(a.id) + " inside an obstacle");
        }
    }
    return issues;
}

}  // namespace mscrowd
