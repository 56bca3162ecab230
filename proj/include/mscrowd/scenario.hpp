#pragma once

// Declarative scenario description, validation, world construction and the
// built-in presets.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mscrowd/snapshot_io.hpp"
#include "mscrowd/stepper.hpp"

namespace mscrowd {

/// Initial agent placement: an evenly spaced lattice spanning `box`
/// (corners included) or an explicit point list.
struct Layout {
    enum class Kind { lattice, points };
    Kind kind = Kind::points;
    Rect box;
    int nx = 0;
    int ny = 0;
    std::vector<Vec2> points;

    std::vector<Vec2> positions() const {
        if (kind == Kind::points) return points;
        std::vector<Vec2> out;
        out.reserve(static_cast<std::size_t>(std::max(0, nx * ny)));
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double x = nx == 1 ? box.center().x : box.lo.x + i * (box.width() / (nx - 1));
                const double y = ny == 1 ? box.center().y : box.lo.y + j * (box.height() / (ny - 1));
                out.push_back({x, y});
            }
        return out;
    }
    std::size_t count() const noexcept {
        return kind == Kind::points ? points.size() : static_cast<std::size_t>(std::max(0, nx) * std::max(0, ny));
    }
    friend bool operator==(const Layout&, const Layout&) = default;
};

/// How a population's desired velocity is specified. `gate` builds a
/// cell-sampled field that funnels walkers toward the opening
/// [gate_lo, gate_hi] on the line x = gate_x and then straight on in
/// `direction` (+1 right, -1 left). `grid` loads a cell-sampled field file.
struct DesiredSpec {
    enum class Kind { zero, constant, toward, gate, grid };
    Kind kind = Kind::zero;
    Vec2 vector;  // constant velocity or target point
    double speed = 1.0;
    double gate_x = 0.0;
    double gate_lo = 0.0;
    double gate_hi = 0.0;
    int direction = 1;
    std::string path;
    friend bool operator==(const DesiredSpec&, const DesiredSpec&) = default;
};

struct LeaderConfig {
    Vec2 position;
    Vec2 velocity;
    double stop_distance = 1.5;
    friend bool operator==(const LeaderConfig&, const LeaderConfig&) = default;
};

struct PopulationConfig {
    std::string name = "crowd";
    double theta = 0.5;
    double macro_mass = 1.0;        // M0
    std::optional<double> lambda;   // when given, must equal N / M0
    Layout layout;
    std::optional<LeaderConfig> leader;
    KernelParams endogenous;
    KernelParams exogenous;
    double exogenous_weight = 0.0;
    DesiredSpec desired;
    Vec2 heading{1.0, 0.0};
    std::optional<Rect> probe;
    friend bool operator==(const PopulationConfig&, const PopulationConfig&) = default;
};

struct Scenario {
    std::string name = "scenario";
    Vec2 origin;
    Vec2 size{1.0, 1.0};
    double h = 0.1;
    bool seal_doors = false;
    std::vector<Obstacle> obstacles;
    std::vector<DoorSegment> doors;
    std::vector<PopulationConfig> populations;
    StepControls controls;
    double stop_fraction = 1e-6;
    long snapshot_every = 0;
    friend bool operator==(const Scenario&, const Scenario&) = default;

    Rect domain() const noexcept { return {origin, origin + size}; }
    Rect probe_of(std::size_t p) const { return populations.at(p).probe.value_or(domain()); }
};

namespace detail {
inline bool cells_fit(double length, double h) {
    const double n = length / h;
    return n >= 1.0 - 1e-9 && std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n);
}
}  // namespace detail

/// Every violated invariant, as readable messages; empty when valid.
inline std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> v;
    const Rect box = s.domain();
    if (!(s.h > 0.0)) v.push_back("domain: cell size h must be positive");
    else if (!detail::cells_fit(s.size.x, s.h) || !detail::cells_fit(s.size.y, s.h))
        v.push_back("domain: size must be a positive integer multiple of h");
    if (!s.controls.valid()) v.push_back("controls: need dt_max > 0, 0 < cfl <= 1, t_final >= 0");
    if (!(s.stop_fraction >= 0.0 && s.stop_fraction < 1.0)) v.push_back("controls: stop_fraction must lie in [0, 1)");
    if (s.snapshot_every < 0) v.push_back("controls: snapshot_every must be >= 0");
    for (std::size_t k = 0; k < s.obstacles.size(); ++k) {
        const Rect& r = s.obstacles[k].rect;
        if (!(r.width() > 0.0 && r.height() > 0.0)) v.push_back("obstacle " + std::to_string(k) + ": empty interior");
        if (!box.contains(r.lo) || !box.contains(r.hi)) v.push_back("obstacle " + std::to_string(k) + ": outside the domain");
    }
    for (std::size_t k = 0; k < s.doors.size(); ++k) {
        const DoorSegment& d = s.doors[k];
        const std::string tag = "door " + std::to_string(k);
        if (d.a == d.b) v.push_back(tag + ": endpoints coincide");
        else if (d.a.x != d.b.x && d.a.y != d.b.y) v.push_back(tag + ": segment must be axis-aligned");
        if (!box.contains(d.a) || !box.contains(d.b)) v.push_back(tag + ": outside the domain");
        const bool unit = std::abs(norm(d.outward) - 1.0) < 1e-12;
        const bool normal = d.a.x == d.b.x ? d.outward.y == 0.0 : d.outward.x == 0.0;
        if (!unit || !normal) v.push_back(tag + ": outward must be a unit normal to the segment");
    }
    if (s.populations.empty() || s.populations.size() > 2) v.push_back("populations: one or two required");
    for (std::size_t p = 0; p < s.populations.size(); ++p) {
        const PopulationConfig& c = s.populations[p];
        const std::string tag = "population " + std::to_string(p);
        if (!(c.theta >= 0.0 && c.theta <= 1.0)) v.push_back(tag + ": theta out of range");
        if (!(c.exogenous_weight >= 0.0 && c.exogenous_weight <= 1.0)) v.push_back(tag + ": exogenous_weight out of range");
        if (!c.endogenous.valid()) v.push_back(tag + ": invalid endogenous kernel parameters");
        if (!c.exogenous.valid()) v.push_back(tag + ": invalid exogenous kernel parameters");
        const double n = static_cast<double>(c.layout.count());
        if (c.layout.kind == Layout::Kind::lattice && (c.layout.nx < 1 || c.layout.ny < 1))
            v.push_back(tag + ": lattice counts must be >= 1");
        if (n > 0.0 && !(c.macro_mass > 0.0)) v.push_back(tag + ": macro_mass must be positive");
        if (c.lambda) {
            if (!(*c.lambda > 0.0)) v.push_back(tag + ": lambda must be positive");
            else if (n > 0.0 && std::abs(*c.lambda * c.macro_mass - n) > 1e-9 * n)
                v.push_back(tag + ": lambda inconsistent with agent count and macro_mass");
        }
        std::vector<Vec2> pts = c.layout.positions();
        if (c.leader) pts.push_back(c.leader->position);
        for (const Vec2& q : pts) {
            if (!box.contains(q) || q.x >= box.hi.x || q.y >= box.hi.y) { v.push_back(tag + ": agent outside the domain"); break; }
        }
        for (const Vec2& q : pts) {
            if (std::any_of(s.obstacles.begin(), s.obstacles.end(), [&](const Obstacle& o) { return o.rect.contains_interior(q); })) {
                v.push_back(tag + ": agent inside obstacle");
                break;
            }
        }
        std::set<std::pair<double, double>> seen;
        for (const Vec2& q : pts)
            if (!seen.insert({q.x, q.y}).second) { v.push_back(tag + ": agent positions must be distinct"); break; }
        if (c.leader && !(c.leader->stop_distance > 0.0)) v.push_back(tag + ": leader stop_distance must be positive");
        if (c.probe && (!box.contains(c.probe->lo) || !box.contains(c.probe->hi) || !(c.probe->area() > 0.0)))
            v.push_back(tag + ": probe region must be a nonempty rectangle inside the domain");
        if (!(norm(c.heading) > 0.0)) v.push_back(tag + ": heading must be nonzero");
        const DesiredSpec& d = c.desired;
        if ((d.kind == DesiredSpec::Kind::toward || d.kind == DesiredSpec::Kind::gate) && !(d.speed > 0.0))
            v.push_back(tag + ": desired speed must be positive");
        if (d.kind == DesiredSpec::Kind::gate && (!(d.gate_hi > d.gate_lo) || (d.direction != 1 && d.direction != -1)))
            v.push_back(tag + ": gate needs gate_hi > gate_lo and direction +1 or -1");
        if (d.kind == DesiredSpec::Kind::grid && d.path.empty()) v.push_back(tag + ": grid desired field needs a path");
    }
    return v;
}

/// Tabulates the funnel field of a `gate` spec at the cell centers of `grid`.
inline GridSampled gate_field(const DesiredSpec& d, const Grid& grid) {
    GridSampled f{grid, std::vector<Vec2>(grid.cell_count())};
    const double margin = std::min(0.1 * (d.gate_hi - d.gate_lo), 0.5 * grid.h + 1e-12);
    const Vec2 straight{static_cast<double>(d.direction) * d.speed, 0.0};
    for (std::size_t k = 0; k < grid.cell_count(); ++k) {
        const Vec2 x = grid.center(k);
        if ((x.x - d.gate_x) * d.direction >= 0.0) { f.values[k] = straight; continue; }
        const Vec2 aim{d.gate_x, std::clamp(x.y, d.gate_lo + margin, d.gate_hi - margin)};
        const Vec2 dir = normalized(aim - x);
        f.values[k] = dir * d.speed;
    }
    return f;
}

inline DesiredField make_desired(const DesiredSpec& d, const Grid& grid, const Vec2& heading) {
    switch (d.kind) {
        case DesiredSpec::Kind::zero: return ZeroWithHeading{heading};
        case DesiredSpec::Kind::constant: return ConstantField{d.vector};
        case DesiredSpec::Kind::toward: return TowardTarget{d.vector, d.speed};
        case DesiredSpec::Kind::gate: return gate_field(d, grid);
        case DesiredSpec::Kind::grid: return read_velocity_field(d.path);
    }
    return ZeroWithHeading{heading};
}

inline Geometry make_geometry(const Scenario& s) {
    const Grid grid(s.origin, s.h, static_cast<int>(std::lround(s.size.x / s.h)), static_cast<int>(std::lround(s.size.y / s.h)));
    return Geometry(grid, s.obstacles, s.doors, s.seal_doors);
}

class InvalidScenario : public std::invalid_argument {
public:
    explicit InvalidScenario(std::vector<std::string> v)
        : std::invalid_argument(join(v)), violations(std::move(v)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid scenario";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
};

/// Builds the initial world: agents on their layouts, Lambda = N / M0, and
/// the initial density by ball averaging with a tuned radius.
inline World build_world(const Scenario& s) {
    if (auto v = validate(s); !v.empty()) throw InvalidScenario(std::move(v));
    World w;
    w.geometry = make_geometry(s);
    w.controls = s.controls;
    for (const PopulationConfig& c : s.populations) {
        Population pop;
        pop.name = c.name;
        pop.mass.theta = c.theta;
        int id = 0;
        for (const Vec2& q : c.layout.positions()) pop.mass.micro.agents.push_back({id++, q, Role::follower});
        if (c.leader) {
            pop.mass.micro.agents.push_back({id++, c.leader->position, Role::leader});
            pop.leader = LeaderRule{c.leader->velocity, c.leader->stop_distance};
        }
        const double n = static_cast<double>(c.layout.count());
        if (n > 0.0) {
            pop.mass.lambda = compute_lambda(n, c.macro_mass);
            pop.mass.macro = tune_xi(pop.mass.micro, pop.mass.lambda, w.geometry).density;
        } else {
            pop.mass.lambda = c.lambda.value_or(1.0);
            pop.mass.macro = MacroDensity(w.geometry.grid());
        }
        pop.interaction = {c.endogenous, c.exogenous, c.exogenous_weight};
        pop.heading = c.heading;
        pop.desired = make_desired(c.desired, w.geometry.grid(), c.heading);
        w.populations.push_back(std::move(pop));
    }
    return w;
}

/// Names accepted by preset().
inline std::vector<std::string> preset_names() { return {"test1", "test2_small", "test2_large", "test3", "test4"}; }

/// Built-in scenarios. Tabulated parameters (theta range, N, Lambda, kernel
/// strengths and radii) follow the reference tests; the geometry not fixed
/// there (block sizes, spacings, corridor and room layout) is chosen here.
inline Scenario preset(const std::string& name) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    Scenario s;
    s.name = name;
    if (name == "test1") {
        // crowd at rest, frontal repulsion only
        s.origin = {0.0, 0.0};
        s.size = {5.0, 4.0};
        s.h = 0.05;
        s.controls = {0.01, 0.9, 1.0};
        PopulationConfig c;
        c.name = "crowd";
        c.theta = 0.3;
        c.layout = {Layout::Kind::lattice, {{1.6, 1.1}, {3.4, 2.9}}, 10, 10, {}};
        c.lambda = 10.0;
        c.macro_mass = 100.0 / 10.0;
        c.endogenous = {0.1, 0.0, 0.5, 0.5, half_pi};
        c.exogenous = c.endogenous;
        c.desired.kind = DesiredSpec::Kind::zero;
        c.heading = {1.0, 0.0};
        s.populations.push_back(c);
    } else if (name == "test2_small" || name == "test2_large") {
        // room [0,3]x[0,4] left through a 0.5 wide door in the right wall
        const bool large = name == "test2_large";
        s.origin = {0.0, 0.0};
        s.size = {3.0, 4.0};
        s.h = 0.05;
        s.controls = {0.01, 0.9, 60.0};
        s.doors.push_back({{3.0, 1.75}, {3.0, 2.25}, {1.0, 0.0}});
        PopulationConfig c;
        c.name = "crowd";
        c.theta = 0.5;
        const double n = large ? 100.0 : 10.0;
        c.lambda = n;
        c.macro_mass = 1.0;
        c.layout = large ? Layout{Layout::Kind::lattice, {{0.6, 1.1}, {2.4, 2.9}}, 10, 10, {}}
                         : Layout{Layout::Kind::lattice, {{1.0, 1.2}, {2.0, 2.8}}, 2, 5, {}};
        c.endogenous = {0.1, 0.0, 0.25, 0.25, half_pi};
        c.exogenous = c.endogenous;
        c.desired = {DesiredSpec::Kind::toward, {3.0, 2.0}, 1.0, 0.0, 0.0, 0.0, 1, ""};
        c.probe = Rect{{0.0, 0.0}, {3.0, 4.0}};
        s.populations.push_back(c);
    } else if (name == "test3") {
        // two groups crossing a unit-wide passage in a wall at x in [4.8, 5.2]
        s.origin = {0.0, 0.0};
        s.size = {10.0, 5.0};
        s.h = 0.1;
        s.controls = {0.01, 0.9, 20.0};
        s.obstacles = {{{{4.8, 0.0}, {5.2, 2.0}}}, {{{4.8, 3.0}, {5.2, 5.0}}}};
        s.doors = {{{5.0, 2.0}, {5.0, 3.0}, {1.0, 0.0}},
                   {{0.0, 0.0}, {0.0, 5.0}, {-1.0, 0.0}},
                   {{10.0, 0.0}, {10.0, 5.0}, {1.0, 0.0}}};
        for (int p = 0; p < 2; ++p) {
            const bool right = p == 0;
            PopulationConfig c;
            c.name = right ? "rightward" : "leftward";
            c.theta = 0.3;
            c.lambda = 30.0;
            c.macro_mass = 1.0;
            c.layout = right ? Layout{Layout::Kind::lattice, {{2.0, 1.5}, {3.5, 3.5}}, 6, 5, {}}
                             : Layout{Layout::Kind::lattice, {{6.5, 1.5}, {8.0, 3.5}}, 6, 5, {}};
            c.endogenous = {0.1, 0.0, 0.2, 0.2, half_pi};
            c.exogenous = {0.1, 0.0, 0.35, 0.35, half_pi};
            c.exogenous_weight = 0.65;
            c.desired.kind = DesiredSpec::Kind::gate;
            c.desired.speed = 1.0;
            c.desired.gate_x = right ? 4.8 : 5.2;
            c.desired.gate_lo = 2.0;
            c.desired.gate_hi = 3.0;
            c.desired.direction = right ? 1 : -1;
            c.heading = {right ? 1.0 : -1.0, 0.0};
            c.probe = right ? Rect{{0.0, 0.0}, {5.0, 5.0}} : Rect{{5.0, 0.0}, {10.0, 5.0}};
            s.populations.push_back(c);
        }
    } else if (name == "test4") {
        // 25 followers behind one leader walking at 0.4 along +x
        s.origin = {0.0, 0.0};
        s.size = {10.0, 4.0};
        s.h = 0.1;
        s.controls = {0.01, 0.9, 10.0};
        PopulationConfig c;
        c.name = "group";
        c.theta = 0.3;
        c.lambda = 80.0;
        c.macro_mass = 25.0 / 80.0;
        c.layout = {Layout::Kind::lattice, {{1.0, 1.4}, {2.2, 2.6}}, 5, 5, {}};
        c.leader = LeaderConfig{{2.7, 2.0}, {0.4, 0.0}, 1.5};
        c.endogenous = {0.05, 0.4, 1.5, 1.5, half_pi};
        c.exogenous = c.endogenous;
        c.desired.kind = DesiredSpec::Kind::zero;
        c.heading = {1.0, 0.0};
        s.populations.push_back(c);
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return s;
}

}  // namespace mscrowd
