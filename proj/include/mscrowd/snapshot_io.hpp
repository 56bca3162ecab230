#pragma once

// Plain-text snapshot files.
//
// Density:   "nx ny h origin_x origin_y time" on the first line, then ny rows
//            (bottom row first) of nx space-separated coefficients.
// Velocity:  same header, each row holding nx interleaved pairs "vx vy".
// Agents:    one line per agent, "id x y role" with role follower|leader.
// Numbers carry nine significant digits.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mscrowd/desired_velocity.hpp"
#include "mscrowd/measures.hpp"

namespace mscrowd {

namespace detail {
inline std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_header(std::ostream& os, const Grid& g, double time) {
    os << g.nx << ' ' << g.ny << ' ' << fmt9(g.h) << ' ' << fmt9(g.origin.x) << ' ' << fmt9(g.origin.y) << ' '
       << fmt9(time) << '\n';
}

inline Grid read_header(std::istream& is, double& time) {
    int nx = 0, ny = 0;
    double h = 0.0, ox = 0.0, oy = 0.0;
    if (!(is >> nx >> ny >> h >> ox >> oy >> time)) throw std::runtime_error("snapshot: malformed header");
    return Grid({ox, oy}, h, nx, ny);
}
}  // namespace detail

inline void write_density(std::ostream& os, const MacroDensity& d, double time) {
    const Grid& g = d.grid;
    detail::write_header(os, g, time);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) os << (i ? " " : "") << detail::fmt9(d.at(i, j));
        os << '\n';
    }
}

inline MacroDensity read_density(std::istream& is, double* time = nullptr) {
    double t = 0.0;
    const Grid g = detail::read_header(is, t);
    MacroDensity d(g);
    for (double& r : d.rho)
        if (!(is >> r)) throw std::runtime_error("snapshot: truncated density data");
    if (time) *time = t;
    return d;
}

inline void write_velocity_field(std::ostream& os, const GridSampled& f) {
    const Grid& g = f.grid;
    detail::write_header(os, g, 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2& v = f.values[g.flat(i, j)];
            os << (i ? " " : "") << detail::fmt9(v.x) << ' ' << detail::fmt9(v.y);
        }
        os << '\n';
    }
}

inline GridSampled read_velocity_field(std::istream& is) {
    double t = 0.0;
    GridSampled f;
    f.grid = detail::read_header(is, t);
    f.values.resize(f.grid.cell_count());
    for (Vec2& v : f.values)
        if (!(is >> v.x >> v.y)) throw std::runtime_error("snapshot: truncated velocity data");
    return f;
}

inline GridSampled read_velocity_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open velocity field file " + path);
    return read_velocity_field(in);
}

inline void write_agents(std::ostream& os, const MicroState& m) {
    for (const Agent& a : m.agents)
        os << a.id << ' ' << detail::fmt9(a.position.x) << ' ' << detail::fmt9(a.position.y) << ' '
           << (a.role == Role::leader ? "leader" : "follower") << '\n';
}

inline MicroState read_agents(std::istream& is) {
    MicroState m;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Agent a;
        std::string role;
        if (!(ls >> a.id >> a.position.x >> a.position.y >> role)) throw std::runtime_error("agents: malformed line '" + line + "'");
        if (role == "leader") a.role = Role::leader;
        else if (role == "follower") a.role = Role::follower;
        else throw std::runtime_error("agents: unknown role '" + role + "'");
        m.agents.push_back(a);
    }
    return m;
}

}  // namespace mscrowd
