#pragma once

// Atomic (agents), absolutely continuous (cell density) and multiscale mass.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mscrowd/geometry.hpp"

namespace mscrowd {

enum class Role { follower, leader };

struct Agent {
    int id = 0;
    Vec2 position;
    Role role = Role::follower;
    friend bool operator==(const Agent&, const Agent&) = default;
};

/// Counting measure: one Dirac mass per agent.
struct MicroState {
    std::vector<Agent> agents;

    std::size_t size() const noexcept { return agents.size(); }
    bool empty() const noexcept { return agents.empty(); }
    friend bool operator==(const MicroState&, const MicroState&) = default;
};

/// Piecewise-constant density, one nonnegative coefficient per grid cell.
struct MacroDensity {
    Grid grid;
    std::vector<double> rho;

    MacroDensity() = default;
    explicit MacroDensity(const Grid& g) : grid(g), rho(g.cell_count(), 0.0) {}
    MacroDensity(const Grid& g, std::vector<double> values) : grid(g), rho(std::move(values)) {
        if (rho.size() != grid.cell_count()) throw std::invalid_argument("density: coefficient count does not match grid");
    }

    double& at(int i, int j) { return rho[grid.flat(i, j)]; }
    double at(int i, int j) const { return rho[grid.flat(i, j)]; }

    /// Total mass, accumulated in cell order.
    double total_mass() const noexcept {
        double s = 0.0;
        for (double r : rho) s += r;
        return s * grid.cell_area();
    }
    double max_density() const noexcept {
        return rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
    }
    friend bool operator==(const MacroDensity&, const MacroDensity&) = default;
};

/// mu = theta * m + (1 - theta) * Lambda * M.
struct CrowdMeasure {
    MicroState micro;
    MacroDensity macro;
    double theta = 0.0;
    double lambda = 1.0;
};

class ScalingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Lambda = N / M0: the number of pedestrians carried by one unit of macro mass.
inline double compute_lambda(double n_agents, double macro_total) {
    if (!(n_agents > 0.0) || !(macro_total > 0.0) || !std::isfinite(n_agents) || !std::isfinite(macro_total))
        throw ScalingError("invalid scaling: agent count and macroscopic mass must both be positive");
    return n_agents / macro_total;
}

/// Half-open membership, matching the cell convention.
inline bool in_region(const Vec2& p, const Rect& r) noexcept {
    return p.x >= r.lo.x && p.x < r.hi.x && p.y >= r.lo.y && p.y < r.hi.y;
}

inline std::size_t agents_in(const MicroState& micro, const Rect& region) noexcept {
    return static_cast<std::size_t>(std::count_if(micro.agents.begin(), micro.agents.end(),
                                                  [&](const Agent& a) { return in_region(a.position, region); }));
}

/// Integral of the density over `region` (exact for the piecewise-constant field).
inline double macro_mass_in(const MacroDensity& d, const Rect& region) noexcept {
    const Grid& g = d.grid;
    const int i0 = std::max(0, static_cast<int>(std::floor((region.lo.x - g.origin.x) / g.h)) - 1);
    const int j0 = std::max(0, static_cast<int>(std::floor((region.lo.y - g.origin.y) / g.h)) - 1);
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::floor((region.hi.x - g.origin.x) / g.h)) + 1);
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::floor((region.hi.y - g.origin.y) / g.h)) + 1);
    double s = 0.0;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            const double r = d.at(i, j);
            if (r != 0.0) s += r * rect_overlap_area(g.cell_rect(i, j), region);
        }
    return s;
}

/// mu(region) = theta * (agents in region) + (1 - theta) * Lambda * M(region).
inline double measure_of(const CrowdMeasure& cm, const Rect& region) noexcept {
    return cm.theta * static_cast<double>(agents_in(cm.micro, region)) +
           (1.0 - cm.theta) * cm.lambda * macro_mass_in(cm.macro, region);
}

/// rho_i = m0(B_xi(x_i)) / (Lambda * pi xi^2). Only followers are counted:
/// leaders have no macroscopic counterpart. Blocked cells stay at zero.
inline MacroDensity init_density_from_micro(const MicroState& micro, double xi, double lambda, const Grid& grid,
                                            const std::vector<bool>* blocked = nullptr) {
    if (!(xi > 0.0)) throw std::invalid_argument("density init: xi must be positive");
    if (!(lambda > 0.0)) throw ScalingError("density init: Lambda must be positive");
    MacroDensity out(grid);
    std::vector<double> count(grid.cell_count(), 0.0);
    const double xi2 = xi * xi;
    for (const Agent& a : micro.agents) {
        if (a.role != Role::follower) continue;
        const Vec2& p = a.position;
        const int i0 = std::max(0, static_cast<int>(std::floor((p.x - xi - grid.origin.x) / grid.h)));
        const int i1 = std::min(grid.nx - 1, static_cast<int>(std::floor((p.x + xi - grid.origin.x) / grid.h)));
        const int j0 = std::max(0, static_cast<int>(std::floor((p.y - xi - grid.origin.y) / grid.h)));
        const int j1 = std::min(grid.ny - 1, static_cast<int>(std::floor((p.y + xi - grid.origin.y) / grid.h)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const Vec2 c = grid.center(i, j) - p;
                if (c.x * c.x + c.y * c.y <= xi2) count[grid.flat(i, j)] += 1.0;
            }
    }
    const double denom = lambda * std::numbers::pi * xi2;
    for (std::size_t k = 0; k < count.size(); ++k) {
        if (blocked && (*blocked)[k]) continue;
        out.rho[k] = count[k] / denom;
    }
    return out;
}

inline MacroDensity init_density_from_micro(const MicroState& micro, double xi, double lambda, const Geometry& geo) {
    return init_density_from_micro(micro, xi, lambda, geo.grid(), &geo.blocked_cells());
}

struct XiTuning {
    double xi = 0.0;
    MacroDensity density;
    double relative_error = 0.0;  // |Lambda * M0 - N| / N
    int evaluations = 0;
};

/// Picks the averaging radius so that Lambda * M0 matches the follower count
/// within `tolerance`. Starts at 1.5 h and scans geometrically (factor 1.15)
/// above and below; every sign change of the mass error met on the way is
/// bisected for a few evaluations. The error is piecewise continuous in xi, so
/// a bracket around a jump is abandoned and the scan goes on.
inline XiTuning tune_xi(const MicroState& micro, double lambda, const Geometry& geo, double tolerance = 0.05,
                        int max_evaluations = 50) {
    const double n = static_cast<double>(std::count_if(micro.agents.begin(), micro.agents.end(),
                                                       [](const Agent& a) { return a.role == Role::follower; }));
    XiTuning best;
    const double xi0 = 1.5 * geo.grid().h;
    if (n == 0.0) {
        best.xi = xi0;
        best.density = MacroDensity(geo.grid());
        return best;
    }
    best.relative_error = INFINITY;
    auto eval = [&](double xi) {
        MacroDensity d = init_density_from_micro(micro, xi, lambda, geo);
        const double err = (lambda * d.total_mass() - n) / n;
        ++best.evaluations;
        if (std::abs(err) < std::abs(best.relative_error)) {
            best.xi = xi;
            best.density = std::move(d);
            best.relative_error = err;
        }
        return err;
    };
    auto done = [&] { return std::abs(best.relative_error) <= tolerance; };
    constexpr int bisection_budget = 8;
    auto bisect = [&](double lo, double elo, double hi) {
        for (int k = 0; k < bisection_budget && best.evaluations < max_evaluations && !done(); ++k) {
            const double mid = 0.5 * (lo + hi);
            const double em = eval(mid);
            if ((em > 0.0) == (elo > 0.0)) { lo = mid; elo = em; } else hi = mid;
        }
    };

    const double e0 = eval(xi0);
    double up = xi0, eup = e0, down = xi0, edown = e0;
    while (!done() && best.evaluations < max_evaluations) {
        const double u = up * 1.15;
        const double eu = eval(u);
        if (!done() && (eu > 0.0) != (eup > 0.0)) bisect(up, eup, u);
        up = u;
        eup = eu;
        if (done() || best.evaluations >= max_evaluations) break;
        const double d = down / 1.15;
        const double ed = eval(d);
        if (!done() && (ed > 0.0) != (edown > 0.0)) bisect(d, ed, down);
        down = d;
        edown = ed;
    }
    best.relative_error = std::abs(best.relative_error);
    if (!done())
        throw std::runtime_error("density init: could not tune xi; best relative mass error " +
                                 std::to_string(best.relative_error) + " at xi=" + std::to_string(best.xi));
    return best;
}

}  // namespace mscrowd
