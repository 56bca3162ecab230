#pragma once

// Nonlocal interaction velocity: radial kernel times angular focus, summed
// over agents and integrated (midpoint rule) over the cell density.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mscrowd/measures.hpp"
#include "mscrowd/neighbor_grid.hpp"

namespace mscrowd {

struct KernelParams {
    double f_r = 0.0;  // repulsion strength
    double f_a = 0.0;  // attraction strength
    double r_r = 1.0;  // repulsion radius
    double r_a = 1.0;  // attraction radius
    double alpha_bar = std::numbers::pi / 2.0;

    double support() const noexcept { return std::max(r_r, r_a); }
    bool valid() const noexcept {
        return f_r >= 0.0 && f_a >= 0.0 && r_r > 0.0 && r_a > 0.0 && alpha_bar >= 0.0 &&
               alpha_bar <= std::numbers::pi;
    }
    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Endogenous / exogenous kernels blended by the exogenous weight.
struct InteractionSpec {
    KernelParams endogenous;
    KernelParams exogenous;
    double exogenous_weight = 0.0;  // Theta in [0, 1]
};

/// f(s) = -F_r / s on [0, R_r] + F_a s on [0, R_a].
inline double radial_kernel(double s, const KernelParams& p) {
    if (!(s > 0.0)) throw std::domain_error("radial_kernel: distance must be positive");
    double f = 0.0;
    if (s <= p.r_r) f -= p.f_r / s;
    if (s <= p.r_a) f += p.f_a * s;
    return f;
}

/// Indicator of |alpha| <= alpha_bar (inclusive).
constexpr double angular_focus(double alpha, double alpha_bar) noexcept {
    return (alpha <= alpha_bar && alpha >= -alpha_bar) ? 1.0 : 0.0;
}

/// Signed angle in [-pi, pi] from `heading` to y - x.
inline double sight_angle(const Vec2& x, const Vec2& y, const Vec2& heading) {
    const Vec2 d = y - x;
    if (d.x == 0.0 && d.y == 0.0) throw std::domain_error("sight_angle: coincident points");
    return std::atan2(cross(heading, d), dot(heading, d));
}

namespace detail {
// Same decision as angular_focus(sight_angle(...)), skipping atan2 whenever the
// sign of the heading component settles it (margin far above atan2 rounding).
inline bool in_focus(const Vec2& d, const Vec2& heading, double alpha_bar) noexcept {
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double c = cross(heading, d);
    const double a = dot(heading, d);
    if (a >= 0.0 && alpha_bar >= half_pi) return true;
    if (a < 0.0 && alpha_bar <= half_pi && (alpha_bar < half_pi || -a > 1e-12 * std::abs(c))) return false;
    return angular_focus(std::atan2(c, a), alpha_bar) != 0.0;
}

// Contribution of a unit mass at y to the velocity at x. Zero for y == x and
// outside the kernel support.
inline Vec2 pair_term(const Vec2& x, const Vec2& y, const Vec2& heading, const KernelParams& p) noexcept {
    const Vec2 d = y - x;
    const double s2 = d.x * d.x + d.y * d.y;
    if (s2 == 0.0) return {};
    const double s = std::sqrt(s2);
    if (s > p.support()) return {};
    double f = 0.0;
    if (s <= p.r_r) f -= p.f_r / s;
    if (s <= p.r_a) f += p.f_a * s;
    if (f == 0.0) return {};
    if (p.alpha_bar < std::numbers::pi && !in_focus(d, heading, p.alpha_bar)) return {};
    return d * (f / s);
}
}  // namespace detail

inline std::vector<Vec2> positions_of(const MicroState& micro) {
    std::vector<Vec2> out;
    out.reserve(micro.agents.size());
    for (const Agent& a : micro.agents) out.push_back(a.position);
    return out;
}

/// Sum over agents P_k != x of f(|P_k - x|) g(alpha) (P_k - x)/|P_k - x|.
/// Brute force over every agent in index order.
inline Vec2 nu_micro_at(const Vec2& x, const MicroState& agents, const Vec2& heading, const KernelParams& p) {
    Vec2 acc;
    for (const Agent& a : agents.agents) acc += detail::pair_term(x, a.position, heading, p);
    return acc;
}

/// Same sum restricted to neighbor-grid candidates; bitwise equal to the
/// brute-force form because pruned agents contribute exact zeros and the
/// remaining ones are visited in index order.
inline Vec2 nu_micro_at(const Vec2& x, const std::vector<Vec2>& points, const NeighborGrid& index,
                        const Vec2& heading, const KernelParams& p, std::vector<std::size_t>& scratch) {
    Vec2 acc;
    if (points.empty()) return acc;
    if (index.bucket() >= p.support()) {
        index.candidates(x, p.support(), scratch);
        for (std::size_t k : scratch) acc += detail::pair_term(x, points[k], heading, p);
    } else {
        for (const Vec2& y : points) acc += detail::pair_term(x, y, heading, p);
    }
    return acc;
}

/// Micro sum evaluated at a cell center: agents inside that cell are left out,
/// as the cell itself is left out of the macro integral. `cells[k]` is the
/// flat cell index of points[k].
inline Vec2 nu_micro_at_cell(std::size_t cell, const Grid& grid, const std::vector<Vec2>& points,
                             const std::vector<std::size_t>& cells, const NeighborGrid& index, const Vec2& heading,
                             const KernelParams& p, std::vector<std::size_t>& scratch) {
    const Vec2 x = grid.center(cell);
    Vec2 acc;
    if (points.empty()) return acc;
    auto add = [&](std::size_t k) {
        if (cells[k] != cell) acc += detail::pair_term(x, points[k], heading, p);
    };
    if (index.bucket() >= p.support()) {
        index.candidates(x, p.support(), scratch);
        for (std::size_t k : scratch) add(k);
    } else {
        for (std::size_t k = 0; k < points.size(); ++k) add(k);
    }
    return acc;
}

/// Midpoint-rule integral of f g (y - x)/|y - x| rho(y) over cells whose center
/// lies within the kernel support; the cell containing x is skipped.
inline Vec2 nu_macro_at(const Vec2& x, const MacroDensity& density, const Vec2& heading, const KernelParams& p) {
    const Grid& g = density.grid;
    const double r = p.support();
    const auto self = cell_index(x, g);
    const int i0 = std::max(0, static_cast<int>(std::floor((x.x - r - g.origin.x) / g.h)));
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::floor((x.x + r - g.origin.x) / g.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((x.y - r - g.origin.y) / g.h)));
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::floor((x.y + r - g.origin.y) / g.h)));
    const double area = g.cell_area();
    Vec2 acc;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            const double rho = density.at(i, j);
            if (rho == 0.0) continue;
            if (self && self->i == i && self->j == j) continue;
            acc += detail::pair_term(x, g.center(i, j), heading, p) * (rho * area);
        }
    return acc;
}

/// Unpruned reference: visits every cell in row-major order.
inline Vec2 nu_macro_at_unpruned(const Vec2& x, const MacroDensity& density, const Vec2& heading,
                                 const KernelParams& p) {
    const Grid& g = density.grid;
    const auto self = cell_index(x, g);
    const double area = g.cell_area();
    Vec2 acc;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double rho = density.at(i, j);
            if (rho == 0.0) continue;
            if (self && self->i == i && self->j == j) continue;
            acc += detail::pair_term(x, g.center(i, j), heading, p) * (rho * area);
        }
    return acc;
}

/// theta * nu[m](x) + (1 - theta) * Lambda * nu[M](x) for one measure.
inline Vec2 nu_measure_at(const Vec2& x, const CrowdMeasure& cm, const Vec2& heading, const KernelParams& p) {
    Vec2 v;
    if (cm.theta > 0.0) v += cm.theta * nu_micro_at(x, cm.micro, heading, p);
    if (cm.theta < 1.0) v += ((1.0 - cm.theta) * cm.lambda) * nu_macro_at(x, cm.macro, heading, p);
    return v;
}

/// (1 - Theta) nu^p[mu^p](x) + Theta nu^{pp*}[mu^{p*}](x); without another
/// population the exogenous weight is ignored.
inline Vec2 interaction_velocity(const Vec2& x, const CrowdMeasure& own, const CrowdMeasure* other,
                                 const InteractionSpec& spec, const Vec2& heading) {
    if (!other) return nu_measure_at(x, own, heading, spec.endogenous);
    const double w = spec.exogenous_weight;
    return (1.0 - w) * nu_measure_at(x, own, heading, spec.endogenous) +
           w * nu_measure_at(x, *other, heading, spec.exogenous);
}

}  // namespace mscrowd
