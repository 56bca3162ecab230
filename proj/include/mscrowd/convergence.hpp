#pragma once

// Grid-refinement study of the density push-forward against flows whose exact
// transport is known in closed form.
//
//   translation: v = (1, 0), dt = h, so every step moves mass by exactly one cell
//   rotation:    v = (-y, x), dt = 0.4 h, rigid rotation by angle t_final

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mscrowd/diagnostics.hpp"
#include "mscrowd/stepper.hpp"

namespace mscrowd {

struct ConvergencePoint {
    double h = 0.0;
    double error = 0.0;  // l1_cell_error against the exact cell masses
    long steps = 0;
};

namespace detail {

// Smooth bump (1 - r^2/a^2)^4 on the disc of radius a.
inline double bump(const Vec2& x, const Vec2& c, double a) noexcept {
    const Vec2 d = x - c;
    const double s = 1.0 - dot(d, d) / (a * a);
    return s > 0.0 ? s * s * s * s : 0.0;
}

// Cell averages of f by 4x4 Gauss-Legendre quadrature.
template <class F>
MacroDensity cell_averages(const Grid& g, F&& f) {
    static constexpr std::array<double, 4> node{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                0.8611363115940526};
    static constexpr std::array<double, 4> weight{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                  0.3478548451374538};
    MacroDensity d(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.center(i, j);
            double s = 0.0;
            for (int b = 0; b < 4; ++b)
                for (int a = 0; a < 4; ++a) s += weight[a] * weight[b] * f(Vec2{c.x + 0.5 * g.h * node[a], c.y + 0.5 * g.h * node[b]});
            d.at(i, j) = 0.25 * s;
        }
    return d;
}

}  // namespace detail

inline std::vector<std::string> convergence_cases() { return {"translation", "rotation"}; }

/// Runs one analytic case on the grid of cell size h over [-1.5, 1.5]^2.
inline ConvergencePoint convergence_point(const std::string& id, double h, double t_final = 0.25) {
    if (id != "translation" && id != "rotation") throw std::invalid_argument("unknown convergence case '" + id + "'");
    const double side = 3.0;
    const int n = static_cast<int>(std::lround(side / h));
    if (n < 1 || std::abs(n * h - side) > 1e-9) throw std::invalid_argument("convergence: h must divide the domain side 3");
    const Grid g({-1.5, -1.5}, h, n, n);
    const Geometry geo(g, {}, {}, false);
    const bool rotation = id == "rotation";
    const Vec2 c0 = rotation ? Vec2{0.5, 0.0} : Vec2{-0.5, 0.0};
    const double radius = 0.9;

    MacroDensity d = detail::cell_averages(g, [&](const Vec2& x) { return detail::bump(x, c0, radius); });
    std::vector<Vec2> vel(g.cell_count());
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        const Vec2 x = g.center(k);
        vel[k] = rotation ? Vec2{-x.y, x.x} : Vec2{1.0, 0.0};
    }
    const long steps = rotation ? std::lround(t_final / (0.4 * h)) : std::lround(t_final / h);
    const double dt = rotation ? t_final / static_cast<double>(steps) : h;
    for (long s = 0; s < steps; ++s) d = advance_macro(d, vel, dt, geo).next;

    const double t = dt * static_cast<double>(steps);
    const Vec2 c1 = rotation ? Vec2{c0.x * std::cos(t) - c0.y * std::sin(t), c0.x * std::sin(t) + c0.y * std::cos(t)}
                             : c0 + Vec2{t, 0.0};
    const MacroDensity exact = detail::cell_averages(g, [&](const Vec2& x) { return detail::bump(x, c1, radius); });
    return {h, l1_cell_error(exact, d), steps};
}

inline std::vector<ConvergencePoint> convergence_study(const std::string& id, const std::vector<double>& hs) {
    if (id != "translation" && id != "rotation") throw std::invalid_argument("unknown convergence case '" + id + "'");
    std::vector<ConvergencePoint> out;
    for (double h : hs) out.push_back(convergence_point(id, h));
    return out;
}

/// Observed order between successive refinement levels.
inline std::vector<double> empirical_orders(const std::vector<ConvergencePoint>& pts) {
    std::vector<double> out;
    for (std::size_t k = 1; k < pts.size(); ++k)
        out.push_back(std::log(pts[k - 1].error / pts[k].error) / std::log(pts[k - 1].h / pts[k].h));
    return out;
}

}  // namespace mscrowd
