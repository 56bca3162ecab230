#pragma once

// Observables: centroid, moments of inertia per scale, probe fluxes and door
// crossings, average outflow time, cell-mass error between densities.

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mscrowd/measures.hpp"
#include "mscrowd/stepper.hpp"

namespace mscrowd {

enum class Scale { micro, macro, multi };

class ZeroMassError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

// Visits every weighted point mass of the chosen scale inside `region`:
// agents with weight w_micro, cell centers with weight w_macro * rho_i |E_i ∩ region|.
template <class Fn>
void for_each_mass(const CrowdMeasure& cm, const Rect& region, double w_micro, double w_macro, Fn&& fn) {
    if (w_micro != 0.0)
        for (const Agent& a : cm.micro.agents)
            if (in_region(a.position, region)) fn(a.position, w_micro);
    if (w_macro != 0.0) {
        const Grid& g = cm.macro.grid;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double r = cm.macro.at(i, j);
                if (r == 0.0) continue;
                const double a = rect_overlap_area(g.cell_rect(i, j), region);
                if (a > 0.0) fn(g.center(i, j), w_macro * r * a);
            }
    }
}

inline std::pair<double, double> scale_weights(const CrowdMeasure& cm, Scale s) noexcept {
    switch (s) {
        case Scale::micro: return {1.0, 0.0};
        case Scale::macro: return {0.0, 1.0};
        case Scale::multi: return {cm.theta, (1.0 - cm.theta) * cm.lambda};
    }
    return {0.0, 0.0};
}

}  // namespace detail

/// Mass-weighted mean position of the chosen scale inside `region`.
inline Vec2 center_of_mass(const CrowdMeasure& cm, const Rect& region, Scale scale = Scale::multi) {
    const auto [wm, wM] = detail::scale_weights(cm, scale);
    Vec2 s;
    double m = 0.0;
    detail::for_each_mass(cm, region, wm, wM, [&](const Vec2& x, double w) { s += w * x; m += w; });
    if (!(m > 0.0)) throw ZeroMassError("center_of_mass: no mass in region");
    return s * (1.0 / m);
}

struct Moments {
    double i1 = 0.0;  // horizontal second moment about the center
    double i2 = 0.0;  // vertical second moment
    double ig = 0.0;  // i1 + i2
    Vec2 center;
};

/// Second moments about a prescribed center.
inline Moments moments_about(const CrowdMeasure& cm, const Rect& region, Scale scale, const Vec2& center) {
    const auto [wm, wM] = detail::scale_weights(cm, scale);
    Moments out;
    out.center = center;
    detail::for_each_mass(cm, region, wm, wM, [&](const Vec2& x, double w) {
        const Vec2 d = x - center;
        out.i1 += w * d.x * d.x;
        out.i2 += w * d.y * d.y;
    });
    out.ig = out.i1 + out.i2;
    return out;
}

/// Second moments about the scale's own center of mass.
inline Moments moments(const CrowdMeasure& cm, const Rect& region, Scale scale = Scale::multi) {
    return moments_about(cm, region, scale, center_of_mass(cm, region, scale));
}

struct DoorFlux {
    double flux = 0.0;        // -d mu(probe) / dt, positive when mass leaves the probe
    double macro_flux = 0.0;  // -d M(probe) / dt, unscaled density mass
    int crossings_out = 0;    // agents crossing the door along its outward normal
    int crossings_in = 0;
};

/// True if the straight move from -> to crosses the door segment; sets the
/// direction (+1 along `outward`, -1 against it).
inline bool crosses(const DoorSegment& door, const Vec2& from, const Vec2& to, int& direction) noexcept {
    const double a = door.vertical() ? from.x : from.y;
    const double b = door.vertical() ? to.x : to.y;
    const double line = door.line();
    // half-open sides: a point on the line counts as being on its upper side
    const bool side_a = a >= line;
    const bool side_b = b >= line;
    if (side_a == side_b) return false;
    const double t = (line - a) / (b - a);
    const double tang = door.vertical() ? from.y + t * (to.y - from.y) : from.x + t * (to.x - from.x);
    if (tang < door.lo() || tang > door.hi()) return false;
    const double n = door.vertical() ? door.outward.x : door.outward.y;
    direction = ((b - a) * n > 0.0) ? 1 : -1;
    return true;
}

/// Flux through a door over one step, measured by the change of the probe
/// region's mass, plus agent crossings of the door segment by direction.
inline DoorFlux door_flux(const CrowdMeasure& before, const CrowdMeasure& after, std::span<const AgentMove> moves,
                          const Rect& probe, const DoorSegment& door, double dt) {
    DoorFlux out;
    if (dt > 0.0) {
        out.flux = (measure_of(before, probe) - measure_of(after, probe)) / dt;
        out.macro_flux = (macro_mass_in(before.macro, probe) - macro_mass_in(after.macro, probe)) / dt;
    }
    for (const AgentMove& m : moves) {
        int dir = 0;
        if (crosses(door, m.from, m.to, dir)) (dir > 0 ? out.crossings_out : out.crossings_in) += 1;
    }
    return out;
}

/// (1 / mu_0) * integral of the sampled mass over time, trapezoidal rule.
inline double average_outflow_time(std::span<const std::pair<double, double>> series) {
    if (series.empty() || !(series.front().second > 0.0))
        throw ZeroMassError("average_outflow_time: initial mass must be positive");
    double integral = 0.0;
    for (std::size_t k = 1; k < series.size(); ++k)
        integral += 0.5 * (series[k].second + series[k - 1].second) * (series[k].first - series[k - 1].first);
    return integral / series.front().second;
}

/// Cell masses of `fine` summed onto `coarse`; the grids must be nested.
inline MacroDensity aggregate_to(const MacroDensity& fine, const Grid& coarse) {
    const Grid& f = fine.grid;
    const double ratio = coarse.h / f.h;
    const long r = std::lround(ratio);
    const double tol = 1e-9;
    if (r < 1 || std::abs(ratio - static_cast<double>(r)) > tol * ratio || f.nx != coarse.nx * r || f.ny != coarse.ny * r ||
        std::abs(f.origin.x - coarse.origin.x) > tol * coarse.h || std::abs(f.origin.y - coarse.origin.y) > tol * coarse.h)
        throw std::invalid_argument("l1_cell_error: grids are not nested");
    MacroDensity out(coarse);
    const double w = f.cell_area() / coarse.cell_area();
    for (int j = 0; j < f.ny; ++j)
        for (int i = 0; i < f.nx; ++i) out.at(i / static_cast<int>(r), j / static_cast<int>(r)) += fine.at(i, j) * w;
    return out;
}

/// sum_i |M_ref(E_i) - M_approx(E_i)| on the approximation's grid.
inline double l1_cell_error(const MacroDensity& reference, const MacroDensity& approx) {
    const MacroDensity ref = (reference.grid == approx.grid) ? reference : aggregate_to(reference, approx.grid);
    double s = 0.0;
    for (std::size_t k = 0; k < ref.rho.size(); ++k) s += std::abs(ref.rho[k] - approx.rho[k]);
    return s * approx.grid.cell_area();
}

/// Time series with named columns, one row per sample.
struct DiagnosticsRecord {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return k;
        throw std::out_of_range("diagnostics: no column " + name);
    }
    std::vector<double> series(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

/// Nine significant digits, "nan" for undefined values.
inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const DiagnosticsRecord& rec) {
    for (std::size_t k = 0; k < rec.columns.size(); ++k) os << (k ? "," : "") << rec.columns[k];
    os << '\n';
    for (const auto& row : rec.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_value(row[k]);
        os << '\n';
    }
}

}  // namespace mscrowd
