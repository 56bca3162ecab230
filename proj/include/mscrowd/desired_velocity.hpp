#pragma once

#include <stdexcept>
#include <variant>
#include <vector>

#include "mscrowd/geometry.hpp"

namespace mscrowd {

struct ConstantField {
    Vec2 velocity;
};

/// Speed V toward a fixed point.
struct TowardTarget {
    Vec2 target;
    double speed = 1.0;
};

/// One vector per cell, sampled with zeroth-order interpolation.
struct GridSampled {
    Grid grid;
    std::vector<Vec2> values;
};

/// No desired motion; `heading` only orients the angular focus.
struct ZeroWithHeading {
    Vec2 heading{1.0, 0.0};
};

using DesiredField = std::variant<ConstantField, TowardTarget, GridSampled, ZeroWithHeading>;

inline Vec2 eval_desired(const DesiredField& field, const Vec2& x) {
    struct Visitor {
        const Vec2& x;
        Vec2 operator()(const ConstantField& f) const { return f.velocity; }
        Vec2 operator()(const TowardTarget& f) const { return normalized(f.target - x) * f.speed; }
        Vec2 operator()(const GridSampled& f) const {
            if (f.values.size() != f.grid.cell_count()) throw std::invalid_argument("desired field: value count does not match grid");
            auto c = cell_index(x, f.grid);
            if (!c) {
                // points on the far boundary use the nearest cell; outside is zero
                const Rect b = f.grid.bounds();
                if (!(x.x >= b.lo.x && x.x <= b.hi.x && x.y >= b.lo.y && x.y <= b.hi.y)) return {};
                const Vec2 q{std::min(x.x, std::nextafter(b.hi.x, b.lo.x)), std::min(x.y, std::nextafter(b.hi.y, b.lo.y))};
                c = cell_index(q, f.grid);
                if (!c) return {};
            }
            return f.values[f.grid.flat(*c)];
        }
        Vec2 operator()(const ZeroWithHeading&) const { return {}; }
    };
    return std::visit(Visitor{x}, field);
}

/// Direction used by the angular focus: the normalized desired velocity when
/// it is nonzero, else the conventional heading.
inline Vec2 heading_at(const DesiredField& field, const Vec2& x, const Vec2& conventional) {
    const Vec2 v = eval_desired(field, x);
    if (v.x != 0.0 || v.y != 0.0) return normalized(v);
    if (const auto* z = std::get_if<ZeroWithHeading>(&field)) return normalized(z->heading);
    return normalized(conventional);
}

}  // namespace mscrowd
