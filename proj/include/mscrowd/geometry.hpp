#pragma once

// Rectangular domain, uniform cell grid, rectilinear obstacles and doors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mscrowd/vec2.hpp"

namespace mscrowd {

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Rect {
    Vec2 lo;
    Vec2 hi;

    double width() const noexcept { return hi.x - lo.x; }
    double height() const noexcept { return hi.y - lo.y; }
    double area() const noexcept { return std::max(0.0, width()) * std::max(0.0, height()); }
    Vec2 center() const noexcept { return {0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)}; }

    /// Closed containment.
    bool contains(const Vec2& p) const noexcept {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    /// Open containment (interior only).
    bool contains_interior(const Vec2& p) const noexcept {
        return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y;
    }
    Rect translated(const Vec2& t) const noexcept { return {lo + t, hi + t}; }

    friend bool operator==(const Rect&, const Rect&) = default;
};

inline double interval_overlap(double a0, double a1, double b0, double b1) noexcept {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

/// Exact area of a ∩ b.
inline double rect_overlap_area(const Rect& a, const Rect& b) noexcept {
    return interval_overlap(a.lo.x, a.hi.x, b.lo.x, b.hi.x) *
           interval_overlap(a.lo.y, a.hi.y, b.lo.y, b.hi.y);
}

struct CellIndex {
    int i = 0;
    int j = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform grid of half-open square cells
/// E_ij = [origin.x + i h, origin.x + (i+1) h) x [origin.y + j h, origin.y + (j+1) h).
struct Grid {
    Vec2 origin;
    double h = 1.0;
    int nx = 1;
    int ny = 1;

    Grid() = default;
    Grid(Vec2 origin_, double h_, int nx_, int ny_) : origin(origin_), h(h_), nx(nx_), ny(ny_) {
        if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid: cell size must be positive");
        if (nx < 1 || ny < 1) throw std::invalid_argument("grid: cell counts must be >= 1");
    }

    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t flat(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
    }
    std::size_t flat(const CellIndex& c) const noexcept { return flat(c.i, c.j); }
    CellIndex unflat(std::size_t k) const noexcept {
        return {static_cast<int>(k % static_cast<std::size_t>(nx)), static_cast<int>(k / static_cast<std::size_t>(nx))};
    }
    bool in_range(int i, int j) const noexcept { return i >= 0 && i < nx && j >= 0 && j < ny; }

    double edge_x(int i) const noexcept { return origin.x + i * h; }
    double edge_y(int j) const noexcept { return origin.y + j * h; }
    Vec2 center(int i, int j) const noexcept { return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h}; }
    Vec2 center(std::size_t k) const noexcept { const auto c = unflat(k); return center(c.i, c.j); }
    Rect cell_rect(int i, int j) const noexcept { return {{edge_x(i), edge_y(j)}, {edge_x(i + 1), edge_y(j + 1)}}; }
    Rect bounds() const noexcept { return {origin, {edge_x(nx), edge_y(ny)}}; }
    double cell_area() const noexcept { return h * h; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

namespace detail {
// Index of the half-open slot containing v, consistent with the edges origin + k h.
inline long slot(double v, double origin, double h) noexcept {
    long k = static_cast<long>(std::floor((v - origin) / h));
    if (v < origin + static_cast<double>(k) * h) --k;
    else if (v >= origin + static_cast<double>(k + 1) * h) ++k;
    return k;
}
}  // namespace detail

/// Cell containing x, or nullopt when x is outside the grid coverage.
inline std::optional<CellIndex> cell_index(const Vec2& x, const Grid& grid) noexcept {
    if (!std::isfinite(x.x) || !std::isfinite(x.y)) return std::nullopt;
    const long i = detail::slot(x.x, grid.origin.x, grid.h);
    const long j = detail::slot(x.y, grid.origin.y, grid.h);
    if (i < 0 || j < 0 || i >= grid.nx || j >= grid.ny) return std::nullopt;
    return CellIndex{static_cast<int>(i), static_cast<int>(j)};
}

struct Obstacle {
    Rect rect;
    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

/// Axis-aligned segment through which mass may be counted (interior line) or
/// may leave the domain (segment on the outer wall). `outward` is the unit
/// normal giving the positive flux direction.
struct DoorSegment {
    Vec2 a;
    Vec2 b;
    Vec2 outward;

    bool vertical() const noexcept { return a.x == b.x; }
    double lo() const noexcept { return vertical() ? std::min(a.y, b.y) : std::min(a.x, b.x); }
    double hi() const noexcept { return vertical() ? std::max(a.y, b.y) : std::max(a.x, b.x); }
    /// Coordinate of the line carrying the segment.
    double line() const noexcept { return vertical() ? a.x : a.y; }
    double length() const noexcept { return hi() - lo(); }

    friend bool operator==(const DoorSegment&, const DoorSegment&) = default;
};

enum class Wall { left, right, bottom, top };

/// One straight piece of boundary with the unit normal pointing into free space.
struct Face {
    bool vertical;   // face lies on x = line
    double line;
    double lo;       // tangential extent, closed
    double hi;
    Vec2 normal;
};

struct MoveResult {
    Vec2 position;
    bool exited = false;
    int exit_door = -1;
};

/// Domain grid plus the solid geometry inside it.
class Geometry {
public:
    Geometry() = default;
    Geometry(Grid grid, std::vector<Obstacle> obstacles, std::vector<DoorSegment> doors, bool sealed = false)
        : grid_(grid), obstacles_(std::move(obstacles)), doors_(std::move(doors)), sealed_(sealed) {
        build();
    }

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<Obstacle>& obstacles() const noexcept { return obstacles_; }
    const std::vector<DoorSegment>& doors() const noexcept { return doors_; }
    bool sealed() const noexcept { return sealed_; }
    Rect domain() const noexcept { return grid_.bounds(); }
    double wall_tolerance() const noexcept { return grid_.h / 10.0; }

    /// True if the door sits on the outer boundary and lets mass leave.
    bool is_exit(std::size_t door) const noexcept { return !sealed_ && exit_wall_[door].has_value(); }
    std::optional<Wall> exit_wall(std::size_t door) const noexcept { return exit_wall_[door]; }

    bool inside_obstacle(const Vec2& p) const noexcept {
        return std::any_of(obstacles_.begin(), obstacles_.end(),
                           [&](const Obstacle& o) { return o.rect.contains_interior(p); });
    }
    bool cell_blocked(std::size_t k) const noexcept { return blocked_[k]; }
    const std::vector<bool>& blocked_cells() const noexcept { return blocked_; }

    /// Removes the inward normal component of v for every boundary face
    /// within `band` of x (concave corners enforce both faces).
    Vec2 project_admissible(Vec2 v, const Vec2& x, double band) const noexcept {
        for (const Face& f : faces_) {
            const double d = f.vertical ? (x.x - f.line) * f.normal.x : (x.y - f.line) * f.normal.y;
            if (d < 0.0 || d > band) continue;
            const double t = f.vertical ? x.y : x.x;
            if (t < f.lo || t > f.hi) continue;
            const double vn = dot(v, f.normal);
            if (vn < 0.0) {
                if (on_open_door(f, t)) continue;
                v -= vn * f.normal;
            }
        }
        return v;
    }
    Vec2 project_admissible(const Vec2& v, const Vec2& x) const noexcept {
        return project_admissible(v, x, wall_tolerance());
    }
    /// Projection for a grid cell: the band reaches from the cell center to
    /// just past the cell's own boundary.
    Vec2 project_admissible_cell(const Vec2& v, std::size_t k) const noexcept {
        return project_admissible(v, grid_.center(k), 0.5 * grid_.h + wall_tolerance());
    }

    /// Moves a point along the straight path from -> to, stopping on walls and
    /// obstacle faces. Leaving through an exit door marks the move as exited.
    MoveResult constrain_move(const Vec2& from, const Vec2& to) const noexcept {
        MoveResult r{to};
        const Rect box = domain();
        for (int pass = 0; pass < 2; ++pass) {
            const Vec2& p = r.position;
            if (box.contains(p) && p.x < box.hi.x && p.y < box.hi.y) break;
            // first wall crossed along the path
            const Vec2 d = p - from;
            double t_best = 2.0;
            Wall wall = Wall::left;
            auto consider = [&](double coord_from, double delta, double line, Wall w) {
                if (delta == 0.0) return;
                const double t = (line - coord_from) / delta;
                if (t >= 0.0 && t <= 1.0 && t < t_best) { t_best = t; wall = w; }
            };
            if (p.x < box.lo.x) consider(from.x, d.x, box.lo.x, Wall::left);
            if (p.x >= box.hi.x) consider(from.x, d.x, box.hi.x, Wall::right);
            if (p.y < box.lo.y) consider(from.y, d.y, box.lo.y, Wall::bottom);
            if (p.y >= box.hi.y) consider(from.y, d.y, box.hi.y, Wall::top);
            if (t_best > 1.0) {
                // started outside or on the upper edge: pull back inside
                if (p.x < box.lo.x) { wall = Wall::left; }
                else if (p.x >= box.hi.x) { wall = Wall::right; }
                else if (p.y < box.lo.y) { wall = Wall::bottom; }
                else { wall = Wall::top; }
                t_best = 0.0;
            }
            const Vec2 c = from + t_best * d;
            const double tangential = (wall == Wall::left || wall == Wall::right) ? c.y : c.x;
            for (std::size_t k = 0; k < doors_.size(); ++k) {
                if (is_exit(k) && *exit_wall_[k] == wall && tangential >= doors_[k].lo() &&
                    tangential <= doors_[k].hi()) {
                    r.exited = true;
                    r.exit_door = static_cast<int>(k);
                    return r;
                }
            }
            switch (wall) {
                case Wall::left: r.position.x = box.lo.x; break;
                case Wall::right: r.position.x = std::nextafter(box.hi.x, box.lo.x); break;
                case Wall::bottom: r.position.y = box.lo.y; break;
                case Wall::top: r.position.y = std::nextafter(box.hi.y, box.lo.y); break;
            }
        }
        for (int pass = 0; pass < 4; ++pass) {
            bool moved = false;
            for (const Obstacle& o : obstacles_) {
                if (!o.rect.contains_interior(r.position)) continue;
                r.position = push_out(o.rect, from, r.position);
                moved = true;
            }
            if (!moved) break;
        }
        return r;
    }

private:
    static Vec2 push_out(const Rect& rc, const Vec2& from, Vec2 to) noexcept {
        // slab entry times; the entering face is the one with the latest entry
        const Vec2 d = to - from;
        double tx = -1.0, ty = -1.0;
        double fx = 0.0, fy = 0.0;
        if (d.x > 0.0 && from.x <= rc.lo.x) { tx = (rc.lo.x - from.x) / d.x; fx = rc.lo.x; }
        if (d.x < 0.0 && from.x >= rc.hi.x) { tx = (rc.hi.x - from.x) / d.x; fx = rc.hi.x; }
        if (d.y > 0.0 && from.y <= rc.lo.y) { ty = (rc.lo.y - from.y) / d.y; fy = rc.lo.y; }
        if (d.y < 0.0 && from.y >= rc.hi.y) { ty = (rc.hi.y - from.y) / d.y; fy = rc.hi.y; }
        if (tx >= 0.0 && tx >= ty) { to.x = fx; return to; }
        if (ty >= 0.0) { to.y = fy; return to; }
        // no recorded entry: move to the nearest face
        const std::array<double, 4> gaps{to.x - rc.lo.x, rc.hi.x - to.x, to.y - rc.lo.y, rc.hi.y - to.y};
        const auto m = static_cast<std::size_t>(std::min_element(gaps.begin(), gaps.end()) - gaps.begin());
        if (m == 0) to.x = rc.lo.x;
        else if (m == 1) to.x = rc.hi.x;
        else if (m == 2) to.y = rc.lo.y;
        else to.y = rc.hi.y;
        return to;
    }

    bool on_open_door(const Face& f, double t) const noexcept {
        if (sealed_) return false;
        for (std::size_t k = 0; k < doors_.size(); ++k) {
            if (!exit_wall_[k]) continue;
            const DoorSegment& door = doors_[k];
            if (door.vertical() != f.vertical || door.line() != f.line) continue;
            if (t >= door.lo() && t <= door.hi()) return true;
        }
        return false;
    }

    void build() {
        const Rect box = domain();
        faces_.clear();
        faces_.push_back({true, box.lo.x, box.lo.y, box.hi.y, {1.0, 0.0}});
        faces_.push_back({true, box.hi.x, box.lo.y, box.hi.y, {-1.0, 0.0}});
        faces_.push_back({false, box.lo.y, box.lo.x, box.hi.x, {0.0, 1.0}});
        faces_.push_back({false, box.hi.y, box.lo.x, box.hi.x, {0.0, -1.0}});
        for (const Obstacle& o : obstacles_) {
            const Rect& r = o.rect;
            faces_.push_back({true, r.lo.x, r.lo.y, r.hi.y, {-1.0, 0.0}});
            faces_.push_back({true, r.hi.x, r.lo.y, r.hi.y, {1.0, 0.0}});
            faces_.push_back({false, r.lo.y, r.lo.x, r.hi.x, {0.0, -1.0}});
            faces_.push_back({false, r.hi.y, r.lo.x, r.hi.x, {0.0, 1.0}});
        }
        exit_wall_.assign(doors_.size(), std::nullopt);
        for (std::size_t k = 0; k < doors_.size(); ++k) {
            const DoorSegment& d = doors_[k];
            if (d.vertical() && d.line() == box.lo.x) exit_wall_[k] = Wall::left;
            else if (d.vertical() && d.line() == box.hi.x) exit_wall_[k] = Wall::right;
            else if (!d.vertical() && d.line() == box.lo.y) exit_wall_[k] = Wall::bottom;
            else if (!d.vertical() && d.line() == box.hi.y) exit_wall_[k] = Wall::top;
        }
        blocked_.assign(grid_.cell_count(), false);
        for (std::size_t k = 0; k < grid_.cell_count(); ++k) blocked_[k] = inside_obstacle(grid_.center(k));
    }

    Grid grid_;
    std::vector<Obstacle> obstacles_;
    std::vector<DoorSegment> doors_;
    bool sealed_ = false;
    std::vector<Face> faces_;
    std::vector<std::optional<Wall>> exit_wall_;
    std::vector<bool> blocked_;
};

/// Free-standing form of the admissible-velocity projection.
inline Vec2 project_admissible(const Vec2& v, const Vec2& x, const Geometry& geometry) noexcept {
    return geometry.project_admissible(v, x);
}

}  // namespace mscrowd
