#include <gtest/gtest.h>

#include <random>

#include "mscrowd/geometry.hpp"

using namespace mscrowd;

namespace {

Rect random_rect(std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    return {{x0, y0}, {x1, y1}};
}

// brute-force overlap: midpoint sampling on a fine lattice
double sampled_overlap(const Rect& a, const Rect& b, int n) {
    const Rect box{{std::min(a.lo.x, b.lo.x), std::min(a.lo.y, b.lo.y)}, {std::max(a.hi.x, b.hi.x), std::max(a.hi.y, b.hi.y)}};
    const double dx = box.width() / n, dy = box.height() / n;
    double s = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 p{box.lo.x + (i + 0.5) * dx, box.lo.y + (j + 0.5) * dy};
            if (a.contains(p) && b.contains(p)) s += dx * dy;
        }
    return s;
}

Geometry room(std::vector<Obstacle> obstacles = {}, std::vector<DoorSegment> doors = {}) {
    return Geometry(Grid({0.0, 0.0}, 0.1, 30, 20), std::move(obstacles), std::move(doors));
}

}  // namespace

TEST(CellIndex, ContainingCell) {
    const Grid g({0.0, 0.0}, 0.1, 10, 10);
    EXPECT_EQ(*cell_index({0.05, 0.05}, g), (CellIndex{0, 0}));
    EXPECT_EQ(*cell_index({0.25, 0.15}, g), (CellIndex{2, 1}));
}

TEST(CellIndex, HalfOpenBoundary) {
    const Grid g({0.0, 0.0}, 0.1, 10, 10);
    EXPECT_EQ(*cell_index({0.1, 0.0}, g), (CellIndex{1, 0}));
    // every lattice edge k h belongs to cell k
    for (int k = 0; k < 10; ++k) EXPECT_EQ(cell_index({k * 0.1, 0.5}, g)->i, k);
}

TEST(CellIndex, OutsideGivesMarker) {
    const Grid g({0.0, 0.0}, 0.1, 10, 10);
    EXPECT_FALSE(cell_index({1.0, 0.5}, g));
    EXPECT_FALSE(cell_index({-1e-12, 0.5}, g));
    EXPECT_FALSE(cell_index({0.5, 1.2}, g));
    EXPECT_TRUE(cell_index({0.999, 0.999}, g));
}

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW(Grid({0, 0}, 0.0, 4, 4), std::invalid_argument);
    EXPECT_THROW(Grid({0, 0}, 0.1, 0, 4), std::invalid_argument);
}

TEST(RectOverlap, Examples) {
    const Rect unit{{0, 0}, {1, 1}};
    EXPECT_DOUBLE_EQ(rect_overlap_area(unit, unit), 1.0);
    EXPECT_DOUBLE_EQ(rect_overlap_area(unit, {{2, 2}, {3, 3}}), 0.0);
    EXPECT_DOUBLE_EQ(rect_overlap_area(unit, unit.translated({0.5, 0.0})), 0.5);
}

TEST(RectOverlap, AgreesWithSampling) {
    std::mt19937 rng(11);
    for (int k = 0; k < 20; ++k) {
        const Rect a = random_rect(rng, 0.0, 1.0), b = random_rect(rng, 0.0, 1.0);
        EXPECT_NEAR(rect_overlap_area(a, b), sampled_overlap(a, b, 400), 2e-2 * std::max(a.area(), b.area()) + 1e-4);
    }
}

TEST(RectOverlap, SymmetricBoundedTranslationInvariant) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> shift(-5.0, 5.0);
    for (int k = 0; k < 500; ++k) {
        const Rect a = random_rect(rng, -1.0, 1.0), b = random_rect(rng, -1.0, 1.0);
        const double o = rect_overlap_area(a, b);
        EXPECT_EQ(o, rect_overlap_area(b, a));
        EXPECT_GE(o, 0.0);
        EXPECT_LE(o, std::min(a.area(), b.area()) + 1e-15);
        const Vec2 t{shift(rng), shift(rng)};
        EXPECT_NEAR(rect_overlap_area(a.translated(t), b.translated(t)), o, 1e-12);
    }
}

TEST(RectOverlap, CellsPartitionAnyRectangle) {
    const Grid g({-1.0, 0.5}, 0.25, 12, 8);
    std::mt19937 rng(5);
    for (int k = 0; k < 100; ++k) {
        const Rect r = random_rect(rng, -2.0, 4.0);
        double s = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s += rect_overlap_area(g.cell_rect(i, j), r);
        EXPECT_NEAR(s, rect_overlap_area(r, g.bounds()), 1e-12);
    }
}

TEST(Projection, AwayFromBoundaryUnchanged) {
    const Geometry geo = room();
    EXPECT_EQ(geo.project_admissible({-0.3, 0.7}, {1.5, 1.0}), (Vec2{-0.3, 0.7}));
    // on the bottom wall but moving up
    EXPECT_EQ(geo.project_admissible({0.2, 0.7}, {1.5, 0.0}), (Vec2{0.2, 0.7}));
}

TEST(Projection, SlidesAlongWall) {
    const Geometry geo = room();
    EXPECT_EQ(geo.project_admissible({1.0, -1.0}, {1.5, 0.0}), (Vec2{1.0, 0.0}));
    EXPECT_EQ(geo.project_admissible({1.0, -1.0}, {1.5, 0.005}), (Vec2{1.0, 0.0}));
    // tangent velocity is already admissible
    EXPECT_EQ(geo.project_admissible({1.0, 0.0}, {1.5, 0.0}), (Vec2{1.0, 0.0}));
    // outside the h/10 band nothing happens
    EXPECT_EQ(geo.project_admissible({1.0, -1.0}, {1.5, 0.02}), (Vec2{1.0, -1.0}));
}

TEST(Projection, ConcaveCornerEnforcesBothNormals) {
    const Geometry geo = room();
    EXPECT_EQ(geo.project_admissible({-1.0, -2.0}, {0.0, 0.0}), (Vec2{0.0, 0.0}));
    EXPECT_EQ(geo.project_admissible({-1.0, 2.0}, {0.0, 0.0}), (Vec2{0.0, 2.0}));
}

TEST(Projection, ObstacleFaces) {
    const Geometry geo = room({{{{1.0, 0.5}, {1.4, 1.5}}}});
    // left face of the obstacle, outward normal -x
    EXPECT_EQ(geo.project_admissible({1.0, 0.5}, {1.0, 1.0}), (Vec2{0.0, 0.5}));
    // past the face extent: free
    EXPECT_EQ(geo.project_admissible({1.0, 0.5}, {1.0, 1.6}), (Vec2{1.0, 0.5}));
    // top face, moving down
    EXPECT_EQ(geo.project_admissible({0.3, -1.0}, {1.2, 1.5}), (Vec2{0.3, 0.0}));
}

TEST(Projection, ExitDoorLetsMassOut) {
    const Geometry geo = room({}, {{{3.0, 0.8}, {3.0, 1.2}, {1.0, 0.0}}});
    EXPECT_EQ(geo.project_admissible({1.0, 0.3}, {3.0, 1.0}), (Vec2{1.0, 0.3}));
    EXPECT_EQ(geo.project_admissible({1.0, 0.3}, {3.0, 1.5}), (Vec2{0.0, 0.3}));
    const Geometry sealed(geo.grid(), {}, geo.doors(), true);
    EXPECT_EQ(sealed.project_admissible({1.0, 0.3}, {3.0, 1.0}), (Vec2{0.0, 0.3}));
}

TEST(Projection, Idempotent) {
    const Geometry geo = room({{{{1.0, 0.5}, {1.4, 1.5}}}, {{{2.0, 0.0}, {2.2, 0.6}}}});
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ux(0.0, 3.0), uy(0.0, 2.0), uv(-2.0, 2.0);
    // sample points, half of them snapped near a boundary line
    const double lines_x[] = {0.0, 1.0, 1.4, 2.0, 2.2, 3.0};
    for (int k = 0; k < 2000; ++k) {
        Vec2 x{ux(rng), uy(rng)};
        if (k % 2) x.x = lines_x[k % 6] + 0.004 * uv(rng);
        const Vec2 v{uv(rng), uv(rng)};
        const Vec2 once = geo.project_admissible(v, x);
        EXPECT_EQ(geo.project_admissible(once, x), once);
        for (double band : {0.01, 0.06})
            EXPECT_EQ(geo.project_admissible(geo.project_admissible(v, x, band), x, band), geo.project_admissible(v, x, band));
    }
}

TEST(Geometry, BlockedCellsAndExits) {
    const Geometry geo = room({{{{1.0, 0.5}, {1.4, 1.5}}}},
                              {{{3.0, 0.8}, {3.0, 1.2}, {1.0, 0.0}}, {{1.0, 0.0}, {1.0, 0.5}, {1.0, 0.0}}});
    // centers 1.05..1.35 x 0.55..1.45 are solid: 4 x 10 cells
    int blocked = 0;
    for (std::size_t k = 0; k < geo.grid().cell_count(); ++k) blocked += geo.cell_blocked(k);
    EXPECT_EQ(blocked, 40);
    EXPECT_TRUE(geo.is_exit(0));
    EXPECT_EQ(*geo.exit_wall(0), Wall::right);
    EXPECT_FALSE(geo.is_exit(1));  // interior counting line
}

TEST(ConstrainMove, StopsAtWallsAndObstacles) {
    const Geometry geo = room({{{{1.0, 0.5}, {1.4, 1.5}}}});
    const MoveResult a = geo.constrain_move({0.5, 0.05}, {0.6, -0.05});
    EXPECT_FALSE(a.exited);
    EXPECT_DOUBLE_EQ(a.position.x, 0.6);
    EXPECT_DOUBLE_EQ(a.position.y, 0.0);
    const MoveResult b = geo.constrain_move({0.95, 1.0}, {1.05, 1.02});
    EXPECT_DOUBLE_EQ(b.position.x, 1.0);
    EXPECT_DOUBLE_EQ(b.position.y, 1.02);
    EXPECT_FALSE(geo.inside_obstacle(b.position));
    const MoveResult c = geo.constrain_move({2.95, 1.0}, {3.05, 1.0});
    EXPECT_LT(c.position.x, 3.0);
    EXPECT_TRUE(cell_index(c.position, geo.grid()).has_value());
}

TEST(ConstrainMove, LeavesThroughExitDoor) {
    const Geometry geo = room({}, {{{3.0, 0.8}, {3.0, 1.2}, {1.0, 0.0}}});
    const MoveResult a = geo.constrain_move({2.95, 1.0}, {3.05, 1.0});
    EXPECT_TRUE(a.exited);
    EXPECT_EQ(a.exit_door, 0);
    const MoveResult b = geo.constrain_move({2.95, 1.5}, {3.05, 1.5});
    EXPECT_FALSE(b.exited);
}

TEST(ConstrainMove, RandomMovesEndInFreeSpace) {
    const Geometry geo = room({{{{1.0, 0.5}, {1.4, 1.5}}}, {{{2.0, 0.0}, {2.2, 0.6}}}});
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> ux(0.0, 3.0), uy(0.0, 2.0), step(-0.1, 0.1);
    for (int k = 0; k < 5000; ++k) {
        const Vec2 from{ux(rng), uy(rng)};
        if (geo.inside_obstacle(from)) continue;
        const MoveResult m = geo.constrain_move(from, from + Vec2{step(rng), step(rng)});
        ASSERT_FALSE(m.exited);
        EXPECT_FALSE(geo.inside_obstacle(m.position));
        EXPECT_TRUE(cell_index(m.position, geo.grid()).has_value());
    }
}
