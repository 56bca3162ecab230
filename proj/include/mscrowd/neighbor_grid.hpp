#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mscrowd/vec2.hpp"

namespace mscrowd {

/// Uniform bucket grid over a point set for fixed-radius queries.
/// Candidates come back sorted by point index so that sums accumulated over
/// them run in the same order as a brute-force loop over all points.
class NeighborGrid {
public:
    NeighborGrid() = default;

    NeighborGrid(const std::vector<Vec2>& points, double bucket) : bucket_(bucket) {
        if (points.empty() || !(bucket > 0.0) || !std::isfinite(bucket)) return;
        lo_ = points.front();
        Vec2 hi = lo_;
        for (const Vec2& p : points) {
            lo_.x = std::min(lo_.x, p.x); lo_.y = std::min(lo_.y, p.y);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
        }
        nx_ = static_cast<int>(std::floor((hi.x - lo_.x) / bucket_)) + 1;
        ny_ = static_cast<int>(std::floor((hi.y - lo_.y) / bucket_)) + 1;
        start_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_) + 1, 0);
        std::vector<std::size_t> key(points.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            key[k] = bucket_of(points[k]);
            ++start_[key[k] + 1];
        }
        for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
        index_.resize(points.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t k = 0; k < points.size(); ++k) index_[fill[key[k]]++] = k;
    }

    /// Indices of all points that may lie within `radius` of x, ascending.
    /// `radius` must not exceed the bucket size.
    void candidates(const Vec2& x, double radius, std::vector<std::size_t>& out) const {
        out.clear();
        if (index_.empty()) return;
        const int ci0 = static_cast<int>(std::floor((x.x - radius - lo_.x) / bucket_));
        const int ci1 = static_cast<int>(std::floor((x.x + radius - lo_.x) / bucket_));
        const int cj0 = static_cast<int>(std::floor((x.y - radius - lo_.y) / bucket_));
        const int cj1 = static_cast<int>(std::floor((x.y + radius - lo_.y) / bucket_));
        for (int j = std::max(0, cj0); j <= std::min(ny_ - 1, cj1); ++j)
            for (int i = std::max(0, ci0); i <= std::min(nx_ - 1, ci1); ++i) {
                const std::size_t b = static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
                out.insert(out.end(), index_.begin() + static_cast<std::ptrdiff_t>(start_[b]),
                           index_.begin() + static_cast<std::ptrdiff_t>(start_[b + 1]));
            }
        std::sort(out.begin(), out.end());
    }

    double bucket() const noexcept { return bucket_; }

private:
    std::size_t bucket_of(const Vec2& p) const noexcept {
        const int i = std::min(nx_ - 1, static_cast<int>(std::floor((p.x - lo_.x) / bucket_)));
        const int j = std::min(ny_ - 1, static_cast<int>(std::floor((p.y - lo_.y) / bucket_)));
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }

    double bucket_ = 0.0;
    Vec2 lo_;
    int nx_ = 0;
    int ny_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> index_;
};

}  // namespace mscrowd
