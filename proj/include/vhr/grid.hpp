/// @file grid.hpp
/// @brief Uniform hash grid for fixed-radius neighbor queries over point sets.

#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "vhr/math.hpp"

namespace vhr {

/// Hash grid with cell size equal to the query radius; query(p, r) visits all
/// points within r of p (plus some candidates slightly beyond, filtered by the
/// caller-supplied distance test). Build once, query many times.
class SpatialGrid {
  public:
    SpatialGrid(const std::vector<Vec3>& points, double cell_size)
        : points_(points), cell_(cell_size > 0.0 ? cell_size : 1.0) {
        cells_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
    }

    /// Calls fn(index, squared_distance) for every stored point with |p - q| <= radius.
    template <typename Fn>
    void for_each_within(const Vec3& q, double radius, Fn&& fn) const {
        const double r2 = radius * radius;
        const int span = static_cast<int>(std::ceil(radius / cell_));
        const int cx = coord(q.x), cy = coord(q.y), cz = coord(q.z);
        for (int dx = -span; dx <= span; ++dx)
            for (int dy = -span; dy <= span; ++dy)
                for (int dz = -span; dz <= span; ++dz) {
                    const auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
                    if (it == cells_.end()) continue;
                    for (const std::size_t i : it->second) {
                        const double d2 = norm2(points_[i] - q);
                        if (d2 <= r2) fn(i, d2);
                    }
                }
    }

    /// Squared distance to the nearest stored point within `radius`, or +inf.
    double nearest_within2(const Vec3& q, double radius) const {
        double best = std::numeric_limits<double>::infinity();
        for_each_within(q, radius, [&](std::size_t, double d2) {
            if (d2 < best) best = d2;
        });
        return best;
    }

  private:
    int coord(double v) const { return static_cast<int>(std::floor(v / cell_)); }

    std::uint64_t key(const Vec3& p) const { return pack(coord(p.x), coord(p.y), coord(p.z)); }

    static std::uint64_t pack(int x, int y, int z) {
        const auto u = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) & 0x1fffffULL; };
        return (u(x) << 42) | (u(y) << 21) | u(z);
    }

    const std::vector<Vec3>& points_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace vhr
