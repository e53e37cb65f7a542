/// @file cloud.hpp
/// @brief Labeled point clouds and the voxel / crop / noise filters applied to
/// them before model input construction.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "vhr/grid.hpp"
#include "vhr/math.hpp"
#include "vhr/rng.hpp"

namespace vhr::percept {

enum class PointClass : std::uint8_t { Object = 0, Cloth = 1, Gripper = 2 };

struct LabeledPoint {
    Vec3 position;
    PointClass cls = PointClass::Object;
};

struct LabeledPointCloud {
    std::vector<LabeledPoint> points;

    std::size_t count(PointClass c) const {
        std::size_t n = 0;
        for (const auto& p : points)
            if (p.cls == c) ++n;
        return n;
    }

    std::vector<Vec3> positions_of(PointClass c) const {
        std::vector<Vec3> out;
        for (const auto& p : points)
            if (p.cls == c) out.push_back(p.position);
        return out;
    }

    /// Indices of points of a class, in storage order.
    std::vector<std::size_t> indices_of(PointClass c) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i].cls == c) out.push_back(i);
        return out;
    }

    void validate() const {
        std::size_t grippers = 0;
        for (const auto& p : points) {
            if (!is_finite(p.position)) throw std::runtime_error("non-finite point in cloud");
            if (p.cls == PointClass::Gripper) ++grippers;
        }
        if (grippers > 1) throw std::runtime_error("cloud has more than one gripper point");
    }
};

/// Voxel-grid filter: per class independently, points are binned into an
/// axis-aligned grid anchored at the world origin and each non-empty voxel
/// emits the centroid of its points. The gripper point bypasses voxelization.
/// Output order: object voxels (sorted by cell index), then cloth voxels, then
/// the gripper point.
inline LabeledPointCloud voxelize(const LabeledPointCloud& cloud, double voxel_size) {
    if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be > 0");
    using Cell = std::tuple<long long, long long, long long>;
    const auto cell_of = [voxel_size](const Vec3& p) {
        return Cell{static_cast<long long>(std::floor(p.x / voxel_size)),
                    static_cast<long long>(std::floor(p.y / voxel_size)),
                    static_cast<long long>(std::floor(p.z / voxel_size))};
    };

    LabeledPointCloud out;
    for (const PointClass cls : {PointClass::Object, PointClass::Cloth}) {
        std::map<Cell, std::pair<Vec3, std::size_t>> acc;
        for (const auto& p : cloud.points) {
            if (p.cls != cls) continue;
            auto& [sum, n] = acc[cell_of(p.position)];
            sum += p.position;
            ++n;
        }
        for (const auto& [cell, sum_n] : acc)
            out.points.push_back({sum_n.first / static_cast<double>(sum_n.second), cls});
    }
    for (const auto& p : cloud.points)
        if (p.cls == PointClass::Gripper) out.points.push_back(p);
    return out;
}

/// Crops object points farther than tau from every cloth point; cloth and
/// gripper points are always kept. Comparison is strict (< tau).
inline LabeledPointCloud crop(const LabeledPointCloud& cloud, double tau) {
    const std::vector<Vec3> cloth = cloud.positions_of(PointClass::Cloth);
    const SpatialGrid grid(cloth, tau > 0.0 ? tau : 1.0);
    LabeledPointCloud out;
    for (const auto& p : cloud.points) {
        if (p.cls != PointClass::Object) {
            out.points.push_back(p);
            continue;
        }
        if (cloth.empty()) continue;
        bool keep = false;
        grid.for_each_within(p.position, tau, [&](std::size_t, double d2) {
            if (d2 < tau * tau) keep = true;
        });
        if (keep) out.points.push_back(p);
    }
    return out;
}

/// Adds iid zero-mean Gaussian noise per axis to every point position.
inline LabeledPointCloud add_noise(const LabeledPointCloud& cloud, double std, Rng& rng) {
    if (std < 0.0) throw std::invalid_argument("noise std must be >= 0");
    LabeledPointCloud out = cloud;
    if (std == 0.0) return out;
    for (auto& p : out.points) p.position += rng.normal_vec3(std);
    return out;
}

}  // namespace vhr::percept
