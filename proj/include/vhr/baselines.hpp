/// @file baselines.hpp
/// @brief Non-learned reference predictors: constant median force and
/// nearest-cloth-distance contact.

#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "vhr/dataset.hpp"
#include "vhr/grid.hpp"

namespace vhr::pipeline {

/// Median with the midpoint convention for even-sized sets.
inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Constant-force baseline: the median of the positive force labels on the
/// training split (the L1-optimal constant).
inline double fit_constant_force(const std::vector<DatasetRecord>& train) {
    std::vector<double> positives;
    for (const auto& r : train)
        for (std::size_t i = 0; i < r.force.size(); ++i)
            if (r.contact[i]) positives.push_back(r.force[i]);
    if (positives.empty())
        throw std::runtime_error("constant-force baseline needs at least one contact point in training data");
    return median(positives);
}

/// Distance from each object point to its nearest cloth point (per record).
inline std::vector<double> object_to_cloth_distances(const DatasetRecord& r, double search_radius) {
    const auto cloth = r.cloud.positions_of(percept::PointClass::Cloth);
    std::vector<double> out;
    out.reserve(r.object_count());
    if (cloth.empty()) {
        out.assign(r.object_count(), std::numeric_limits<double>::infinity());
        return out;
    }
    const SpatialGrid grid(cloth, search_radius);
    for (const auto& p : r.cloud.points) {
        if (p.cls != percept::PointClass::Object) continue;
        double best2 = grid.nearest_within2(p.position, search_radius);
        if (!std::isfinite(best2)) {
            // Outside the fast search radius: brute force fallback.
            best2 = std::numeric_limits<double>::infinity();
            for (const Vec3& c : cloth) best2 = std::min(best2, norm2(p.position - c));
        }
        out.push_back(std::sqrt(best2));
    }
    return out;
}

struct F1Counts {
    std::size_t tp = 0, fp = 0, fn = 0;

    double precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
    double recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
    double f1() const {
        const std::size_t denom = 2 * tp + fp + fn;
        return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    }
};

/// Neighborhood-contact baseline: grid search over the distance threshold that
/// maximizes training F1 (ties toward the smaller threshold).
inline double fit_neighborhood(const std::vector<DatasetRecord>& train, double grid_step,
                               double grid_max) {
    if (grid_step <= 0.0 || grid_max <= 0.0) throw std::invalid_argument("bad neighborhood grid");
    std::vector<double> distances;
    std::vector<std::uint8_t> labels;
    for (const auto& r : train) {
        const auto d = object_to_cloth_distances(r, grid_max);
        distances.insert(distances.end(), d.begin(), d.end());
        labels.insert(labels.end(), r.contact.begin(), r.contact.end());
    }

    double best_t = 0.0, best_f1 = -1.0;
    const int steps = static_cast<int>(std::round(grid_max / grid_step));
    for (int k = 0; k <= steps; ++k) {
        const double t = k * grid_step;
        F1Counts counts;
        for (std::size_t i = 0; i < distances.size(); ++i) {
            const bool pred = distances[i] < t;
            if (pred && labels[i]) ++counts.tp;
            if (pred && !labels[i]) ++counts.fp;
            if (!pred && labels[i]) ++counts.fn;
        }
        const double f1 = counts.f1();
        if (f1 > best_f1) {
            best_f1 = f1;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace vhr::pipeline
