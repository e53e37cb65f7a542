/// @file trajectory.hpp
/// @brief Gripper waypoint trajectories: surface-contour sampling for the
/// primitive/dish tasks, joint waypoints for the arm task, and arc-length
/// interpolation at constant speed.

#pragma once

#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "vhr/scene.hpp"

namespace vhr::tasks {

struct Trajectory {
    std::vector<Vec3> waypoints;
    double speed = 0.1;  ///< m/s along the polyline

    double total_length() const {
        double len = 0.0;
        for (std::size_t i = 0; i + 1 < waypoints.size(); ++i)
            len += norm(waypoints[i + 1] - waypoints[i]);
        return len;
    }

    /// Position after traveling arc length `s` from the start; parks at the end.
    Vec3 position_at(double s) const {
        if (waypoints.empty()) throw std::invalid_argument("trajectory has no waypoints");
        if (s <= 0.0) return waypoints.front();
        for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
            const double seg = norm(waypoints[i + 1] - waypoints[i]);
            if (s <= seg) {
                if (seg <= 0.0) continue;
                return waypoints[i] + (waypoints[i + 1] - waypoints[i]) * (s / seg);
            }
            s -= seg;
        }
        return waypoints.back();
    }
};

struct TrajectoryConfig {
    double speed_min = 0.05, speed_max = 0.2;   ///< m/s
    int waypoints_min = 3, waypoints_max = 6;   ///< contour tasks
    double surface_offset_extra = 0.0;          ///< added to cloth thickness + d
    double arm_waypoint_deviation = 0.05;       ///< +-5 cm per axis
    double contact_threshold = 0.005;           ///< mirrors SimConfig d
    double cloth_thickness = 0.00625;           ///< mirrors particle radius
};

namespace detail {

/// Signed distance and outward gradient of the union of labeled bodies.
inline std::pair<double, Vec3> union_sd(const std::vector<RigidBody>& bodies, const Vec3& x) {
    double best = std::numeric_limits<double>::max();
    Vec3 grad{0, 0, 1};
    for (const auto& b : bodies) {
        if (!b.labeled()) continue;
        const sim::SurfaceSample s = b.surface(x);
        if (s.sd < best) {
            best = s.sd;
            grad = s.n;
        }
    }
    return {best, grad};
}

/// Projects a point dropped from above onto the offset isosurface of the union.
inline std::optional<Vec3> project_to_offset_surface(const std::vector<RigidBody>& bodies, Vec3 x,
                                                     double offset) {
    for (int it = 0; it < 40; ++it) {
        const auto [sd, grad] = union_sd(bodies, x);
        x -= grad * (sd - offset);
    }
    const auto [sd, grad] = union_sd(bodies, x);
    if (std::abs(sd - offset) > 2e-3) return std::nullopt;
    return x;
}

}  // namespace detail

/// Samples a gripper trajectory for a scene. Contour tasks draw waypoints on
/// the offset surface (body surface + cloth thickness + contact threshold) of
/// the labeled-body union; the arm task visits fingertip, wrist, elbow, and
/// shoulder with per-axis uniform deviation.
inline Trajectory sample_trajectory(const SceneSpec& scene, Rng& rng, const TrajectoryConfig& cfg = {}) {
    Trajectory traj;
    traj.speed = rng.uniform(cfg.speed_min, cfg.speed_max);

    if (scene.task_tag == TaskTag::ArmProxy) {
        if (scene.arm_joints.size() != 4)
            throw std::runtime_error("arm scene is missing its joint positions");
        // distal to proximal: fingertip, wrist, elbow, shoulder
        for (int i = 3; i >= 0; --i) {
            const double dev = cfg.arm_waypoint_deviation;
            const Vec3 d = rng.uniform_vec3(-dev, dev);
            traj.waypoints.push_back(scene.arm_joints[static_cast<std::size_t>(i)] + d);
        }
        return traj;
    }

    const auto bodies = scene.build_bodies();
    const Aabb box = scene.labeled_bounds();
    if (!(box.hi.x > box.lo.x))
        throw std::runtime_error("empty reachable contour: scene has no labeled bodies");
    const double offset = cfg.cloth_thickness + cfg.contact_threshold + cfg.surface_offset_extra;
    const int n = rng.uniform_int(cfg.waypoints_min, cfg.waypoints_max);

    for (int k = 0; k < n; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const double x = rng.uniform(box.lo.x - 0.05, box.hi.x + 0.05);
            const double y = rng.uniform(box.lo.y - 0.05, box.hi.y + 0.05);
            const Vec3 start{x, y, box.hi.z + 0.2};
            const auto p = detail::project_to_offset_surface(bodies, start, offset);
            if (!p || p->z < 0.015) continue;
            traj.waypoints.push_back(*p);
            placed = true;
        }
        if (!placed) throw std::runtime_error("empty reachable contour: offset-surface sampling failed");
    }
    return traj;
}

inline void to_json(nlohmann::json& j, const Trajectory& t) {
    j = nlohmann::json{{"waypoints", t.waypoints}, {"speed", t.speed}};
}

inline void from_json(const nlohmann::json& j, Trajectory& t) {
    j.at("waypoints").get_to(t.waypoints);
    j.at("speed").get_to(t.speed);
}

}  // namespace vhr::tasks
