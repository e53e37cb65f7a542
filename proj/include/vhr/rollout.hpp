/// @file rollout.hpp
/// @brief Full simulation rollouts: cloth placement, grasp anchoring, and
/// per-frame stepping along a trajectory.

#pragma once

#include <stdexcept>
#include <vector>

#include "vhr/mesh.hpp"
#include "vhr/sim.hpp"
#include "vhr/trajectory.hpp"

namespace vhr::tasks {

struct Frame {
    int step_index = 0;
    std::vector<Vec3> cloth_positions;
    Vec3 gripper_position;
    Vec3 gripper_velocity;
    std::vector<sim::ContactEvent> events;
};

struct RolloutConfig {
    sim::SimConfig sim;
    double anchor_radius = 0.02;  ///< grasp capture radius (m)
    int min_frames = 200;
    int max_frames = 800;
};

struct RolloutResult {
    std::vector<Frame> frames;
    std::vector<std::array<int, 3>> cloth_triangles;  ///< topology shared by all frames
    bool clipped = false;  ///< trajectory was longer than max_frames allows
    int skipped_degenerate_constraints = 0;
};

namespace detail {

/// Builds the cloth mesh and moves it so its grasp corner sits at `grasp`,
/// extended horizontally away from the labeled-body centroid.
inline TriMesh place_cloth(const SceneSpec& scene, const Vec3& grasp) {
    TriMesh mesh = scene.cloth.obj_path.empty()
                       ? grid_cloth_mesh(scene.cloth.width, scene.cloth.height,
                                         scene.cloth.resolution, scene.cloth.resolution)
                       : load_obj(scene.cloth.obj_path);

    const Aabb box = scene.labeled_bounds();
    const Vec3 center = box.hi.x > box.lo.x ? box.center() : Vec3{0, 0, 0};
    Vec3 away = grasp - Vec3{center.x, center.y, grasp.z};
    if (norm(away) < 1e-6) away = {1, 0, 0};
    away = normalized(Vec3{away.x, away.y, 0.0});

    // Rotate so the mesh diagonal (+x +y from the corner vertex) points away
    // from the scene, then translate the corner onto the grasp point.
    const double yaw = std::atan2(away.y, away.x) - M_PI / 4.0;
    const Mat3 rot = Mat3::rotation_z(yaw);
    const Vec3 corner = mesh.vertices.empty() ? Vec3{} : mesh.vertices.front();
    for (auto& v : mesh.vertices) v = rot * (v - corner) + grasp;
    return mesh;
}

/// Pushes overlapping free particles out of the bodies before the first step.
inline void declash(sim::ClothState& cloth, const std::vector<RigidBody>& bodies, double d) {
    for (int pass = 0; pass < 10; ++pass) {
        bool any = false;
        for (auto& p : cloth.particles) {
            if (p.inverse_mass <= 0.0) continue;
            for (const auto& b : bodies) {
                if (sim::project_contact(p.position, b, d)) any = true;
            }
            p.previous_position = p.position;
        }
        if (!any) break;
    }
}

}  // namespace detail

/// Runs a full rollout. Frame count is ceil(path length / (speed * dt)),
/// clipped into [min_frames, max_frames]; past the path end the gripper parks
/// at the final waypoint while the cloth keeps settling.
inline RolloutResult rollout(const SceneSpec& scene, const Trajectory& trajectory,
                             const RolloutConfig& cfg) {
    if (trajectory.waypoints.size() < 2)
        throw std::invalid_argument("trajectory needs at least 2 waypoints");
    cfg.sim.validate();

    const Vec3 grasp0 = trajectory.waypoints.front();
    const TriMesh mesh = detail::place_cloth(scene, grasp0);
    const double mass_per_particle = scene.cloth.mass / static_cast<double>(mesh.vertices.size());
    sim::ClothState cloth = sim::build_cloth(mesh, scene.cloth.stiffness, mass_per_particle);
    const auto bodies = scene.build_bodies();

    sim::GripperAnchor anchor = sim::anchor_grasp(cloth, grasp0, cfg.anchor_radius);
    detail::declash(cloth, bodies, cfg.sim.contact_threshold);

    const double step_len = trajectory.speed * cfg.sim.dt;
    const double path_len = trajectory.total_length();
    const int needed = step_len > 0.0 ? static_cast<int>(std::ceil(path_len / step_len)) : 0;
    const int n_frames = std::max(cfg.min_frames, std::min(cfg.max_frames, std::max(needed, 1)));

    RolloutResult result;
    result.cloth_triangles = cloth.triangles;
    result.clipped = needed > cfg.max_frames;
    result.frames.reserve(static_cast<std::size_t>(n_frames));

    for (int k = 0; k < n_frames; ++k) {
        const Vec3 target = trajectory.position_at(static_cast<double>(k + 1) * step_len);
        sim::StepResult sr;
        try {
            sr = sim::step(cloth, bodies, &anchor, target, cfg.sim);
        } catch (const sim::SimAbort& e) {
            throw sim::SimAbort(std::string(e.what()) + " (frame " + std::to_string(k) + ")");
        }
        result.skipped_degenerate_constraints += sr.stats.skipped_degenerate_stretch;

        Frame frame;
        frame.step_index = k;
        frame.cloth_positions = cloth.positions();
        frame.gripper_position = anchor.grasp_position;
        frame.gripper_velocity = anchor.velocity;
        frame.events = std::move(sr.events);
        result.frames.push_back(std::move(frame));
    }
    return result;
}

}  // namespace vhr::tasks
