/// @file scene.hpp
/// @brief Procedural task scenes: primitive-shape boards, a lathed plate, and a
/// capsule-chain arm proxy, plus the support floor.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/body.hpp"
#include "vhr/cloth.hpp"
#include "vhr/rng.hpp"

namespace vhr::tasks {

using sim::BodySpec;
using sim::RigidBody;
using sim::ShapeKind;

enum class TaskTag { PrimitiveShapes, DishWashing, ArmProxy };

inline const char* to_string(TaskTag t) {
    switch (t) {
        case TaskTag::PrimitiveShapes: return "primitive_shapes";
        case TaskTag::DishWashing: return "dish_washing";
        case TaskTag::ArmProxy: return "arm_proxy";
    }
    return "?";
}

inline TaskTag task_tag_from_string(const std::string& s) {
    if (s == "primitive_shapes") return TaskTag::PrimitiveShapes;
    if (s == "dish_washing") return TaskTag::DishWashing;
    if (s == "arm_proxy") return TaskTag::ArmProxy;
    throw std::invalid_argument("unknown task tag: " + s);
}

struct ClothSpec {
    double width = 0.3;    ///< m
    double height = 0.3;   ///< m
    int resolution = 12;   ///< vertices per side
    sim::Stiffness stiffness;  ///< defaults (1.0, 0.9, 0.8)
    double mass = 0.06;    ///< total cloth mass, kg
    std::string obj_path;  ///< optional OBJ override for the cloth mesh
};

struct SceneSpec {
    TaskTag task_tag = TaskTag::PrimitiveShapes;
    std::vector<BodySpec> bodies;
    ClothSpec cloth;
    Vec3 grasp_point;               ///< filled in by rollout (trajectory start)
    std::vector<Vec3> arm_joints;   ///< arm task: shoulder, elbow, wrist, fingertip

    std::vector<RigidBody> build_bodies() const {
        std::vector<RigidBody> out;
        out.reserve(bodies.size());
        for (const auto& b : bodies) out.emplace_back(b);
        return out;
    }

    /// Bounds of the labeled bodies (ignores the support floor).
    Aabb labeled_bounds() const {
        Aabb box;
        for (const auto& b : bodies)
            if (b.labeled) box.extend(RigidBody(b).bounds());
        return box;
    }
};

struct SceneSamplerConfig {
    bool include_floor = true;
    double floor_half_extent = 1.5;
    // primitive shapes
    double cube_half_min = 0.03, cube_half_max = 0.07;
    double sphere_radius_min = 0.04, sphere_radius_max = 0.08;
    double cylinder_radius_min = 0.035, cylinder_radius_max = 0.06;
    double cylinder_half_height_min = 0.03, cylinder_half_height_max = 0.07;
    double placement_extent = 0.12;  ///< xy scatter half-range for shapes
    // dish washing
    double plate_radius_min = 0.10, plate_radius_max = 0.16;
    double plate_depth_min = 0.015, plate_depth_max = 0.035;
    double plate_thickness = 0.008;
    // arm proxy
    double upper_arm_length_min = 0.25, upper_arm_length_max = 0.32;
    double forearm_length_min = 0.22, forearm_length_max = 0.28;
    double hand_length_min = 0.08, hand_length_max = 0.12;
    double upper_arm_radius_min = 0.045, upper_arm_radius_max = 0.06;
    double forearm_radius_min = 0.035, forearm_radius_max = 0.05;
    double hand_radius_min = 0.02, hand_radius_max = 0.03;

    ClothSpec cloth;
};

inline BodySpec make_floor(double half_extent) {
    Transform pose;
    pose.pos = {0.0, 0.0, -0.05};
    return BodySpec::box({half_extent, half_extent, 0.05}, pose, /*labeled=*/false);
}

namespace detail {

inline bool overlaps(const BodySpec& a, const BodySpec& b, double margin) {
    const Aabb ba = RigidBody(a).bounds().inflated(margin);
    const Aabb bb = RigidBody(b).bounds();
    return ba.hi.x >= bb.lo.x && bb.hi.x >= ba.lo.x && ba.hi.y >= bb.lo.y && bb.hi.y >= ba.lo.y &&
           ba.hi.z >= bb.lo.z && bb.hi.z >= ba.lo.z;
}

inline BodySpec sample_primitive(Rng& rng, const SceneSamplerConfig& cfg) {
    const int kind = rng.uniform_int(0, 2);
    const double x = rng.uniform(-cfg.placement_extent, cfg.placement_extent);
    const double y = rng.uniform(-cfg.placement_extent, cfg.placement_extent);
    const double yaw = rng.uniform(0.0, 2.0 * M_PI);
    Transform pose;
    pose.rot = Mat3::rotation_z(yaw);
    switch (kind) {
        case 0: {  // cylinder, axis vertical, resting on the floor
            const double r = rng.uniform(cfg.cylinder_radius_min, cfg.cylinder_radius_max);
            const double h = rng.uniform(cfg.cylinder_half_height_min, cfg.cylinder_half_height_max);
            pose.pos = {x, y, h};
            return BodySpec::cylinder(r, h, pose);
        }
        case 1: {  // sphere
            const double r = rng.uniform(cfg.sphere_radius_min, cfg.sphere_radius_max);
            pose.pos = {x, y, r};
            return BodySpec::sphere(r, {x, y, r});
        }
        default: {  // cube
            const double h = rng.uniform(cfg.cube_half_min, cfg.cube_half_max);
            pose.pos = {x, y, h};
            return BodySpec::box({h, h, h}, pose);
        }
    }
}

inline BodySpec sample_plate(Rng& rng, const SceneSamplerConfig& cfg) {
    const double R = rng.uniform(cfg.plate_radius_min, cfg.plate_radius_max);
    const double D = rng.uniform(cfg.plate_depth_min, cfg.plate_depth_max);
    const double t = cfg.plate_thickness;
    const double x = rng.uniform(-0.05, 0.05);
    const double y = rng.uniform(-0.05, 0.05);
    // Closed (rho, z) profile of a plate: flat well, sloped wall, raised rim.
    std::vector<std::array<double, 2>> profile{
        {0.0, 0.0}, {0.5 * R, 0.0}, {R, D}, {R, D + 0.6 * t}, {0.5 * R, t}, {0.0, t}};
    Transform pose;
    pose.pos = {x, y, 0.0};
    return BodySpec::lathe(std::move(profile), pose);
}

inline BodySpec sample_arm(Rng& rng, const SceneSamplerConfig& cfg, std::vector<Vec3>& joints_out) {
    const Vec3 shoulder{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.10, 0.14)};
    const double yaw1 = rng.uniform(-0.3, 0.3);
    const double pitch1 = rng.uniform(-0.08, 0.08);
    const double yaw2 = yaw1 + rng.uniform(-0.5, 0.5);
    const double pitch2 = pitch1 + rng.uniform(-0.05, 0.15);
    const auto dir = [](double yaw, double pitch) {
        return Vec3{std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
    };
    const double l1 = rng.uniform(cfg.upper_arm_length_min, cfg.upper_arm_length_max);
    const double l2 = rng.uniform(cfg.forearm_length_min, cfg.forearm_length_max);
    const double l3 = rng.uniform(cfg.hand_length_min, cfg.hand_length_max);
    const double r1 = rng.uniform(cfg.upper_arm_radius_min, cfg.upper_arm_radius_max);
    const double r2 = rng.uniform(cfg.forearm_radius_min, cfg.forearm_radius_max);
    const double r3 = rng.uniform(cfg.hand_radius_min, cfg.hand_radius_max);

    const Vec3 elbow = shoulder + dir(yaw1, pitch1) * l1;
    const Vec3 wrist = elbow + dir(yaw2, pitch2) * l2;
    Vec3 fingertip = wrist + dir(yaw2, pitch2) * l3;

    // Keep every segment clear of the floor.
    const double min_z = std::min({shoulder.z - r1, elbow.z - r2, wrist.z - r3, fingertip.z - r3});
    Vec3 lift{0, 0, min_z < 0.02 ? 0.02 - min_z : 0.0};

    joints_out = {shoulder + lift, elbow + lift, wrist + lift, fingertip + lift};
    Transform pose;  // joints are stored in world coordinates
    return BodySpec::capsule_chain(joints_out, {r1, r2, r3}, pose);
}

}  // namespace detail

/// Samples a task scene. Primitive scenes draw 1-3 non-overlapping shapes;
/// overlap is resolved by rejection (up to 100 attempts).
inline SceneSpec sample_scene(TaskTag task, Rng& rng, const SceneSamplerConfig& cfg = {}) {
    SceneSpec scene;
    scene.task_tag = task;
    scene.cloth = cfg.cloth;
    switch (task) {
        case TaskTag::PrimitiveShapes: {
            bool built = false;
            for (int scene_attempt = 0; scene_attempt < 100 && !built; ++scene_attempt) {
                scene.bodies.clear();
                const int count = rng.uniform_int(1, 3);
                built = true;
                for (int k = 0; k < count && built; ++k) {
                    bool placed = false;
                    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                        BodySpec candidate = detail::sample_primitive(rng, cfg);
                        placed = true;
                        for (const auto& other : scene.bodies)
                            if (detail::overlaps(candidate, other, 0.01)) {
                                placed = false;
                                break;
                            }
                        if (placed) scene.bodies.push_back(std::move(candidate));
                    }
                    built = placed;  // deadlocked layout: redraw the whole scene
                }
            }
            if (!built)
                throw std::runtime_error("could not place primitive shapes without overlap after 100 attempts");
            break;
        }
        case TaskTag::DishWashing:
            scene.bodies.push_back(detail::sample_plate(rng, cfg));
            break;
        case TaskTag::ArmProxy:
            scene.bodies.push_back(detail::sample_arm(rng, cfg, scene.arm_joints));
            break;
    }
    if (cfg.include_floor) scene.bodies.push_back(make_floor(cfg.floor_half_extent));
    return scene;
}

// --- JSON (embedded in dataset headers for reproducibility) ---

inline void to_json(nlohmann::json& j, const ClothSpec& c) {
    j = nlohmann::json{{"width", c.width},
                       {"height", c.height},
                       {"resolution", c.resolution},
                       {"stiffness", {c.stiffness.stretch, c.stiffness.bend, c.stiffness.shear}},
                       {"mass", c.mass},
                       {"obj_path", c.obj_path}};
}

inline void from_json(const nlohmann::json& j, ClothSpec& c) {
    j.at("width").get_to(c.width);
    j.at("height").get_to(c.height);
    j.at("resolution").get_to(c.resolution);
    c.stiffness.stretch = j.at("stiffness").at(0).get<double>();
    c.stiffness.bend = j.at("stiffness").at(1).get<double>();
    c.stiffness.shear = j.at("stiffness").at(2).get<double>();
    j.at("mass").get_to(c.mass);
    c.obj_path = j.value("obj_path", std::string{});
}

inline void to_json(nlohmann::json& j, const SceneSpec& s) {
    j = nlohmann::json{{"task_tag", to_string(s.task_tag)},
                       {"bodies", s.bodies},
                       {"cloth", s.cloth},
                       {"grasp_point", s.grasp_point},
                       {"arm_joints", s.arm_joints}};
}

inline void from_json(const nlohmann::json& j, SceneSpec& s) {
    s.task_tag = task_tag_from_string(j.at("task_tag").get<std::string>());
    j.at("bodies").get_to(s.bodies);
    j.at("cloth").get_to(s.cloth);
    j.at("grasp_point").get_to(s.grasp_point);
    j.at("arm_joints").get_to(s.arm_joints);
}

}  // namespace vhr::tasks
