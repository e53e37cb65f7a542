/// @file render.hpp
/// @brief Ray-cast depth sensing of simulator frames into labeled point clouds.
///
/// One ray per pixel is cast against the cloth triangles and the labeled body
/// surfaces; the nearest hit yields a labeled 3D point. Object points are taken
/// from a pre-interaction render of the bare scene (objects are static, so
/// occluded object geometry is carried over from that initial render); the live
/// render contributes the cloth points. A synthetic gripper point at the grasp
/// position completes the cloud.

#pragma once

#include <optional>
#include <vector>

#include "vhr/bvh.hpp"
#include "vhr/camera.hpp"
#include "vhr/cloud.hpp"
#include "vhr/rollout.hpp"
#include "vhr/scene.hpp"

namespace vhr::percept {

namespace detail {

/// Nearest labeled-body hit along a ray, if any.
inline std::optional<double> raycast_bodies(const std::vector<sim::RigidBody>& bodies,
                                            const Vec3& origin, const Vec3& dir,
                                            bool labeled_only = true) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bodies) {
        if (labeled_only && !b.labeled()) continue;
        const auto t = b.raycast(origin, dir);
        if (t && *t < best) best = *t;
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

}  // namespace detail

/// Renders the bare scene (no cloth): one object point per pixel that hits a
/// labeled body. This is the pre-interaction object cloud P_O.
inline std::vector<Vec3> render_object_points(const tasks::SceneSpec& scene, const Camera& camera) {
    camera.validate();
    const auto bodies = scene.build_bodies();
    std::vector<Vec3> out;
    const Vec3 origin = camera.origin();
    for (int v = 0; v < camera.height; ++v)
        for (int u = 0; u < camera.width; ++u) {
            const Vec3 dir = camera.pixel_ray(u, v);
            const auto t = detail::raycast_bodies(bodies, origin, dir);
            if (t) out.push_back(origin + dir * *t);
        }
    return out;
}

/// Renders one frame given the cached pre-interaction object points. Cloth
/// points come from the live ray cast; a cloth hit is kept only when no body
/// (labeled or support) lies in front of it along the same ray.
inline LabeledPointCloud render_cloud(const tasks::Frame& frame, const tasks::SceneSpec& scene,
                                      const std::vector<std::array<int, 3>>& cloth_triangles,
                                      const std::vector<Vec3>& object_points,
                                      const Camera& camera) {
    camera.validate();
    const Bvh cloth_bvh(frame.cloth_positions, cloth_triangles);
    const auto bodies = scene.build_bodies();

    LabeledPointCloud cloud;
    for (const Vec3& p : object_points) cloud.points.push_back({p, PointClass::Object});

    const Vec3 origin = camera.origin();
    for (int v = 0; v < camera.height; ++v)
        for (int u = 0; u < camera.width; ++u) {
            const Vec3 dir = camera.pixel_ray(u, v);
            const auto hit = cloth_bvh.raycast(origin, dir);
            if (!hit) continue;
            const auto occluder = detail::raycast_bodies(bodies, origin, dir, /*labeled_only=*/false);
            if (occluder && *occluder < hit->t) continue;
            cloud.points.push_back({hit->point, PointClass::Cloth});
        }

    cloud.points.push_back({frame.gripper_position, PointClass::Gripper});
    return cloud;
}

/// Convenience overload which renders the object cloud on the fly (the
/// pipeline caches render_object_points per trajectory instead).
inline LabeledPointCloud render_cloud(const tasks::Frame& frame, const tasks::SceneSpec& scene,
                                      const std::vector<std::array<int, 3>>& cloth_triangles,
                                      const Camera& camera) {
    return render_cloud(frame, scene, cloth_triangles, render_object_points(scene, camera), camera);
}

}  // namespace vhr::percept
