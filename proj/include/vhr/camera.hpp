/// @file camera.hpp
/// @brief Pinhole camera model for synthetic depth sensing.

#pragma once

#include <stdexcept>

#include "vhr/json_support.hpp"
#include "vhr/math.hpp"

namespace vhr::percept {

/// Pinhole camera; `pose` maps camera coordinates to world coordinates
/// (camera looks along its local +z).
struct Camera {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;  ///< pixels
    int width = 0, height = 0;
    Transform pose;  ///< camera -> world

    void validate() const {
        if (fx <= 0.0 || fy <= 0.0) throw std::invalid_argument("camera focal lengths must be > 0");
        if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
            throw std::invalid_argument("camera principal point must lie inside the image");
    }

    Vec3 origin() const { return pose.pos; }

    /// Unit world-space ray direction through pixel center (u, v).
    Vec3 pixel_ray(int u, int v) const {
        const Vec3 local{(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
        return normalized(pose.rotate(local));
    }
};

/// Camera at `eye` looking at `target`, x to the right, y down (image
/// convention), z forward; square pixels from a vertical field of view.
inline Camera look_at_camera(const Vec3& eye, const Vec3& target, int width, int height,
                             double vertical_fov_deg) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    const double f = (height / 2.0) / std::tan(vertical_fov_deg * M_PI / 360.0);
    cam.fx = cam.fy = f;

    const Vec3 forward = normalized(target - eye);
    Vec3 up{0, 0, 1};
    if (std::abs(dot(forward, up)) > 0.999) up = {0, 1, 0};
    const Vec3 right = normalized(cross(forward, up));
    const Vec3 down = cross(forward, right);
    cam.pose.rot.m = {right.x, down.x, forward.x,
                      right.y, down.y, forward.y,
                      right.z, down.z, forward.z};
    cam.pose.pos = eye;
    return cam;
}

struct CameraConfig {
    Vec3 eye{0.0, -0.75, 0.9};
    Vec3 target{0.0, 0.0, 0.05};
    int width = 160;
    int height = 120;
    double vertical_fov_deg = 50.0;

    Camera build() const {
        Camera c = look_at_camera(eye, target, width, height, vertical_fov_deg);
        c.validate();
        return c;
    }
};

inline void to_json(nlohmann::json& j, const CameraConfig& c) {
    j = nlohmann::json{{"eye", c.eye},
                       {"target", c.target},
                       {"width", c.width},
                       {"height", c.height},
                       {"vertical_fov_deg", c.vertical_fov_deg}};
}

inline void from_json(const nlohmann::json& j, CameraConfig& c) {
    j.at("eye").get_to(c.eye);
    j.at("target").get_to(c.target);
    j.at("width").get_to(c.width);
    j.at("height").get_to(c.height);
    j.at("vertical_fov_deg").get_to(c.vertical_fov_deg);
}

}  // namespace vhr::percept
