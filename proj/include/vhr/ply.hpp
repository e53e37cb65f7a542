/// @file ply.hpp
/// @brief ASCII PLY export of labeled clouds with force-magnitude coloring.

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "vhr/cloud.hpp"

namespace vhr::percept {

/// Writes an ASCII PLY with per-vertex class, force magnitude, and a linear
/// blue-to-red colormap. `force` entries align with the object points of the
/// cloud in storage order; other classes render with zero force. `force_scale`
/// is the per-task force (N) that maps to full red, documented in the header.
inline std::string to_ply(const LabeledPointCloud& cloud, const std::vector<double>& force,
                          double force_scale, const std::vector<std::string>& extra_comments = {}) {
    std::string out;
    char line[256];
    const auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(line, sizeof(line), fmt, args...);
        out += line;
    };

    emit("ply\nformat ascii 1.0\n");
    emit("comment class codes: 0=object 1=cloth 2=gripper\n");
    emit("comment color: linear map, force 0 N = blue, force >= %.17g N = red\n", force_scale);
    for (const auto& c : extra_comments) out += "comment " + c + "\n";
    emit("element vertex %zu\n", cloud.points.size());
    emit("property double x\nproperty double y\nproperty double z\n");
    emit("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    emit("property uchar cls\nproperty double force\n");
    emit("end_header\n");

    std::size_t obj_idx = 0;
    for (const auto& p : cloud.points) {
        double f = 0.0;
        if (p.cls == PointClass::Object && obj_idx < force.size()) f = force[obj_idx++];
        const double a = force_scale > 0.0 ? clamp(f / force_scale, 0.0, 1.0) : 0.0;
        const int r = static_cast<int>(255.0 * a);
        const int b = static_cast<int>(255.0 * (1.0 - a));
        int g = 0;
        if (p.cls == PointClass::Cloth) g = 180;
        if (p.cls == PointClass::Gripper) g = 255;
        emit("%.17g %.17g %.17g %d %d %d %d %.17g\n", p.position.x, p.position.y, p.position.z, r, g,
             b, static_cast<int>(p.cls), f);
    }
    return out;
}

}  // namespace vhr::percept
