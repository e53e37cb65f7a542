/// @file graph.hpp
/// @brief Interaction-graph and flat point-set model inputs built from the
/// cropped labeled point cloud.

#pragma once

#include <stdexcept>
#include <vector>

#include "vhr/cloud.hpp"
#include "vhr/grid.hpp"

namespace vhr::percept {

/// Directed edge with relative-displacement features; graphs store both
/// directions of every connection.
struct GraphEdge {
    int src = 0, dst = 0;
    Vec3 displacement;  ///< x_src - x_dst
    double distance = 0.0;
};

/// Point-cloud graph: nodes carry a class one-hot and the broadcast gripper
/// velocity; node positions are intentionally not node features. An edge
/// exists iff the endpoints are closer than `edge_radius` and at least one of
/// them is a cloth point.
struct InteractionGraph {
    std::vector<Vec3> positions;               ///< per node (for bookkeeping, not features)
    std::vector<PointClass> classes;           ///< per node
    Vec3 gripper_velocity;
    std::vector<GraphEdge> edges;
    double edge_radius = 0.0375;

    std::size_t node_count() const { return positions.size(); }

    std::vector<std::size_t> object_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == PointClass::Object) out.push_back(i);
        return out;
    }
};

/// Builds the interaction graph over a cropped cloud. Edges are emitted in
/// both directions with consistently negated displacement features.
inline InteractionGraph build_graph(const LabeledPointCloud& cloud, double alpha,
                                    const Vec3& gripper_velocity) {
    if (cloud.points.empty()) throw std::invalid_argument("cannot build a graph from an empty cloud");
    InteractionGraph g;
    g.edge_radius = alpha;
    g.gripper_velocity = gripper_velocity;
    g.positions.reserve(cloud.points.size());
    g.classes.reserve(cloud.points.size());
    for (const auto& p : cloud.points) {
        g.positions.push_back(p.position);
        g.classes.push_back(p.cls);
    }

    const SpatialGrid grid(g.positions, alpha);
    for (std::size_t j = 0; j < g.positions.size(); ++j) {
        std::vector<std::size_t> neighbors;
        grid.for_each_within(g.positions[j], alpha, [&](std::size_t k, double d2) {
            if (k == j || d2 >= alpha * alpha) return;
            if (g.classes[j] != PointClass::Cloth && g.classes[k] != PointClass::Cloth) return;
            neighbors.push_back(k);
        });
        std::sort(neighbors.begin(), neighbors.end());
        for (const std::size_t k : neighbors) {
            const Vec3 disp = g.positions[j] - g.positions[k];
            g.edges.push_back({static_cast<int>(j), static_cast<int>(k), disp, norm(disp)});
        }
    }
    return g;
}

enum class Head { Force, Contact };

/// Head-specific graph construction: the contact model sees the cloud with the
/// gripper point removed (and a 1-dim class feature downstream), the force
/// model sees the full cloud.
inline InteractionGraph graph_for_head(const LabeledPointCloud& cloud, double alpha,
                                       const Vec3& gripper_velocity, Head head) {
    if (head == Head::Force) return build_graph(cloud, alpha, gripper_velocity);
    LabeledPointCloud no_gripper;
    for (const auto& p : cloud.points)
        if (p.cls != PointClass::Gripper) no_gripper.points.push_back(p);
    return build_graph(no_gripper, alpha, gripper_velocity);
}

/// Flat per-point feature rows for the MLP baseline.
///
/// force variant: [x - mean, class one-hot(3), gripper velocity] = 9 per point;
/// contact variant: gripper point removed, [x - mean, 1_object] = 4 per point.
/// Rows are ordered object points first (so output slot i corresponds to
/// object point i), then cloth, then gripper.
struct PointsetInput {
    std::vector<double> features;  ///< row-major, point-major
    std::size_t point_count = 0;
    std::size_t feature_dim = 0;
    std::size_t object_count = 0;  ///< object rows come first
};

inline std::size_t make_pointset_feature_dim(Head variant) {
    return variant == Head::Force ? 9 : 4;
}

inline PointsetInput make_pointset_input(const LabeledPointCloud& cloud, const Vec3& gripper_velocity,
                                         Head variant) {
    if (cloud.points.empty()) throw std::invalid_argument("empty cloud for point-set input");

    std::vector<const LabeledPoint*> pts;
    for (const auto& p : cloud.points)
        if (p.cls == PointClass::Object) pts.push_back(&p);
    const std::size_t object_count = pts.size();
    for (const auto& p : cloud.points)
        if (p.cls == PointClass::Cloth) pts.push_back(&p);
    if (variant == Head::Force)
        for (const auto& p : cloud.points)
            if (p.cls == PointClass::Gripper) pts.push_back(&p);

    if (pts.empty()) throw std::invalid_argument("point-set input has no points after gripper removal");

    Vec3 mean{};
    for (const auto* p : pts) mean += p->position;
    mean = mean / static_cast<double>(pts.size());

    PointsetInput out;
    out.point_count = pts.size();
    out.object_count = object_count;
    out.feature_dim = variant == Head::Force ? 9 : 4;
    out.features.reserve(out.point_count * out.feature_dim);
    for (const auto* p : pts) {
        const Vec3 x = p->position - mean;
        out.features.push_back(x.x);
        out.features.push_back(x.y);
        out.features.push_back(x.z);
        if (variant == Head::Force) {
            out.features.push_back(p->cls == PointClass::Object ? 1.0 : 0.0);
            out.features.push_back(p->cls == PointClass::Cloth ? 1.0 : 0.0);
            out.features.push_back(p->cls == PointClass::Gripper ? 1.0 : 0.0);
            out.features.push_back(gripper_velocity.x);
            out.features.push_back(gripper_velocity.y);
            out.features.push_back(gripper_velocity.z);
        } else {
            out.features.push_back(p->cls == PointClass::Object ? 1.0 : 0.0);
        }
    }
    return out;
}

}  // namespace vhr::percept
