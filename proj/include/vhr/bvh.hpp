/// @file bvh.hpp
/// @brief Median-split BVH over triangles for ray casting and closest-point queries.

#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "vhr/math.hpp"
#include "vhr/mesh.hpp"

namespace vhr {

struct RayHit {
    double t = std::numeric_limits<double>::infinity();
    int triangle = -1;
    Vec3 point;
    Vec3 normal;  ///< geometric normal, oriented against the ray
};

/// Moller-Trumbore; returns hit parameter t >= 0 or nothing.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                          const Vec3& b, const Vec3& c) {
    constexpr double kEps = 1e-12;
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 p = cross(dir, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < kEps) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = dot(s, p) * inv;
    if (u < -1e-9 || u > 1.0 + 1e-9) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(dir, q) * inv;
    if (v < -1e-9 || u + v > 1.0 + 1e-9) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (t < 0.0) return std::nullopt;
    return t;
}

inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection, 5.1.5.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

class Bvh {
  public:
    Bvh() = default;

    Bvh(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles)
        : vertices_(&vertices), triangles_(&triangles) {
        const std::size_t n = triangles.size();
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0);
        centroids_.resize(n);
        boxes_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& t = triangles[i];
            Aabb b;
            b.extend(vertices[static_cast<std::size_t>(t[0])]);
            b.extend(vertices[static_cast<std::size_t>(t[1])]);
            b.extend(vertices[static_cast<std::size_t>(t[2])]);
            boxes_[i] = b;
            centroids_[i] = b.center();
        }
        nodes_.reserve(2 * n + 1);
        if (n > 0) build(0, n);
    }

    bool empty() const { return nodes_.empty(); }

    /// Nearest intersection along origin + t*dir, t in [0, t_max).
    std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir,
                                  double t_max = std::numeric_limits<double>::infinity()) const {
        if (nodes_.empty()) return std::nullopt;
        RayHit best;
        best.t = t_max;
        const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        raycast_node(0, origin, dir, inv, best);
        if (best.triangle < 0) return std::nullopt;
        const auto& tri = (*triangles_)[static_cast<std::size_t>(best.triangle)];
        const Vec3& a = (*vertices_)[static_cast<std::size_t>(tri[0])];
        const Vec3& b = (*vertices_)[static_cast<std::size_t>(tri[1])];
        const Vec3& c = (*vertices_)[static_cast<std::size_t>(tri[2])];
        best.point = origin + dir * best.t;
        Vec3 n = normalized(cross(b - a, c - a));
        if (dot(n, dir) > 0.0) n = -n;
        best.normal = n;
        return best;
    }

    /// Closest point on the mesh surface; also reports the owning triangle.
    std::pair<Vec3, int> closest_point(const Vec3& p) const {
        double best2 = std::numeric_limits<double>::infinity();
        Vec3 best_q;
        int best_tri = -1;
        closest_node(0, p, best2, best_q, best_tri);
        return {best_q, best_tri};
    }

  private:
    struct Node {
        Aabb box;
        int left = -1;   // internal: child index; leaf: first triangle in order_
        int right = -1;  // internal: child index; leaf: one-past-last triangle
        bool leaf = false;
    };

    static constexpr std::size_t kLeafSize = 4;

    int build(std::size_t begin, std::size_t end) {
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Aabb box;
        for (std::size_t i = begin; i < end; ++i) box.extend(boxes_[order_[i]]);
        nodes_[static_cast<std::size_t>(node_id)].box = box;
        if (end - begin <= kLeafSize) {
            nodes_[static_cast<std::size_t>(node_id)].leaf = true;
            nodes_[static_cast<std::size_t>(node_id)].left = static_cast<int>(begin);
            nodes_[static_cast<std::size_t>(node_id)].right = static_cast<int>(end);
            return node_id;
        }
        const Vec3 ext = box.extent();
        const int axis = ext.x > ext.y ? (ext.x > ext.z ? 0 : 2) : (ext.y > ext.z ? 1 : 2);
        const std::size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t l, std::size_t r) {
                             return centroids_[l][axis] < centroids_[r][axis];
                         });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    static bool ray_box(const Vec3& origin, const Vec3& inv, const Aabb& box, double t_max) {
        double t0 = 0.0, t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            double lo = (box.lo[a] - origin[a]) * inv[a];
            double hi = (box.hi[a] - origin[a]) * inv[a];
            if (inv[a] < 0.0) std::swap(lo, hi);
            t0 = std::max(t0, lo);
            t1 = std::min(t1, hi);
            if (t0 > t1) return false;
        }
        return true;
    }

    void raycast_node(int node_id, const Vec3& origin, const Vec3& dir, const Vec3& inv,
                      RayHit& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (!ray_box(origin, inv, node.box, best.t)) return;
        if (node.leaf) {
            for (int i = node.left; i < node.right; ++i) {
                const std::size_t tri = order_[static_cast<std::size_t>(i)];
                const auto& t = (*triangles_)[tri];
                const auto hit = ray_triangle(origin, dir, (*vertices_)[static_cast<std::size_t>(t[0])],
                                              (*vertices_)[static_cast<std::size_t>(t[1])],
                                              (*vertices_)[static_cast<std::size_t>(t[2])]);
                if (hit && *hit < best.t) {
                    best.t = *hit;
                    best.triangle = static_cast<int>(tri);
                }
            }
            return;
        }
        raycast_node(node.left, origin, dir, inv, best);
        raycast_node(node.right, origin, dir, inv, best);
    }

    static double box_distance2(const Vec3& p, const Aabb& box) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double v = p[a] < box.lo[a] ? box.lo[a] - p[a] : (p[a] > box.hi[a] ? p[a] - box.hi[a] : 0.0);
            d2 += v * v;
        }
        return d2;
    }

    void closest_node(int node_id, const Vec3& p, double& best2, Vec3& best_q, int& best_tri) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (box_distance2(p, node.box) >= best2) return;
        if (node.leaf) {
            for (int i = node.left; i < node.right; ++i) {
                const std::size_t tri = order_[static_cast<std::size_t>(i)];
                const auto& t = (*triangles_)[tri];
                const Vec3 q = closest_point_on_triangle(p, (*vertices_)[static_cast<std::size_t>(t[0])],
                                                         (*vertices_)[static_cast<std::size_t>(t[1])],
                                                         (*vertices_)[static_cast<std::size_t>(t[2])]);
                const double d2 = norm2(q - p);
                if (d2 < best2) {
                    best2 = d2;
                    best_q = q;
                    best_tri = static_cast<int>(tri);
                }
            }
            return;
        }
        // Visit the nearer child first for earlier pruning.
        const double dl = box_distance2(p, nodes_[static_cast<std::size_t>(node.left)].box);
        const double dr = box_distance2(p, nodes_[static_cast<std::size_t>(node.right)].box);
        const int first = dl <= dr ? node.left : node.right;
        const int second = dl <= dr ? node.right : node.left;
        closest_node(first, p, best2, best_q, best_tri);
        closest_node(second, p, best2, best_q, best_tri);
    }

    const std::vector<Vec3>* vertices_ = nullptr;
    const std::vector<std::array<int, 3>>* triangles_ = nullptr;
    std::vector<std::size_t> order_;
    std::vector<Vec3> centroids_;
    std::vector<Aabb> boxes_;
    std::vector<Node> nodes_;
};

}  // namespace vhr
