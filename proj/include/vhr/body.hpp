/// @file body.hpp
/// @brief Static rigid obstacles: shape descriptions, signed-distance / closest-point
/// queries, and analytic or SDF-marched ray casts.
///
/// All queries share one code path per shape so that signed_distance(x) equals
/// sign * |x - closest_point(x)| by construction.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vhr/bvh.hpp"
#include "vhr/json_support.hpp"
#include "vhr/math.hpp"
#include "vhr/mesh.hpp"

namespace vhr::sim {

enum class ShapeKind { Sphere, Box, Cylinder, Capsule, CapsuleChain, Lathe, Mesh };

inline const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::Box: return "box";
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::Capsule: return "capsule";
        case ShapeKind::CapsuleChain: return "capsule_chain";
        case ShapeKind::Lathe: return "lathe";
        case ShapeKind::Mesh: return "mesh";
    }
    return "?";
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "sphere") return ShapeKind::Sphere;
    if (s == "box") return ShapeKind::Box;
    if (s == "cylinder") return ShapeKind::Cylinder;
    if (s == "capsule") return ShapeKind::Capsule;
    if (s == "capsule_chain") return ShapeKind::CapsuleChain;
    if (s == "lathe") return ShapeKind::Lathe;
    if (s == "mesh") return ShapeKind::Mesh;
    throw std::invalid_argument("unknown shape kind: " + s);
}

/// Plain description of one static body; everything needed to rebuild it.
struct BodySpec {
    ShapeKind kind = ShapeKind::Sphere;
    Transform pose;          ///< local -> world
    bool labeled = true;     ///< false for support geometry (floor): simulated but
                             ///< never rendered or force-labeled

    double radius = 0.05;                     // sphere, capsule
    Vec3 half_extents{0.05, 0.05, 0.05};      // box
    double half_height = 0.05;                // cylinder, capsule (local z axis)
    std::vector<Vec3> joints;                 // capsule chain, local coordinates
    std::vector<double> joint_radii;          // capsule chain, one per segment
    std::vector<std::array<double, 2>> profile;  // lathe: closed (rho, z) polygon, rho >= 0
    TriMesh mesh;                             // mesh bodies

    static BodySpec sphere(double r, const Vec3& center, bool labeled = true) {
        BodySpec b;
        b.kind = ShapeKind::Sphere;
        b.radius = r;
        b.pose.pos = center;
        b.labeled = labeled;
        return b;
    }

    static BodySpec box(const Vec3& half_extents, const Transform& pose, bool labeled = true) {
        BodySpec b;
        b.kind = ShapeKind::Box;
        b.half_extents = half_extents;
        b.pose = pose;
        b.labeled = labeled;
        return b;
    }

    static BodySpec cylinder(double r, double half_height, const Transform& pose) {
        BodySpec b;
        b.kind = ShapeKind::Cylinder;
        b.radius = r;
        b.half_height = half_height;
        b.pose = pose;
        return b;
    }

    static BodySpec capsule(double r, double half_height, const Transform& pose) {
        BodySpec b;
        b.kind = ShapeKind::Capsule;
        b.radius = r;
        b.half_height = half_height;
        b.pose = pose;
        return b;
    }

    static BodySpec capsule_chain(std::vector<Vec3> joints, std::vector<double> radii,
                                  const Transform& pose) {
        if (joints.size() < 2 || radii.size() + 1 != joints.size())
            throw std::invalid_argument("capsule chain needs n joints and n-1 radii");
        BodySpec b;
        b.kind = ShapeKind::CapsuleChain;
        b.joints = std::move(joints);
        b.joint_radii = std::move(radii);
        b.pose = pose;
        return b;
    }

    static BodySpec lathe(std::vector<std::array<double, 2>> profile, const Transform& pose) {
        if (profile.size() < 3) throw std::invalid_argument("lathe profile needs >= 3 points");
        BodySpec b;
        b.kind = ShapeKind::Lathe;
        b.profile = std::move(profile);
        b.pose = pose;
        return b;
    }

    static BodySpec from_mesh(TriMesh mesh, const Transform& pose) {
        BodySpec b;
        b.kind = ShapeKind::Mesh;
        b.mesh = std::move(mesh);
        b.pose = pose;
        return b;
    }
};

/// Result of a surface query at some point x.
struct SurfaceSample {
    Vec3 q;       ///< closest point on the surface (world)
    Vec3 n;       ///< unit outward normal at q
    double sd;    ///< signed distance of x (negative inside)
};

namespace detail {

// --- 2D polygon helpers for lathe shapes (plane coordinates: (rho, z)) ---

struct Closest2 {
    double px, py;   // closest point on the polygon boundary
    double dist;     // unsigned distance
    bool inside;
};

inline Closest2 polygon_closest(const std::vector<std::array<double, 2>>& poly, double x, double y) {
    double best2 = std::numeric_limits<double>::max();
    double bx = 0.0, by = 0.0;
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double ax = poly[j][0], ay = poly[j][1];
        const double cx = poly[i][0], cy = poly[i][1];
        const double ex = cx - ax, ey = cy - ay;
        const double len2 = ex * ex + ey * ey;
        const double t = len2 > 0.0 ? clamp(((x - ax) * ex + (y - ay) * ey) / len2, 0.0, 1.0) : 0.0;
        const double qx = ax + t * ex, qy = ay + t * ey;
        const double d2 = (x - qx) * (x - qx) + (y - qy) * (y - qy);
        if (d2 < best2) {
            best2 = d2;
            bx = qx;
            by = qy;
        }
        // Even-odd crossing test.
        if ((cy > y) != (ay > y)) {
            const double xc = ax + (y - ay) / (cy - ay) * (cx - ax);
            if (x < xc) inside = !inside;
        }
    }
    return {bx, by, std::sqrt(best2), inside};
}

inline SurfaceSample capsule_segment_sample(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
    const Vec3 ab = b - a;
    const double len2 = norm2(ab);
    const double t = len2 > 0.0 ? clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec3 c = a + ab * t;
    Vec3 d = p - c;
    double dist = norm(d);
    Vec3 n;
    if (dist > 1e-12) {
        n = d / dist;
    } else {
        // On the axis: any radial direction works; pick one orthogonal to ab.
        const Vec3 axis = len2 > 0.0 ? ab / std::sqrt(len2) : Vec3{0, 0, 1};
        n = normalized(std::abs(axis.x) < 0.9 ? cross(axis, Vec3{1, 0, 0}) : cross(axis, Vec3{0, 1, 0}));
    }
    return {c + n * r, n, dist - r};
}

inline std::optional<double> raycast_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
    const Vec3 oc = o - c;
    const double b = dot(oc, d);
    const double cterm = norm2(oc) - r * r;
    const double disc = b * b - cterm;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t = -b - s;
    if (t < 0.0) t = -b + s;
    if (t < 0.0) return std::nullopt;
    return t;
}

inline std::optional<double> raycast_capsule(const Vec3& o, const Vec3& d, const Vec3& a,
                                             const Vec3& b, double r) {
    double best = std::numeric_limits<double>::infinity();
    const Vec3 ab = b - a;
    const double len2 = norm2(ab);
    if (len2 > 0.0) {
        // Infinite cylinder about the axis, then clamp the hit to the segment span.
        const Vec3 axis = ab / std::sqrt(len2);
        const Vec3 oa = o - a;
        const Vec3 dp = d - axis * dot(d, axis);
        const Vec3 op = oa - axis * dot(oa, axis);
        const double A = norm2(dp);
        const double B = 2.0 * dot(dp, op);
        const double C = norm2(op) - r * r;
        if (A > 1e-14) {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double s = std::sqrt(disc);
                for (const double t : {(-B - s) / (2.0 * A), (-B + s) / (2.0 * A)}) {
                    if (t < 0.0 || t >= best) continue;
                    const double h = dot(o + d * t - a, axis);
                    if (h >= 0.0 && h * h <= len2) best = std::min(best, t);
                }
            }
        }
    }
    for (const Vec3& c : {a, b}) {
        const auto t = raycast_sphere(o, d, c, r);
        if (t && *t < best) best = *t;
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

}  // namespace detail

/// A static rigid body: immutable spec plus derived acceleration structures.
class RigidBody {
  public:
    explicit RigidBody(BodySpec spec) : spec_(std::move(spec)) {
        if (spec_.kind == ShapeKind::Mesh)
            bvh_ = Bvh(spec_.mesh.vertices, spec_.mesh.triangles);
    }

    const BodySpec& spec() const { return spec_; }
    bool labeled() const { return spec_.labeled; }

    double signed_distance(const Vec3& x) const { return surface(x).sd; }

    /// Closest surface point and unit outward normal.
    SurfaceSample surface(const Vec3& world) const {
        const Vec3 p = spec_.pose.apply_inverse(world);
        SurfaceSample s = local_surface(p);
        s.q = spec_.pose.apply(s.q);
        s.n = spec_.pose.rotate(s.n);
        return s;
    }

    /// Nearest ray hit distance along unit `dir`, if any.
    std::optional<double> raycast(const Vec3& origin, const Vec3& dir) const {
        const Vec3 o = spec_.pose.apply_inverse(origin);
        const Vec3 d = spec_.pose.rotate_inverse(dir);
        switch (spec_.kind) {
            case ShapeKind::Sphere:
                return detail::raycast_sphere(o, d, {0, 0, 0}, spec_.radius);
            case ShapeKind::Box: {
                const Vec3& h = spec_.half_extents;
                double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
                for (int a = 0; a < 3; ++a) {
                    if (std::abs(d[a]) < 1e-14) {
                        if (std::abs(o[a]) > h[a]) return std::nullopt;
                        continue;
                    }
                    double lo = (-h[a] - o[a]) / d[a];
                    double hi = (h[a] - o[a]) / d[a];
                    if (lo > hi) std::swap(lo, hi);
                    t0 = std::max(t0, lo);
                    t1 = std::min(t1, hi);
                    if (t0 > t1) return std::nullopt;
                }
                return t0;
            }
            case ShapeKind::Cylinder: {
                const double r = spec_.radius, h = spec_.half_height;
                double best = std::numeric_limits<double>::infinity();
                const double A = d.x * d.x + d.y * d.y;
                if (A > 1e-14) {
                    const double B = 2.0 * (o.x * d.x + o.y * d.y);
                    const double C = o.x * o.x + o.y * o.y - r * r;
                    const double disc = B * B - 4.0 * A * C;
                    if (disc >= 0.0) {
                        const double s = std::sqrt(disc);
                        for (const double t : {(-B - s) / (2.0 * A), (-B + s) / (2.0 * A)}) {
                            if (t < 0.0) continue;
                            const double z = o.z + t * d.z;
                            if (std::abs(z) <= h) best = std::min(best, t);
                        }
                    }
                }
                if (std::abs(d.z) > 1e-14) {
                    for (const double zc : {-h, h}) {
                        const double t = (zc - o.z) / d.z;
                        if (t < 0.0) continue;
                        const double x = o.x + t * d.x, y = o.y + t * d.y;
                        if (x * x + y * y <= r * r) best = std::min(best, t);
                    }
                }
                if (!std::isfinite(best)) return std::nullopt;
                return best;
            }
            case ShapeKind::Capsule:
                return detail::raycast_capsule(o, d, {0, 0, -spec_.half_height},
                                               {0, 0, spec_.half_height}, spec_.radius);
            case ShapeKind::CapsuleChain: {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i + 1 < spec_.joints.size(); ++i) {
                    const auto t = detail::raycast_capsule(o, d, spec_.joints[i], spec_.joints[i + 1],
                                                           spec_.joint_radii[i]);
                    if (t && *t < best) best = *t;
                }
                if (!std::isfinite(best)) return std::nullopt;
                return best;
            }
            case ShapeKind::Lathe: {
                // Sphere trace the exact SDF of the solid of revolution.
                double t = 0.0;
                for (int i = 0; i < 256; ++i) {
                    const double sd = local_surface(o + d * t).sd;
                    if (sd < 1e-6) return t;
                    t += sd;
                    if (t > 100.0) break;
                }
                return std::nullopt;
            }
            case ShapeKind::Mesh: {
                const auto hit = bvh_.raycast(o, d);
                if (!hit) return std::nullopt;
                return hit->t;
            }
        }
        return std::nullopt;
    }

    Aabb bounds() const {
        Aabb local;
        switch (spec_.kind) {
            case ShapeKind::Sphere:
                local.extend({-spec_.radius, -spec_.radius, -spec_.radius});
                local.extend({spec_.radius, spec_.radius, spec_.radius});
                break;
            case ShapeKind::Box:
                local.extend(-spec_.half_extents);
                local.extend(spec_.half_extents);
                break;
            case ShapeKind::Cylinder:
            case ShapeKind::Capsule: {
                const double r = spec_.radius;
                const double h = spec_.half_height + (spec_.kind == ShapeKind::Capsule ? r : 0.0);
                local.extend({-r, -r, -h});
                local.extend({r, r, h});
                break;
            }
            case ShapeKind::CapsuleChain:
                for (std::size_t i = 0; i + 1 < spec_.joints.size(); ++i) {
                    const double r = spec_.joint_radii[i];
                    for (const Vec3& j : {spec_.joints[i], spec_.joints[i + 1]}) {
                        local.extend(j - Vec3{r, r, r});
                        local.extend(j + Vec3{r, r, r});
                    }
                }
                break;
            case ShapeKind::Lathe: {
                double rmax = 0.0, zlo = 0.0, zhi = 0.0;
                for (const auto& p : spec_.profile) {
                    rmax = std::max(rmax, p[0]);
                    zlo = std::min(zlo, p[1]);
                    zhi = std::max(zhi, p[1]);
                }
                local.extend({-rmax, -rmax, zlo});
                local.extend({rmax, rmax, zhi});
                break;
            }
            case ShapeKind::Mesh:
                local = spec_.mesh.bounds();
                break;
        }
        Aabb world;
        for (int corner = 0; corner < 8; ++corner) {
            const Vec3 c{corner & 1 ? local.hi.x : local.lo.x, corner & 2 ? local.hi.y : local.lo.y,
                         corner & 4 ? local.hi.z : local.lo.z};
            world.extend(spec_.pose.apply(c));
        }
        return world;
    }

  private:
    SurfaceSample local_surface(const Vec3& p) const {
        switch (spec_.kind) {
            case ShapeKind::Sphere: {
                const double r = norm(p);
                const Vec3 n = r > 1e-12 ? p / r : Vec3{1, 0, 0};
                return {n * spec_.radius, n, r - spec_.radius};
            }
            case ShapeKind::Box: {
                const Vec3& h = spec_.half_extents;
                const bool inside = std::abs(p.x) <= h.x && std::abs(p.y) <= h.y && std::abs(p.z) <= h.z;
                if (!inside) {
                    const Vec3 q{clamp(p.x, -h.x, h.x), clamp(p.y, -h.y, h.y), clamp(p.z, -h.z, h.z)};
                    const double d = norm(p - q);
                    return {q, d > 1e-12 ? (p - q) / d : Vec3{0, 0, 1}, d};
                }
                // Inside: project onto the nearest face.
                const double dx = h.x - std::abs(p.x), dy = h.y - std::abs(p.y), dz = h.z - std::abs(p.z);
                Vec3 q = p, n;
                double sd;
                if (dx <= dy && dx <= dz) {
                    n = {p.x >= 0 ? 1.0 : -1.0, 0, 0};
                    q.x = p.x >= 0 ? h.x : -h.x;
                    sd = -dx;
                } else if (dy <= dz) {
                    n = {0, p.y >= 0 ? 1.0 : -1.0, 0};
                    q.y = p.y >= 0 ? h.y : -h.y;
                    sd = -dy;
                } else {
                    n = {0, 0, p.z >= 0 ? 1.0 : -1.0};
                    q.z = p.z >= 0 ? h.z : -h.z;
                    sd = -dz;
                }
                return {q, n, sd};
            }
            case ShapeKind::Cylinder: {
                const double r = spec_.radius, h = spec_.half_height;
                const double rho = std::hypot(p.x, p.y);
                const Vec3 e = rho > 1e-12 ? Vec3{p.x / rho, p.y / rho, 0} : Vec3{1, 0, 0};
                const double drho = rho - r;
                const double dz = std::abs(p.z) - h;
                const double zs = p.z >= 0 ? 1.0 : -1.0;
                if (drho > 0.0 && dz > 0.0) {  // outside, nearest to the rim edge
                    const Vec3 q = e * r + Vec3{0, 0, zs * h};
                    const double d = std::hypot(drho, dz);
                    return {q, (p - q) / d, d};
                }
                if (drho > 0.0) return {e * r + Vec3{0, 0, p.z}, e, drho};
                if (dz > 0.0) return {Vec3{p.x, p.y, zs * h}, Vec3{0, 0, zs}, dz};
                // Inside: project to whichever feature is closer (sd = max of the
                // negative feature distances).
                if (drho >= dz) return {e * r + Vec3{0, 0, p.z}, e, drho};
                return {Vec3{p.x, p.y, zs * h}, Vec3{0, 0, zs}, dz};
            }
            case ShapeKind::Capsule:
                return detail::capsule_segment_sample(p, {0, 0, -spec_.half_height},
                                                      {0, 0, spec_.half_height}, spec_.radius);
            case ShapeKind::CapsuleChain: {
                SurfaceSample best;
                best.sd = std::numeric_limits<double>::max();
                for (std::size_t i = 0; i + 1 < spec_.joints.size(); ++i) {
                    const SurfaceSample s = detail::capsule_segment_sample(
                        p, spec_.joints[i], spec_.joints[i + 1], spec_.joint_radii[i]);
                    if (s.sd < best.sd) best = s;
                }
                return best;
            }
            case ShapeKind::Lathe: {
                const double rho = std::hypot(p.x, p.y);
                const auto c = detail::polygon_closest(spec_.profile, rho, p.z);
                const double cphi = rho > 1e-12 ? p.x / rho : 1.0;
                const double sphi = rho > 1e-12 ? p.y / rho : 0.0;
                const Vec3 q{c.px * cphi, c.px * sphi, c.py};
                const double sd = c.inside ? -c.dist : c.dist;
                Vec3 n;
                if (c.dist > 1e-12) {
                    n = (p - q) * ((c.inside ? -1.0 : 1.0) / c.dist);
                } else {
                    n = Vec3{0, 0, 1};
                }
                return {q, n, sd};
            }
            case ShapeKind::Mesh: {
                const auto [q, tri] = bvh_.closest_point(p);
                const auto& t = spec_.mesh.triangles[static_cast<std::size_t>(tri)];
                const Vec3 face_n = normalized(cross(spec_.mesh.vertices[static_cast<std::size_t>(t[1])] -
                                                         spec_.mesh.vertices[static_cast<std::size_t>(t[0])],
                                                     spec_.mesh.vertices[static_cast<std::size_t>(t[2])] -
                                                         spec_.mesh.vertices[static_cast<std::size_t>(t[0])]));
                const bool inside = mesh_contains(p);
                const double d = norm(p - q);
                Vec3 n = d > 1e-12 ? (p - q) * ((inside ? -1.0 : 1.0) / d) : face_n;
                return {q, n, inside ? -d : d};
            }
        }
        throw std::logic_error("unreachable shape kind");
    }

    /// Parity test with a fixed irrational direction (avoids edge-aligned rays).
    bool mesh_contains(const Vec3& p) const {
        const Vec3 dir = normalized(Vec3{0.5773502691896258, 0.6172133998483676, 0.5345224838248488});
        int crossings = 0;
        Vec3 o = p;
        for (int guard = 0; guard < 1024; ++guard) {
            const auto hit = bvh_.raycast(o, dir);
            if (!hit) break;
            ++crossings;
            o = o + dir * (hit->t + 1e-9);
        }
        return (crossings % 2) == 1;
    }

    BodySpec spec_;
    Bvh bvh_;
};

// --- JSON serialization of BodySpec (scene reproducibility headers) ---

inline void to_json(nlohmann::json& j, const BodySpec& b) {
    j = nlohmann::json{{"kind", to_string(b.kind)}, {"pose", b.pose}, {"labeled", b.labeled}};
    switch (b.kind) {
        case ShapeKind::Sphere: j["radius"] = b.radius; break;
        case ShapeKind::Box: j["half_extents"] = b.half_extents; break;
        case ShapeKind::Cylinder:
        case ShapeKind::Capsule:
            j["radius"] = b.radius;
            j["half_height"] = b.half_height;
            break;
        case ShapeKind::CapsuleChain:
            j["joints"] = b.joints;
            j["joint_radii"] = b.joint_radii;
            break;
        case ShapeKind::Lathe: j["profile"] = b.profile; break;
        case ShapeKind::Mesh:
            j["vertices"] = b.mesh.vertices;
            j["triangles"] = b.mesh.triangles;
            break;
    }
}

inline void from_json(const nlohmann::json& j, BodySpec& b) {
    b = BodySpec{};
    b.kind = shape_kind_from_string(j.at("kind").get<std::string>());
    j.at("pose").get_to(b.pose);
    b.labeled = j.value("labeled", true);
    switch (b.kind) {
        case ShapeKind::Sphere: b.radius = j.at("radius").get<double>(); break;
        case ShapeKind::Box: j.at("half_extents").get_to(b.half_extents); break;
        case ShapeKind::Cylinder:
        case ShapeKind::Capsule:
            b.radius = j.at("radius").get<double>();
            b.half_height = j.at("half_height").get<double>();
            break;
        case ShapeKind::CapsuleChain:
            j.at("joints").get_to(b.joints);
            j.at("joint_radii").get_to(b.joint_radii);
            break;
        case ShapeKind::Lathe: j.at("profile").get_to(b.profile); break;
        case ShapeKind::Mesh:
            j.at("vertices").get_to(b.mesh.vertices);
            j.at("triangles").get_to(b.mesh.triangles);
            break;
    }
}

}  // namespace vhr::sim
