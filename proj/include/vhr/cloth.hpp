/// @file cloth.hpp
/// @brief Particle-based cloth state built from a triangle mesh.
///
/// One particle per vertex; a stretch constraint per unique edge; a bend
/// (dihedral) and a shear (wing-to-wing distance) constraint per pair of
/// adjacent triangles.

#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vhr/math.hpp"
#include "vhr/mesh.hpp"

namespace vhr::sim {

struct Particle {
    Vec3 position;
    Vec3 previous_position;
    Vec3 velocity;
    double inverse_mass = 1.0;  ///< 0 pins the particle
};

struct StretchConstraint {
    int i = 0, j = 0;
    double rest_length = 0.0;
};

/// Dihedral-angle constraint over two triangles sharing edge (e0, e1) with
/// wing vertices w0, w1. rest_angle is the initial dihedral.
struct BendConstraint {
    int e0 = 0, e1 = 0, w0 = 0, w1 = 0;
    double rest_angle = 0.0;
};

/// Distance constraint across the second diagonal of an adjacent-triangle pair.
struct ShearConstraint {
    int i = 0, j = 0;
    double rest_length = 0.0;
};

struct Stiffness {
    double stretch = 1.0;
    double bend = 0.9;
    double shear = 0.8;
};

struct ClothState {
    std::vector<Particle> particles;
    std::vector<std::array<int, 3>> triangles;
    std::vector<StretchConstraint> stretch_constraints;
    std::vector<BendConstraint> bend_constraints;
    std::vector<ShearConstraint> shear_constraints;
    Stiffness stiffness;
    double mass_per_particle = 0.0;

    std::vector<Vec3> positions() const {
        std::vector<Vec3> out;
        out.reserve(particles.size());
        for (const auto& p : particles) out.push_back(p.position);
        return out;
    }

    double total_mass() const {
        return mass_per_particle * static_cast<double>(particles.size());
    }
};

/// Dihedral angle of the pair (e0,e1 | w0,w1); pi for a flat configuration.
inline double dihedral_angle(const Vec3& pe0, const Vec3& pe1, const Vec3& pw0, const Vec3& pw1) {
    const Vec3 e = pe1 - pe0;
    const Vec3 n1 = normalized(cross(e, pw0 - pe0));
    const Vec3 n2 = normalized(cross(e, pw1 - pe0));
    return std::acos(clamp(dot(n1, n2), -1.0, 1.0));
}

inline ClothState build_cloth(const TriMesh& mesh, const Stiffness& stiffness,
                              double mass_per_particle) {
    if (mass_per_particle <= 0.0) throw std::invalid_argument("mass_per_particle must be > 0");
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k)
            if (tri[k] < 0 || tri[k] >= static_cast<int>(mesh.vertices.size()))
                throw std::invalid_argument("triangle " + std::to_string(t) + " references missing vertex");
        const double area = triangle_area(mesh.vertices[static_cast<std::size_t>(tri[0])],
                                          mesh.vertices[static_cast<std::size_t>(tri[1])],
                                          mesh.vertices[static_cast<std::size_t>(tri[2])]);
        if (area < 1e-12)
            throw std::invalid_argument("degenerate (zero-area) triangle at index " + std::to_string(t));
    }

    ClothState cloth;
    cloth.stiffness = stiffness;
    cloth.mass_per_particle = mass_per_particle;
    cloth.triangles = mesh.triangles;
    cloth.particles.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices)
        cloth.particles.push_back({v, v, {0, 0, 0}, 1.0 / mass_per_particle});

    // Unique edges, plus the triangles on either side of each edge.
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k], b = tri[(k + 1) % 3];
            const auto key = std::minmax(a, b);
            auto& owners = edge_tris[key];
            if (owners.size() >= 2)
                throw std::invalid_argument("non-manifold edge shared by more than 2 triangles");
            owners.push_back(static_cast<int>(t));
        }
    }

    const auto pos = [&](int i) { return mesh.vertices[static_cast<std::size_t>(i)]; };

    for (const auto& [edge, owners] : edge_tris) {
        cloth.stretch_constraints.push_back(
            {edge.first, edge.second, norm(pos(edge.first) - pos(edge.second))});
        if (owners.size() != 2) continue;

        const auto opposite = [&](int t) {
            const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
            for (int k = 0; k < 3; ++k)
                if (tri[k] != edge.first && tri[k] != edge.second) return tri[k];
            throw std::logic_error("triangle without an opposite vertex");
        };
        const int w0 = opposite(owners[0]);
        const int w1 = opposite(owners[1]);
        cloth.bend_constraints.push_back(
            {edge.first, edge.second, w0, w1,
             dihedral_angle(pos(edge.first), pos(edge.second), pos(w0), pos(w1))});
        cloth.shear_constraints.push_back({w0, w1, norm(pos(w0) - pos(w1))});
    }
    return cloth;
}

}  // namespace vhr::sim
