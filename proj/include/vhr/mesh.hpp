/// @file mesh.hpp
/// @brief Triangle mesh container, regular cloth grids, and ASCII OBJ import.

#pragma once

#include <array>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vhr/io.hpp"
#include "vhr/math.hpp"

namespace vhr {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    Aabb bounds() const {
        Aabb b;
        for (const auto& v : vertices) b.extend(v);
        return b;
    }
};

/// Regular nx-by-ny vertex grid in the xy plane at z = 0, spanning
/// [0, width] x [0, height]. Quads are split along a consistent diagonal.
inline TriMesh grid_cloth_mesh(double width, double height, int nx, int ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("cloth grid needs at least 2x2 vertices");
    TriMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            mesh.vertices.push_back({width * i / (nx - 1), height * j / (ny - 1), 0.0});
    const auto idx = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            mesh.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
            mesh.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
        }
    return mesh;
}

/// Loads vertices and triangular faces from ASCII OBJ text. Faces with more
/// than 3 vertices are rejected; v/vt/vn index forms are accepted.
inline TriMesh parse_obj(const std::string& text) {
    TriMesh mesh;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw std::runtime_error("OBJ line " + std::to_string(lineno) + ": bad vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ls >> tok) {
                const auto slash = tok.find('/');
                const int raw = std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash));
                // OBJ indices are 1-based; negative indices count from the end.
                const int id = raw > 0 ? raw - 1 : static_cast<int>(mesh.vertices.size()) + raw;
                if (id < 0 || id >= static_cast<int>(mesh.vertices.size()))
                    throw std::runtime_error("OBJ line " + std::to_string(lineno) + ": face index out of range");
                ids.push_back(id);
            }
            if (ids.size() != 3)
                throw std::runtime_error("OBJ line " + std::to_string(lineno) +
                                         ": only triangular faces are supported");
            mesh.triangles.push_back({ids[0], ids[1], ids[2]});
        }
    }
    return mesh;
}

inline TriMesh load_obj(const std::string& path) { return parse_obj(read_text_file(path)); }

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

}  // namespace vhr
