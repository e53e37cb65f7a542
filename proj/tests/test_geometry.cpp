#include <catch2/catch_amalgamated.hpp>

#include "vhr/body.hpp"
#include "vhr/bvh.hpp"
#include "vhr/mesh.hpp"
#include "vhr/rng.hpp"

using namespace vhr;
using namespace vhr::sim;
using Catch::Approx;

namespace {

std::vector<RigidBody> probe_bodies() {
    std::vector<RigidBody> bodies;
    bodies.emplace_back(BodySpec::sphere(0.07, {0.1, -0.05, 0.2}));
    Transform box_pose;
    box_pose.rot = Mat3::rotation_z(0.4);
    box_pose.pos = {-0.1, 0.1, 0.05};
    bodies.emplace_back(BodySpec::box({0.05, 0.08, 0.03}, box_pose));
    Transform cyl_pose;
    cyl_pose.rot = Mat3::rotation_x(0.3);
    cyl_pose.pos = {0.2, 0.15, 0.1};
    bodies.emplace_back(BodySpec::cylinder(0.04, 0.06, cyl_pose));
    Transform cap_pose;
    cap_pose.rot = Mat3::rotation_y(-0.5);
    cap_pose.pos = {0.0, 0.25, 0.12};
    bodies.emplace_back(BodySpec::capsule(0.03, 0.08, cap_pose));
    Transform chain_pose;
    bodies.emplace_back(BodySpec::capsule_chain(
        {{-0.2, 0.0, 0.1}, {0.0, 0.05, 0.12}, {0.15, 0.02, 0.1}}, {0.05, 0.04}, chain_pose));
    Transform plate_pose;
    plate_pose.pos = {0.05, 0.0, 0.0};
    bodies.emplace_back(BodySpec::lathe(
        {{0.0, 0.0}, {0.06, 0.0}, {0.12, 0.025}, {0.12, 0.030}, {0.06, 0.008}, {0.0, 0.008}},
        plate_pose));
    Transform mesh_pose;
    mesh_pose.pos = {-0.05, -0.2, 0.1};
    // A closed cube mesh.
    TriMesh cube;
    cube.vertices = {{-0.04, -0.04, -0.04}, {0.04, -0.04, -0.04}, {0.04, 0.04, -0.04},
                     {-0.04, 0.04, -0.04}, {-0.04, -0.04, 0.04}, {0.04, -0.04, 0.04},
                     {0.04, 0.04, 0.04},  {-0.04, 0.04, 0.04}};
    cube.triangles = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                      {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {3, 0, 4}, {3, 4, 7}};
    bodies.emplace_back(BodySpec::from_mesh(cube, mesh_pose));
    return bodies;
}

}  // namespace

TEST_CASE("closest-point normals are unit length and consistent with signed distance") {
    const auto bodies = probe_bodies();
    Rng rng(1234);
    for (const auto& body : bodies) {
        const Aabb box = body.bounds().inflated(0.1);
        for (int i = 0; i < 300; ++i) {
            const Vec3 x{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
                         rng.uniform(box.lo.z, box.hi.z)};
            const SurfaceSample s = body.surface(x);
            REQUIRE(norm(s.n) == Approx(1.0).margin(1e-9));
            REQUIRE(std::abs(std::abs(s.sd) - norm(x - s.q)) < 1e-6);
            REQUIRE(body.signed_distance(x) == Approx(s.sd));
            // q must lie on the surface.
            REQUIRE(std::abs(body.signed_distance(s.q)) < 1e-6);
        }
    }
}

TEST_CASE("sphere closest point is radial") {
    const RigidBody s(BodySpec::sphere(0.5, {1.0, 2.0, 3.0}));
    const SurfaceSample out = s.surface({1.0, 2.0, 4.0});
    REQUIRE(out.sd == Approx(0.5));
    REQUIRE(out.n.z == Approx(1.0));
    REQUIRE(out.q.z == Approx(3.5));
    const SurfaceSample in = s.surface({1.0, 2.0, 3.1});
    REQUIRE(in.sd == Approx(-0.4));
    REQUIRE(in.n.z == Approx(1.0));
}

TEST_CASE("box interior points project to the nearest face") {
    const RigidBody b(BodySpec::box({0.1, 0.2, 0.3}, Transform{}));
    const SurfaceSample s = b.surface({0.08, 0.0, 0.0});
    REQUIRE(s.sd == Approx(-0.02));
    REQUIRE(s.n.x == Approx(1.0));
    REQUIRE(s.q.x == Approx(0.1));
}

TEST_CASE("capsule chain shares joint endpoints") {
    const std::vector<Vec3> joints{{0, 0, 0}, {0.1, 0, 0}, {0.2, 0.05, 0}};
    const RigidBody chain(BodySpec::capsule_chain(joints, {0.02, 0.02}, Transform{}));
    // A point near the shared joint is exactly radius away from the joint.
    const Vec3 probe = joints[1] + Vec3{0, 0, 0.05};
    REQUIRE(chain.signed_distance(probe) == Approx(0.05 - 0.02));
}

TEST_CASE("ray casts agree with signed distance at the hit point") {
    const auto bodies = probe_bodies();
    Rng rng(99);
    for (const auto& body : bodies) {
        const Aabb box = body.bounds();
        const Vec3 center = box.center();
        int hits = 0;
        for (int i = 0; i < 60; ++i) {
            // Shoot from a ring around the body toward a jittered center.
            const double a = rng.uniform(0.0, 2.0 * M_PI);
            const Vec3 origin = center + Vec3{std::cos(a), std::sin(a), 0.7} * 0.8;
            const Vec3 target = center + rng.normal_vec3(0.01);
            const Vec3 dir = normalized(target - origin);
            const auto t = body.raycast(origin, dir);
            if (!t) continue;
            ++hits;
            const Vec3 p = origin + dir * *t;
            REQUIRE(std::abs(body.signed_distance(p)) < 2e-4);
        }
        REQUIRE(hits > 30);
    }
}

TEST_CASE("bvh raycast and brute force agree") {
    const TriMesh mesh = grid_cloth_mesh(1.0, 1.0, 8, 8);
    const Bvh bvh(mesh.vertices, mesh.triangles);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const Vec3 origin{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 1.0};
        const Vec3 dir = normalized(Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0});
        const auto hit = bvh.raycast(origin, dir);

        double brute = std::numeric_limits<double>::infinity();
        for (const auto& tri : mesh.triangles) {
            const auto t = ray_triangle(origin, dir, mesh.vertices[size_t(tri[0])],
                                        mesh.vertices[size_t(tri[1])], mesh.vertices[size_t(tri[2])]);
            if (t) brute = std::min(brute, *t);
        }
        if (hit) {
            REQUIRE(hit->t == Approx(brute));
        } else {
            REQUIRE(std::isinf(brute));
        }
    }
}

TEST_CASE("bvh closest point matches brute force") {
    const TriMesh mesh = grid_cloth_mesh(0.5, 0.5, 6, 6);
    const Bvh bvh(mesh.vertices, mesh.triangles);
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p = rng.uniform_vec3(-0.3, 0.8);
        const auto [q, tri] = bvh.closest_point(p);
        double brute = std::numeric_limits<double>::infinity();
        for (const auto& t : mesh.triangles) {
            const Vec3 c = closest_point_on_triangle(p, mesh.vertices[size_t(t[0])],
                                                     mesh.vertices[size_t(t[1])],
                                                     mesh.vertices[size_t(t[2])]);
            brute = std::min(brute, norm(p - c));
        }
        REQUIRE(norm(p - q) == Approx(brute).margin(1e-12));
    }
}

TEST_CASE("obj import reads vertices and triangular faces") {
    const std::string obj =
        "# comment\n"
        "v 0 0 0\n"
        "v 1 0 0\n"
        "v 0 1 0\n"
        "f 1 2 3\n";
    const TriMesh mesh = parse_obj(obj);
    REQUIRE(mesh.vertices.size() == 3);
    REQUIRE(mesh.triangles.size() == 1);
    REQUIRE(mesh.vertices[1].x == Approx(1.0));

    REQUIRE_THROWS(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n"));
    const TriMesh slashes = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n");
    REQUIRE(slashes.triangles.size() == 1);
}

TEST_CASE("body specs round-trip through json") {
    for (const auto& body : probe_bodies()) {
        nlohmann::json j = body.spec();
        const BodySpec back = j.get<BodySpec>();
        REQUIRE(back.kind == body.spec().kind);
        nlohmann::json j2 = back;
        REQUIRE(j == j2);
    }
}
