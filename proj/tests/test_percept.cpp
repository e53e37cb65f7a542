#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "vhr/cloud.hpp"
#include "vhr/graph.hpp"
#include "vhr/labels.hpp"
#include "vhr/ply.hpp"
#include "vhr/render.hpp"

using namespace vhr;
using namespace vhr::percept;
using Catch::Approx;

namespace {

LabeledPointCloud cloud_of(std::initializer_list<LabeledPoint> pts) {
    LabeledPointCloud c;
    c.points = pts;
    return c;
}

sim::ContactEvent contact_at(const Vec3& x, double force) {
    sim::ContactEvent ev;
    ev.contact_position = x;
    ev.force_magnitude = force;
    ev.lambda = 1.0;
    return ev;
}

}  // namespace

TEST_CASE("render of an empty scene yields only the gripper point") {
    tasks::SceneSpec scene;  // no bodies
    tasks::Frame frame;
    frame.gripper_position = {0.1, 0.2, 0.3};
    const Camera cam = CameraConfig{}.build();
    const auto cloud = render_cloud(frame, scene, {}, cam);
    REQUIRE(cloud.points.size() == 1);
    REQUIRE(cloud.points[0].cls == PointClass::Gripper);
    REQUIRE(norm(cloud.points[0].position - frame.gripper_position) == 0.0);
}

TEST_CASE("rendered sphere points lie on the sphere surface") {
    const double R = 0.2;
    const Vec3 center{0.0, 0.0, 1.0};
    tasks::SceneSpec scene;
    scene.bodies.push_back(sim::BodySpec::sphere(R, center));

    CameraConfig cc;
    cc.eye = {0.0, 0.0, 0.0};
    cc.target = center;
    cc.width = 64;
    cc.height = 64;
    const Camera cam = cc.build();

    const auto points = render_object_points(scene, cam);
    REQUIRE(points.size() > 200);
    for (const Vec3& p : points) REQUIRE(norm(p - center) == Approx(R).margin(2e-3));
}

TEST_CASE("object points come from the pre-interaction render under occlusion") {
    tasks::SceneSpec scene;
    Transform pose;
    pose.pos = {0.0, 0.0, 0.5};
    scene.bodies.push_back(sim::BodySpec::box({0.1, 0.1, 0.05}, pose));

    CameraConfig cc;
    cc.eye = {0.0, 0.0, 1.5};
    cc.target = {0.0, 0.0, 0.5};
    cc.width = 48;
    cc.height = 48;
    const Camera cam = cc.build();
    const auto prerender = render_object_points(scene, cam);
    REQUIRE(!prerender.empty());

    // A big cloth quad between the camera and the box hides it completely.
    tasks::Frame frame;
    frame.cloth_positions = {{-2, -2, 0.7}, {2, -2, 0.7}, {2, 2, 0.7}, {-2, 2, 0.7}};
    frame.gripper_position = {0, 0, 0.8};
    const std::vector<std::array<int, 3>> tris{{0, 1, 2}, {0, 2, 3}};

    const auto cloud = render_cloud(frame, scene, tris, prerender, cam);
    std::size_t obj = 0, cloth = 0;
    for (const auto& p : cloud.points) {
        if (p.cls == PointClass::Object) {
            REQUIRE(norm(p.position - prerender[obj]) == 0.0);  // carried over verbatim
            ++obj;
        }
        if (p.cls == PointClass::Cloth) ++cloth;
    }
    REQUIRE(obj == prerender.size());
    REQUIRE(cloth > 0);
}

TEST_CASE("bodies in front of the cloth occlude it") {
    tasks::SceneSpec scene;
    Transform pose;
    pose.pos = {0.0, 0.0, 0.8};
    scene.bodies.push_back(sim::BodySpec::box({0.5, 0.5, 0.05}, pose));

    CameraConfig cc;
    cc.eye = {0.0, 0.0, 1.5};
    cc.target = {0.0, 0.0, 0.5};
    cc.width = 32;
    cc.height = 32;
    const Camera cam = cc.build();

    tasks::Frame frame;  // cloth strictly below the box
    frame.cloth_positions = {{-0.2, -0.2, 0.5}, {0.2, -0.2, 0.5}, {0.2, 0.2, 0.5}, {-0.2, 0.2, 0.5}};
    frame.gripper_position = {0, 0, 0.9};
    const std::vector<std::array<int, 3>> tris{{0, 1, 2}, {0, 2, 3}};
    const auto cloud = render_cloud(frame, scene, tris, {}, cam);
    REQUIRE(cloud.count(PointClass::Cloth) == 0);
}

TEST_CASE("voxelize merges points in a cell to their centroid") {
    const auto cloud = cloud_of({{{0.001, 0, 0}, PointClass::Object},
                                 {{0.011, 0, 0}, PointClass::Object}});
    const auto out = voxelize(cloud, 0.0156);
    REQUIRE(out.points.size() == 1);
    REQUIRE(out.points[0].position.x == Approx(0.006));
    REQUIRE(out.points[0].position.y == 0.0);
}

TEST_CASE("voxelize is invariant to duplicating every point") {
    Rng rng(5);
    LabeledPointCloud cloud;
    for (int i = 0; i < 200; ++i)
        cloud.points.push_back({rng.uniform_vec3(-0.2, 0.2),
                                i % 3 == 0 ? PointClass::Object : PointClass::Cloth});
    LabeledPointCloud doubled = cloud;
    doubled.points.insert(doubled.points.end(), cloud.points.begin(), cloud.points.end());

    const auto a = voxelize(cloud, 0.0156);
    const auto b = voxelize(doubled, 0.0156);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        REQUIRE(norm(a.points[i].position - b.points[i].position) < 1e-12);
        REQUIRE(a.points[i].cls == b.points[i].cls);
    }
}

TEST_CASE("voxelize is idempotent on its own output") {
    Rng rng(6);
    LabeledPointCloud cloud;
    for (int i = 0; i < 300; ++i)
        cloud.points.push_back({rng.uniform_vec3(-0.3, 0.3),
                                i % 2 ? PointClass::Object : PointClass::Cloth});
    cloud.points.push_back({{0.05, 0.05, 0.05}, PointClass::Gripper});
    const auto once = voxelize(cloud, 0.02);
    const auto twice = voxelize(once, 0.02);
    REQUIRE(once.points.size() == twice.points.size());
    for (std::size_t i = 0; i < once.points.size(); ++i)
        REQUIRE(norm(once.points[i].position - twice.points[i].position) == 0.0);
}

TEST_CASE("crop keeps object points within tau of cloth, always keeps cloth and gripper") {
    const double tau = 0.0625;
    const auto cloud = cloud_of({
        {{0.05, 0, 0}, PointClass::Object},  // 5 cm from cloth -> kept
        {{0.07, 0, 0}, PointClass::Object},  // 7 cm -> removed
        {{0.0, 0.0, 0.0}, PointClass::Cloth},
        {{0.5, 0.5, 0.5}, PointClass::Gripper},
    });
    const auto out = crop(cloud, tau);
    REQUIRE(out.count(PointClass::Object) == 1);
    REQUIRE(out.count(PointClass::Cloth) == 1);
    REQUIRE(out.count(PointClass::Gripper) == 1);
    REQUIRE(out.points[0].position.x == Approx(0.05));
}

TEST_CASE("crop with no cloth points keeps only the gripper") {
    const auto cloud = cloud_of({
        {{0.01, 0, 0}, PointClass::Object},
        {{0.0, 0.1, 0}, PointClass::Object},
        {{0.5, 0.5, 0.5}, PointClass::Gripper},
    });
    const auto out = crop(cloud, 0.0625);
    REQUIRE(out.points.size() == 1);
    REQUIRE(out.points[0].cls == PointClass::Gripper);
}

TEST_CASE("crop monotonicity: larger tau never removes a kept point") {
    Rng rng(8);
    LabeledPointCloud cloud;
    for (int i = 0; i < 200; ++i) cloud.points.push_back({rng.uniform_vec3(-0.3, 0.3), PointClass::Object});
    for (int i = 0; i < 50; ++i) cloud.points.push_back({rng.uniform_vec3(-0.1, 0.1), PointClass::Cloth});
    const auto small = crop(cloud, 0.05);
    const auto large = crop(cloud, 0.08);
    REQUIRE(small.count(PointClass::Object) <= large.count(PointClass::Object));
    for (const auto& p : small.points) {
        if (p.cls != PointClass::Object) continue;
        bool found = false;
        for (const auto& q : large.points)
            if (q.cls == PointClass::Object && norm(q.position - p.position) == 0.0) found = true;
        REQUIRE(found);
    }
}

TEST_CASE("distribute_forces sends a lone contact's force to its single recipient") {
    const std::vector<Vec3> points{{0.01, 0, 0}};
    const auto labels = distribute_forces({contact_at({0, 0, 0}, 1.0)}, points, {});
    REQUIRE(labels.force[0] == Approx(1.0));
    REQUIRE(labels.contact[0] == 1);
    REQUIRE(labels.dropped_contacts == 0);
}

TEST_CASE("distribute_forces splits equally between equidistant points") {
    const std::vector<Vec3> points{{0.01, 0, 0}, {-0.01, 0, 0}};
    const auto labels = distribute_forces({contact_at({0, 0, 0}, 1.0)}, points, {});
    REQUIRE(labels.force[0] == Approx(0.5));
    REQUIRE(labels.force[1] == Approx(0.5));
}

TEST_CASE("distribute_forces weights inverse-sqrt distance (xi = 0.5)") {
    // Distances 1 cm and 4 cm: weights 1/sqrt(0.01) : 1/sqrt(0.04) = 2 : 1.
    const std::vector<Vec3> points{{0.01, 0, 0}, {0.04, 0, 0}};
    LabelCfg cfg;
    cfg.epsilon = 0.05;  // wide enough that both points receive a share
    const auto labels = distribute_forces({contact_at({0, 0, 0}, 1.0)}, points, cfg);
    REQUIRE(labels.force[0] == Approx(2.0 / 3.0));
    REQUIRE(labels.force[1] == Approx(1.0 / 3.0));
}

TEST_CASE("distribute_forces drops contacts with no recipient and counts them") {
    const std::vector<Vec3> points{{1.0, 0, 0}};  // far beyond epsilon
    const auto labels = distribute_forces({contact_at({0, 0, 0}, 2.0)}, points, {});
    REQUIRE(labels.force[0] == 0.0);
    REQUIRE(labels.contact[0] == 0);
    REQUIRE(labels.dropped_contacts == 1);
}

TEST_CASE("a coincident point receives the full force") {
    const std::vector<Vec3> points{{0.0, 0.0, 0.0}, {0.005, 0, 0}};
    const auto labels = distribute_forces({contact_at({0, 0, 0}, 3.0)}, points, {});
    REQUIRE(labels.force[0] == Approx(3.0));
    REQUIRE(labels.force[1] == 0.0);
}

TEST_CASE("label conservation: total distributed force equals received contact force") {
    Rng rng(12);
    std::vector<Vec3> points;
    for (int i = 0; i < 150; ++i) points.push_back(rng.uniform_vec3(-0.1, 0.1));
    std::vector<sim::ContactEvent> contacts;
    for (int j = 0; j < 40; ++j)
        contacts.push_back(contact_at(rng.uniform_vec3(-0.15, 0.15), rng.uniform(0.0, 2.0)));

    LabelCfg cfg;
    const auto labels = distribute_forces(contacts, points, cfg);

    double received = 0.0;
    for (const auto& ev : contacts) {
        bool has_recipient = false;
        for (const Vec3& p : points)
            if (norm(p - ev.contact_position) < cfg.epsilon) has_recipient = true;
        if (has_recipient) received += ev.force_magnitude;
    }
    REQUIRE(labels.total() == Approx(received).epsilon(1e-6));
}

TEST_CASE("add_noise: zero std is identity, statistics match, seeded determinism") {
    LabeledPointCloud cloud;
    for (int i = 0; i < 100000; ++i) cloud.points.push_back({{0, 0, 0}, PointClass::Cloth});

    Rng r0(1);
    const auto same = add_noise(cloud, 0.0, r0);
    REQUIRE(norm(same.points[1234].position) == 0.0);

    Rng r1(2);
    const auto noisy = add_noise(cloud, 0.003, r1);
    for (int axis = 0; axis < 3; ++axis) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& p : noisy.points) {
            sum += p.position[axis];
            sum2 += p.position[axis] * p.position[axis];
        }
        const double n = static_cast<double>(noisy.points.size());
        const double var = sum2 / n - (sum / n) * (sum / n);
        REQUIRE(std::sqrt(var) > 0.0029);
        REQUIRE(std::sqrt(var) < 0.0031);
    }

    Rng r2(2);
    const auto again = add_noise(cloud, 0.003, r2);
    for (std::size_t i = 0; i < cloud.points.size(); i += 997)
        REQUIRE(norm(again.points[i].position - noisy.points[i].position) == 0.0);
}

TEST_CASE("graph edges require a cloth endpoint") {
    const auto cloud = cloud_of({{{0, 0, 0}, PointClass::Object}, {{0.02, 0, 0}, PointClass::Object}});
    const auto g = build_graph(cloud, 0.0375, {0, 0, 0});
    REQUIRE(g.edges.empty());
}

TEST_CASE("cloth-object pair within alpha yields two mirrored directed edges") {
    const auto cloud = cloud_of({{{0, 0, 0}, PointClass::Cloth}, {{0.03, 0, 0}, PointClass::Object}});
    const auto g = build_graph(cloud, 0.0375, {0.1, 0.2, 0.3});
    REQUIRE(g.edges.size() == 2);
    const auto& e0 = g.edges[0];
    const auto& e1 = g.edges[1];
    REQUIRE(e0.src == e1.dst);
    REQUIRE(e0.dst == e1.src);
    REQUIRE(norm(e0.displacement + e1.displacement) == 0.0);
    REQUIRE(e0.distance == Approx(0.03));
    REQUIRE(e1.distance == Approx(0.03));
}

TEST_CASE("graph construction is translation invariant") {
    Rng rng(31);
    LabeledPointCloud cloud;
    for (int i = 0; i < 80; ++i)
        cloud.points.push_back({rng.uniform_vec3(-0.1, 0.1),
                                i % 2 ? PointClass::Cloth : PointClass::Object});
    cloud.points.push_back({{0, 0, 0.2}, PointClass::Gripper});

    LabeledPointCloud moved = cloud;
    const Vec3 delta{1.7, -2.3, 0.9};
    for (auto& p : moved.points) p.position += delta;

    const auto a = build_graph(cloud, 0.0375, {1, 2, 3});
    const auto b = build_graph(moved, 0.0375, {1, 2, 3});
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        REQUIRE(a.edges[i].src == b.edges[i].src);
        REQUIRE(a.edges[i].dst == b.edges[i].dst);
        REQUIRE(norm(a.edges[i].displacement - b.edges[i].displacement) < 1e-12);
    }
}

TEST_CASE("graph invariants: edge length below alpha, symmetric pairs, cloth endpoint") {
    Rng rng(32);
    LabeledPointCloud cloud;
    for (int i = 0; i < 120; ++i) {
        const int c = rng.uniform_int(0, 2);
        cloud.points.push_back({rng.uniform_vec3(-0.08, 0.08),
                                c == 0 ? PointClass::Object : PointClass::Cloth});
    }
    cloud.points.push_back({{0, 0, 0}, PointClass::Gripper});
    const double alpha = 0.0375;
    const auto g = build_graph(cloud, alpha, {0, 0, 0});
    REQUIRE(!g.edges.empty());

    std::map<std::pair<int, int>, Vec3> seen;
    for (const auto& e : g.edges) {
        REQUIRE(e.distance < alpha);
        const bool touches_cloth = g.classes[size_t(e.src)] == PointClass::Cloth ||
                                   g.classes[size_t(e.dst)] == PointClass::Cloth;
        REQUIRE(touches_cloth);
        seen[{e.src, e.dst}] = e.displacement;
    }
    for (const auto& [key, disp] : seen) {
        const auto rev = seen.find({key.second, key.first});
        REQUIRE(rev != seen.end());
        REQUIRE(norm(disp + rev->second) == 0.0);
    }
}

TEST_CASE("pointset input normalizes positions to zero mean") {
    const auto single = cloud_of({{{1, 2, 3}, PointClass::Object}});
    const auto in = make_pointset_input(single, {0, 0, 0}, Head::Contact);
    REQUIRE(in.point_count == 1);
    REQUIRE(in.features[0] == 0.0);
    REQUIRE(in.features[1] == 0.0);
    REQUIRE(in.features[2] == 0.0);
    REQUIRE(in.features[3] == 1.0);  // object indicator

    LabeledPointCloud two = cloud_of({{{1, 0, 0}, PointClass::Object}, {{3, 0, 0}, PointClass::Cloth}});
    const auto a = make_pointset_input(two, {0.5, 0, 0}, Head::Force);
    for (auto& p : two.points) p.position += Vec3{10, -5, 2};
    const auto b = make_pointset_input(two, {0.5, 0, 0}, Head::Force);
    REQUIRE(a.features == b.features);
}

TEST_CASE("contact pointset variant removes the gripper point") {
    const auto cloud = cloud_of({{{0, 0, 0}, PointClass::Object},
                                 {{0.1, 0, 0}, PointClass::Cloth},
                                 {{0.2, 0, 0}, PointClass::Gripper}});
    const auto force = make_pointset_input(cloud, {0, 0, 0}, Head::Force);
    const auto contact = make_pointset_input(cloud, {0, 0, 0}, Head::Contact);
    REQUIRE(force.point_count == 3);
    REQUIRE(contact.point_count == 2);
    REQUIRE(force.feature_dim == 9);
    REQUIRE(contact.feature_dim == 4);
}

TEST_CASE("ply export writes a parsable header and one row per point") {
    const auto cloud = cloud_of({{{0, 0, 0}, PointClass::Object},
                                 {{0.1, 0, 0.2}, PointClass::Cloth},
                                 {{0.2, 0, 0.4}, PointClass::Gripper}});
    const std::string ply = to_ply(cloud, {1.5}, 2.0);
    REQUIRE(ply.find("ply\nformat ascii 1.0\n") == 0);
    REQUIRE(ply.find("element vertex 3") != std::string::npos);
    REQUIRE(ply.find("end_header") != std::string::npos);
    // force 1.5 on scale 2.0 -> red channel 191
    REQUIRE(ply.find("191") != std::string::npos);
}
