#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "vhr/gradcheck.hpp"
#include "vhr/models.hpp"

using namespace vhr;
using namespace vhr::learn;
using percept::LabeledPoint;
using percept::LabeledPointCloud;
using percept::PointClass;
using Catch::Approx;

namespace {

LabeledPointCloud random_cloud(Rng& rng, int n_object, int n_cloth, bool gripper = true) {
    LabeledPointCloud cloud;
    for (int i = 0; i < n_object; ++i)
        cloud.points.push_back({rng.uniform_vec3(-0.05, 0.05), PointClass::Object});
    for (int i = 0; i < n_cloth; ++i)
        cloud.points.push_back({rng.uniform_vec3(-0.05, 0.05), PointClass::Cloth});
    if (gripper) cloud.points.push_back({rng.uniform_vec3(-0.05, 0.05), PointClass::Gripper});
    return cloud;
}

GnsSpec small_gns() {
    GnsSpec spec;
    spec.hidden = 16;
    spec.rounds = 2;
    return spec;
}

// Kaiming init leaves biases at exactly zero, which parks some ReLU
// pre-activations on the kink where finite differences are undefined; jitter
// every parameter off that measure-zero set before a FD comparison.
void jitter_params(ParamStore& store, std::uint64_t seed, double scale = 0.01) {
    Rng rng(seed);
    for (Param* p : store.all())
        for (Eigen::Index i = 0; i < p->size(); ++i) p->value.data()[i] += rng.uniform(-scale, scale);
}

}  // namespace

TEST_CASE("gns on a zero-edge graph treats identical isolated nodes identically") {
    percept::InteractionGraph g;
    g.positions = {{0, 0, 0}, {1, 1, 1}, {2, 0, 1}};
    g.classes = {PointClass::Object, PointClass::Object, PointClass::Cloth};
    g.gripper_velocity = {0.1, 0.0, 0.0};
    // no edges at all

    const GnsModel model(small_gns(), Head::Force, 42);
    Tape tape;
    const auto batch = make_graph_batch(std::span(&g, 1), Head::Force);
    const Tape::Id out = model.forward(tape, batch);
    REQUIRE(tape.value(out).rows() == 2);
    // Identical features (both object nodes, same broadcast velocity) and no
    // edges: outputs must coincide.
    REQUIRE(tape.value(out)(0, 0) == Approx(tape.value(out)(1, 0)).margin(1e-12));
}

TEST_CASE("gns output is invariant under global translation") {
    Rng rng(7);
    LabeledPointCloud cloud = random_cloud(rng, 6, 10);
    const Vec3 v{0.05, -0.02, 0.01};
    const auto g1 = percept::graph_for_head(cloud, 0.0375, v, Head::Force);

    LabeledPointCloud moved = cloud;
    for (auto& p : moved.points) p.position += Vec3{3.1, -0.4, 12.0};
    const auto g2 = percept::graph_for_head(moved, 0.0375, v, Head::Force);

    const GnsModel model(small_gns(), Head::Force, 5);
    Tape t1, t2;
    const auto o1 = model.forward(t1, make_graph_batch(std::span(&g1, 1), Head::Force));
    const auto o2 = model.forward(t2, make_graph_batch(std::span(&g2, 1), Head::Force));
    REQUIRE((t1.value(o1) - t2.value(o2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gns output is invariant under node permutation") {
    Rng rng(9);
    LabeledPointCloud cloud = random_cloud(rng, 8, 12);
    const Vec3 v{0.0, 0.1, 0.0};
    const auto g1 = percept::graph_for_head(cloud, 0.05, v, Head::Force);

    // Permute the points; object points keep their identity via position.
    std::vector<std::size_t> perm(cloud.points.size());
    std::iota(perm.begin(), perm.end(), 0u);
    Rng shuffle_rng(11);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1))]);
    LabeledPointCloud shuffled;
    for (const std::size_t i : perm) shuffled.points.push_back(cloud.points[i]);
    const auto g2 = percept::graph_for_head(shuffled, 0.05, v, Head::Force);

    const GnsModel model(small_gns(), Head::Force, 5);
    Tape t1, t2;
    const auto o1 = model.forward(t1, make_graph_batch(std::span(&g1, 1), Head::Force));
    const auto o2 = model.forward(t2, make_graph_batch(std::span(&g2, 1), Head::Force));

    // Align outputs by object-point position.
    const auto obj1 = g1.object_nodes();
    const auto obj2 = g2.object_nodes();
    REQUIRE(obj1.size() == obj2.size());
    for (std::size_t a = 0; a < obj1.size(); ++a) {
        bool matched = false;
        for (std::size_t b = 0; b < obj2.size(); ++b) {
            if (norm(g1.positions[obj1[a]] - g2.positions[obj2[b]]) > 0.0) continue;
            matched = true;
            REQUIRE(std::abs(t1.value(o1)(static_cast<Eigen::Index>(a), 0) -
                             t2.value(o2)(static_cast<Eigen::Index>(b), 0)) < 1e-6);
        }
        REQUIRE(matched);
    }
}

TEST_CASE("gns force head is non-negative, contact head emits logits") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        LabeledPointCloud cloud = random_cloud(rng, 10, 14);
        const auto gf = percept::graph_for_head(cloud, 0.0375, {0.2, 0, 0}, Head::Force);
        const GnsModel force(small_gns(), Head::Force, 100 + trial);
        Tape tape;
        const auto out = force.forward(tape, make_graph_batch(std::span(&gf, 1), Head::Force));
        REQUIRE(tape.value(out).minCoeff() >= 0.0);
    }
    // Contact graphs must not include the gripper.
    LabeledPointCloud cloud = random_cloud(rng, 4, 6);
    const auto gc = percept::graph_for_head(cloud, 0.0375, {0, 0, 0}, Head::Contact);
    for (const auto cls : gc.classes) REQUIRE(cls != PointClass::Gripper);
}

TEST_CASE("gns gradients match finite differences on both heads") {
    Rng rng(21);
    for (const Head head : {Head::Force, Head::Contact}) {
        LabeledPointCloud cloud = random_cloud(rng, 5, 8);
        const auto g = percept::graph_for_head(cloud, 0.05, {0.1, 0.05, 0.0}, head);
        const auto batch = make_graph_batch(std::span(&g, 1), head);

        GnsModel model(small_gns(), head, 77);
        jitter_params(model.params(), 901);
        const std::size_t n_obj = g.object_nodes().size();
        std::vector<double> target;
        std::vector<std::uint8_t> mask, labels;
        Rng lr(5);
        for (std::size_t i = 0; i < n_obj; ++i) {
            target.push_back(lr.uniform(0.0, 2.0));
            mask.push_back(lr.uniform() < 0.7 ? 1 : 0);
            labels.push_back(lr.uniform() < 0.5 ? 1 : 0);
        }
        if (std::count(mask.begin(), mask.end(), 1) == 0) mask[0] = 1;

        const auto build = [&](Tape& tape) {
            const Tape::Id out = model.forward(tape, batch);
            return head == Head::Force ? tape.mse_masked(out, target, mask)
                                       : tape.bce_with_logits(out, labels);
        };
        const auto forward = [&] {
            Tape tape;
            return tape.scalar(build(tape));
        };
        const auto backward = [&] {
            Tape tape;
            tape.backward(build(tape));
        };
        Rng probes(31);
        // h = 1e-6 keeps finite differences clear of ReLU kinks at this scale.
        const double err = grad_check_model(forward, backward, model.params().all(), 120, probes, 1e-6);
        INFO("head " << to_string(head));
        REQUIRE(err < 1e-4);
    }
}

TEST_CASE("gns init is deterministic per seed") {
    const GnsModel a(small_gns(), Head::Force, 31);
    const GnsModel b(small_gns(), Head::Force, 31);
    const auto pa = a.params().all();
    const auto pb = b.params().all();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE((pa[i]->value - pb[i]->value).norm() == 0.0);
}

TEST_CASE("mlp with zero input and zero biases outputs zero logits") {
    MlpSpec spec;
    spec.widths = {16, 8};
    spec.max_points = 6;
    spec.max_object_points = 3;
    MlpModel contact(spec, Head::Contact, 3);
    // Biases start at zero; zero input rows propagate zero through the ReLU stack.
    const Matrix zero_rows = Matrix::Zero(2, 4 * 6);
    Tape tape;
    const auto out = contact.forward(tape, zero_rows);
    REQUIRE(tape.value(out).cwiseAbs().maxCoeff() == 0.0);

    // The force head applies softplus on top, so its floor is softplus(0) = ln 2.
    MlpModel force(spec, Head::Force, 3);
    const Matrix zero_rows9 = Matrix::Zero(2, 9 * 6);
    Tape tf;
    const auto fout = force.forward(tf, zero_rows9);
    REQUIRE(tf.value(fout).minCoeff() == Approx(std::log(2.0)));
    REQUIRE(tf.value(fout).minCoeff() >= 0.0);
}

TEST_CASE("mlp rejects inputs beyond the fixed dimension") {
    MlpSpec spec;
    spec.widths = {8};
    spec.max_points = 4;
    spec.max_object_points = 2;
    const MlpModel model(spec, Head::Contact, 9);
    Tape tape;
    REQUIRE_THROWS(model.forward(tape, Matrix::Zero(1, 4 * 5)));

    percept::PointsetInput big;
    big.point_count = 5;
    big.feature_dim = 4;
    big.features.assign(20, 0.0);
    REQUIRE_THROWS_WITH(pad_pointset(big, spec.max_points),
                        Catch::Matchers::ContainsSubstring("exceeds"));
}

TEST_CASE("mlp gradients match finite differences on both heads") {
    Rng rng(41);
    MlpSpec spec;
    spec.widths = {24, 12};
    spec.max_points = 8;
    spec.max_object_points = 4;
    for (const Head head : {Head::Force, Head::Contact}) {
        MlpModel model(spec, head, 55);
        jitter_params(model.params(), 902);
        const Eigen::Index in_dim =
            static_cast<Eigen::Index>(percept::make_pointset_feature_dim(head)) * spec.max_points;
        Matrix rows(2, in_dim);
        for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.uniform(-0.5, 0.5);

        std::vector<double> target;
        std::vector<std::uint8_t> mask, labels;
        Rng lr(6);
        for (int i = 0; i < 2 * spec.max_object_points; ++i) {
            target.push_back(lr.uniform(0.0, 1.5));
            mask.push_back(lr.uniform() < 0.6 ? 1 : 0);
            labels.push_back(lr.uniform() < 0.5 ? 1 : 0);
        }
        mask[0] = 1;

        const auto build = [&](Tape& tape) {
            const Tape::Id flat = tape.flatten_to_col(model.forward(tape, rows));
            return head == Head::Force ? tape.mse_masked(flat, target, mask)
                                       : tape.bce_with_logits(flat, labels, mask);
        };
        const auto forward = [&] {
            Tape tape;
            return tape.scalar(build(tape));
        };
        const auto backward = [&] {
            Tape tape;
            tape.backward(build(tape));
        };
        Rng probes(47);
        const double err = grad_check_model(forward, backward, model.params().all(), 120, probes);
        INFO("head " << to_string(head));
        REQUIRE(err < 1e-4);
    }
}

TEST_CASE("losses ignore output slots beyond the record's object count") {
    MlpSpec spec;
    spec.widths = {8};
    spec.max_points = 4;
    spec.max_object_points = 3;
    const MlpModel model(spec, Head::Force, 13);
    Rng rng(3);
    Matrix rows(1, 9 * 4);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.uniform(-1.0, 1.0);

    // Record has 2 object points; slot 3 is padding.
    const std::vector<double> t1{1.0, 0.5, 0.0};
    const std::vector<double> t2{1.0, 0.5, 99.0};  // junk target in the padded slot
    const std::vector<std::uint8_t> mask{1, 1, 0};
    Tape a, b;
    const double la = a.scalar(a.mse_masked(a.flatten_to_col(model.forward(a, rows)), t1, mask));
    const double lb = b.scalar(b.mse_masked(b.flatten_to_col(model.forward(b, rows)), t2, mask));
    REQUIRE(la == lb);
}

TEST_CASE("pad_pointset zero-fills the padded region") {
    percept::PointsetInput in;
    in.point_count = 2;
    in.feature_dim = 4;
    in.object_count = 1;
    in.features = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto row = pad_pointset(in, 5);
    REQUIRE(row.size() == 20);
    REQUIRE(row(0) == 1.0);
    REQUIRE(row(7) == 8.0);
    for (Eigen::Index i = 8; i < 20; ++i) REQUIRE(row(i) == 0.0);
}
