#include <catch2/catch_amalgamated.hpp>

#include "vhr/checkpoint.hpp"
#include "vhr/config.hpp"
#include "vhr/dataset.hpp"
#include "vhr/toml.hpp"

using namespace vhr;
using namespace vhr::pipeline;
using Catch::Approx;

namespace {

Dataset tiny_dataset() {
    Dataset ds;
    ds.header = {{"task", "primitive_shapes"}, {"split", "train"}, {"seed", 7}};
    Rng rng(3);
    for (std::uint32_t t = 0; t < 2; ++t) {
        for (std::uint32_t f = 0; f < 3; ++f) {
            DatasetRecord r;
            r.trajectory_id = t;
            r.frame_index = f;
            for (int i = 0; i < 4; ++i)
                r.cloud.points.push_back({rng.uniform_vec3(-1, 1), percept::PointClass::Object});
            for (int i = 0; i < 5; ++i)
                r.cloud.points.push_back({rng.uniform_vec3(-1, 1), percept::PointClass::Cloth});
            r.cloud.points.push_back({rng.uniform_vec3(-1, 1), percept::PointClass::Gripper});
            r.gripper_velocity = rng.uniform_vec3(-0.2, 0.2);
            r.force = {0.0, 1.25, 0.0, 0.5};
            r.contact = {0, 1, 0, 1};
            ds.records.push_back(std::move(r));
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("vhrd datasets survive write -> read -> write byte-identically") {
    const Dataset ds = tiny_dataset();
    const std::vector<char> once = encode_dataset(ds);
    const Dataset back = decode_dataset(once);
    const std::vector<char> twice = encode_dataset(back);
    REQUIRE(once == twice);
    REQUIRE(back.records.size() == ds.records.size());
    REQUIRE(back.header == ds.header);
    REQUIRE(back.records[3].force[1] == 1.25);
    REQUIRE(back.records[3].cloud.points.size() == 10);
}

TEST_CASE("vhrd rejects corrupted checksums and bad magic") {
    std::vector<char> bytes = encode_dataset(tiny_dataset());
    SECTION("flip a record byte") {
        bytes[bytes.size() - 20] ^= 0x5a;
        REQUIRE_THROWS_WITH(decode_dataset(bytes), Catch::Matchers::ContainsSubstring("checksum"));
    }
    SECTION("bad magic") {
        bytes[0] = 'X';
        REQUIRE_THROWS_WITH(decode_dataset(bytes), Catch::Matchers::ContainsSubstring("VHRD"));
    }
    SECTION("bad version") {
        bytes[4] = 99;
        REQUIRE_THROWS_WITH(decode_dataset(bytes), Catch::Matchers::ContainsSubstring("version"));
    }
}

TEST_CASE("vhrm checkpoints survive write -> read -> write byte-identically") {
    learn::ParamStore store;
    Rng rng(11);
    learn::Matrix a(3, 4), b(1, 4);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-1, 1);
    store.add("layer.w", a);
    store.add("layer.b", b);

    const auto ck = learn::Checkpoint::from_params({{"model", "test"}, {"head", "force"}}, store.all());
    const std::vector<char> once = learn::encode_checkpoint(ck);
    const learn::Checkpoint back = learn::decode_checkpoint(once);
    const std::vector<char> twice = learn::encode_checkpoint(back);
    REQUIRE(once == twice);
    REQUIRE(back.tensors.size() == 2);
    REQUIRE(back.tensors[0].first == "layer.w");
    REQUIRE((back.tensors[0].second - a).norm() == 0.0);

    learn::ParamStore fresh;
    fresh.add("layer.w", learn::Matrix::Zero(3, 4));
    fresh.add("layer.b", learn::Matrix::Zero(1, 4));
    back.restore_into(fresh.all());
    REQUIRE((fresh.all()[0]->value - a).norm() == 0.0);
}

TEST_CASE("vhrm rejects corruption") {
    learn::ParamStore store;
    store.add("w", learn::Matrix::Ones(2, 2));
    const auto ck = learn::Checkpoint::from_params({{"model", "m"}}, store.all());
    std::vector<char> bytes = learn::encode_checkpoint(ck);
    SECTION("payload corruption fails the checksum") {
        bytes[bytes.size() / 2] ^= 0x11;
        REQUIRE_THROWS_WITH(learn::decode_checkpoint(bytes),
                            Catch::Matchers::ContainsSubstring("checksum"));
    }
    SECTION("truncation") {
        bytes.resize(6);
        REQUIRE_THROWS(learn::decode_checkpoint(bytes));
    }
}

TEST_CASE("toml parser handles tables, scalars, arrays, comments") {
    const std::string text = R"(
# run configuration
task = "dish_washing"   # inline comment
master_seed = 42
threads = 2

[sim]
dt = 0.01
substeps = 4
gravity = [0.0, 0.0, -9.81]

[train]
model = "gns"
epochs = 3
lr = 1e-4

[cloth]
stiffness = [1.0, 0.9, 0.8]
obj_path = "meshes/towel.obj"
)";
    const nlohmann::json j = parse_toml(text);
    REQUIRE(j.at("task") == "dish_washing");
    REQUIRE(j.at("master_seed") == 42);
    REQUIRE(j.at("sim").at("dt") == Approx(0.01));
    REQUIRE(j.at("sim").at("substeps") == 4);
    REQUIRE(j.at("sim").at("gravity").size() == 3);
    REQUIRE(j.at("sim").at("gravity").at(2) == Approx(-9.81));
    REQUIRE(j.at("train").at("lr") == Approx(1e-4));
    REQUIRE(j.at("cloth").at("obj_path") == "meshes/towel.obj");

    REQUIRE_THROWS(parse_toml("key 5"));
    REQUIRE_THROWS(parse_toml("a = 1\na = 2\n"));
    REQUIRE_THROWS(parse_toml("a = \"unterminated\n"));
}

TEST_CASE("run config defaults match the reference values") {
    const config::RunConfig cfg;
    REQUIRE(cfg.labels.epsilon == Approx(0.0312));
    REQUIRE(cfg.labels.xi == Approx(0.5));
    REQUIRE(cfg.percept.crop_tau == Approx(0.0625));
    REQUIRE(cfg.percept.edge_alpha == Approx(0.0375));
    REQUIRE(cfg.percept.voxel_size == Approx(0.0156));
    REQUIRE(cfg.sim.contact_threshold == Approx(0.005));
    REQUIRE(cfg.sim.particle_radius == Approx(0.00625));
    REQUIRE(cfg.train.lr == Approx(1e-4));
    REQUIRE(cfg.train.batch_size == 8);
    REQUIRE(cfg.cloth.stiffness.stretch == Approx(1.0));
    REQUIRE(cfg.cloth.stiffness.bend == Approx(0.9));
    REQUIRE(cfg.cloth.stiffness.shear == Approx(0.8));
}

TEST_CASE("run config loads from toml and rejects unknown keys") {
    config::RunConfig cfg = config::load_config_text(R"(
task = "arm_proxy"
master_seed = 9

[sim]
substeps = 2
contact_threshold = 0.004

[percept]
voxel_size = 0.02
)");
    REQUIRE(cfg.task == tasks::TaskTag::ArmProxy);
    REQUIRE(cfg.master_seed == 9);
    REQUIRE(cfg.sim.substeps == 2);
    REQUIRE(cfg.percept.voxel_size == Approx(0.02));
    // derived sync: trajectory sampling offsets follow the sim config
    REQUIRE(cfg.trajectory.contact_threshold == Approx(0.004));

    REQUIRE_THROWS_WITH(config::load_config_text("nonsense_key = 1\n"),
                        Catch::Matchers::ContainsSubstring("unknown config key"));
    REQUIRE_THROWS_WITH(config::load_config_text("[sim]\nwarp_speed = 9\n"),
                        Catch::Matchers::ContainsSubstring("sim.warp_speed"));
}

TEST_CASE("run config json embedding is stable") {
    const config::RunConfig cfg;
    const nlohmann::json a = cfg;
    const nlohmann::json b = cfg;
    REQUIRE(a == b);
    REQUIRE(a.at("labels").at("epsilon") == Approx(0.0312));
    REQUIRE(a.at("task") == "primitive_shapes");
}
