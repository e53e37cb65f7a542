/// @file config.hpp
/// @brief Resolved run configuration: every tunable of the simulator,
/// perception stack, labeling, models, and training, with reference defaults.
/// Loadable from a TOML file; serialized into every artifact for
/// reproducibility. Unknown keys are rejected.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/camera.hpp"
#include "vhr/labels.hpp"
#include "vhr/models.hpp"
#include "vhr/rollout.hpp"
#include "vhr/scene.hpp"
#include "vhr/toml.hpp"
#include "vhr/trajectory.hpp"

namespace vhr::config {

struct PerceptConfig {
    double voxel_size = 0.0156;   ///< m
    double crop_tau = 0.0625;     ///< m
    double edge_alpha = 0.0375;   ///< m
    double noise_std = 0.0;       ///< m, injected before voxelization
};

struct GenConfig {
    int train_trajectories = 50;
    int val_trajectories = 10;
    int test_trajectories = 10;
    int frame_stride = 1;      ///< store every k-th frame as a record
    int min_frames = 200;
    int max_frames = 800;
    double anchor_radius = 0.02;
};

struct TrainConfig {
    std::string model = "gns";  ///< "gns" or "mlp"
    int epochs = 20;
    int batch_size = 8;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int mlp_max_points = 0;  ///< 0 = derive from the dataset
};

struct EvalConfig {
    double beta_grid_step = 0.01;
    double neighborhood_grid_step = 0.001;  ///< m
    double neighborhood_grid_max = 0.10;    ///< m
    bool mae_over_all_points = false;       ///< default: over ground-truth contact points
    double ply_force_scale = 2.0;           ///< N mapped to full red in exports
};

struct RunConfig {
    tasks::TaskTag task = tasks::TaskTag::PrimitiveShapes;
    std::uint64_t master_seed = 0;
    int threads = 1;

    sim::SimConfig sim;
    tasks::ClothSpec cloth;
    tasks::SceneSamplerConfig scene;
    tasks::TrajectoryConfig trajectory;
    percept::CameraConfig camera;
    percept::LabelCfg labels;
    PerceptConfig percept;
    GenConfig gen;
    learn::GnsSpec gns;
    std::vector<int> mlp_widths{1024, 512, 256, 512, 1024};
    TrainConfig train;
    EvalConfig eval;

    /// Keeps trajectory sampling consistent with the simulator contact offsets.
    void sync_derived() {
        trajectory.contact_threshold = sim.contact_threshold;
        trajectory.cloth_thickness = sim.particle_radius;
        scene.cloth = cloth;
    }
};

// --- json round trip -------------------------------------------------------

inline void to_json(nlohmann::json& j, const PerceptConfig& c) {
    j = {{"voxel_size", c.voxel_size},
         {"crop_tau", c.crop_tau},
         {"edge_alpha", c.edge_alpha},
         {"noise_std", c.noise_std}};
}

inline void to_json(nlohmann::json& j, const GenConfig& c) {
    j = {{"train_trajectories", c.train_trajectories},
         {"val_trajectories", c.val_trajectories},
         {"test_trajectories", c.test_trajectories},
         {"frame_stride", c.frame_stride},
         {"min_frames", c.min_frames},
         {"max_frames", c.max_frames},
         {"anchor_radius", c.anchor_radius}};
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"model", c.model},       {"epochs", c.epochs},
         {"batch_size", c.batch_size}, {"lr", c.lr},
         {"beta1", c.beta1},       {"beta2", c.beta2},
         {"adam_eps", c.adam_eps}, {"mlp_max_points", c.mlp_max_points}};
}

inline void to_json(nlohmann::json& j, const EvalConfig& c) {
    j = {{"beta_grid_step", c.beta_grid_step},
         {"neighborhood_grid_step", c.neighborhood_grid_step},
         {"neighborhood_grid_max", c.neighborhood_grid_max},
         {"mae_over_all_points", c.mae_over_all_points},
         {"ply_force_scale", c.ply_force_scale}};
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{
        {"task", tasks::to_string(c.task)},
        {"master_seed", c.master_seed},
        {"threads", c.threads},
        {"sim",
         {{"dt", c.sim.dt},
          {"substeps", c.sim.substeps},
          {"solver_iterations", c.sim.solver_iterations},
          {"particle_radius", c.sim.particle_radius},
          {"contact_threshold", c.sim.contact_threshold},
          {"gravity", c.sim.gravity},
          {"friction_coefficient", c.sim.friction_coefficient}}},
        {"cloth", c.cloth},
        {"scene",
         {{"include_floor", c.scene.include_floor},
          {"floor_half_extent", c.scene.floor_half_extent},
          {"cube_half_min", c.scene.cube_half_min},
          {"cube_half_max", c.scene.cube_half_max},
          {"sphere_radius_min", c.scene.sphere_radius_min},
          {"sphere_radius_max", c.scene.sphere_radius_max},
          {"cylinder_radius_min", c.scene.cylinder_radius_min},
          {"cylinder_radius_max", c.scene.cylinder_radius_max},
          {"cylinder_half_height_min", c.scene.cylinder_half_height_min},
          {"cylinder_half_height_max", c.scene.cylinder_half_height_max},
          {"placement_extent", c.scene.placement_extent},
          {"plate_radius_min", c.scene.plate_radius_min},
          {"plate_radius_max", c.scene.plate_radius_max},
          {"plate_depth_min", c.scene.plate_depth_min},
          {"plate_depth_max", c.scene.plate_depth_max},
          {"plate_thickness", c.scene.plate_thickness},
          {"upper_arm_length_min", c.scene.upper_arm_length_min},
          {"upper_arm_length_max", c.scene.upper_arm_length_max},
          {"forearm_length_min", c.scene.forearm_length_min},
          {"forearm_length_max", c.scene.forearm_length_max},
          {"hand_length_min", c.scene.hand_length_min},
          {"hand_length_max", c.scene.hand_length_max},
          {"upper_arm_radius_min", c.scene.upper_arm_radius_min},
          {"upper_arm_radius_max", c.scene.upper_arm_radius_max},
          {"forearm_radius_min", c.scene.forearm_radius_min},
          {"forearm_radius_max", c.scene.forearm_radius_max},
          {"hand_radius_min", c.scene.hand_radius_min},
          {"hand_radius_max", c.scene.hand_radius_max}}},
        {"trajectory",
         {{"speed_min", c.trajectory.speed_min},
          {"speed_max", c.trajectory.speed_max},
          {"waypoints_min", c.trajectory.waypoints_min},
          {"waypoints_max", c.trajectory.waypoints_max},
          {"surface_offset_extra", c.trajectory.surface_offset_extra},
          {"arm_waypoint_deviation", c.trajectory.arm_waypoint_deviation}}},
        {"camera", c.camera},
        {"labels", {{"epsilon", c.labels.epsilon}, {"xi", c.labels.xi}}},
        {"percept", c.percept},
        {"gen", c.gen},
        {"gns", c.gns},
        {"mlp_widths", c.mlp_widths},
        {"train", c.train},
        {"eval", c.eval}};
}

namespace detail {

/// Applies `src` onto the target fields, rejecting keys that are not known.
template <typename Fn>
inline void apply_object(const nlohmann::json& src, const std::string& scope, Fn&& set_known) {
    if (!src.is_object()) throw std::runtime_error("config section '" + scope + "' must be a table");
    for (const auto& [key, value] : src.items()) {
        if (!set_known(key, value))
            throw std::runtime_error("unknown config key '" + (scope.empty() ? key : scope + "." + key) + "'");
    }
}

}  // namespace detail

/// Merges a parsed TOML/json tree into a RunConfig, starting from defaults.
inline void apply_config_tree(const nlohmann::json& tree, RunConfig& c) {
    using detail::apply_object;
    apply_object(tree, "", [&](const std::string& key, const nlohmann::json& v) {
        if (key == "task") {
            c.task = tasks::task_tag_from_string(v.get<std::string>());
        } else if (key == "master_seed") {
            c.master_seed = v.get<std::uint64_t>();
        } else if (key == "threads") {
            c.threads = v.get<int>();
        } else if (key == "sim") {
            apply_object(v, "sim", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "dt") c.sim.dt = x.get<double>();
                else if (k == "substeps") c.sim.substeps = x.get<int>();
                else if (k == "solver_iterations") c.sim.solver_iterations = x.get<int>();
                else if (k == "particle_radius") c.sim.particle_radius = x.get<double>();
                else if (k == "contact_threshold") c.sim.contact_threshold = x.get<double>();
                else if (k == "gravity") x.get_to(c.sim.gravity);
                else if (k == "friction_coefficient") c.sim.friction_coefficient = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "cloth") {
            apply_object(v, "cloth", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "width") c.cloth.width = x.get<double>();
                else if (k == "height") c.cloth.height = x.get<double>();
                else if (k == "resolution") c.cloth.resolution = x.get<int>();
                else if (k == "mass") c.cloth.mass = x.get<double>();
                else if (k == "obj_path") c.cloth.obj_path = x.get<std::string>();
                else if (k == "stiffness") {
                    c.cloth.stiffness.stretch = x.at(0).get<double>();
                    c.cloth.stiffness.bend = x.at(1).get<double>();
                    c.cloth.stiffness.shear = x.at(2).get<double>();
                } else return false;
                return true;
            });
        } else if (key == "scene") {
            apply_object(v, "scene", [&](const std::string& k, const nlohmann::json& x) {
                auto& s = c.scene;
                if (k == "include_floor") s.include_floor = x.get<bool>();
                else if (k == "floor_half_extent") s.floor_half_extent = x.get<double>();
                else if (k == "cube_half_min") s.cube_half_min = x.get<double>();
                else if (k == "cube_half_max") s.cube_half_max = x.get<double>();
                else if (k == "sphere_radius_min") s.sphere_radius_min = x.get<double>();
                else if (k == "sphere_radius_max") s.sphere_radius_max = x.get<double>();
                else if (k == "cylinder_radius_min") s.cylinder_radius_min = x.get<double>();
                else if (k == "cylinder_radius_max") s.cylinder_radius_max = x.get<double>();
                else if (k == "cylinder_half_height_min") s.cylinder_half_height_min = x.get<double>();
                else if (k == "cylinder_half_height_max") s.cylinder_half_height_max = x.get<double>();
                else if (k == "placement_extent") s.placement_extent = x.get<double>();
                else if (k == "plate_radius_min") s.plate_radius_min = x.get<double>();
                else if (k == "plate_radius_max") s.plate_radius_max = x.get<double>();
                else if (k == "plate_depth_min") s.plate_depth_min = x.get<double>();
                else if (k == "plate_depth_max") s.plate_depth_max = x.get<double>();
                else if (k == "plate_thickness") s.plate_thickness = x.get<double>();
                else if (k == "upper_arm_length_min") s.upper_arm_length_min = x.get<double>();
                else if (k == "upper_arm_length_max") s.upper_arm_length_max = x.get<double>();
                else if (k == "forearm_length_min") s.forearm_length_min = x.get<double>();
                else if (k == "forearm_length_max") s.forearm_length_max = x.get<double>();
                else if (k == "hand_length_min") s.hand_length_min = x.get<double>();
                else if (k == "hand_length_max") s.hand_length_max = x.get<double>();
                else if (k == "upper_arm_radius_min") s.upper_arm_radius_min = x.get<double>();
                else if (k == "upper_arm_radius_max") s.upper_arm_radius_max = x.get<double>();
                else if (k == "forearm_radius_min") s.forearm_radius_min = x.get<double>();
                else if (k == "forearm_radius_max") s.forearm_radius_max = x.get<double>();
                else if (k == "hand_radius_min") s.hand_radius_min = x.get<double>();
                else if (k == "hand_radius_max") s.hand_radius_max = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "trajectory") {
            apply_object(v, "trajectory", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "speed_min") c.trajectory.speed_min = x.get<double>();
                else if (k == "speed_max") c.trajectory.speed_max = x.get<double>();
                else if (k == "waypoints_min") c.trajectory.waypoints_min = x.get<int>();
                else if (k == "waypoints_max") c.trajectory.waypoints_max = x.get<int>();
                else if (k == "surface_offset_extra") c.trajectory.surface_offset_extra = x.get<double>();
                else if (k == "arm_waypoint_deviation") c.trajectory.arm_waypoint_deviation = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "camera") {
            apply_object(v, "camera", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "eye") x.get_to(c.camera.eye);
                else if (k == "target") x.get_to(c.camera.target);
                else if (k == "width") c.camera.width = x.get<int>();
                else if (k == "height") c.camera.height = x.get<int>();
                else if (k == "vertical_fov_deg") c.camera.vertical_fov_deg = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "labels") {
            apply_object(v, "labels", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "epsilon") c.labels.epsilon = x.get<double>();
                else if (k == "xi") c.labels.xi = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "percept") {
            apply_object(v, "percept", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "voxel_size") c.percept.voxel_size = x.get<double>();
                else if (k == "crop_tau") c.percept.crop_tau = x.get<double>();
                else if (k == "edge_alpha") c.percept.edge_alpha = x.get<double>();
                else if (k == "noise_std") c.percept.noise_std = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "gen") {
            apply_object(v, "gen", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "train_trajectories") c.gen.train_trajectories = x.get<int>();
                else if (k == "val_trajectories") c.gen.val_trajectories = x.get<int>();
                else if (k == "test_trajectories") c.gen.test_trajectories = x.get<int>();
                else if (k == "frame_stride") c.gen.frame_stride = x.get<int>();
                else if (k == "min_frames") c.gen.min_frames = x.get<int>();
                else if (k == "max_frames") c.gen.max_frames = x.get<int>();
                else if (k == "anchor_radius") c.gen.anchor_radius = x.get<double>();
                else return false;
                return true;
            });
        } else if (key == "gns") {
            apply_object(v, "gns", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "hidden") c.gns.hidden = x.get<int>();
                else if (k == "rounds") c.gns.rounds = x.get<int>();
                else if (k == "mlp_hidden_layers") c.gns.mlp_hidden_layers = x.get<int>();
                else return false;
                return true;
            });
        } else if (key == "mlp_widths") {
            v.get_to(c.mlp_widths);
        } else if (key == "train") {
            apply_object(v, "train", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "model") c.train.model = x.get<std::string>();
                else if (k == "epochs") c.train.epochs = x.get<int>();
                else if (k == "batch_size") c.train.batch_size = x.get<int>();
                else if (k == "lr") c.train.lr = x.get<double>();
                else if (k == "beta1") c.train.beta1 = x.get<double>();
                else if (k == "beta2") c.train.beta2 = x.get<double>();
                else if (k == "adam_eps") c.train.adam_eps = x.get<double>();
                else if (k == "mlp_max_points") c.train.mlp_max_points = x.get<int>();
                else return false;
                return true;
            });
        } else if (key == "eval") {
            apply_object(v, "eval", [&](const std::string& k, const nlohmann::json& x) {
                if (k == "beta_grid_step") c.eval.beta_grid_step = x.get<double>();
                else if (k == "neighborhood_grid_step") c.eval.neighborhood_grid_step = x.get<double>();
                else if (k == "neighborhood_grid_max") c.eval.neighborhood_grid_max = x.get<double>();
                else if (k == "mae_over_all_points") c.eval.mae_over_all_points = x.get<bool>();
                else if (k == "ply_force_scale") c.eval.ply_force_scale = x.get<double>();
                else return false;
                return true;
            });
        } else {
            return false;
        }
        return true;
    });
    c.sync_derived();
}

inline RunConfig load_config_text(const std::string& toml_text) {
    RunConfig c;
    apply_config_tree(parse_toml(toml_text), c);
    return c;
}

inline RunConfig load_config_file(const std::string& path) {
    return load_config_text(read_text_file(path));
}

}  // namespace vhr::config
