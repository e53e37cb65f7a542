/// @file pipeline.hpp
/// @brief Dataset generation (scene sampling -> rollout -> perception ->
/// labels -> VHRD files), the noise-sweep protocol, and a rollout benchmark.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "vhr/config.hpp"
#include "vhr/dataset.hpp"
#include "vhr/labels.hpp"
#include "vhr/render.hpp"
#include "vhr/train.hpp"

namespace vhr::pipeline {

/// Builds the dataset records of one trajectory rollout.
inline std::vector<DatasetRecord> records_for_trajectory(const config::RunConfig& cfg,
                                                         std::uint32_t trajectory_id,
                                                         std::uint64_t scene_seed,
                                                         double noise_std) {
    Rng scene_rng(derive_seed(scene_seed, 1));
    Rng traj_rng(derive_seed(scene_seed, 2));
    Rng noise_rng(derive_seed(scene_seed, 3));

    tasks::SceneSpec scene = tasks::sample_scene(cfg.task, scene_rng, cfg.scene);
    const tasks::Trajectory trajectory = tasks::sample_trajectory(scene, traj_rng, cfg.trajectory);
    scene.grasp_point = trajectory.waypoints.front();

    tasks::RolloutConfig rc;
    rc.sim = cfg.sim;
    rc.anchor_radius = cfg.gen.anchor_radius;
    rc.min_frames = cfg.gen.min_frames;
    rc.max_frames = cfg.gen.max_frames;
    const tasks::RolloutResult rollout = tasks::rollout(scene, trajectory, rc);

    const percept::Camera camera = cfg.camera.build();
    const auto object_points = percept::render_object_points(scene, camera);

    std::vector<DatasetRecord> records;
    for (std::size_t f = 0; f < rollout.frames.size(); f += static_cast<std::size_t>(cfg.gen.frame_stride)) {
        const tasks::Frame& frame = rollout.frames[f];
        percept::LabeledPointCloud cloud =
            percept::render_cloud(frame, scene, rollout.cloth_triangles, object_points, camera);
        if (noise_std > 0.0) cloud = percept::add_noise(cloud, noise_std, noise_rng);
        cloud = percept::voxelize(cloud, cfg.percept.voxel_size);
        cloud = percept::crop(cloud, cfg.percept.crop_tau);

        DatasetRecord rec;
        rec.trajectory_id = trajectory_id;
        rec.frame_index = frame.step_index;
        rec.gripper_velocity = frame.gripper_velocity;
        rec.cloud = std::move(cloud);

        const auto object_positions = rec.cloud.positions_of(percept::PointClass::Object);
        const percept::ForceLabels labels =
            percept::distribute_forces(frame.events, object_positions, cfg.labels);
        rec.force = labels.force;
        rec.contact = labels.contact;
        records.push_back(std::move(rec));
    }
    return records;
}

struct SplitResult {
    Dataset dataset;
    DatasetStats stats;
    int retried_trajectories = 0;
};

/// Generates one split. Trajectories are independent jobs; results are
/// assembled in trajectory order so the output is identical for any thread
/// count. A failed rollout is skipped with a log line and replaced by a fresh
/// draw from the same trajectory's seed stream.
inline SplitResult generate_split(const config::RunConfig& cfg, const std::string& split_name,
                                  std::uint64_t split_stream, int n_trajectories, int threads,
                                  double noise_std) {
    std::vector<std::vector<DatasetRecord>> per_traj(static_cast<std::size_t>(n_trajectories));
    std::atomic<int> next{0};
    std::atomic<int> retries{0};

    const auto worker = [&] {
        for (int t = next.fetch_add(1); t < n_trajectories; t = next.fetch_add(1)) {
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 20)
                    throw std::runtime_error("trajectory " + std::to_string(t) +
                                             " failed 20 generation attempts");
                const std::uint64_t seed =
                    derive_seed(cfg.master_seed, split_stream, static_cast<std::uint64_t>(t) * 1000 +
                                                                   static_cast<std::uint64_t>(attempt));
                try {
                    per_traj[static_cast<std::size_t>(t)] =
                        records_for_trajectory(cfg, static_cast<std::uint32_t>(t), seed, noise_std);
                    break;
                } catch (const sim::SimAbort& e) {
                    ++retries;
                    std::cerr << "warn: " << split_name << " trajectory " << t << " redrawn ("
                              << e.what() << ")\n";
                }
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr error;
        std::mutex error_mutex;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    SplitResult out;
    for (auto& records : per_traj)
        for (auto& r : records) out.dataset.records.push_back(std::move(r));
    out.stats = compute_stats(out.dataset.records);
    out.retried_trajectories = retries.load();

    out.dataset.header = nlohmann::json{{"format", "VHRD"},
                                        {"task", tasks::to_string(cfg.task)},
                                        {"split", split_name},
                                        {"seed", cfg.master_seed},
                                        {"noise_std", noise_std},
                                        {"stats", out.stats},
                                        {"config", cfg}};
    return out;
}

struct GenerateResult {
    std::map<std::string, DatasetStats> stats;
    std::map<std::string, std::string> files;
};

inline std::string dataset_path(const std::string& out_dir, const std::string& task,
                                const std::string& split) {
    return (std::filesystem::path(out_dir) / (task + "_" + split + ".vhrd")).string();
}

/// Generates train/val/test splits and writes one VHRD file per split.
inline GenerateResult generate_dataset(const config::RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    GenerateResult result;
    const std::array<std::pair<std::string, int>, 3> splits{
        std::pair{std::string("train"), cfg.gen.train_trajectories},
        std::pair{std::string("val"), cfg.gen.val_trajectories},
        std::pair{std::string("test"), cfg.gen.test_trajectories}};
    std::uint64_t stream = 100;
    for (const auto& [name, count] : splits) {
        const SplitResult split =
            generate_split(cfg, name, stream++, count, cfg.threads, cfg.percept.noise_std);
        const std::string path = dataset_path(out_dir, tasks::to_string(cfg.task), name);
        save_dataset(path, split.dataset);
        result.stats[name] = split.stats;
        result.files[name] = path;
    }
    return result;
}

/// Regenerates the test split with injected observation noise and evaluates a
/// model pair on it; one row per noise std.
struct NoiseSweepRow {
    double noise_std = 0.0;
    EvalReport report;
};

inline std::vector<NoiseSweepRow> noise_sweep(const config::RunConfig& cfg,
                                              const Predictor& predictor, double beta,
                                              const std::vector<double>& stds) {
    std::vector<NoiseSweepRow> rows;
    for (const double std : stds) {
        const SplitResult split =
            generate_split(cfg, "test", 102, cfg.gen.test_trajectories, cfg.threads, std);
        NoiseSweepRow row;
        row.noise_std = std;
        row.report = evaluate(split.dataset.records, predictor, beta, cfg.eval.mae_over_all_points);
        rows.push_back(row);
    }
    return rows;
}

struct BenchReport {
    int frames = 0;
    double seconds = 0.0;
    double frames_per_second = 0.0;
    std::size_t particles = 0;
};

inline void to_json(nlohmann::json& j, const BenchReport& b) {
    j = {{"frames", b.frames},
         {"seconds", b.seconds},
         {"frames_per_second", b.frames_per_second},
         {"particles", b.particles}};
}

/// Rollout throughput on one sampled scene.
inline BenchReport bench_rollout(const config::RunConfig& cfg) {
    Rng scene_rng(derive_seed(cfg.master_seed, 7));
    Rng traj_rng(derive_seed(cfg.master_seed, 8));
    tasks::SceneSpec scene = tasks::sample_scene(cfg.task, scene_rng, cfg.scene);
    const tasks::Trajectory trajectory = tasks::sample_trajectory(scene, traj_rng, cfg.trajectory);

    tasks::RolloutConfig rc;
    rc.sim = cfg.sim;
    rc.anchor_radius = cfg.gen.anchor_radius;
    rc.min_frames = cfg.gen.min_frames;
    rc.max_frames = cfg.gen.max_frames;

    const auto start = std::chrono::steady_clock::now();
    const tasks::RolloutResult r = tasks::rollout(scene, trajectory, rc);
    const auto stop = std::chrono::steady_clock::now();

    BenchReport report;
    report.frames = static_cast<int>(r.frames.size());
    report.seconds = std::chrono::duration<double>(stop - start).count();
    report.frames_per_second = report.frames / std::max(report.seconds, 1e-12);
    report.particles = r.frames.empty() ? 0 : r.frames.front().cloth_positions.size();
    return report;
}

}  // namespace vhr::pipeline
