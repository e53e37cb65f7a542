// vhr: command-line front end for dataset generation, training, threshold
// search, evaluation, single-frame prediction export, the noise-sweep
// protocol, and a rollout benchmark.
//
// Every artifact written here embeds the fully resolved run configuration and
// master seed, so any output can be regenerated from its own metadata.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "vhr/pipeline.hpp"
#include "vhr/ply.hpp"

namespace fs = std::filesystem;
using namespace vhr;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;  // -1: keep config value
    int threads = 0;         // 0: config / env fallback
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "TOML run configuration file");
    cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
    cmd->add_option("--threads", opts.threads, "Worker threads (VHR_THREADS as fallback)");
}

config::RunConfig resolve_config(const CommonOpts& opts) {
    config::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = config::load_config_file(opts.config_path);
    if (opts.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.threads > 0) {
        cfg.threads = opts.threads;
    } else if (const char* env = std::getenv("VHR_THREADS")) {
        cfg.threads = std::max(1, std::atoi(env));
    }
    cfg.sync_derived();
    return cfg;
}

void write_json_artifact(const std::string& path, json payload, const config::RunConfig& cfg) {
    payload["config"] = cfg;
    payload["seed"] = cfg.master_seed;
    write_text_file(path, payload.dump(2) + "\n");
}

std::vector<pipeline::DatasetRecord> load_records(const std::string& path) {
    return pipeline::load_dataset(path).records;
}

std::shared_ptr<pipeline::LoadedModel> load_model(const std::string& path, learn::Head expected) {
    auto model = std::make_shared<pipeline::LoadedModel>(learn::load_checkpoint(path));
    if (model->head() != expected)
        throw std::runtime_error(path + " holds a " + learn::to_string(model->head()) +
                                 " model, expected " + learn::to_string(expected));
    return model;
}

// --- subcommand bodies ---

int run_gen(const CommonOpts& opts, const config::RunConfig& cfg) {
    const auto result = pipeline::generate_dataset(cfg, opts.out_dir);
    json stats;
    for (const auto& [split, s] : result.stats) {
        stats[split] = s;
        stats[split]["file"] = result.files.at(split);
    }
    write_json_artifact((fs::path(opts.out_dir) / (std::string(tasks::to_string(cfg.task)) + "_stats.json")).string(),
                        json{{"stats", stats}}, cfg);
    std::printf("%-8s %9s %9s %14s %14s\n", "split", "records", "trajs", "avg cloth pts", "avg object pts");
    for (const auto& [split, s] : result.stats)
        std::printf("%-8s %9zu %9zu %14.1f %14.1f\n", split.c_str(), s.records, s.trajectories,
                    s.avg_cloth_points, s.avg_object_points);
    return 0;
}

int run_train(const CommonOpts& opts, const config::RunConfig& cfg, const std::string& data_dir,
              std::string train_file, std::string val_file, const std::string& head_name) {
    const std::string task = tasks::to_string(cfg.task);
    if (train_file.empty()) train_file = pipeline::dataset_path(data_dir, task, "train");
    if (val_file.empty()) val_file = pipeline::dataset_path(data_dir, task, "val");
    const auto train_records = load_records(train_file);
    const auto val_records = load_records(val_file);
    const learn::Head head = learn::head_from_string(head_name);

    pipeline::TrainSettings settings;
    settings.epochs = cfg.train.epochs;
    settings.batch_size = cfg.train.batch_size;
    settings.lr = cfg.train.lr;
    settings.beta1 = cfg.train.beta1;
    settings.beta2 = cfg.train.beta2;
    settings.adam_eps = cfg.train.adam_eps;
    settings.seed = cfg.master_seed;

    pipeline::TrainOutput out;
    if (cfg.train.model == "gns") {
        out = pipeline::train_gns(train_records, val_records, cfg.gns, head, cfg.percept.edge_alpha,
                                  settings, json(cfg));
    } else if (cfg.train.model == "mlp") {
        const learn::MlpSpec spec = pipeline::derive_mlp_spec(
            cfg.mlp_widths, head, train_records, val_records, cfg.train.mlp_max_points);
        out = pipeline::train_mlp(train_records, val_records, spec, head, settings, json(cfg));
    } else {
        throw std::runtime_error("unknown train.model '" + cfg.train.model + "' (use gns or mlp)");
    }

    fs::create_directories(opts.out_dir);
    const std::string stem = task + "_" + cfg.train.model + "_" + head_name;
    const std::string ck_path = (fs::path(opts.out_dir) / (stem + ".vhrm")).string();
    const std::string curve_path = (fs::path(opts.out_dir) / (stem + "_curve.csv")).string();
    learn::save_checkpoint(ck_path, out.checkpoint);
    write_text_file(curve_path, pipeline::loss_curve_csv(out.curve));

    std::printf("trained %s %s head: best epoch %d, val loss %.6g\n", cfg.train.model.c_str(),
                head_name.c_str(), out.best_epoch, out.best_val_loss);
    std::printf("checkpoint: %s\nloss curve: %s\n", ck_path.c_str(), curve_path.c_str());
    return 0;
}

int run_search_beta(const CommonOpts& opts, const config::RunConfig& cfg,
                    const std::string& contact_path, const std::string& val_file) {
    const std::string task = tasks::to_string(cfg.task);
    const auto records = load_records(val_file);
    const auto contact = load_model(contact_path, learn::Head::Contact);

    std::vector<double> probs;
    std::vector<std::uint8_t> labels;
    pipeline::collect_contact_outputs(
        records,
        [&](const pipeline::DatasetRecord& r) {
            pipeline::RecordPrediction p;
            p.contact_prob = contact->predict(r);
            p.force.assign(r.object_count(), 0.0);
            return p;
        },
        probs, labels);
    const double beta = pipeline::search_beta(probs, labels, cfg.eval.beta_grid_step);

    fs::create_directories(opts.out_dir);
    write_json_artifact((fs::path(opts.out_dir) / (task + "_beta.json")).string(),
                        json{{"beta", beta}, {"contact_model", contact_path}, {"val_file", val_file}},
                        cfg);
    std::printf("beta* = %.4f\n", beta);
    return 0;
}

int run_eval(const CommonOpts& opts, const config::RunConfig& cfg, const std::string& force_path,
             const std::string& contact_path, const std::string& test_file,
             const std::string& train_file, const std::string& val_file, double beta,
             bool with_baselines) {
    const std::string task = tasks::to_string(cfg.task);
    const auto test_records = load_records(test_file);

    const auto force = load_model(force_path, learn::Head::Force);
    const auto contact = load_model(contact_path, learn::Head::Contact);
    const auto predictor = pipeline::model_pair_predictor(force, contact);

    if (beta < 0.0) {
        if (val_file.empty()) throw std::runtime_error("eval needs --beta or --val-file to search it");
        const auto val_records = load_records(val_file);
        std::vector<double> probs;
        std::vector<std::uint8_t> labels;
        pipeline::collect_contact_outputs(val_records, predictor, probs, labels);
        beta = pipeline::search_beta(probs, labels, cfg.eval.beta_grid_step);
    }

    const pipeline::EvalReport report =
        pipeline::evaluate(test_records, predictor, beta, cfg.eval.mae_over_all_points);

    json out{{"model", report},          {"beta", report.beta},
             {"mae", report.force_mae},  {"f1", report.contact_f1},
             {"error_pct", report.error_pct}, {"test_file", test_file}};

    std::printf("%-14s %10s %8s %10s %8s %7s\n", "model", "mae(N)", "f1", "precision", "recall", "beta");
    std::printf("%-14s %10.4f %8.4f %10.4f %8.4f %7.3f\n", "pair", report.force_mae,
                report.contact_f1, report.precision, report.recall, report.beta);

    if (with_baselines) {
        if (train_file.empty()) throw std::runtime_error("--with-baselines needs --train-file");
        const auto train_records = load_records(train_file);
        const double c = pipeline::fit_constant_force(train_records);
        const pipeline::EvalReport rep_const = pipeline::evaluate(
            test_records, pipeline::constant_force_predictor(c), 0.5, cfg.eval.mae_over_all_points);
        const double t = pipeline::fit_neighborhood(train_records, cfg.eval.neighborhood_grid_step,
                                                    cfg.eval.neighborhood_grid_max);
        const pipeline::EvalReport rep_nb = pipeline::evaluate(
            test_records, pipeline::neighborhood_predictor(t, cfg.eval.neighborhood_grid_max), 0.5,
            cfg.eval.mae_over_all_points);
        std::printf("%-14s %10.4f %8s %10s %8s %7s\n", "constant", rep_const.force_mae, "-", "-", "-", "-");
        std::printf("%-14s %10s %8.4f %10.4f %8.4f %7s\n", "neighborhood", "-", rep_nb.contact_f1,
                    rep_nb.precision, rep_nb.recall, "-");
        out["constant_force"] = {{"c", c}, {"mae", rep_const.force_mae}};
        out["neighborhood"] = {{"threshold", t}, {"f1", rep_nb.contact_f1}};
    }

    fs::create_directories(opts.out_dir);
    write_json_artifact((fs::path(opts.out_dir) / (task + "_eval.json")).string(), out, cfg);
    return 0;
}

int run_predict(const CommonOpts& opts, const config::RunConfig& cfg, const std::string& force_path,
                const std::string& contact_path, const std::string& dataset_file, int index,
                double beta, const std::string& out_name) {
    const auto records = load_records(dataset_file);
    if (index < 0 || index >= static_cast<int>(records.size()))
        throw std::runtime_error("record index " + std::to_string(index) + " out of range (dataset has " +
                                 std::to_string(records.size()) + " records)");
    const auto& record = records[static_cast<std::size_t>(index)];

    const auto force = load_model(force_path, learn::Head::Force);
    const auto contact = load_model(contact_path, learn::Head::Contact);
    const auto combined = pipeline::combine(contact->predict(record), force->predict(record), beta);

    fs::create_directories(opts.out_dir);
    const std::string path = (fs::path(opts.out_dir) / out_name).string();
    const json meta{{"seed", cfg.master_seed}, {"dataset", dataset_file}, {"record", index}, {"beta", beta}};
    write_text_file(path, percept::to_ply(record.cloud, combined, cfg.eval.ply_force_scale,
                                          {"prediction " + meta.dump(), "config " + json(cfg).dump()}));
    std::printf("wrote %s (%zu points)\n", path.c_str(), record.cloud.points.size());
    return 0;
}

int run_noise_sweep(const CommonOpts& opts, const config::RunConfig& cfg,
                    const std::string& force_path, const std::string& contact_path, double beta,
                    const std::string& stds_csv) {
    std::vector<double> stds;
    std::stringstream ss(stds_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) stds.push_back(std::stod(tok));
    if (stds.empty()) throw std::runtime_error("noise-sweep needs --stds");

    const auto force = load_model(force_path, learn::Head::Force);
    const auto contact = load_model(contact_path, learn::Head::Contact);
    const auto predictor = pipeline::model_pair_predictor(force, contact);

    const auto rows = pipeline::noise_sweep(cfg, predictor, beta, stds);
    json table = json::array();
    std::printf("%10s %10s %8s %10s %8s\n", "std(m)", "mae(N)", "f1", "precision", "recall");
    for (const auto& row : rows) {
        std::printf("%10.4g %10.4f %8.4f %10.4f %8.4f\n", row.noise_std, row.report.force_mae,
                    row.report.contact_f1, row.report.precision, row.report.recall);
        table.push_back({{"std", row.noise_std}, {"report", row.report}});
    }
    fs::create_directories(opts.out_dir);
    write_json_artifact(
        (fs::path(opts.out_dir) / (std::string(tasks::to_string(cfg.task)) + "_noise_sweep.json")).string(),
        json{{"rows", table}, {"beta", beta}}, cfg);
    return 0;
}

int run_bench(const CommonOpts& opts, const config::RunConfig& cfg) {
    const pipeline::BenchReport report = pipeline::bench_rollout(cfg);
    std::printf("rollout: %d frames, %zu particles, %.2f frames/s\n", report.frames,
                report.particles, report.frames_per_second);
    fs::create_directories(opts.out_dir);
    write_json_artifact((fs::path(opts.out_dir) / "bench.json").string(), json{{"bench", report}}, cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visual haptic reasoning pipeline"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, beta_opts, eval_opts, predict_opts, sweep_opts, bench_opts;
    std::string task_override;

    auto* gen = app.add_subcommand("gen", "Generate train/val/test VHRD datasets");
    add_common(gen, gen_opts);
    gen->add_option("--task", task_override, "Task tag (overrides the config)");
    int gen_train = -1, gen_val = -1, gen_test = -1;
    gen->add_option("--train", gen_train, "Training trajectories");
    gen->add_option("--val", gen_val, "Validation trajectories");
    gen->add_option("--test", gen_test, "Test trajectories");

    auto* train = app.add_subcommand("train", "Train a model head on a generated dataset");
    add_common(train, train_opts);
    std::string train_data_dir = "out", train_file, train_val_file, train_head = "force", train_model;
    train->add_option("--data", train_data_dir, "Directory holding {task}_{split}.vhrd")->capture_default_str();
    train->add_option("--train-file", train_file, "Explicit training VHRD file");
    train->add_option("--val-file", train_val_file, "Explicit validation VHRD file");
    train->add_option("--head", train_head, "force or contact")->capture_default_str();
    train->add_option("--model", train_model, "gns or mlp (overrides the config)");
    int train_epochs = -1;
    train->add_option("--epochs", train_epochs, "Epoch count (overrides the config)");

    auto* sbeta = app.add_subcommand("search-beta", "Grid-search the contact decision threshold");
    add_common(sbeta, beta_opts);
    std::string sbeta_contact, sbeta_val;
    sbeta->add_option("--contact-model", sbeta_contact, "Contact VHRM checkpoint")->required();
    sbeta->add_option("--val-file", sbeta_val, "Validation VHRD file")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a model pair on a test split");
    add_common(eval, eval_opts);
    std::string eval_force, eval_contact, eval_test, eval_train_file, eval_val_file;
    double eval_beta = -1.0;
    bool eval_baselines = false;
    eval->add_option("--force-model", eval_force, "Force VHRM checkpoint")->required();
    eval->add_option("--contact-model", eval_contact, "Contact VHRM checkpoint")->required();
    eval->add_option("--test-file", eval_test, "Test VHRD file")->required();
    eval->add_option("--val-file", eval_val_file, "Validation VHRD file (for beta search)");
    eval->add_option("--train-file", eval_train_file, "Training VHRD file (for baselines)");
    eval->add_option("--beta", eval_beta, "Decision threshold (skip the search)");
    eval->add_flag("--with-baselines", eval_baselines, "Also fit and report the baselines");

    auto* predict = app.add_subcommand("predict", "Export one record's prediction as PLY");
    add_common(predict, predict_opts);
    std::string pr_force, pr_contact, pr_dataset, pr_out = "prediction.ply";
    int pr_index = 0;
    double pr_beta = 0.5;
    predict->add_option("--force-model", pr_force, "Force VHRM checkpoint")->required();
    predict->add_option("--contact-model", pr_contact, "Contact VHRM checkpoint")->required();
    predict->add_option("--dataset", pr_dataset, "VHRD file")->required();
    predict->add_option("--index", pr_index, "Record index")->capture_default_str();
    predict->add_option("--beta", pr_beta, "Decision threshold")->capture_default_str();
    predict->add_option("--out", pr_out, "Output PLY name")->capture_default_str();

    auto* sweep = app.add_subcommand("noise-sweep", "Evaluate under injected observation noise");
    add_common(sweep, sweep_opts);
    std::string sw_force, sw_contact, sw_stds = "0,0.003,0.01";
    double sw_beta = 0.5;
    sweep->add_option("--force-model", sw_force, "Force VHRM checkpoint")->required();
    sweep->add_option("--contact-model", sw_contact, "Contact VHRM checkpoint")->required();
    sweep->add_option("--beta", sw_beta, "Decision threshold")->capture_default_str();
    sweep->add_option("--stds", sw_stds, "Comma-separated noise stds in meters")->capture_default_str();
    sweep->add_option("--task", task_override, "Task tag (overrides the config)");

    auto* bench = app.add_subcommand("bench", "Rollout throughput report");
    add_common(bench, bench_opts);
    bench->add_option("--task", task_override, "Task tag (overrides the config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            config::RunConfig cfg = resolve_config(gen_opts);
            if (!task_override.empty()) cfg.task = tasks::task_tag_from_string(task_override);
            if (gen_train >= 0) cfg.gen.train_trajectories = gen_train;
            if (gen_val >= 0) cfg.gen.val_trajectories = gen_val;
            if (gen_test >= 0) cfg.gen.test_trajectories = gen_test;
            cfg.sync_derived();
            return run_gen(gen_opts, cfg);
        }
        if (train->parsed()) {
            config::RunConfig cfg = resolve_config(train_opts);
            if (!train_model.empty()) cfg.train.model = train_model;
            if (train_epochs > 0) cfg.train.epochs = train_epochs;
            return run_train(train_opts, cfg, train_data_dir, train_file, train_val_file, train_head);
        }
        if (sbeta->parsed())
            return run_search_beta(beta_opts, resolve_config(beta_opts), sbeta_contact, sbeta_val);
        if (eval->parsed())
            return run_eval(eval_opts, resolve_config(eval_opts), eval_force, eval_contact, eval_test,
                            eval_train_file, eval_val_file, eval_beta, eval_baselines);
        if (predict->parsed())
            return run_predict(predict_opts, resolve_config(predict_opts), pr_force, pr_contact,
                               pr_dataset, pr_index, pr_beta, pr_out);
        if (sweep->parsed()) {
            config::RunConfig cfg = resolve_config(sweep_opts);
            if (!task_override.empty()) cfg.task = tasks::task_tag_from_string(task_override);
            cfg.sync_derived();
            return run_noise_sweep(sweep_opts, cfg, sw_force, sw_contact, sw_beta, sw_stds);
        }
        if (bench->parsed()) {
            config::RunConfig cfg = resolve_config(bench_opts);
            if (!task_override.empty()) cfg.task = tasks::task_tag_from_string(task_override);
            cfg.sync_derived();
            return run_bench(bench_opts, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
