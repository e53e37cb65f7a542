/// @file train.hpp
/// @brief Training loops for the GNS and MLP models on VHRD records, plus
/// checkpoint-backed predictors for evaluation.
///
/// Batches of records are assembled into one disjoint-union graph (GNS) or a
/// padded row stack (MLP); losses are normalized per record and averaged over
/// the records that contribute (masked force loss skips records with no
/// contact point). The checkpoint with the lowest validation loss wins.

#pragma once

#include <array>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vhr/adam.hpp"
#include "vhr/checkpoint.hpp"
#include "vhr/dataset.hpp"
#include "vhr/eval.hpp"
#include "vhr/models.hpp"

namespace vhr::pipeline {

using learn::GnsModel;
using learn::GnsSpec;
using learn::Head;
using learn::Matrix;
using learn::MlpModel;
using learn::MlpSpec;
using learn::Tape;

struct TrainSettings {
    int epochs = 20;
    int batch_size = 8;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct EpochPoint {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainOutput {
    learn::Checkpoint checkpoint;  ///< parameters at the minimum validation loss
    std::vector<EpochPoint> curve;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

inline std::string loss_curve_csv(const std::vector<EpochPoint>& curve) {
    std::string out = "epoch,train_loss,val_loss\n";
    char line[128];
    for (const auto& p : curve) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", p.epoch, p.train_loss, p.val_loss);
        out += line;
    }
    return out;
}

namespace detail {

/// Deterministic Fisher-Yates shuffle.
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

struct BatchLoss {
    Tape::Id node;
    int contributing = 0;
};

/// Batched GNS loss over a set of records; per-record normalization, averaged
/// over contributing records.
inline std::optional<BatchLoss> gns_batch_loss(Tape& tape, const GnsModel& model,
                                               const std::vector<const DatasetRecord*>& batch,
                                               double alpha, Head head) {
    std::vector<percept::InteractionGraph> graphs;
    std::vector<const DatasetRecord*> used;
    graphs.reserve(batch.size());
    for (const auto* r : batch) {
        if (r->object_count() == 0) continue;
        if (head == Head::Force) {
            bool any_contact = false;
            for (const auto c : r->contact) any_contact |= c != 0;
            if (!any_contact) continue;
        }
        graphs.push_back(percept::graph_for_head(r->cloud, alpha, r->gripper_velocity, head));
        used.push_back(r);
    }
    if (graphs.empty()) return std::nullopt;

    const auto gb = learn::make_graph_batch(std::span(graphs.data(), graphs.size()), head);
    const Tape::Id out = model.forward(tape, gb);

    std::vector<Tape::Id> losses;
    for (std::size_t g = 0; g < used.size(); ++g) {
        const auto range = gb.graph_object_ranges[g];
        const Tape::Id block = tape.rows_block(out, range.start, range.count);
        std::vector<double> target(used[g]->force.begin(), used[g]->force.end());
        if (head == Head::Force) {
            losses.push_back(tape.mse_masked(block, target, used[g]->contact));
        } else {
            losses.push_back(tape.bce_with_logits(block, used[g]->contact));
        }
    }
    return BatchLoss{tape.mean_of(losses), static_cast<int>(used.size())};
}

/// Batched MLP loss; rows padded to the model's fixed dimensions.
inline std::optional<BatchLoss> mlp_batch_loss(Tape& tape, const MlpModel& model,
                                               const std::vector<const DatasetRecord*>& batch,
                                               Head head) {
    std::vector<const DatasetRecord*> used;
    std::vector<Eigen::RowVectorXd> rows;
    for (const auto* r : batch) {
        if (r->object_count() == 0) continue;
        if (head == Head::Force) {
            bool any_contact = false;
            for (const auto c : r->contact) any_contact |= c != 0;
            if (!any_contact) continue;
        }
        rows.push_back(learn::pad_pointset(
            percept::make_pointset_input(r->cloud, r->gripper_velocity, head), model.spec().max_points));
        used.push_back(r);
    }
    if (used.empty()) return std::nullopt;

    Matrix input(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) input.row(static_cast<Eigen::Index>(i)) = rows[i];
    const Tape::Id out = model.forward(tape, input);

    const int max_obj = model.spec().max_object_points;
    std::vector<Tape::Id> losses;
    for (std::size_t g = 0; g < used.size(); ++g) {
        if (static_cast<int>(used[g]->object_count()) > max_obj)
            throw std::runtime_error("record object count exceeds the MLP output slots");
        const Tape::Id block =
            tape.flatten_to_col(tape.rows_block(out, static_cast<Eigen::Index>(g), 1));
        std::vector<double> target(static_cast<std::size_t>(max_obj), 0.0);
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(max_obj), 0);
        std::vector<std::uint8_t> labels(static_cast<std::size_t>(max_obj), 0);
        for (std::size_t i = 0; i < used[g]->object_count(); ++i) {
            target[i] = used[g]->force[i];
            labels[i] = used[g]->contact[i];
            mask[i] = head == Head::Force ? used[g]->contact[i] : 1;
        }
        losses.push_back(head == Head::Force ? tape.mse_masked(block, target, mask)
                                             : tape.bce_with_logits(block, labels, mask));
    }
    return BatchLoss{tape.mean_of(losses), static_cast<int>(used.size())};
}

template <typename LossFn>
inline double dataset_loss(const std::vector<DatasetRecord>& records, int batch_size, LossFn&& fn) {
    double total = 0.0;
    int batches = 0;
    for (std::size_t at = 0; at < records.size(); at += static_cast<std::size_t>(batch_size)) {
        std::vector<const DatasetRecord*> batch;
        for (std::size_t i = at; i < std::min(records.size(), at + static_cast<std::size_t>(batch_size)); ++i)
            batch.push_back(&records[i]);
        Tape tape;
        const auto loss = fn(tape, batch);
        if (!loss) continue;
        total += tape.scalar(loss->node);
        ++batches;
    }
    return batches ? total / batches : 0.0;
}

template <typename LossFn>
inline TrainOutput run_training(const std::vector<DatasetRecord>& train,
                                const std::vector<DatasetRecord>& val, learn::ParamStore& params,
                                const TrainSettings& settings, nlohmann::json checkpoint_spec,
                                LossFn&& loss_fn) {
    learn::AdamConfig adam_cfg;
    adam_cfg.lr = settings.lr;
    adam_cfg.beta1 = settings.beta1;
    adam_cfg.beta2 = settings.beta2;
    adam_cfg.eps = settings.adam_eps;
    learn::AdamState adam(params.all(), adam_cfg);

    Rng shuffle_rng(derive_seed(settings.seed, 0xBA7C4));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0u);

    TrainOutput out;
    std::vector<Matrix> best_params;

    for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
        shuffle_indices(order, shuffle_rng);
        double train_total = 0.0;
        int train_batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(settings.batch_size)) {
            std::vector<const DatasetRecord*> batch;
            for (std::size_t i = at;
                 i < std::min(order.size(), at + static_cast<std::size_t>(settings.batch_size)); ++i)
                batch.push_back(&train[order[i]]);
            Tape tape;
            const auto loss = loss_fn(tape, batch);
            if (!loss) continue;
            const double value = tape.scalar(loss->node);
            if (!std::isfinite(value))
                throw std::runtime_error("NaN loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(train_batches));
            params.zero_grad();
            tape.backward(loss->node);
            adam.step();
            train_total += value;
            ++train_batches;
        }

        const double val_loss = dataset_loss(val, settings.batch_size, loss_fn);
        const double train_loss = train_batches ? train_total / train_batches : 0.0;
        out.curve.push_back({epoch, train_loss, val_loss});

        if (out.best_epoch < 0 || val_loss < out.best_val_loss) {
            out.best_epoch = epoch;
            out.best_val_loss = val_loss;
            best_params.clear();
            for (const auto* p : params.all()) best_params.push_back(p->value);
        }
    }

    if (out.best_epoch < 0) throw std::runtime_error("training saw no usable batches");
    const auto plist = params.all();
    for (std::size_t i = 0; i < plist.size(); ++i) plist[i]->value = best_params[i];

    checkpoint_spec["best_epoch"] = out.best_epoch;
    checkpoint_spec["best_val_loss"] = out.best_val_loss;
    out.checkpoint = learn::Checkpoint::from_params(std::move(checkpoint_spec), plist);
    return out;
}

}  // namespace detail

/// Derives the fixed MLP input/output slot counts from the records it will see.
inline MlpSpec derive_mlp_spec(const std::vector<int>& widths, Head head,
                               const std::vector<DatasetRecord>& train,
                               const std::vector<DatasetRecord>& val, int max_points_override = 0) {
    MlpSpec spec;
    spec.widths = widths;
    std::size_t max_points = 0, max_obj = 1;
    for (const auto* split : {&train, &val}) {
        for (const auto& r : *split) {
            std::size_t pts = r.cloud.points.size();
            if (head == Head::Contact) pts -= r.cloud.count(percept::PointClass::Gripper);
            max_points = std::max(max_points, pts);
            max_obj = std::max(max_obj, r.object_count());
        }
    }
    spec.max_points = max_points_override > 0 ? max_points_override : static_cast<int>(max_points);
    spec.max_object_points = static_cast<int>(max_obj);
    if (spec.max_points <= 0) throw std::runtime_error("cannot derive MLP input size from empty data");
    return spec;
}

inline TrainOutput train_gns(const std::vector<DatasetRecord>& train,
                             const std::vector<DatasetRecord>& val, const GnsSpec& spec, Head head,
                             double alpha, const TrainSettings& settings, nlohmann::json run_config) {
    GnsModel model(spec, head, derive_seed(settings.seed, 0x6E5));
    nlohmann::json ck_spec{{"model", "gns"},
                           {"head", learn::to_string(head)},
                           {"gns", spec},
                           {"alpha", alpha},
                           {"seed", settings.seed},
                           {"config", std::move(run_config)}};
    return detail::run_training(train, val, model.params(), settings, std::move(ck_spec),
                                [&](Tape& tape, const std::vector<const DatasetRecord*>& batch) {
                                    return detail::gns_batch_loss(tape, model, batch, alpha, head);
                                });
}

inline TrainOutput train_mlp(const std::vector<DatasetRecord>& train,
                             const std::vector<DatasetRecord>& val, const MlpSpec& spec, Head head,
                             const TrainSettings& settings, nlohmann::json run_config) {
    MlpModel model(spec, head, derive_seed(settings.seed, 0x317));
    nlohmann::json ck_spec{{"model", "mlp"},
                           {"head", learn::to_string(head)},
                           {"mlp", spec},
                           {"seed", settings.seed},
                           {"config", std::move(run_config)}};
    return detail::run_training(train, val, model.params(), settings, std::move(ck_spec),
                                [&](Tape& tape, const std::vector<const DatasetRecord*>& batch) {
                                    return detail::mlp_batch_loss(tape, model, batch, head);
                                });
}

// ---------------------------------------------------------------------------
// Checkpoint-backed inference
// ---------------------------------------------------------------------------

/// A loaded model that maps records to per-object-point outputs (forces in
/// Newtons for the force head, contact probabilities for the contact head).
class LoadedModel {
  public:
    explicit LoadedModel(const learn::Checkpoint& ck) {
        const std::string kind = ck.spec.at("model").get<std::string>();
        head_ = learn::head_from_string(ck.spec.at("head").get<std::string>());
        if (kind == "gns") {
            gns_spec_ = ck.spec.at("gns").get<GnsSpec>();
            alpha_ = ck.spec.at("alpha").get<double>();
            gns_ = std::make_unique<GnsModel>(gns_spec_, head_, 0);
            ck.restore_into(gns_->params().all());
        } else if (kind == "mlp") {
            mlp_spec_ = ck.spec.at("mlp").get<MlpSpec>();
            mlp_ = std::make_unique<MlpModel>(mlp_spec_, head_, 0);
            ck.restore_into(mlp_->params().all());
        } else {
            throw std::runtime_error("unknown model kind in checkpoint: " + kind);
        }
        spec_json_ = ck.spec;
    }

    Head head() const { return head_; }
    const nlohmann::json& spec_json() const { return spec_json_; }

    /// Raw per-object-point outputs for one record (probabilities for the
    /// contact head, non-negative forces for the force head).
    std::vector<double> predict(const DatasetRecord& r) const {
        if (r.object_count() == 0) return {};
        Tape tape;
        Matrix values;
        if (gns_) {
            const auto graph = percept::graph_for_head(r.cloud, alpha_, r.gripper_velocity, head_);
            const auto batch = learn::make_graph_batch(std::span(&graph, 1), head_);
            values = tape.value(gns_->forward(tape, batch));
        } else {
            const auto row = learn::pad_pointset(
                percept::make_pointset_input(r.cloud, r.gripper_velocity, head_), mlp_spec_.max_points);
            Matrix input(1, row.size());
            input.row(0) = row;
            values = tape.value(mlp_->forward(tape, input));
            values = values.row(0).head(static_cast<Eigen::Index>(r.object_count())).transpose();
        }
        std::vector<double> out(r.object_count());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double v = values(static_cast<Eigen::Index>(i), 0);
            out[i] = head_ == Head::Contact ? 1.0 / (1.0 + std::exp(-v)) : v;
        }
        return out;
    }

  private:
    Head head_ = Head::Force;
    GnsSpec gns_spec_;
    MlpSpec mlp_spec_;
    double alpha_ = 0.0375;
    std::unique_ptr<GnsModel> gns_;
    std::unique_ptr<MlpModel> mlp_;
    nlohmann::json spec_json_;
};

/// Pairs a force model and a contact model into an evaluation predictor.
inline Predictor model_pair_predictor(std::shared_ptr<LoadedModel> force,
                                      std::shared_ptr<LoadedModel> contact) {
    if (force->head() != Head::Force || contact->head() != Head::Contact)
        throw std::invalid_argument("model pair must be (force, contact)");
    return [force, contact](const DatasetRecord& r) {
        RecordPrediction out;
        out.force = force->predict(r);
        out.contact_prob = contact->predict(r);
        return out;
    };
}

}  // namespace vhr::pipeline
