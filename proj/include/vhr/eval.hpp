/// @file eval.hpp
/// @brief Prediction combination, decision-threshold search, and MAE/F1
/// evaluation reports.

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/baselines.hpp"
#include "vhr/dataset.hpp"

namespace vhr::pipeline {

/// Per-record model outputs over that record's object points.
struct RecordPrediction {
    std::vector<double> force;         ///< f-hat per object point (N)
    std::vector<double> contact_prob;  ///< m in [0, 1] per object point
};

/// A predictor maps a dataset record to per-object-point outputs.
using Predictor = std::function<RecordPrediction(const DatasetRecord&)>;

/// Gated force prediction: f if the contact probability exceeds beta, else 0.
inline std::vector<double> combine(const std::vector<double>& contact_prob,
                                   const std::vector<double>& force_pred, double beta) {
    if (contact_prob.size() != force_pred.size()) throw std::invalid_argument("combine: size mismatch");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("combine: beta outside [0, 1]");
    std::vector<double> out(force_pred.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = contact_prob[i] > beta ? force_pred[i] : 0.0;
    return out;
}

/// Exhaustive grid search for the decision threshold with the highest F1 on
/// validation outputs; ties break toward the smaller beta (higher recall).
inline double search_beta(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels,
                          double grid_step = 0.01) {
    if (probs.size() != labels.size()) throw std::invalid_argument("search_beta: size mismatch");
    std::size_t positives = 0;
    for (const auto l : labels)
        if (l) ++positives;
    if (positives == 0 || positives == labels.size())
        throw std::runtime_error("search_beta needs both classes present in the validation labels");

    double best_beta = 0.0, best_f1 = -1.0;
    const int steps = static_cast<int>(std::round(1.0 / grid_step));
    for (int k = 0; k <= steps; ++k) {
        const double beta = static_cast<double>(k) / static_cast<double>(steps);
        F1Counts counts;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const bool pred = probs[i] > beta;
            if (pred && labels[i]) ++counts.tp;
            if (pred && !labels[i]) ++counts.fp;
            if (!pred && labels[i]) ++counts.fn;
        }
        const double f1 = counts.f1();
        if (f1 > best_f1) {
            best_f1 = f1;
            best_beta = beta;
        }
    }
    return best_beta;
}

/// Collects flat contact probabilities and labels over a split.
inline void collect_contact_outputs(const std::vector<DatasetRecord>& records,
                                    const Predictor& predictor, std::vector<double>& probs,
                                    std::vector<std::uint8_t>& labels) {
    for (const auto& r : records) {
        const RecordPrediction pred = predictor(r);
        if (pred.contact_prob.size() != r.object_count())
            throw std::runtime_error("predictor contact output size mismatch");
        probs.insert(probs.end(), pred.contact_prob.begin(), pred.contact_prob.end());
        labels.insert(labels.end(), r.contact.begin(), r.contact.end());
    }
}

struct EvalReport {
    double force_mae = 0.0;   ///< Newtons
    double contact_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double beta = 0.5;
    double error_pct = 0.0;   ///< force_mae / mean ground-truth force
    std::size_t records = 0;
    std::size_t contact_points = 0;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
    j = {{"mae", r.force_mae},     {"f1", r.contact_f1},
         {"precision", r.precision}, {"recall", r.recall},
         {"beta", r.beta},         {"error_pct", r.error_pct},
         {"records", r.records},   {"contact_points", r.contact_points}};
}

/// Evaluates a predictor on a split at a fixed decision threshold. Force MAE
/// is averaged over ground-truth contact points by default (matching the
/// masked training loss); `mae_over_all_points` switches to all object points.
inline EvalReport evaluate(const std::vector<DatasetRecord>& records, const Predictor& predictor,
                           double beta, bool mae_over_all_points = false) {
    if (records.empty()) throw std::invalid_argument("evaluate: empty split");
    EvalReport report;
    report.beta = beta;
    report.records = records.size();

    F1Counts counts;
    double abs_err = 0.0, truth_sum = 0.0;
    std::size_t mae_count = 0;

    for (const auto& r : records) {
        const RecordPrediction pred = predictor(r);
        if (pred.force.size() != r.object_count() || pred.contact_prob.size() != r.object_count())
            throw std::runtime_error("predictor output size mismatch");
        const std::vector<double> combined = combine(pred.contact_prob, pred.force, beta);
        for (std::size_t i = 0; i < r.object_count(); ++i) {
            const bool truth = r.contact[i] != 0;
            const bool predicted = pred.contact_prob[i] > beta;
            if (predicted && truth) ++counts.tp;
            if (predicted && !truth) ++counts.fp;
            if (!predicted && truth) ++counts.fn;

            if (truth) ++report.contact_points;
            if (truth || mae_over_all_points) {
                abs_err += std::abs(combined[i] - r.force[i]);
                truth_sum += r.force[i];
                ++mae_count;
            }
        }
    }

    report.contact_f1 = counts.f1();
    report.precision = counts.precision();
    report.recall = counts.recall();
    report.force_mae = mae_count ? abs_err / static_cast<double>(mae_count) : 0.0;
    const double mean_truth = mae_count ? truth_sum / static_cast<double>(mae_count) : 0.0;
    report.error_pct = mean_truth > 0.0 ? report.force_mae / mean_truth : 0.0;
    return report;
}

/// Constant-force baseline as a Predictor (always-on contact gate).
inline Predictor constant_force_predictor(double c) {
    return [c](const DatasetRecord& r) {
        RecordPrediction out;
        out.force.assign(r.object_count(), c);
        out.contact_prob.assign(r.object_count(), 1.0);
        return out;
    };
}

/// Neighborhood-contact baseline as a Predictor: probability 1 when the
/// nearest cloth point is closer than the fitted threshold.
inline Predictor neighborhood_predictor(double threshold, double search_radius) {
    return [threshold, search_radius](const DatasetRecord& r) {
        RecordPrediction out;
        const auto d = object_to_cloth_distances(r, search_radius);
        out.force.assign(r.object_count(), 0.0);
        out.contact_prob.reserve(d.size());
        for (const double dist : d) out.contact_prob.push_back(dist < threshold ? 1.0 : 0.0);
        return out;
    };
}

}  // namespace vhr::pipeline
