/// @file models.hpp
/// @brief The two haptic-reasoning model families: a GNS-style message-passing
/// graph network and a padded flat-input MLP baseline, each with a force head
/// (softplus, non-negative) and a contact head (logits).

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/graph.hpp"
#include "vhr/nn.hpp"

namespace vhr::learn {

using percept::Head;
using percept::InteractionGraph;
using percept::PointClass;

inline const char* to_string(Head h) { return h == Head::Force ? "force" : "contact"; }
inline Head head_from_string(const std::string& s) {
    if (s == "force") return Head::Force;
    if (s == "contact") return Head::Contact;
    throw std::invalid_argument("unknown head: " + s);
}

/// Node feature width per head: force gets [one-hot(3), v(3)], contact gets
/// the [1_object] indicator only (and its graphs carry no gripper node).
inline int node_feature_dim(Head head) { return head == Head::Force ? 6 : 1; }

// ---------------------------------------------------------------------------
// Graph batching
// ---------------------------------------------------------------------------

/// A disjoint union of interaction graphs with per-head node features and the
/// bookkeeping needed to slice per-graph object outputs back out.
struct GraphBatch {
    Matrix node_features;   // [N, nf]
    Matrix edge_features;   // [M, 4]
    std::vector<int> src, dst;
    std::vector<int> object_rows;  ///< batch-global node index of each object node
    struct Range {
        int start = 0, count = 0;  ///< rows in object_rows for one graph
    };
    std::vector<Range> graph_object_ranges;

    Eigen::Index node_count() const { return node_features.rows(); }
};

inline GraphBatch make_graph_batch(std::span<const InteractionGraph> graphs, Head head) {
    const int nf = node_feature_dim(head);
    Eigen::Index total_nodes = 0, total_edges = 0;
    for (const auto& g : graphs) {
        total_nodes += static_cast<Eigen::Index>(g.node_count());
        total_edges += static_cast<Eigen::Index>(g.edges.size());
    }
    GraphBatch batch;
    batch.node_features = Matrix::Zero(total_nodes, nf);
    batch.edge_features = Matrix::Zero(total_edges, 4);
    batch.src.reserve(static_cast<std::size_t>(total_edges));
    batch.dst.reserve(static_cast<std::size_t>(total_edges));

    Eigen::Index node_at = 0, edge_at = 0;
    for (const auto& g : graphs) {
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            const Eigen::Index row = node_at + static_cast<Eigen::Index>(i);
            if (head == Head::Force) {
                batch.node_features(row, 0) = g.classes[i] == PointClass::Object ? 1.0 : 0.0;
                batch.node_features(row, 1) = g.classes[i] == PointClass::Cloth ? 1.0 : 0.0;
                batch.node_features(row, 2) = g.classes[i] == PointClass::Gripper ? 1.0 : 0.0;
                batch.node_features(row, 3) = g.gripper_velocity.x;
                batch.node_features(row, 4) = g.gripper_velocity.y;
                batch.node_features(row, 5) = g.gripper_velocity.z;
            } else {
                if (g.classes[i] == PointClass::Gripper)
                    throw std::invalid_argument("contact-head graph must not contain a gripper node");
                batch.node_features(row, 0) = g.classes[i] == PointClass::Object ? 1.0 : 0.0;
            }
        }
        for (const auto& e : g.edges) {
            batch.edge_features(edge_at, 0) = e.displacement.x;
            batch.edge_features(edge_at, 1) = e.displacement.y;
            batch.edge_features(edge_at, 2) = e.displacement.z;
            batch.edge_features(edge_at, 3) = e.distance;
            batch.src.push_back(e.src + static_cast<int>(node_at));
            batch.dst.push_back(e.dst + static_cast<int>(node_at));
            ++edge_at;
        }
        GraphBatch::Range range;
        range.start = static_cast<int>(batch.object_rows.size());
        for (std::size_t i = 0; i < g.node_count(); ++i)
            if (g.classes[i] == PointClass::Object)
                batch.object_rows.push_back(static_cast<int>(node_at + static_cast<Eigen::Index>(i)));
        range.count = static_cast<int>(batch.object_rows.size()) - range.start;
        batch.graph_object_ranges.push_back(range);
        node_at += static_cast<Eigen::Index>(g.node_count());
    }
    return batch;
}

// ---------------------------------------------------------------------------
// GNS message-passing network
// ---------------------------------------------------------------------------

struct GnsSpec {
    int hidden = 64;
    int rounds = 4;
    int mlp_hidden_layers = 1;  ///< hidden layers inside each MLP block (width = hidden)

    bool operator==(const GnsSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const GnsSpec& s) {
    j = {{"hidden", s.hidden}, {"rounds", s.rounds}, {"mlp_hidden_layers", s.mlp_hidden_layers}};
}
inline void from_json(const nlohmann::json& j, GnsSpec& s) {
    j.at("hidden").get_to(s.hidden);
    j.at("rounds").get_to(s.rounds);
    j.at("mlp_hidden_layers").get_to(s.mlp_hidden_layers);
}

/// MLP block followed by layer normalization, the GNS building block (the sum
/// aggregation would otherwise grow embeddings with node degree and saturate
/// the heads).
struct NormedMlp {
    Mlp mlp;
    Param* gamma = nullptr;
    Param* beta = nullptr;

    static NormedMlp create(ParamStore& store, const std::string& name, Eigen::Index in,
                            const std::vector<Eigen::Index>& hidden, Eigen::Index out, Rng& rng) {
        NormedMlp block;
        block.mlp = Mlp::create(store, name, in, hidden, out, rng);
        block.gamma = store.add(name + ".ln_g", Matrix::Ones(1, out));
        block.beta = store.add(name + ".ln_b", Matrix::Zero(1, out));
        return block;
    }

    Tape::Id forward(Tape& tape, Tape::Id x) const {
        return tape.layer_norm(mlp.forward(tape, x), tape.input(gamma), tape.input(beta));
    }
};

/// Encode-process-decode graph network: K rounds of edge updates from
/// (edge state, endpoint embeddings) and node updates from summed incoming
/// messages, both with residual connections; a per-node scalar decoder.
class GnsModel {
  public:
    GnsModel(GnsSpec spec, Head head, std::uint64_t seed) : spec_(spec), head_(head) {
        Rng rng(seed);
        const Eigen::Index h = spec.hidden;
        const std::vector<Eigen::Index> hid(static_cast<std::size_t>(spec.mlp_hidden_layers), h);
        node_encoder_ = NormedMlp::create(store_, "node_enc", node_feature_dim(head), hid, h, rng);
        edge_encoder_ = NormedMlp::create(store_, "edge_enc", 4, hid, h, rng);
        for (int r = 0; r < spec.rounds; ++r) {
            edge_updates_.push_back(
                NormedMlp::create(store_, "edge_up" + std::to_string(r), 3 * h, hid, h, rng));
            node_updates_.push_back(
                NormedMlp::create(store_, "node_up" + std::to_string(r), 2 * h, hid, h, rng));
        }
        decoder_ = Mlp::create(store_, "decoder", h, hid, 1, rng);
    }

    const GnsSpec& spec() const { return spec_; }
    Head head() const { return head_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    /// Per-object-node scalar over the whole batch: [sum of object counts, 1].
    Tape::Id forward(Tape& tape, const GraphBatch& batch) const {
        if (batch.node_features.cols() != node_feature_dim(head_))
            throw std::invalid_argument("graph batch was built for a different head");
        Tape::Id nodes = node_encoder_.forward(tape, tape.constant(batch.node_features));
        Tape::Id edges = edge_encoder_.forward(tape, tape.constant(batch.edge_features));

        for (int r = 0; r < spec_.rounds; ++r) {
            const Tape::Id src_h = tape.gather_rows(nodes, batch.src);
            const Tape::Id dst_h = tape.gather_rows(nodes, batch.dst);
            const Tape::Id e_in = tape.concat_cols({edges, src_h, dst_h});
            edges = tape.add(edges, edge_updates_[static_cast<std::size_t>(r)].forward(tape, e_in));
            const Tape::Id agg = tape.scatter_add_rows(edges, batch.dst, batch.node_count());
            const Tape::Id n_in = tape.concat_cols({nodes, agg});
            nodes = tape.add(nodes, node_updates_[static_cast<std::size_t>(r)].forward(tape, n_in));
        }

        Tape::Id out = decoder_.forward(tape, nodes);
        out = tape.gather_rows(out, batch.object_rows);
        if (head_ == Head::Force) out = tape.softplus(out);
        return out;
    }

  private:
    GnsSpec spec_;
    Head head_;
    ParamStore store_;
    NormedMlp node_encoder_, edge_encoder_;
    Mlp decoder_;
    std::vector<NormedMlp> edge_updates_, node_updates_;
};

// ---------------------------------------------------------------------------
// MLP baseline on zero-padded flat point features
// ---------------------------------------------------------------------------

struct MlpSpec {
    std::vector<int> widths{1024, 512, 256, 512, 1024};
    int max_points = 0;         ///< fixed input slot count (from the dataset)
    int max_object_points = 0;  ///< fixed output slot count

    bool operator==(const MlpSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const MlpSpec& s) {
    j = {{"widths", s.widths}, {"max_points", s.max_points}, {"max_object_points", s.max_object_points}};
}
inline void from_json(const nlohmann::json& j, MlpSpec& s) {
    j.at("widths").get_to(s.widths);
    j.at("max_points").get_to(s.max_points);
    j.at("max_object_points").get_to(s.max_object_points);
}

/// Pads one point-set input into a fixed-width feature row.
inline Eigen::RowVectorXd pad_pointset(const percept::PointsetInput& in, int max_points) {
    if (static_cast<int>(in.point_count) > max_points)
        throw std::invalid_argument("point count " + std::to_string(in.point_count) +
                                    " exceeds the model's fixed input dimension (max_points=" +
                                    std::to_string(max_points) + ")");
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(
        static_cast<Eigen::Index>(in.feature_dim) * max_points);
    for (std::size_t i = 0; i < in.features.size(); ++i)
        row(static_cast<Eigen::Index>(i)) = in.features[i];
    return row;
}

class MlpModel {
  public:
    MlpModel(MlpSpec spec, Head head, std::uint64_t seed) : spec_(spec), head_(head) {
        if (spec.max_points <= 0 || spec.max_object_points <= 0)
            throw std::invalid_argument("MlpSpec needs positive max_points and max_object_points");
        Rng rng(seed);
        std::vector<Eigen::Index> hidden;
        for (const int w : spec.widths) {
            if (w <= 0) throw std::invalid_argument("MLP widths must be positive");
            hidden.push_back(w);
        }
        const Eigen::Index in_dim =
            static_cast<Eigen::Index>(percept::make_pointset_feature_dim(head)) * spec.max_points;
        stack_ = Mlp::create(store_, "mlp", in_dim, hidden, spec.max_object_points, rng);
    }

    const MlpSpec& spec() const { return spec_; }
    Head head() const { return head_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    /// rows: [B, in_dim] -> output slots [B, max_object_points]; slots beyond a
    /// record's actual object count are ignored by the losses.
    Tape::Id forward(Tape& tape, const Matrix& rows) const {
        if (rows.cols() != stack_.layers.front().weight->value.rows())
            throw std::invalid_argument("MLP input exceeds or mismatches the fixed dimension");
        Tape::Id out = stack_.forward(tape, tape.constant(rows));
        if (head_ == Head::Force) out = tape.softplus(out);
        return out;
    }

  private:
    MlpSpec spec_;
    Head head_;
    ParamStore store_;
    Mlp stack_;
};

}  // namespace vhr::learn
