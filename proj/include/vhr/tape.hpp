/// @file tape.hpp
/// @brief Reverse-mode automatic differentiation over dense matrices.
///
/// A Tape owns the forward graph of one evaluation: each op appends a node
/// holding its value, a gradient buffer, and a backward closure. Nodes are
/// created in forward topological order, so the backward pass is a single
/// reverse sweep that visits every node exactly once. Trainable parameters
/// live outside the tape (Param) and receive gradient contributions when the
/// sweep reaches their leaf nodes.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace vhr::learn {

using Matrix = Eigen::MatrixXd;

/// Persistent trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;

    Param(std::string name_, Matrix value_) : name(std::move(name_)), value(std::move(value_)) {
        grad = Matrix::Zero(value.rows(), value.cols());
    }

    void zero_grad() { grad.setZero(); }
    Eigen::Index size() const { return value.size(); }
};

/// Stable-address registry of parameters for one model.
class ParamStore {
  public:
    Param* add(std::string name, Matrix value) {
        params_.push_back(std::make_unique<Param>(std::move(name), std::move(value)));
        return params_.back().get();
    }

    std::vector<Param*> all() const {
        std::vector<Param*> out;
        out.reserve(params_.size());
        for (const auto& p : params_) out.push_back(p.get());
        return out;
    }

    Param* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    void zero_grad() {
        for (const auto& p : params_) p->zero_grad();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
        return n;
    }

  private:
    std::vector<std::unique_ptr<Param>> params_;
};

class Tape {
  public:
    using Id = int;

    const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    /// Leaf with no gradient flow.
    Id constant(Matrix v) { return push(std::move(v), {}); }

    /// Leaf tied to a parameter; the backward sweep adds into p->grad.
    Id input(Param* p) {
        const Id id = push(p->value, {});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, p] {
            p->grad += nodes_[static_cast<std::size_t>(id)].grad;
        };
        return id;
    }

    Id matmul(Id a, Id b) {
        const Id id = push(value(a) * value(b), {a, b});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, b] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            nodes_[static_cast<std::size_t>(a)].grad += g * value(b).transpose();
            nodes_[static_cast<std::size_t>(b)].grad += value(a).transpose() * g;
        };
        return id;
    }

    Id add(Id a, Id b) {
        const Id id = push(value(a) + value(b), {a, b});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, b] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            nodes_[static_cast<std::size_t>(a)].grad += g;
            nodes_[static_cast<std::size_t>(b)].grad += g;
        };
        return id;
    }

    /// Adds a 1 x m bias row to every row of a.
    Id add_rowvec(Id a, Id bias) {
        if (value(bias).rows() != 1 || value(bias).cols() != value(a).cols())
            throw std::invalid_argument("add_rowvec: bias must be 1 x cols(a)");
        Matrix v = value(a);
        v.rowwise() += value(bias).row(0);
        const Id id = push(std::move(v), {a, bias});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, bias] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            nodes_[static_cast<std::size_t>(a)].grad += g;
            nodes_[static_cast<std::size_t>(bias)].grad += g.colwise().sum();
        };
        return id;
    }

    Id scale(Id a, double s) {
        const Id id = push(value(a) * s, {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, s] {
            nodes_[static_cast<std::size_t>(a)].grad += nodes_[static_cast<std::size_t>(id)].grad * s;
        };
        return id;
    }

    Id relu(Id a) {
        const Id id = push(value(a).cwiseMax(0.0), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a] {
            const Matrix mask = (value(a).array() > 0.0).cast<double>().matrix();
            nodes_[static_cast<std::size_t>(a)].grad +=
                nodes_[static_cast<std::size_t>(id)].grad.cwiseProduct(mask);
        };
        return id;
    }

    /// Numerically stable softplus: log(1 + exp(x)) = max(x, 0) + log1p(exp(-|x|)).
    Id softplus(Id a) {
        Matrix v = value(a).unaryExpr(
            [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
        const Id id = push(std::move(v), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a] {
            const Matrix sig = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
            nodes_[static_cast<std::size_t>(a)].grad +=
                nodes_[static_cast<std::size_t>(id)].grad.cwiseProduct(sig);
        };
        return id;
    }

    Id concat_cols(const std::vector<Id>& parts) {
        Eigen::Index rows = value(parts.at(0)).rows(), cols = 0;
        for (const Id p : parts) {
            if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
            cols += value(p).cols();
        }
        Matrix v(rows, cols);
        Eigen::Index at = 0;
        for (const Id p : parts) {
            v.middleCols(at, value(p).cols()) = value(p);
            at += value(p).cols();
        }
        const Id id = push(std::move(v), parts);
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, parts] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            Eigen::Index at2 = 0;
            for (const Id p : parts) {
                const Eigen::Index c = value(p).cols();
                nodes_[static_cast<std::size_t>(p)].grad += g.middleCols(at2, c);
                at2 += c;
            }
        };
        return id;
    }

    /// y.row(r) = a.row(rows[r]); backward scatter-adds.
    Id gather_rows(Id a, std::vector<int> rows) {
        Matrix v(static_cast<Eigen::Index>(rows.size()), value(a).cols());
        for (std::size_t r = 0; r < rows.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = value(a).row(rows[r]);
        const Id id = push(std::move(v), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, rows = std::move(rows)] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            Matrix& ga = nodes_[static_cast<std::size_t>(a)].grad;
            for (std::size_t r = 0; r < rows.size(); ++r) ga.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
        };
        return id;
    }

    /// y.row(dst[r]) += a.row(r), output has n_rows rows; backward gathers.
    Id scatter_add_rows(Id a, std::vector<int> dst, Eigen::Index n_rows) {
        Matrix v = Matrix::Zero(n_rows, value(a).cols());
        for (std::size_t r = 0; r < dst.size(); ++r) v.row(dst[r]) += value(a).row(static_cast<Eigen::Index>(r));
        const Id id = push(std::move(v), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, dst = std::move(dst)] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            Matrix& ga = nodes_[static_cast<std::size_t>(a)].grad;
            for (std::size_t r = 0; r < dst.size(); ++r) ga.row(static_cast<Eigen::Index>(r)) += g.row(dst[r]);
        };
        return id;
    }

    /// Contiguous row block (used to slice per-graph outputs from a batch).
    Id rows_block(Id a, Eigen::Index start, Eigen::Index count) {
        const Id id = push(value(a).middleRows(start, count), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a, start, count] {
            nodes_[static_cast<std::size_t>(a)].grad.middleRows(start, count) +=
                nodes_[static_cast<std::size_t>(id)].grad;
        };
        return id;
    }

    /// Row-wise layer normalization with learnable gain/offset (1 x cols).
    Id layer_norm(Id x, Id gamma, Id beta, double eps = 1e-5) {
        const Matrix& src = value(x);
        if (value(gamma).rows() != 1 || value(gamma).cols() != src.cols() ||
            value(beta).rows() != 1 || value(beta).cols() != src.cols())
            throw std::invalid_argument("layer_norm: gamma/beta must be 1 x cols(x)");
        const Eigen::Index n = src.cols();
        Matrix xhat(src.rows(), n);
        Matrix inv_sigma(src.rows(), 1);
        for (Eigen::Index r = 0; r < src.rows(); ++r) {
            const double mu = src.row(r).mean();
            const double var = (src.row(r).array() - mu).square().mean();
            const double is = 1.0 / std::sqrt(var + eps);
            inv_sigma(r, 0) = is;
            xhat.row(r) = (src.row(r).array() - mu).matrix() * is;
        }
        Matrix v = xhat.array().rowwise() * value(gamma).row(0).array();
        v.rowwise() += value(beta).row(0);
        const Id id = push(std::move(v), {x, gamma, beta});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, x, gamma, beta,
                                                         xhat = std::move(xhat),
                                                         inv_sigma = std::move(inv_sigma)] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            nodes_[static_cast<std::size_t>(beta)].grad += g.colwise().sum();
            nodes_[static_cast<std::size_t>(gamma)].grad += g.cwiseProduct(xhat).colwise().sum();
            const Matrix gxhat = g.array().rowwise() * value(gamma).row(0).array();
            Matrix& gx = nodes_[static_cast<std::size_t>(x)].grad;
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                const double m1 = gxhat.row(r).mean();
                const double m2 = gxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                gx.row(r) += ((gxhat.row(r).array() - m1) - xhat.row(r).array() * m2).matrix() *
                             inv_sigma(r, 0);
            }
        };
        return id;
    }

    Id sum_all(Id a) {
        Matrix v(1, 1);
        v(0, 0) = value(a).sum();
        const Id id = push(std::move(v), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a] {
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            auto& ga = nodes_[static_cast<std::size_t>(a)].grad;
            ga.array() += g;
        };
        return id;
    }

    /// Mean squared error over masked entries of a column vector; entries with
    /// mask == 0 contribute nothing. No masked entry -> loss 0, zero gradient.
    Id mse_masked(Id pred, const std::vector<double>& target, const std::vector<std::uint8_t>& mask) {
        const Matrix& p = value(pred);
        if (p.cols() != 1 || static_cast<std::size_t>(p.rows()) != target.size() ||
            target.size() != mask.size())
            throw std::invalid_argument("mse_masked: shape mismatch");
        double count = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (!mask[i]) continue;
            const double d = p(static_cast<Eigen::Index>(i), 0) - target[i];
            sum += d * d;
            count += 1.0;
        }
        Matrix v(1, 1);
        v(0, 0) = count > 0.0 ? sum / count : 0.0;
        const Id id = push(std::move(v), {pred});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, pred, target, mask, count] {
            if (count <= 0.0) return;
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            Matrix& gp = nodes_[static_cast<std::size_t>(pred)].grad;
            const Matrix& p2 = value(pred);
            for (std::size_t i = 0; i < target.size(); ++i)
                if (mask[i])
                    gp(static_cast<Eigen::Index>(i), 0) +=
                        g * 2.0 * (p2(static_cast<Eigen::Index>(i), 0) - target[i]) / count;
        };
        return id;
    }

    /// Mean binary cross-entropy from logits over entries with mask != 0
    /// (an empty mask argument means all entries count).
    Id bce_with_logits(Id logits, const std::vector<std::uint8_t>& labels,
                       const std::vector<std::uint8_t>& mask = {}) {
        const Matrix& z = value(logits);
        if (z.cols() != 1 || static_cast<std::size_t>(z.rows()) != labels.size())
            throw std::invalid_argument("bce_with_logits: shape mismatch");
        if (!mask.empty() && mask.size() != labels.size())
            throw std::invalid_argument("bce_with_logits: mask size mismatch");
        double sum = 0.0, count = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!mask.empty() && !mask[i]) continue;
            const double x = z(static_cast<Eigen::Index>(i), 0);
            const double y = labels[i] ? 1.0 : 0.0;
            sum += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
            count += 1.0;
        }
        if (count <= 0.0) throw std::invalid_argument("bce_with_logits: no unmasked entries");
        Matrix v(1, 1);
        v(0, 0) = sum / count;
        const Id id = push(std::move(v), {logits});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, logits, labels, mask, count] {
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            Matrix& gz = nodes_[static_cast<std::size_t>(logits)].grad;
            const Matrix& z2 = value(logits);
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (!mask.empty() && !mask[i]) continue;
                const double x = z2(static_cast<Eigen::Index>(i), 0);
                const double sig = 1.0 / (1.0 + std::exp(-x));
                gz(static_cast<Eigen::Index>(i), 0) += g * (sig - (labels[i] ? 1.0 : 0.0)) / count;
            }
        };
        return id;
    }

    /// Row-major flatten to a column vector: [r, c] -> [r*c, 1].
    Id flatten_to_col(Id a) {
        const Matrix& src = value(a);
        Matrix v(src.rows() * src.cols(), 1);
        for (Eigen::Index r = 0; r < src.rows(); ++r)
            for (Eigen::Index c = 0; c < src.cols(); ++c) v(r * src.cols() + c, 0) = src(r, c);
        const Id id = push(std::move(v), {a});
        nodes_[static_cast<std::size_t>(id)].backward = [this, id, a] {
            const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
            Matrix& ga = nodes_[static_cast<std::size_t>(a)].grad;
            for (Eigen::Index r = 0; r < ga.rows(); ++r)
                for (Eigen::Index c = 0; c < ga.cols(); ++c) ga(r, c) += g(r * ga.cols() + c, 0);
        };
        return id;
    }

    /// Mean of a set of scalar nodes (combining per-graph losses).
    Id mean_of(const std::vector<Id>& scalars) {
        if (scalars.empty()) throw std::invalid_argument("mean_of: no inputs");
        Id acc = scalars[0];
        for (std::size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
        return scale(acc, 1.0 / static_cast<double>(scalars.size()));
    }

    double scalar(Id id) const {
        if (value(id).size() != 1) throw std::invalid_argument("node is not a scalar");
        return value(id)(0, 0);
    }

    /// Seeds d(loss)/d(loss) = 1 and sweeps the nodes in reverse creation
    /// order, so each node's backward runs exactly once after all its uses.
    void backward(Id loss) {
        if (value(loss).size() != 1) throw std::invalid_argument("backward needs a scalar loss");
        for (auto& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
        nodes_[static_cast<std::size_t>(loss)].grad(0, 0) = 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if (it->backward) it->backward();
    }

    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void()> backward;
    };

    Id push(Matrix v, std::vector<Id>) {
        nodes_.push_back(Node{std::move(v), {}, {}});
        return static_cast<Id>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

}  // namespace vhr::learn
