/// @file adam.hpp
/// @brief Adam optimizer with bias correction.

#pragma once

#include <stdexcept>
#include <vector>

#include "vhr/tape.hpp"

namespace vhr::learn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
  public:
    AdamState(const std::vector<Param*>& params, const AdamConfig& cfg = {})
        : params_(params), cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const Param* p : params) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }

    int step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    /// One update from the gradients currently stored in the parameters.
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Param& p = *params_[i];
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
            const Matrix mhat = m_[i] / bc1;
            const Matrix vhat = v_[i] / bc2;
            const Matrix denom = vhat.cwiseSqrt() + Matrix::Constant(vhat.rows(), vhat.cols(), cfg_.eps);
            p.value -= cfg_.lr * mhat.cwiseQuotient(denom);
        }
    }

  private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    int t_ = 0;
};

/// Spec-shaped single step over explicit (param, grad) pairs is covered by
/// AdamState::step(); this free function exists for symmetric call sites.
inline void adam_step(AdamState& state) { state.step(); }

}  // namespace vhr::learn
