/// @file gradcheck.hpp
/// @brief Central finite-difference verification of reverse-mode gradients.

#pragma once

#include <functional>
#include <vector>

#include "vhr/rng.hpp"
#include "vhr/tape.hpp"

namespace vhr::learn {

/// Probes `n_probes` randomly chosen parameter entries: for each, compares the
/// reverse-mode gradient against a central difference of the scalar-valued
/// `loss_fn` with step `h`. Returns the maximum relative error, with the
/// denominator floored to avoid blowups on near-zero gradients.
inline double grad_check(const std::function<double()>& loss_fn,
                         const std::function<double(Param*, Eigen::Index)>& reverse_grad,
                         const std::vector<Param*>& params, int n_probes, Rng& rng,
                         double h = 1e-5) {
    double worst = 0.0;
    for (int probe = 0; probe < n_probes; ++probe) {
        Param* p = params[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(params.size()) - 1))];
        const Eigen::Index k = static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(p->size()) - 1));
        const double saved = p->value.data()[k];

        const double analytic = reverse_grad(p, k);

        p->value.data()[k] = saved + h;
        const double up = loss_fn();
        p->value.data()[k] = saved - h;
        const double down = loss_fn();
        p->value.data()[k] = saved;

        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    }
    return worst;
}

/// Convenience wrapper for the common case: one forward builds a tape loss,
/// backward fills parameter gradients, probes reuse those gradients.
inline double grad_check_model(const std::function<double()>& forward_loss,
                               const std::function<void()>& forward_backward,
                               const std::vector<Param*>& params, int n_probes, Rng& rng,
                               double h = 1e-5) {
    for (Param* p : params) p->zero_grad();
    forward_backward();
    return grad_check(
        forward_loss, [](Param* p, Eigen::Index k) { return p->grad.data()[k]; }, params, n_probes,
        rng, h);
}

}  // namespace vhr::learn
