/// @file nn.hpp
/// @brief Linear layers and ReLU MLP blocks on top of the tape.

#pragma once

#include <string>
#include <vector>

#include "vhr/rng.hpp"
#include "vhr/tape.hpp"

namespace vhr::learn {

/// Kaiming-style uniform fan-in init: U[-sqrt(6/fan_in), +sqrt(6/fan_in)].
inline Matrix kaiming_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    return m;
}

struct Linear {
    Param* weight = nullptr;  ///< [in, out]
    Param* bias = nullptr;    ///< [1, out]

    static Linear create(ParamStore& store, const std::string& name, Eigen::Index in,
                         Eigen::Index out, Rng& rng) {
        Linear l;
        l.weight = store.add(name + ".w", kaiming_uniform(in, out, rng));
        l.bias = store.add(name + ".b", Matrix::Zero(1, out));
        return l;
    }

    Tape::Id forward(Tape& tape, Tape::Id x) const {
        return tape.add_rowvec(tape.matmul(x, tape.input(weight)), tape.input(bias));
    }
};

/// Fully connected stack with ReLU between layers and a linear final layer.
struct Mlp {
    std::vector<Linear> layers;

    static Mlp create(ParamStore& store, const std::string& name, Eigen::Index in,
                      const std::vector<Eigen::Index>& hidden, Eigen::Index out, Rng& rng) {
        Mlp mlp;
        Eigen::Index prev = in;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            mlp.layers.push_back(
                Linear::create(store, name + ".l" + std::to_string(i), prev, hidden[i], rng));
            prev = hidden[i];
        }
        mlp.layers.push_back(
            Linear::create(store, name + ".l" + std::to_string(hidden.size()), prev, out, rng));
        return mlp;
    }

    Tape::Id forward(Tape& tape, Tape::Id x) const {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            x = layers[i].forward(tape, x);
            if (i + 1 < layers.size()) x = tape.relu(x);
        }
        return x;
    }
};

}  // namespace vhr::learn
