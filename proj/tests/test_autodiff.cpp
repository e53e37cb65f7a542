#include <catch2/catch_amalgamated.hpp>

#include "vhr/adam.hpp"
#include "vhr/gradcheck.hpp"
#include "vhr/nn.hpp"
#include "vhr/tape.hpp"

using namespace vhr;
using namespace vhr::learn;
using Catch::Approx;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST_CASE("gradients of composed tape ops match finite differences") {
    Rng init(17);
    ParamStore store;
    Param* a = store.add("a", random_matrix(5, 4, init));
    Param* b = store.add("b", random_matrix(4, 3, init));
    Param* bias = store.add("bias", random_matrix(1, 3, init, 0.1));

    const std::vector<int> gather{0, 2, 4, 2};
    const std::vector<int> scatter{1, 0, 1, 2};

    const auto build = [&](Tape& tape) {
        Tape::Id x = tape.matmul(tape.input(a), tape.input(b));
        x = tape.add_rowvec(x, tape.input(bias));
        x = tape.relu(x);
        Tape::Id y = tape.gather_rows(x, gather);
        y = tape.scatter_add_rows(y, scatter, 3);
        y = tape.concat_cols({y, tape.softplus(y)});
        return tape.sum_all(tape.scale(y, 1.3));
    };
    const auto forward = [&] {
        Tape tape;
        return tape.scalar(build(tape));
    };
    const auto backward = [&] {
        Tape tape;
        tape.backward(build(tape));
    };

    Rng probes(3);
    const double err = grad_check_model(forward, backward, store.all(), 200, probes);
    REQUIRE(err < 1e-4);
}

TEST_CASE("gradient of a linear function is exact") {
    Rng init(5);
    ParamStore store;
    Param* w = store.add("w", random_matrix(6, 1, init));
    const Matrix x = random_matrix(4, 6, init);

    const auto forward = [&] {
        Tape tape;
        return tape.scalar(tape.sum_all(tape.matmul(tape.constant(x), tape.input(w))));
    };
    const auto backward = [&] {
        Tape tape;
        tape.backward(tape.sum_all(tape.matmul(tape.constant(x), tape.input(w))));
    };
    Rng probes(11);
    const double err = grad_check_model(forward, backward, store.all(), 30, probes);
    REQUIRE(err < 1e-9);
}

TEST_CASE("masked force loss ignores non-contact points") {
    Tape tape;
    SECTION("exact predictions give zero loss") {
        const Tape::Id pred = tape.constant((Matrix(2, 1) << 1.0, 2.0).finished());
        REQUIRE(tape.scalar(tape.mse_masked(pred, {1.0, 2.0}, {1, 1})) == 0.0);
    }
    SECTION("masked-out error contributes nothing") {
        const Tape::Id pred = tape.constant((Matrix(2, 1) << 5.0, 2.0).finished());
        REQUIRE(tape.scalar(tape.mse_masked(pred, {0.0, 2.0}, {0, 1})) == 0.0);
    }
    SECTION("mean over contact points only") {
        const Tape::Id pred = tape.constant((Matrix(2, 1) << 2.0, 2.0).finished());
        REQUIRE(tape.scalar(tape.mse_masked(pred, {1.0, 2.0}, {1, 1})) == Approx(0.5));
    }
    SECTION("no contact points: zero loss and zero gradient") {
        ParamStore store;
        Param* p = store.add("p", (Matrix(2, 1) << 3.0, -1.0).finished());
        const Tape::Id pred = tape.input(p);
        const Tape::Id loss = tape.mse_masked(pred, {0.0, 0.0}, {0, 0});
        REQUIRE(tape.scalar(loss) == 0.0);
        tape.backward(loss);
        REQUIRE(p->grad.norm() == 0.0);
    }
}

TEST_CASE("masked force loss is independent of predictions at masked points") {
    Rng rng(23);
    const std::vector<double> target{0.0, 1.0, 0.0, 2.0};
    const std::vector<std::uint8_t> mask{0, 1, 0, 1};
    Matrix base = random_matrix(4, 1, rng);
    Tape t1;
    const double l1 = t1.scalar(t1.mse_masked(t1.constant(base), target, mask));
    base(0, 0) += 100.0;
    base(2, 0) -= 55.0;
    Tape t2;
    const double l2 = t2.scalar(t2.mse_masked(t2.constant(base), target, mask));
    REQUIRE(l1 == Approx(l2));
}

TEST_CASE("bce_with_logits saturation and ln 2 anchor points") {
    Tape tape;
    const Tape::Id big = tape.constant(Matrix::Constant(1, 1, 20.0));
    REQUIRE(tape.scalar(tape.bce_with_logits(big, {1})) < 1e-8);
    const Tape::Id zero = tape.constant(Matrix::Zero(1, 1));
    REQUIRE(tape.scalar(tape.bce_with_logits(zero, {0})) == Approx(std::log(2.0)));
    REQUIRE(tape.scalar(tape.bce_with_logits(zero, {1})) == Approx(std::log(2.0)));
}

TEST_CASE("loss gradients match finite differences") {
    Rng init(29);
    ParamStore store;
    Param* w = store.add("w", random_matrix(8, 1, init));
    const Matrix x = random_matrix(8, 8, init);
    const std::vector<double> target{0.5, 0.0, 1.5, 0.0, 2.0, 0.3, 0.0, 1.0};
    const std::vector<std::uint8_t> mask{1, 0, 1, 0, 1, 1, 0, 1};
    const std::vector<std::uint8_t> labels{1, 0, 1, 0, 1, 1, 0, 1};

    SECTION("masked mse") {
        const auto forward = [&] {
            Tape tape;
            return tape.scalar(
                tape.mse_masked(tape.matmul(tape.constant(x), tape.input(w)), target, mask));
        };
        const auto backward = [&] {
            Tape tape;
            tape.backward(tape.mse_masked(tape.matmul(tape.constant(x), tape.input(w)), target, mask));
        };
        Rng probes(31);
        REQUIRE(grad_check_model(forward, backward, store.all(), 50, probes) < 1e-4);
    }
    SECTION("bce with logits") {
        const auto forward = [&] {
            Tape tape;
            return tape.scalar(
                tape.bce_with_logits(tape.matmul(tape.constant(x), tape.input(w)), labels, mask));
        };
        const auto backward = [&] {
            Tape tape;
            tape.backward(
                tape.bce_with_logits(tape.matmul(tape.constant(x), tape.input(w)), labels, mask));
        };
        Rng probes(37);
        REQUIRE(grad_check_model(forward, backward, store.all(), 50, probes) < 1e-4);
    }
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    Rng init(41);
    ParamStore store;
    Param* w = store.add("w", random_matrix(3, 3, init));
    const Matrix before = w->value;
    AdamState adam(store.all());
    store.zero_grad();
    adam.step();
    REQUIRE((w->value - before).norm() == 0.0);
}

TEST_CASE("adam under constant gradient approaches a step of lr * sign(g)") {
    ParamStore store;
    Param* w = store.add("w", Matrix::Zero(1, 1));
    AdamConfig cfg;
    cfg.lr = 1e-3;
    AdamState adam(store.all(), cfg);
    Matrix prev = w->value;
    double step_size = 0.0;
    for (int i = 0; i < 500; ++i) {
        w->grad = Matrix::Constant(1, 1, 2.5);
        prev = w->value;
        adam.step();
        step_size = (prev - w->value)(0, 0);  // positive gradient -> decrease
    }
    REQUIRE(step_size == Approx(cfg.lr).epsilon(1e-3));
}

TEST_CASE("adam updates are deterministic") {
    const auto run = [] {
        Rng init(55);
        ParamStore store;
        Param* w = store.add("w", random_matrix(4, 4, init));
        AdamState adam(store.all());
        Rng grads(77);
        for (int i = 0; i < 50; ++i) {
            w->grad = random_matrix(4, 4, grads);
            adam.step();
        }
        return w->value;
    };
    const Matrix a = run();
    const Matrix b = run();
    REQUIRE((a - b).norm() == 0.0);
}

TEST_CASE("flatten_to_col is row major and differentiable") {
    Rng init(61);
    ParamStore store;
    Param* w = store.add("w", random_matrix(2, 3, init));
    Tape tape;
    const Tape::Id flat = tape.flatten_to_col(tape.input(w));
    REQUIRE(tape.value(flat).rows() == 6);
    REQUIRE(tape.value(flat)(1, 0) == w->value(0, 1));
    REQUIRE(tape.value(flat)(3, 0) == w->value(1, 0));

    const auto forward = [&] {
        Tape t;
        return t.scalar(t.mse_masked(t.flatten_to_col(t.input(w)), {1, 0, 2, 0, 1, 3},
                                     {1, 1, 0, 1, 1, 1}));
    };
    const auto backward = [&] {
        Tape t;
        t.backward(t.mse_masked(t.flatten_to_col(t.input(w)), {1, 0, 2, 0, 1, 3},
                                {1, 1, 0, 1, 1, 1}));
    };
    Rng probes(67);
    REQUIRE(grad_check_model(forward, backward, store.all(), 20, probes) < 1e-6);
}
