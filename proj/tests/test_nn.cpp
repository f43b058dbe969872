#include <doctest.h>

#include <cmath>

#include "iqlearn/nn.hpp"
#include "iqlearn/rng.hpp"

using namespace iqlearn;

namespace {

/// Mean squared error of every output against a fixed target matrix, with
/// analytic gradients, used to exercise the finite-difference checker.
LossFn dense_mse(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    return [inputs, targets](const MlpParams& p) {
        const ForwardTrace trace = forward_batch_trace(p, inputs);
        const double m = static_cast<double>(inputs.cols());
        LossEval out;
        out.value = (trace.output - targets).squaredNorm() / m;
        out.grads = backward_batch(p, trace, 2.0 / m * (trace.output - targets));
        return out;
    };
}

}  // namespace

TEST_SUITE("nn") {
    TEST_CASE("initialization is reproducible and respects the fan-in bound") {
        const MlpParams a = mlp_init({4, 8, 3}, 7);
        const MlpParams b = mlp_init({4, 8, 3}, 7);
        const MlpParams c = mlp_init({4, 8, 3}, 8);
        REQUIRE(a.weights.size() == 2);
        CHECK(a.layer_sizes() == std::vector<int>{4, 8, 3});
        CHECK(a.n_params() == 4 * 8 + 8 + 8 * 3 + 3);
        bool identical = true;
        bool differs = false;
        for (std::size_t l = 0; l < a.weights.size(); ++l) {
            identical = identical && a.weights[l] == b.weights[l] && a.biases[l] == b.biases[l];
            differs = differs || a.weights[l] != c.weights[l];
            const double bound = 1.0 / std::sqrt(static_cast<double>(a.weights[l].cols()));
            CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
            CHECK(a.biases[l].cwiseAbs().maxCoeff() <= bound);
        }
        CHECK(identical);
        CHECK(differs);
    }

    TEST_CASE("flat coordinate access round-trips every parameter") {
        MlpParams p = mlp_init({3, 5, 2}, 3);
        const long n = p.n_params();
        for (long i = 0; i < n; ++i) {
            const double before = p.coordinate(i);
            p.set_coordinate(i, before + 1.0);
            CHECK(p.coordinate(i) == before + 1.0);
            p.set_coordinate(i, before);
        }
    }

    TEST_CASE("a linear network computes an affine map") {
        MlpParams p;
        p.weights.push_back((Eigen::MatrixXd(1, 2) << 1.0, 2.0).finished());
        p.biases.push_back((Eigen::VectorXd(1) << 0.5).finished());
        const Eigen::VectorXd y = forward(p, (Eigen::VectorXd(2) << 3.0, 4.0).finished());
        CHECK(y[0] == doctest::Approx(11.5).epsilon(1e-15));
    }

    TEST_CASE("hidden layers clamp negative preactivations") {
        MlpParams p;
        p.weights.push_back((Eigen::MatrixXd(2, 1) << 1.0, -1.0).finished());
        p.biases.push_back(Eigen::VectorXd::Zero(2));
        p.weights.push_back((Eigen::MatrixXd(1, 2) << 1.0, 1.0).finished());
        p.biases.push_back(Eigen::VectorXd::Zero(1));
        // x = 2: hidden = relu(2, -2) = (2, 0) -> output 2. x = -3: (0, 3) -> 3.
        CHECK(forward(p, (Eigen::VectorXd(1) << 2.0).finished())[0] == doctest::Approx(2.0));
        CHECK(forward(p, (Eigen::VectorXd(1) << -3.0).finished())[0] == doctest::Approx(3.0));
        // The output layer itself stays linear.
        MlpParams lin;
        lin.weights.push_back((Eigen::MatrixXd(1, 1) << 1.0).finished());
        lin.biases.push_back((Eigen::VectorXd(1) << -5.0).finished());
        CHECK(forward(lin, (Eigen::VectorXd(1) << 1.0).finished())[0] == doctest::Approx(-4.0));
    }

    TEST_CASE("batched evaluation matches per-sample evaluation") {
        const MlpParams p = mlp_init({3, 6, 6, 2}, 11);
        Rng rng(12);
        Eigen::MatrixXd x(3, 5);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2, 2);
        const Eigen::MatrixXd y = forward_batch(p, x);
        REQUIRE(y.rows() == 2);
        REQUIRE(y.cols() == 5);
        for (int j = 0; j < 5; ++j)
            CHECK((y.col(j) - forward(p, x.col(j))).cwiseAbs().maxCoeff() <= 1e-14);
        const ForwardTrace trace = forward_batch_trace(p, x);
        CHECK((trace.output - y).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(trace.inputs.size() == 3);
        CHECK(trace.inputs[0] == x);
    }

    TEST_CASE("selected squared error and its gradient follow the definition") {
        Eigen::MatrixXd preds(2, 2);
        preds << 1.0, 3.0, 2.0, 5.0;
        const std::vector<int> actions{0, 1};
        const Eigen::VectorXd targets = (Eigen::VectorXd(2) << 0.0, 1.0).finished();
        // ((1-0)^2 + (5-1)^2) / 2 = 8.5
        CHECK(mse_selected(preds, actions, targets) == doctest::Approx(8.5).epsilon(1e-15));
        const Eigen::MatrixXd g = mse_selected_grad(preds, actions, targets);
        CHECK(g(0, 0) == doctest::Approx(2.0 / 2.0 * 1.0));
        CHECK(g(1, 1) == doctest::Approx(2.0 / 2.0 * 4.0));
        CHECK(g(1, 0) == 0.0);
        CHECK(g(0, 1) == 0.0);
    }

    TEST_CASE("cross entropy of even logits is log of the class count") {
        Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(2, 1);
        const std::vector<int> labels{0};
        CHECK(cross_entropy_logits(logits, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        const Eigen::MatrixXd g = cross_entropy_grad(logits, labels);
        CHECK(g(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(g(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("cross entropy averages over the batch and softmax columns sum to one") {
        Rng rng(13);
        Eigen::MatrixXd logits(3, 4);
        for (int i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-3, 3);
        const std::vector<int> labels{0, 2, 1, 1};
        const Eigen::MatrixXd probs = softmax_columns(logits);
        for (int j = 0; j < 4; ++j) CHECK(probs.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
        double expected = 0.0;
        for (int j = 0; j < 4; ++j) expected -= std::log(probs(labels[static_cast<std::size_t>(j)], j));
        CHECK(cross_entropy_logits(logits, labels) == doctest::Approx(expected / 4.0).epsilon(1e-12));
        // Shifting one column leaves its probabilities unchanged.
        Eigen::MatrixXd shifted = logits;
        shifted.col(1).array() += 100.0;
        CHECK((softmax_columns(shifted).col(1) - probs.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
    }

    TEST_CASE("backpropagation matches central differences on smooth coordinates") {
        Rng rng(17);
        for (const std::vector<int>& sizes :
             {std::vector<int>{2, 4, 1}, std::vector<int>{3, 8, 8, 2}, std::vector<int>{1, 1}}) {
            const MlpParams p = mlp_init(sizes, rng.raw());
            Eigen::MatrixXd x(sizes.front(), 6);
            Eigen::MatrixXd t(sizes.back(), 6);
            for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
            for (int i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
            const GradCheckReport rep = gradient_check(p, dense_mse(x, t), 1e-6, 5, 400);
            CHECK(rep.n_checked > 0);
            CHECK(rep.max_rel_error <= 1e-6);
        }
    }

    TEST_CASE("selected-error and classifier losses also pass the checker") {
        Rng rng(19);
        const MlpParams p = mlp_init({3, 10, 4}, 23);
        Eigen::MatrixXd x(3, 8);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
        std::vector<int> actions(8);
        Eigen::VectorXd targets(8);
        for (int j = 0; j < 8; ++j) {
            actions[static_cast<std::size_t>(j)] = static_cast<int>(rng.uniform_int(4));
            targets[j] = rng.uniform(-2, 2);
        }

        const LossFn selected = [&](const MlpParams& q) {
            const ForwardTrace trace = forward_batch_trace(q, x);
            LossEval out;
            out.value = mse_selected(trace.output, actions, targets);
            out.grads = backward_batch(q, trace, mse_selected_grad(trace.output, actions, targets));
            return out;
        };
        const LossFn classifier = [&](const MlpParams& q) {
            const ForwardTrace trace = forward_batch_trace(q, x);
            LossEval out;
            out.value = cross_entropy_logits(trace.output, actions);
            out.grads = backward_batch(q, trace, cross_entropy_grad(trace.output, actions));
            return out;
        };
        CHECK(gradient_check(p, selected, 1e-6, 29, 400).max_rel_error <= 1e-6);
        CHECK(gradient_check(p, classifier, 1e-6, 31, 400).max_rel_error <= 1e-6);
    }

    TEST_CASE("coordinates sitting on a kink are excluded rather than failed") {
        MlpParams p;
        p.weights.push_back(Eigen::MatrixXd::Zero(1, 1));
        p.biases.push_back(Eigen::VectorXd::Zero(1));
        // L = |w| + |b| has a corner at zero; sign gradients disagree with
        // one-sided differences there, so both coordinates must be excluded.
        const LossFn corner = [](const MlpParams& q) {
            LossEval out;
            out.value = std::abs(q.weights[0](0, 0)) + std::abs(q.biases[0][0]);
            out.grads = q;
            out.grads.weights[0](0, 0) = q.weights[0](0, 0) >= 0 ? 1.0 : -1.0;
            out.grads.biases[0][0] = q.biases[0][0] >= 0 ? 1.0 : -1.0;
            return out;
        };
        const GradCheckReport rep = gradient_check(p, corner, 1e-6, 3, 10);
        CHECK(rep.n_excluded == 2);
        CHECK(rep.n_checked == 0);
        CHECK(rep.max_rel_error == 0.0);
    }

    TEST_CASE("one Adam step with a large constant gradient moves by the rate") {
        MlpParams p;
        p.weights.push_back(Eigen::MatrixXd::Zero(1, 1));
        p.biases.push_back(Eigen::VectorXd::Zero(1));
        MlpGrads g = p;
        g.weights[0](0, 0) = 4.0;
        g.biases[0][0] = -2.0;
        AdamState st = adam_init(p);
        adam_step(p, g, st, 0.1);
        CHECK(st.step == 1);
        // Bias correction makes the first step -lr * g / (|g| + eps).
        CHECK(p.weights[0](0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
        CHECK(p.biases[0][0] == doctest::Approx(0.1).epsilon(1e-6));
    }

    TEST_CASE("Adam reduces a simple quadratic") {
        MlpParams p;
        p.weights.push_back((Eigen::MatrixXd(1, 1) << 3.0).finished());
        p.biases.push_back((Eigen::VectorXd(1) << -2.0).finished());
        AdamState st = adam_init(p);
        const auto loss_value = [&]() {
            return p.weights[0](0, 0) * p.weights[0](0, 0) + p.biases[0][0] * p.biases[0][0];
        };
        const double before = loss_value();
        for (int i = 0; i < 500; ++i) {
            MlpGrads g = p;
            g.weights[0](0, 0) = 2.0 * p.weights[0](0, 0);
            g.biases[0][0] = 2.0 * p.biases[0][0];
            adam_step(p, g, st, 0.05);
        }
        CHECK(loss_value() < 1e-3 * before);
    }

    TEST_CASE("soft target updates interpolate and clamp at the endpoints") {
        const MlpParams online = mlp_init({2, 3, 1}, 41);
        MlpParams target = mlp_init({2, 3, 1}, 43);
        const MlpParams frozen = target;

        MlpParams half = target;
        polyak_update(half, online, 0.5);
        for (std::size_t l = 0; l < online.weights.size(); ++l) {
            const Eigen::MatrixXd expect = 0.5 * frozen.weights[l] + 0.5 * online.weights[l];
            CHECK((half.weights[l] - expect).cwiseAbs().maxCoeff() <= 1e-15);
        }

        MlpParams still = target;
        polyak_update(still, online, 0.0);
        MlpParams copied = target;
        polyak_update(copied, online, 1.0);
        for (std::size_t l = 0; l < online.weights.size(); ++l) {
            CHECK(still.weights[l] == frozen.weights[l]);
            CHECK(copied.weights[l] == online.weights[l]);
            CHECK(copied.biases[l] == online.biases[l]);
        }
    }
}
