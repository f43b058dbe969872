#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace iqlearn {

/**
 * Fully connected network with ReLU hidden layers and a linear output layer,
 * stored in double precision. weights[l] maps activations of layer l to
 * preactivations of layer l + 1; the struct doubles as the container for
 * gradients and Adam moments since those share its shapes.
 */
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::vector<int> layer_sizes() const;
    long n_params() const;

    /// Flat-index access across all tensors, weights first, row-major within
    /// each matrix. Used by the finite-difference checker.
    double coordinate(long index) const;
    void set_coordinate(long index, double value);
};

using MlpGrads = MlpParams;

/// Inputs seen by each layer plus preactivations, kept for backpropagation.
/// Columns are samples throughout.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> inputs;          // inputs.size() == n_layers
    std::vector<Eigen::MatrixXd> preactivations;  // same layout
    Eigen::MatrixXd output;
};

/// Uniform init on (-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases,
/// reproducible from the seed. sizes = {input, hidden..., output}.
MlpParams mlp_init(const std::vector<int>& sizes, std::uint64_t seed);

Eigen::VectorXd forward(const MlpParams& p, const Eigen::VectorXd& x);
Eigen::MatrixXd forward_batch(const MlpParams& p, const Eigen::MatrixXd& x);
ForwardTrace forward_batch_trace(const MlpParams& p, const Eigen::MatrixXd& x);

/// Backpropagates dL/d(output) through the trace. Gradients of a batch are
/// sums over columns, so mean losses must fold 1/m into output_grad.
MlpGrads backward_batch(const MlpParams& p, const ForwardTrace& trace,
                        const Eigen::MatrixXd& output_grad);

/// Mean squared error over one selected output row per column:
/// L = (1/m) sum_i (preds(actions[i], i) - targets[i])^2.
double mse_selected(const Eigen::MatrixXd& preds, const std::vector<int>& actions,
                    const Eigen::VectorXd& targets);

/// Gradient of mse_selected with the 2/m factor folded in; zero everywhere
/// except the selected entries.
Eigen::MatrixXd mse_selected_grad(const Eigen::MatrixXd& preds, const std::vector<int>& actions,
                                  const Eigen::VectorXd& targets);

/// Mean negative log softmax probability of the labelled row per column.
double cross_entropy_logits(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Gradient of cross_entropy_logits: (softmax - onehot) / m.
Eigen::MatrixXd cross_entropy_grad(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

struct AdamState {
    MlpParams m;
    MlpParams v;
    long step = 0;
};

AdamState adam_init(const MlpParams& p);

/// One bias-corrected Adam update, applied in place to p.
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

/// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(MlpParams& target, const MlpParams& online, double tau);

struct LossEval {
    double value = 0.0;
    MlpGrads grads;
};

using LossFn = std::function<LossEval(const MlpParams&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    int n_checked = 0;
    int n_excluded = 0;
};

/**
 * Compares analytic gradients against central differences on a random sample
 * of at least min_coords coordinates (every coordinate when the model is
 * smaller). Coordinates where one-sided differences disagree are near a ReLU
 * kink; they are excluded and counted instead of failed. Relative error uses
 * max(|analytic|, |numeric|, 1) as the denominator.
 */
GradCheckReport gradient_check(const MlpParams& p, const LossFn& loss, double step,
                               std::uint64_t seed, int min_coords = 200);

}  // namespace iqlearn
