#include "iqlearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iqlearn/errors.hpp"
#include "iqlearn/rng.hpp"

namespace iqlearn {

std::vector<int> MlpParams::layer_sizes() const {
    std::vector<int> sizes;
    if (weights.empty()) return sizes;
    sizes.push_back(static_cast<int>(weights.front().cols()));
    for (const Eigen::MatrixXd& w : weights) sizes.push_back(static_cast<int>(w.rows()));
    return sizes;
}

long MlpParams::n_params() const {
    long n = 0;
    for (const Eigen::MatrixXd& w : weights) n += w.size();
    for (const Eigen::VectorXd& b : biases) n += b.size();
    return n;
}

double MlpParams::coordinate(long index) const {
    for (const Eigen::MatrixXd& w : weights) {
        if (index < w.size()) return w(index / w.cols(), index % w.cols());
        index -= w.size();
    }
    for (const Eigen::VectorXd& b : biases) {
        if (index < b.size()) return b(index);
        index -= b.size();
    }
    throw ModelError("parameter index out of range");
}

void MlpParams::set_coordinate(long index, double value) {
    for (Eigen::MatrixXd& w : weights) {
        if (index < w.size()) {
            w(index / w.cols(), index % w.cols()) = value;
            return;
        }
        index -= w.size();
    }
    for (Eigen::VectorXd& b : biases) {
        if (index < b.size()) {
            b(index) = value;
            return;
        }
        index -= b.size();
    }
    throw ModelError("parameter index out of range");
}

MlpParams mlp_init(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw ModelError("a network needs an input and an output layer");
    for (const int s : sizes)
        if (s <= 0) throw ModelError("layer sizes must be positive");

    Rng rng(seed);
    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
        Eigen::VectorXd b(fan_out);
        for (int r = 0; r < fan_out; ++r) b(r) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

Eigen::MatrixXd forward_batch(const MlpParams& p, const Eigen::MatrixXd& x) {
    if (p.weights.empty()) throw ModelError("network has no layers");
    if (x.rows() != p.weights.front().cols()) throw ModelError("input dimension mismatch");
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        Eigen::MatrixXd z = (p.weights[l] * a).colwise() + p.biases[l];
        if (l + 1 < p.weights.size()) a = z.cwiseMax(0.0);
        else a = std::move(z);
    }
    return a;
}

Eigen::VectorXd forward(const MlpParams& p, const Eigen::VectorXd& x) {
    return forward_batch(p, x);
}

ForwardTrace forward_batch_trace(const MlpParams& p, const Eigen::MatrixXd& x) {
    if (p.weights.empty()) throw ModelError("network has no layers");
    if (x.rows() != p.weights.front().cols()) throw ModelError("input dimension mismatch");
    ForwardTrace trace;
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        trace.inputs.push_back(a);
        Eigen::MatrixXd z = (p.weights[l] * a).colwise() + p.biases[l];
        trace.preactivations.push_back(z);
        if (l + 1 < p.weights.size()) a = z.cwiseMax(0.0);
        else a = std::move(z);
    }
    trace.output = a;
    return trace;
}

MlpGrads backward_batch(const MlpParams& p, const ForwardTrace& trace,
                        const Eigen::MatrixXd& output_grad) {
    const std::size_t layers = p.weights.size();
    if (trace.inputs.size() != layers) throw ModelError("trace does not match the network");
    if (output_grad.rows() != trace.output.rows() || output_grad.cols() != trace.output.cols())
        throw ModelError("output gradient shape mismatch");

    MlpGrads g;
    g.weights.resize(layers);
    g.biases.resize(layers);

    Eigen::MatrixXd delta = output_grad;
    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta * trace.inputs[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = p.weights[l].transpose() * delta;
            delta = delta.cwiseProduct(
                (trace.preactivations[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return g;
}

double mse_selected(const Eigen::MatrixXd& preds, const std::vector<int>& actions,
                    const Eigen::VectorXd& targets) {
    const int m = static_cast<int>(preds.cols());
    if (static_cast<int>(actions.size()) != m || targets.size() != m)
        throw ModelError("batch sizes disagree");
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double diff = preds(actions[static_cast<std::size_t>(i)], i) - targets[i];
        loss += diff * diff;
    }
    return loss / static_cast<double>(m);
}

Eigen::MatrixXd mse_selected_grad(const Eigen::MatrixXd& preds, const std::vector<int>& actions,
                                  const Eigen::VectorXd& targets) {
    const int m = static_cast<int>(preds.cols());
    if (static_cast<int>(actions.size()) != m || targets.size() != m)
        throw ModelError("batch sizes disagree");
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(preds.rows(), preds.cols());
    for (int i = 0; i < m; ++i) {
        const int a = actions[static_cast<std::size_t>(i)];
        grad(a, i) = 2.0 / static_cast<double>(m) * (preds(a, i) - targets[i]);
    }
    return grad;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd probs = logits;
    for (int i = 0; i < probs.cols(); ++i) {
        const double m = probs.col(i).maxCoeff();
        probs.col(i) = (probs.col(i).array() - m).exp();
        probs.col(i) /= probs.col(i).sum();
    }
    return probs;
}

double cross_entropy_logits(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    const int m = static_cast<int>(logits.cols());
    if (static_cast<int>(labels.size()) != m) throw ModelError("batch sizes disagree");
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double mx = logits.col(i).maxCoeff();
        const double lse = mx + std::log((logits.col(i).array() - mx).exp().sum());
        loss += lse - logits(labels[static_cast<std::size_t>(i)], i);
    }
    return loss / static_cast<double>(m);
}

Eigen::MatrixXd cross_entropy_grad(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    const int m = static_cast<int>(logits.cols());
    if (static_cast<int>(labels.size()) != m) throw ModelError("batch sizes disagree");
    Eigen::MatrixXd grad = softmax_columns(logits);
    for (int i = 0; i < m; ++i) grad(labels[static_cast<std::size_t>(i)], i) -= 1.0;
    return grad / static_cast<double>(m);
}

AdamState adam_init(const MlpParams& p) {
    AdamState st;
    st.m.weights.reserve(p.weights.size());
    st.m.biases.reserve(p.biases.size());
    for (const Eigen::MatrixXd& w : p.weights) {
        st.m.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        st.v.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const Eigen::VectorXd& b : p.biases) {
        st.m.biases.push_back(Eigen::VectorXd::Zero(b.size()));
        st.v.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    return st;
}

namespace {

template <typename Tensor>
void adam_update_tensor(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, long step, double lr,
                        double beta1, double beta2, double epsilon) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double mc = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double vc = 1.0 - std::pow(beta2, static_cast<double>(step));
    p -= (lr * (m / mc).array() / ((v / vc).array().sqrt() + epsilon)).matrix();
}

}  // namespace

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr, double beta1,
               double beta2, double epsilon) {
    if (g.weights.size() != p.weights.size() || g.biases.size() != p.biases.size())
        throw ModelError("gradient structure does not match the parameters");
    if (lr < 0.0) throw ModelError("learning rate must be non-negative");
    ++state.step;
    for (std::size_t l = 0; l < p.weights.size(); ++l)
        adam_update_tensor(p.weights[l], g.weights[l], state.m.weights[l], state.v.weights[l],
                           state.step, lr, beta1, beta2, epsilon);
    for (std::size_t l = 0; l < p.biases.size(); ++l)
        adam_update_tensor(p.biases[l], g.biases[l], state.m.biases[l], state.v.biases[l],
                           state.step, lr, beta1, beta2, epsilon);
}

void polyak_update(MlpParams& target, const MlpParams& online, double tau) {
    if (target.weights.size() != online.weights.size() || tau < 0.0 || tau > 1.0)
        throw ModelError("target structure mismatch or tau outside [0, 1]");
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
        target.weights[l] = (1.0 - tau) * target.weights[l] + tau * online.weights[l];
        target.biases[l] = (1.0 - tau) * target.biases[l] + tau * online.biases[l];
    }
}

GradCheckReport gradient_check(const MlpParams& p, const LossFn& loss, double step,
                               std::uint64_t seed, int min_coords) {
    if (step <= 0.0) throw ModelError("finite-difference step must be positive");
    const long total = p.n_params();
    if (total == 0) throw ModelError("network has no parameters");

    std::vector<long> indices(static_cast<std::size_t>(total));
    std::iota(indices.begin(), indices.end(), 0L);
    Rng rng(seed);
    if (total > min_coords) {
        for (long i = 0; i < min_coords; ++i) {
            const long j = i + rng.uniform_int(static_cast<int>(total - i));
            std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
        }
        indices.resize(static_cast<std::size_t>(min_coords));
    }

    const LossEval base = loss(p);
    MlpParams work = p;

    GradCheckReport report;
    for (const long idx : indices) {
        const double value = work.coordinate(idx);

        work.set_coordinate(idx, value + step);
        const double up = loss(work).value;
        work.set_coordinate(idx, value - step);
        const double down = loss(work).value;
        work.set_coordinate(idx, value);

        const double forward_diff = (up - base.value) / step;
        const double backward_diff = (base.value - down) / step;
        // One-sided slopes that disagree flag a ReLU kink inside the stencil.
        if (std::abs(forward_diff - backward_diff) >
            0.1 * (std::abs(forward_diff) + std::abs(backward_diff)) + 1e-10) {
            ++report.n_excluded;
            continue;
        }

        const double numeric = (up - down) / (2.0 * step);
        const double analytic = base.grads.coordinate(idx);
        const double rel = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1.0});
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++report.n_checked;
    }
    return report;
}

}  // namespace iqlearn
