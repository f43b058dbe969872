#include "iqlearn/deep_iql.hpp"

#include <algorithm>
#include <cmath>

#include "iqlearn/iql.hpp"

namespace iqlearn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ModelError("replay buffer capacity must be positive");
    entries_.reserve(capacity_);
}

void ReplayBuffer::push(ReplayEntry e) {
    if (entries_.size() < capacity_) {
        entries_.push_back(std::move(e));
        return;
    }
    entries_[start_] = std::move(e);
    start_ = (start_ + 1) % capacity_;
}

const ReplayEntry& ReplayBuffer::operator[](std::size_t i) const {
    if (i >= entries_.size()) throw ModelError("replay index out of range");
    return entries_[(start_ + i) % entries_.size()];
}

int ReplayBuffer::feature_dim() const {
    if (entries_.empty()) throw ModelError("replay buffer is empty");
    return static_cast<int>(entries_.front().state.size());
}

ReplayBuffer buffer_from_trajectories(const TrajectorySet& demos, const Eigen::MatrixXd& features,
                                      const std::vector<bool>& terminal, std::size_t capacity) {
    const int S = static_cast<int>(features.rows());
    if (static_cast<int>(terminal.size()) != S)
        throw ModelError("terminal flags must cover every state");
    const std::size_t total = demos.n_transitions();
    if (total == 0) throw ModelError("demonstrations are empty");

    ReplayBuffer buffer(capacity == 0 ? total : capacity);
    for (const Episode& ep : demos.episodes)
        for (const Transition& t : ep) {
            if (t.state < 0 || t.state >= S || t.next_state < 0 || t.next_state >= S)
                throw ModelError("demonstration indices fall outside the feature table");
            ReplayEntry e;
            e.state = features.row(t.state).transpose();
            e.next_state = features.row(t.next_state).transpose();
            e.action = t.action;
            e.next_terminal = terminal[static_cast<std::size_t>(t.next_state)];
            e.state_index = t.state;
            e.next_state_index = t.next_state;
            buffer.push(std::move(e));
        }
    return buffer;
}

namespace {

std::vector<int> net_sizes(int feature_dim, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes;
    sizes.push_back(feature_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

MlpBundle init_bundle(const std::vector<int>& sizes, std::uint64_t seed) {
    MlpBundle b;
    b.online = mlp_init(sizes, seed);
    b.target = b.online;
    b.adam = adam_init(b.online);
    return b;
}

}  // namespace

DiqlNets init_diql_nets(int feature_dim, int n_actions, const DiqlConfig& cfg, std::uint64_t seed,
                        bool constrained) {
    if (feature_dim <= 0 || n_actions < 2)
        throw ModelError("networks need a positive feature dimension and at least two actions");
    const std::vector<int> sizes = net_sizes(feature_dim, cfg.hidden, n_actions);
    Rng rng(seed);
    DiqlNets nets;
    nets.n_actions = n_actions;
    nets.reward = init_bundle(sizes, rng.raw());
    nets.q = init_bundle(sizes, rng.raw());
    nets.q_shifted = init_bundle(sizes, rng.raw());
    nets.classifier = init_bundle(sizes, rng.raw());
    if (constrained) nets.q_constrained = init_bundle(sizes, rng.raw());
    return nets;
}

DiqlBatch sample_batch(const ReplayBuffer& buffer, int m, Rng& rng) {
    if (buffer.size() == 0) throw ModelError("replay buffer is empty");
    if (m <= 0) throw ModelError("minibatch size must be positive");

    const int d = buffer.feature_dim();
    DiqlBatch batch;
    batch.states.resize(d, m);
    batch.next_states.resize(d, m);
    batch.actions.resize(static_cast<std::size_t>(m));
    batch.next_terminal.resize(static_cast<std::size_t>(m));
    batch.state_indices.resize(static_cast<std::size_t>(m));
    batch.next_state_indices.resize(static_cast<std::size_t>(m));

    for (int i = 0; i < m; ++i) {
        const ReplayEntry& e = buffer[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(buffer.size())))];
        batch.states.col(i) = e.state;
        batch.next_states.col(i) = e.next_state;
        batch.actions[static_cast<std::size_t>(i)] = e.action;
        batch.next_terminal[static_cast<std::size_t>(i)] = e.next_terminal ? 1 : 0;
        batch.state_indices[static_cast<std::size_t>(i)] = e.state_index;
        batch.next_state_indices[static_cast<std::size_t>(i)] = e.next_state_index;
    }
    return batch;
}

Eigen::VectorXd classifier_probs(const DiqlNets& nets, const Eigen::VectorXd& state) {
    return softmax_columns(forward(nets.classifier.online, state));
}

DiqlTargets compute_targets(const DiqlNets& nets, const DiqlBatch& batch, const Eigen::MatrixXd& pi,
                            const DiqlConfig& cfg, const ConstraintSet* constraints) {
    const int m = batch.size();
    const int n = nets.n_actions;
    if (pi.rows() != n || pi.cols() != m) throw ModelError("action distribution shape mismatch");

    DiqlTargets t;

    const Eigen::MatrixXd q_next = forward_batch(nets.q.target, batch.next_states);
    Eigen::VectorXd v_next = q_next.colwise().maxCoeff().transpose();
    for (int i = 0; i < m; ++i)
        if (batch.next_terminal[static_cast<std::size_t>(i)]) v_next[i] = 0.0;

    t.y_shifted = cfg.gamma * v_next;
    t.reward_line = forward_batch(nets.reward.target, batch.states);
    const Eigen::MatrixXd sh_line = forward_batch(nets.q_shifted.target, batch.states);

    t.eta.resize(n, m);
    for (int i = 0; i < m; ++i)
        for (int b = 0; b < n; ++b)
            t.eta(b, i) = std::log(std::max(pi(b, i), cfg.epsilon_clip)) - sh_line(b, i);

    t.y_reward.resize(m);
    for (int i = 0; i < m; ++i) {
        const int a = batch.actions[static_cast<std::size_t>(i)];
        double others = 0.0;
        for (int b = 0; b < n; ++b) {
            if (b == a) continue;
            // Terms whose estimated probability vanished carry meaningless
            // log values; they are dropped without renormalizing.
            if (pi(b, i) <= cfg.epsilon_clip) continue;
            others += t.reward_line(b, i) - t.eta(b, i);
        }
        t.y_reward[i] = t.eta(a, i) + others / static_cast<double>(n - 1);
    }

    t.y_q.resize(m);
    for (int i = 0; i < m; ++i)
        t.y_q[i] = t.reward_line(batch.actions[static_cast<std::size_t>(i)], i) + cfg.gamma * v_next[i];

    if (constraints != nullptr) {
        if (!nets.q_constrained.has_value())
            throw ModelError("constrained targets require a constrained value head");
        const Eigen::MatrixXd qc_next = forward_batch(nets.q_constrained->target, batch.next_states);
        t.y_constrained.resize(m);
        for (int i = 0; i < m; ++i) {
            double v_safe = 0.0;
            if (!batch.next_terminal[static_cast<std::size_t>(i)]) {
                const int s2 = batch.next_state_indices[static_cast<std::size_t>(i)];
                if (s2 < 0) throw ModelError("constrained targets require tabular state indices");
                const std::vector<int> safe = safe_set(*constraints, s2, n);
                v_safe = qc_next(safe.front(), i);
                for (const int b : safe) v_safe = std::max(v_safe, qc_next(b, i));
            }
            t.y_constrained[i] =
                t.reward_line(batch.actions[static_cast<std::size_t>(i)], i) + cfg.gamma * v_safe;
        }
    }
    return t;
}

namespace {

double mse_step(MlpBundle& bundle, const Eigen::MatrixXd& states, const std::vector<int>& actions,
                const Eigen::VectorXd& targets, double lr) {
    const ForwardTrace trace = forward_batch_trace(bundle.online, states);
    const double loss = mse_selected(trace.output, actions, targets);
    const MlpGrads grads =
        backward_batch(bundle.online, trace, mse_selected_grad(trace.output, actions, targets));
    adam_step(bundle.online, grads, bundle.adam, lr);
    return loss;
}

DiqlLosses iteration_impl(DiqlNets& nets, const ReplayBuffer& buffer, const DiqlConfig& cfg,
                          Rng& rng, const ConstraintSet* constraints,
                          const PolicyTable* true_distribution) {
    if (cfg.tau < 0.0 || cfg.tau > 1.0) throw ModelError("tau must lie in [0, 1]");
    if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw ModelError("gamma must lie in [0, 1]");
    if (cfg.epsilon_clip <= 0.0) throw ModelError("the probability clip must be positive");
    if (cfg.use_true_distribution && true_distribution == nullptr)
        throw ModelError("the exact action distribution was requested but not supplied");

    const DiqlBatch batch = sample_batch(buffer, cfg.minibatch, rng);
    const int m = batch.size();
    const int n = nets.n_actions;

    DiqlLosses losses;

    // The shift target reads only the target value net, so taking it before
    // the online steps below changes nothing.
    losses.shifted = [&] {
        const Eigen::MatrixXd q_next = forward_batch(nets.q.target, batch.next_states);
        Eigen::VectorXd v_next = q_next.colwise().maxCoeff().transpose();
        for (int i = 0; i < m; ++i)
            if (batch.next_terminal[static_cast<std::size_t>(i)]) v_next[i] = 0.0;
        const Eigen::VectorXd y_shifted = cfg.gamma * v_next;
        return mse_step(nets.q_shifted, batch.states, batch.actions, y_shifted, cfg.lr_shifted);
    }();

    if (!cfg.use_true_distribution) {
        const ForwardTrace trace = forward_batch_trace(nets.classifier.online, batch.states);
        losses.classifier = cross_entropy_logits(trace.output, batch.actions);
        const MlpGrads grads = backward_batch(nets.classifier.online, trace,
                                              cross_entropy_grad(trace.output, batch.actions));
        adam_step(nets.classifier.online, grads, nets.classifier.adam, cfg.lr_classifier);
    }

    Eigen::MatrixXd pi(n, m);
    if (cfg.use_true_distribution) {
        for (int i = 0; i < m; ++i) {
            const int s = batch.state_indices[static_cast<std::size_t>(i)];
            if (s < 0 || s >= true_distribution->probs.rows())
                throw ModelError("the exact action distribution requires tabular state indices");
            pi.col(i) = true_distribution->probs.row(s).transpose();
        }
    } else {
        pi = softmax_columns(forward_batch(nets.classifier.online, batch.states));
    }

    const DiqlTargets targets = compute_targets(nets, batch, pi, cfg, constraints);
    losses.reward = mse_step(nets.reward, batch.states, batch.actions, targets.y_reward, cfg.lr_reward);
    losses.q = mse_step(nets.q, batch.states, batch.actions, targets.y_q, cfg.lr_q);
    if (constraints != nullptr)
        losses.constrained = mse_step(*nets.q_constrained, batch.states, batch.actions,
                                      targets.y_constrained, cfg.lr_constrained);

    polyak_update(nets.reward.target, nets.reward.online, cfg.tau);
    polyak_update(nets.q.target, nets.q.online, cfg.tau);
    polyak_update(nets.q_shifted.target, nets.q_shifted.online, cfg.tau);
    polyak_update(nets.classifier.target, nets.classifier.online, cfg.tau);
    if (nets.q_constrained.has_value())
        polyak_update(nets.q_constrained->target, nets.q_constrained->online, cfg.tau);

    return losses;
}

}  // namespace

DiqlLosses diql_iteration(DiqlNets& nets, const ReplayBuffer& buffer, const DiqlConfig& cfg,
                          Rng& rng, const PolicyTable* true_distribution) {
    return iteration_impl(nets, buffer, cfg, rng, nullptr, true_distribution);
}

DiqlLosses dciql_iteration(DiqlNets& nets, const ReplayBuffer& buffer, const DiqlConfig& cfg,
                           Rng& rng, const ConstraintSet& constraints,
                           const PolicyTable* true_distribution) {
    if (!nets.q_constrained.has_value())
        throw ModelError("constrained training requires a constrained value head");
    return iteration_impl(nets, buffer, cfg, rng, &constraints, true_distribution);
}

DiqlTrainResult train_diql(const ReplayBuffer& buffer, int n_actions, const DiqlConfig& cfg,
                           std::uint64_t seed, const ConstraintSet* constraints,
                           const PolicyTable* true_distribution, long log_every) {
    if (cfg.iterations < 0) throw ModelError("iteration count must be non-negative");
    if (log_every <= 0) throw ModelError("log interval must be positive");

    Rng master(seed);
    const std::uint64_t init_seed = master.raw();

    DiqlTrainResult out;
    out.nets = init_diql_nets(buffer.feature_dim(), n_actions, cfg, init_seed, constraints != nullptr);

    for (long it = 1; it <= cfg.iterations; ++it) {
        DiqlLosses losses;
        if (constraints != nullptr)
            losses = dciql_iteration(out.nets, buffer, cfg, master, *constraints, true_distribution);
        else
            losses = diql_iteration(out.nets, buffer, cfg, master, true_distribution);
        if (it % log_every == 0 || it == cfg.iterations)
            out.log.push_back(DiqlTrainLogRow{it, losses});
    }
    return out;
}

Eigen::MatrixXd evaluate_states(const MlpParams& net, const Eigen::MatrixXd& features) {
    return forward_batch(net, features.transpose()).transpose();
}

}  // namespace iqlearn
