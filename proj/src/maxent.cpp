#include "iqlearn/maxent.hpp"

#include <chrono>
#include <cmath>

#include "iqlearn/errors.hpp"

namespace iqlearn {

namespace {

Eigen::VectorXd logsumexp_rows(const Eigen::MatrixXd& q) {
    Eigen::VectorXd out(q.rows());
    for (int s = 0; s < q.rows(); ++s) {
        const double m = q.row(s).maxCoeff();
        out[s] = m + std::log((q.row(s).array() - m).exp().sum());
    }
    return out;
}

Eigen::MatrixXd soft_backup(const TabularMdp& mdp, const RewardTable& reward,
                            const Eigen::VectorXd& v) {
    Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = reward.values.col(a) + mdp.gamma * (mdp.transitions[static_cast<std::size_t>(a)] * v);
    for (int s = 0; s < mdp.n_states; ++s)
        if (mdp.terminal[static_cast<std::size_t>(s)]) q.row(s) = reward.values.row(s);
    return q;
}

RewardTable broadcast_state_reward(const Eigen::VectorXd& r_state, int n_actions) {
    RewardTable r;
    r.values.resize(r_state.size(), n_actions);
    r.values.colwise() = r_state;
    return r;
}

void check_initial(const Eigen::VectorXd& initial, int n_states) {
    if (initial.size() != n_states || !initial.allFinite() || initial.minCoeff() < -1e-12 ||
        std::abs(initial.sum() - 1.0) > 1e-9)
        throw ModelError("initial distribution is not a distribution over the states");
}

}  // namespace

SoftViResult soft_value_iteration(const TabularMdp& mdp, const RewardTable& reward, int inner_steps,
                                  double tol, int max_iters, const Eigen::VectorXd* warm_start) {
    mdp.validate();
    if (reward.values.rows() != mdp.n_states || reward.values.cols() != mdp.n_actions ||
        !reward.values.allFinite())
        throw ModelError("reward shape does not match the model");
    if (inner_steps < 0 || tol <= 0.0 || max_iters <= 0)
        throw ModelError("soft value iteration settings must be positive");
    if (warm_start != nullptr && warm_start->size() != mdp.n_states)
        throw ModelError("warm start size does not match the model");

    Eigen::VectorXd v =
        warm_start != nullptr ? *warm_start : Eigen::VectorXd::Zero(mdp.n_states);
    Eigen::MatrixXd q;

    SoftViResult out;
    const int limit = inner_steps > 0 ? inner_steps : max_iters;
    for (int iter = 1; iter <= limit; ++iter) {
        q = soft_backup(mdp, reward, v);
        Eigen::VectorXd next = logsumexp_rows(q);
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        out.iterations = iter;
        if (!v.allFinite()) throw ConvergenceError("soft values diverged to non-finite values");
        if (inner_steps == 0 && change <= tol) break;
    }

    out.policy.probs = (q.colwise() - v).array().exp();
    for (int s = 0; s < mdp.n_states; ++s) out.policy.probs.row(s) /= out.policy.probs.row(s).sum();
    out.v = std::move(v);
    return out;
}

Eigen::VectorXd expected_state_visitation(const TabularMdp& mdp, const PolicyTable& policy,
                                          int horizon, const Eigen::VectorXd& initial) {
    mdp.validate();
    if (policy.probs.rows() != mdp.n_states || policy.probs.cols() != mdp.n_actions)
        throw ModelError("policy shape does not match the model");
    if (horizon < 0) throw ModelError("horizon must be non-negative");
    check_initial(initial, mdp.n_states);

    Eigen::VectorXd total = Eigen::VectorXd::Zero(mdp.n_states);
    Eigen::VectorXd d = initial;
    for (int t = 0; t < horizon; ++t) {
        total += d;
        Eigen::VectorXd next = Eigen::VectorXd::Zero(mdp.n_states);
        Eigen::VectorXd flowing = d;
        for (int s = 0; s < mdp.n_states; ++s)
            if (mdp.terminal[static_cast<std::size_t>(s)]) {
                next[s] += d[s];  // terminal mass stays put
                flowing[s] = 0.0;
            }
        for (int a = 0; a < mdp.n_actions; ++a)
            next += mdp.transitions[static_cast<std::size_t>(a)].transpose() *
                    flowing.cwiseProduct(policy.probs.col(a));
        d = std::move(next);
    }
    return total;
}

DemoStatistics demo_statistics(const TrajectorySet& demos, const Eigen::MatrixXd& features) {
    const int S = static_cast<int>(features.rows());
    long n_episodes = 0;
    DemoStatistics out;
    out.feature_expectation = Eigen::VectorXd::Zero(features.cols());
    out.initial_distribution = Eigen::VectorXd::Zero(S);

    for (const Episode& ep : demos.episodes) {
        if (ep.empty()) continue;
        ++n_episodes;
        out.initial_distribution[ep.front().state] += 1.0;
        for (const Transition& t : ep) {
            if (t.state < 0 || t.state >= S)
                throw ModelError("demonstration indices fall outside the feature table");
            out.feature_expectation += features.row(t.state).transpose();
        }
    }
    if (n_episodes == 0) throw ModelError("demonstrations are empty");
    out.feature_expectation /= static_cast<double>(n_episodes);
    out.initial_distribution /= static_cast<double>(n_episodes);
    return out;
}

namespace {

MaxEntResult maxent_core(const TabularMdp& mdp, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& mu_demo, const Eigen::VectorXd& initial,
                         const MaxEntConfig& cfg) {
    mdp.validate();
    if (features.rows() != mdp.n_states || !features.allFinite())
        throw ModelError("feature table does not match the model");
    // A tolerance of zero disables early stopping: the change test below is
    // strict, so the ascent then always runs its full iteration budget.
    if (cfg.learning_rate <= 0.0 || cfg.max_outer_iterations <= 0 || cfg.horizon <= 0 ||
        cfg.reward_change_tol < 0.0)
        throw ModelError("ascent settings must be positive");
    check_initial(initial, mdp.n_states);

    const auto start = std::chrono::steady_clock::now();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(features.cols());
    Eigen::VectorXd v_warm;

    MaxEntResult out;
    for (int iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
        const Eigen::VectorXd r_state = features * w;
        const RewardTable reward = broadcast_state_reward(r_state, mdp.n_actions);
        const SoftViResult svi =
            soft_value_iteration(mdp, reward, cfg.inner_steps, cfg.soft_vi_tol, cfg.soft_vi_max_iters,
                                 v_warm.size() > 0 ? &v_warm : nullptr);
        v_warm = svi.v;

        const Eigen::VectorXd visitation =
            expected_state_visitation(mdp, svi.policy, cfg.horizon, initial);
        const Eigen::VectorXd grad = mu_demo - features.transpose() * visitation;
        w += cfg.learning_rate * grad;

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.log.push_back(MaxEntLogRow{iter, grad.norm(), elapsed});
        out.iterations = iter;

        const double reward_change = (features * w - r_state).cwiseAbs().maxCoeff();
        if (reward_change < cfg.reward_change_tol) {
            out.converged = true;
            break;
        }
    }

    out.weights = w;
    out.reward = broadcast_state_reward(features * w, mdp.n_actions);
    return out;
}

}  // namespace

MaxEntResult maxent_irl(const TabularMdp& mdp, const Eigen::MatrixXd& features,
                        const TrajectorySet& demos, const MaxEntConfig& cfg) {
    const DemoStatistics stats = demo_statistics(demos, features);
    return maxent_core(mdp, features, stats.feature_expectation, stats.initial_distribution, cfg);
}

MaxEntResult maxent_irl_exact(const TabularMdp& mdp, const Eigen::MatrixXd& features,
                              const PolicyTable& expert, const Eigen::VectorXd& initial,
                              const MaxEntConfig& cfg) {
    const Eigen::VectorXd visitation = expected_state_visitation(mdp, expert, cfg.horizon, initial);
    return maxent_core(mdp, features, features.transpose() * visitation, initial, cfg);
}

}  // namespace iqlearn
