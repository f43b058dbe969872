#include "iqlearn/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "iqlearn/rng.hpp"

namespace iqlearn {

namespace {

void check_table_shape(const Eigen::MatrixXd& m, const TabularMdp& mdp, const char* what) {
    if (m.rows() != mdp.n_states || m.cols() != mdp.n_actions)
        throw ModelError(std::string(what) + " shape does not match the model");
    if (!m.allFinite()) throw ModelError(std::string(what) + " contains non-finite entries");
}

void check_policy(const PolicyTable& policy, const TabularMdp& mdp) {
    check_table_shape(policy.probs, mdp, "policy");
    for (int s = 0; s < mdp.n_states; ++s) {
        if (policy.probs.row(s).minCoeff() < -1e-12 ||
            std::abs(policy.probs.row(s).sum() - 1.0) > 1e-9)
            throw ModelError("policy row " + std::to_string(s) + " is not a distribution");
    }
}

// max_a Q(s, a) per state; the caller decides where the result feeds in.
Eigen::VectorXd rowwise_max(const Eigen::MatrixXd& q) { return q.rowwise().maxCoeff(); }

}  // namespace

void TabularMdp::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw ModelError("model needs at least one state and action");
    if (gamma < 0.0 || gamma > 1.0) throw ModelError("gamma must lie in [0, 1]");
    if (static_cast<int>(transitions.size()) != n_actions)
        throw ModelError("expected one transition matrix per action");
    if (static_cast<int>(terminal.size()) != n_states)
        throw ModelError("terminal flags must cover every state");
    for (int a = 0; a < n_actions; ++a) {
        const Eigen::MatrixXd& p = transitions[static_cast<std::size_t>(a)];
        if (p.rows() != n_states || p.cols() != n_states)
            throw ModelError("transition matrix for action " + std::to_string(a) + " has wrong shape");
        if (!p.allFinite() || p.minCoeff() < 0.0)
            throw ModelError("transition matrix for action " + std::to_string(a) + " has invalid entries");
        for (int s = 0; s < n_states; ++s) {
            if (std::abs(p.row(s).sum() - 1.0) > 1e-12)
                throw ModelError("row " + std::to_string(s) + " of action " + std::to_string(a) +
                                 " is not stochastic");
        }
    }
}

std::size_t TrajectorySet::n_transitions() const {
    std::size_t n = 0;
    for (const Episode& e : episodes) n += e.size();
    return n;
}

ViResult value_iteration(const TabularMdp& mdp, const RewardTable& reward, double tol, int max_iters) {
    mdp.validate();
    check_table_shape(reward.values, mdp, "reward");
    if (tol <= 0.0 || max_iters <= 0) throw ModelError("tolerance and iteration cap must be positive");

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(S, A);
    Eigen::MatrixXd next(S, A);

    double change = 0.0;
    for (int iter = 1; iter <= max_iters; ++iter) {
        const Eigen::VectorXd v = rowwise_max(q);
        for (int a = 0; a < A; ++a)
            next.col(a) = reward.values.col(a) + mdp.gamma * (mdp.transitions[static_cast<std::size_t>(a)] * v);
        for (int s = 0; s < S; ++s)
            if (mdp.terminal[static_cast<std::size_t>(s)]) next.row(s) = reward.values.row(s);

        change = (next - q).cwiseAbs().maxCoeff();
        q.swap(next);
        if (!q.allFinite()) throw ConvergenceError("action values diverged to non-finite values");
        if (change <= tol) return ViResult{QTable{std::move(q)}, iter, true, change};
    }
    if (mdp.gamma >= 1.0)
        throw ConvergenceError("undiscounted value iteration did not settle within the iteration cap");
    return ViResult{QTable{std::move(q)}, max_iters, false, change};
}

PolicyTable boltzmann_policy(const QTable& q) {
    if (q.values.size() == 0 || !q.values.allFinite())
        throw ModelError("action values must be a non-empty finite table");
    Eigen::MatrixXd probs = q.values;
    for (int s = 0; s < probs.rows(); ++s) {
        const double m = probs.row(s).maxCoeff();
        probs.row(s) = (probs.row(s).array() - m).exp();
        probs.row(s) /= probs.row(s).sum();
    }
    return PolicyTable{std::move(probs)};
}

Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const RewardTable& reward,
                                  const PolicyTable& policy, double tol, int max_iters) {
    mdp.validate();
    check_table_shape(reward.values, mdp, "reward");
    check_policy(policy, mdp);
    if (tol <= 0.0 || max_iters <= 0) throw ModelError("tolerance and iteration cap must be positive");

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd next(S);

    for (int iter = 1; iter <= max_iters; ++iter) {
        next.setZero();
        for (int a = 0; a < A; ++a) {
            Eigen::VectorXd backup = reward.values.col(a) + mdp.gamma * (mdp.transitions[static_cast<std::size_t>(a)] * v);
            for (int s = 0; s < S; ++s)
                if (mdp.terminal[static_cast<std::size_t>(s)]) backup[s] = reward.values(s, a);
            next += policy.probs.col(a).cwiseProduct(backup);
        }
        const double change = (next - v).cwiseAbs().maxCoeff();
        v.swap(next);
        if (!v.allFinite()) throw ConvergenceError("state values diverged to non-finite values");
        if (change <= tol) return v;
    }
    if (mdp.gamma >= 1.0)
        throw ConvergenceError("undiscounted policy evaluation did not settle within the iteration cap");
    return v;
}

double expected_value_difference(const TabularMdp& mdp, const RewardTable& true_reward,
                                 const RewardTable& learned_reward, double tol) {
    const PolicyTable learned_policy = boltzmann_policy(value_iteration(mdp, learned_reward, tol).q);
    return policy_value_difference(mdp, true_reward, learned_policy, tol);
}

double policy_value_difference(const TabularMdp& mdp, const RewardTable& true_reward,
                               const PolicyTable& policy, double tol) {
    const PolicyTable true_policy = boltzmann_policy(value_iteration(mdp, true_reward, tol).q);
    const Eigen::VectorXd v_true = policy_evaluation(mdp, true_reward, true_policy, tol);
    const Eigen::VectorXd v_policy = policy_evaluation(mdp, true_reward, policy, tol);
    return (v_true - v_policy).mean();
}

TrajectorySet sample_trajectories(const TabularMdp& mdp, const PolicyTable& policy,
                                  int episodes, int horizon, std::uint64_t seed) {
    mdp.validate();
    check_policy(policy, mdp);
    if (episodes < 0 || horizon < 0) throw ModelError("episode count and horizon must be non-negative");

    TrajectorySet out;
    out.seed = seed;
    out.horizon = horizon;
    out.episodes.resize(static_cast<std::size_t>(episodes));

    Rng rng(seed);
    for (int e = 0; e < episodes; ++e) {
        Episode& ep = out.episodes[static_cast<std::size_t>(e)];
        int s = rng.uniform_int(mdp.n_states);
        for (int t = 0; t < horizon; ++t) {
            if (mdp.terminal[static_cast<std::size_t>(s)]) break;
            const int a = rng.sample_discrete(policy.probs.row(s).transpose());
            const int s2 = rng.sample_discrete(mdp.transitions[static_cast<std::size_t>(a)].row(s).transpose());
            ep.push_back(Transition{s, a, s2});
            s = s2;
        }
    }
    return out;
}

StateOrder topological_state_order(const TabularMdp& mdp) {
    mdp.validate();
    const int S = mdp.n_states;

    // Support edges s -> s2 for non-terminal s; terminal states emit nothing.
    std::vector<std::vector<int>> predecessors(static_cast<std::size_t>(S));
    std::vector<int> out_degree(static_cast<std::size_t>(S), 0);
    for (int s = 0; s < S; ++s) {
        if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
        std::vector<bool> seen(static_cast<std::size_t>(S), false);
        for (int a = 0; a < mdp.n_actions; ++a)
            for (int s2 = 0; s2 < S; ++s2)
                if (mdp.prob(s, a, s2) > 0.0 && !seen[static_cast<std::size_t>(s2)]) {
                    seen[static_cast<std::size_t>(s2)] = true;
                    predecessors[static_cast<std::size_t>(s2)].push_back(s);
                    ++out_degree[static_cast<std::size_t>(s)];
                }
    }

    // Kahn's algorithm over reversed edges; the min-heap makes the order a
    // pure function of the support graph.
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int s = 0; s < S; ++s)
        if (out_degree[static_cast<std::size_t>(s)] == 0) ready.push(s);

    StateOrder result;
    result.order.reserve(static_cast<std::size_t>(S));
    while (!ready.empty()) {
        const int s = ready.top();
        ready.pop();
        result.order.push_back(s);
        for (const int p : predecessors[static_cast<std::size_t>(s)])
            if (--out_degree[static_cast<std::size_t>(p)] == 0) ready.push(p);
    }

    result.acyclic = static_cast<int>(result.order.size()) == S;
    if (!result.acyclic) result.order.clear();
    return result;
}

namespace {

double row_kl(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q, double floor) {
    double kl = 0.0;
    for (int i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], floor)));
    return kl;
}

}  // namespace

double mean_policy_kl(const PolicyTable& p, const PolicyTable& q, double floor) {
    if (p.probs.rows() != q.probs.rows() || p.probs.cols() != q.probs.cols())
        throw ModelError("policy shapes do not match");
    double total = 0.0;
    for (int s = 0; s < p.probs.rows(); ++s) total += row_kl(p.probs.row(s), q.probs.row(s), floor);
    return total / static_cast<double>(p.probs.rows());
}

double max_policy_kl(const PolicyTable& p, const PolicyTable& q, double floor) {
    if (p.probs.rows() != q.probs.rows() || p.probs.cols() != q.probs.cols())
        throw ModelError("policy shapes do not match");
    double worst = 0.0;
    for (int s = 0; s < p.probs.rows(); ++s)
        worst = std::max(worst, row_kl(p.probs.row(s), q.probs.row(s), floor));
    return worst;
}

}  // namespace iqlearn
