#include "iqlearn/iavi.hpp"

#include <cmath>
#include <string>

#include "iqlearn/errors.hpp"
#include "iqlearn/reward_solver.hpp"

namespace iqlearn {

namespace {

void check_expert(const PolicyTable& expert, const TabularMdp& mdp) {
    if (expert.probs.rows() != mdp.n_states || expert.probs.cols() != mdp.n_actions)
        throw ModelError("expert policy shape does not match the model");
    for (int s = 0; s < mdp.n_states; ++s) {
        if (!expert.probs.row(s).allFinite() || expert.probs.row(s).minCoeff() < -1e-12 ||
            std::abs(expert.probs.row(s).sum() - 1.0) > 1e-9)
            throw ModelError("expert policy row " + std::to_string(s) + " is not a distribution");
    }
}

Eigen::MatrixXd floored_log(const Eigen::MatrixXd& probs, double epsilon) {
    return probs.cwiseMax(epsilon).array().log().matrix();
}

}  // namespace

double compute_eta(const TabularMdp& mdp, const QTable& q, const PolicyTable& policy,
                   int state, int action, double epsilon) {
    mdp.validate();
    check_expert(policy, mdp);
    if (q.values.rows() != mdp.n_states || q.values.cols() != mdp.n_actions || !q.values.allFinite())
        throw ModelError("action value shape does not match the model");
    if (state < 0 || state >= mdp.n_states || action < 0 || action >= mdp.n_actions)
        throw ModelError("state or action index out of range");
    if (epsilon <= 0.0) throw ModelError("the log floor must be positive");

    double successor = 0.0;
    if (!mdp.terminal[static_cast<std::size_t>(state)]) {
        const Eigen::VectorXd vmax = q.values.rowwise().maxCoeff();
        successor = mdp.transitions[static_cast<std::size_t>(action)].row(state).dot(vmax);
    }
    return std::log(std::max(policy.probs(state, action), epsilon)) - mdp.gamma * successor;
}

EmpiricalPolicy empirical_policy(const TrajectorySet& demos, int n_states, int n_actions) {
    if (n_states <= 0 || n_actions <= 0) throw ModelError("state and action counts must be positive");

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_states, n_actions);
    for (const Episode& ep : demos.episodes)
        for (const Transition& t : ep) {
            if (t.state < 0 || t.state >= n_states || t.action < 0 || t.action >= n_actions)
                throw ModelError("demonstration indices fall outside the model");
            counts(t.state, t.action) += 1.0;
        }

    EmpiricalPolicy out;
    out.visited.assign(static_cast<std::size_t>(n_states), false);
    out.policy.probs = Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
    for (int s = 0; s < n_states; ++s) {
        const double total = counts.row(s).sum();
        if (total > 0.0) {
            out.policy.probs.row(s) = counts.row(s) / total;
            out.visited[static_cast<std::size_t>(s)] = true;
        }
    }
    return out;
}

IaviResult iavi_solve(const TabularMdp& mdp, const PolicyTable& expert, const IaviConfig& cfg) {
    mdp.validate();
    check_expert(expert, mdp);
    if (cfg.epsilon_logprob <= 0.0 || cfg.convergence_tol <= 0.0 || cfg.max_sweeps <= 0)
        throw ModelError("solver configuration values must be positive");

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    const Eigen::MatrixXd log_pi = floored_log(expert.probs, cfg.epsilon_logprob);
    const StateRewardSolver solver(A);

    IaviResult result;
    result.reward.values = Eigen::MatrixXd::Zero(S, A);
    result.q.values = Eigen::MatrixXd::Zero(S, A);

    const StateOrder order = topological_state_order(mdp);
    if (order.acyclic) {
        // One pass: each state's successors are finished before it is solved.
        Eigen::VectorXd vmax = Eigen::VectorXd::Zero(S);
        for (const int s : order.order) {
            Eigen::VectorXd successor = Eigen::VectorXd::Zero(A);
            if (!mdp.terminal[static_cast<std::size_t>(s)])
                for (int a = 0; a < A; ++a)
                    successor[a] = mdp.transitions[static_cast<std::size_t>(a)].row(s).dot(vmax);
            const Eigen::VectorXd eta = log_pi.row(s).transpose() - mdp.gamma * successor;
            const Eigen::VectorXd r = solver.solve(eta);
            result.reward.values.row(s) = r.transpose();
            result.q.values.row(s) = (r + mdp.gamma * successor).transpose();
            vmax[s] = result.q.values.row(s).maxCoeff();
        }
        result.sweeps = 1;
        result.converged = true;
        result.sweep_changes = {0.0};
        return result;
    }

    // Cyclic case: synchronized sweeps against a snapshot of the previous
    // action values, repeated until the reward table settles.
    Eigen::MatrixXd succ(S, A);
    Eigen::MatrixXd next_reward(S, A);
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        const Eigen::VectorXd vmax = result.q.values.rowwise().maxCoeff();
        for (int a = 0; a < A; ++a)
            succ.col(a) = mdp.transitions[static_cast<std::size_t>(a)] * vmax;
        for (int s = 0; s < S; ++s)
            if (mdp.terminal[static_cast<std::size_t>(s)]) succ.row(s).setZero();

        for (int s = 0; s < S; ++s) {
            const Eigen::VectorXd eta = (log_pi.row(s) - mdp.gamma * succ.row(s)).transpose();
            next_reward.row(s) = solver.solve(eta).transpose();
        }

        const double change = (next_reward - result.reward.values).cwiseAbs().maxCoeff();
        result.sweep_changes.push_back(change);
        result.reward.values = next_reward;
        result.q.values = next_reward + mdp.gamma * succ;
        result.sweeps = sweep;
        if (!result.reward.values.allFinite())
            throw ConvergenceError("recovered rewards diverged to non-finite values");
        if (change < cfg.convergence_tol) {
            result.converged = true;
            return result;
        }
    }
    throw ConvergenceError("reward recovery did not settle within the sweep cap");
}

}  // namespace iqlearn
