#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "iqlearn/errors.hpp"

namespace iqlearn {

/**
 * Finite MDP with one dense transition matrix per action.
 *
 * transitions[a](s, s2) is P(s2 | s, a). Terminal states keep stochastic rows
 * so the model serializes uniformly, but every backup in this library drops
 * the successor term for a terminal state: its action value is its immediate
 * reward. Successor values of terminal states are used by their predecessors.
 */
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Eigen::MatrixXd> transitions;
    std::vector<bool> terminal;
    double gamma = 0.9;

    double prob(int s, int a, int s2) const { return transitions[static_cast<std::size_t>(a)](s, s2); }

    /// Throws ModelError unless every row is stochastic within 1e-12, shapes
    /// agree with n_states/n_actions and gamma lies in [0, 1].
    void validate() const;
};

struct QTable {
    Eigen::MatrixXd values;  // n_states x n_actions
};

struct RewardTable {
    Eigen::MatrixXd values;  // n_states x n_actions
};

struct PolicyTable {
    Eigen::MatrixXd probs;  // n_states x n_actions, rows sum to 1
};

struct Transition {
    int state = 0;
    int action = 0;
    int next_state = 0;

    bool operator==(const Transition&) const = default;
};

using Episode = std::vector<Transition>;

struct TrajectorySet {
    std::vector<Episode> episodes;
    std::uint64_t seed = 0;
    int horizon = 0;

    std::size_t n_transitions() const;
};

struct ViResult {
    QTable q;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
};

struct StateOrder {
    bool acyclic = false;
    std::vector<int> order;  // when acyclic: every state appears after all its successors
};

/**
 * Optimal action values by synchronous fixed-point iteration.
 *
 * Stops once the sup-norm change between sweeps is at most tol, which bounds
 * the Bellman residual of the result by gamma * tol. Throws ConvergenceError
 * if values become non-finite, or if the iteration cap is hit while gamma is
 * 1 and the values are still moving (undiscounted divergence). A discounted
 * run that merely hits the cap is returned with converged = false.
 */
ViResult value_iteration(const TabularMdp& mdp, const RewardTable& reward,
                         double tol = 1e-10, int max_iters = 100000);

/// Row-wise softmax of the action values, computed with max subtraction.
PolicyTable boltzmann_policy(const QTable& q);

/// State values of a fixed stochastic policy, same terminal convention and
/// stopping rule as value_iteration.
Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const RewardTable& reward,
                                  const PolicyTable& policy, double tol = 1e-10,
                                  int max_iters = 100000);

/**
 * Mean over states of V^pi_true - V^pi_learned, both evaluated under the true
 * reward. Each policy is the Boltzmann policy of the optimal action values
 * for its own reward table. Zero when the learned reward induces the same
 * soft-optimal behaviour; can be negative only through tolerance noise.
 */
double expected_value_difference(const TabularMdp& mdp, const RewardTable& true_reward,
                                 const RewardTable& learned_reward, double tol = 1e-10);

/// Same value gap for an explicitly supplied policy instead of a learned
/// reward. Used for constrained policies that no reward table induces.
double policy_value_difference(const TabularMdp& mdp, const RewardTable& true_reward,
                               const PolicyTable& policy, double tol = 1e-10);

/**
 * Rolls out episodes under a fixed policy. Initial states are uniform over
 * all states; an episode starting at a terminal state is empty and episodes
 * stop when they enter a terminal state or reach the horizon. The same seed
 * reproduces the set bitwise.
 */
TrajectorySet sample_trajectories(const TabularMdp& mdp, const PolicyTable& policy,
                                  int episodes, int horizon, std::uint64_t seed);

/**
 * Detects whether the support graph (edges from each non-terminal state to
 * every successor with positive probability) is acyclic, and if so returns a
 * deterministic order in which each state appears after all its successors.
 * Terminal states have no outgoing edges and therefore come first.
 */
StateOrder topological_state_order(const TabularMdp& mdp);

/// Mean over states of KL(p_row || q_row); q is floored at `floor` inside the
/// log to keep the divergence finite. Zero rows of p contribute zero.
double mean_policy_kl(const PolicyTable& p, const PolicyTable& q, double floor = 1e-12);

/// Largest single-state KL(p_row || q_row), same flooring rule.
double max_policy_kl(const PolicyTable& p, const PolicyTable& q, double floor = 1e-12);

}  // namespace iqlearn
