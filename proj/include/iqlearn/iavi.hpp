#pragma once

#include <vector>

#include <Eigen/Dense>

#include "iqlearn/mdp.hpp"

namespace iqlearn {

struct IaviConfig {
    /// Floor applied to policy probabilities before taking logs.
    double epsilon_logprob = 1e-9;
    /// Sweep mode stops when the reward table changes by less than this in
    /// sup-norm between sweeps.
    double convergence_tol = 1e-4;
    int max_sweeps = 10000;
};

struct IaviResult {
    RewardTable reward;
    QTable q;
    int sweeps = 0;
    bool converged = false;
    /// Sup-norm reward change after each sweep; single-entry {0} in one-pass mode.
    std::vector<double> sweep_changes;
};

struct EmpiricalPolicy {
    PolicyTable policy;
    /// States with at least one observed action; unvisited rows are uniform.
    std::vector<bool> visited;
};

/**
 * Log-probability of an action minus the discounted expected best successor
 * value: eta(s, a) = log max(pi(a|s), epsilon) - gamma * sum_s2 P(s2|s,a) *
 * max_a2 q(s2, a2). The successor term is dropped when s is terminal.
 */
double compute_eta(const TabularMdp& mdp, const QTable& q, const PolicyTable& policy,
                   int state, int action, double epsilon = 1e-9);

/// Action frequencies per state from demonstrations; states never visited get
/// a uniform row and a cleared visited flag.
EmpiricalPolicy empirical_policy(const TrajectorySet& demos, int n_states, int n_actions);

/**
 * Recovers a reward table whose soft-optimal policy reproduces the expert.
 *
 * On acyclic models a single pass in reverse topological order solves each
 * state's linear system exactly once and is exact. On cyclic models the pass
 * is repeated as synchronous sweeps over ascending state indices against a
 * snapshot of the previous action values, until the reward table moves less
 * than cfg.convergence_tol between sweeps. Throws ConvergenceError when the
 * sweep cap is hit first.
 */
IaviResult iavi_solve(const TabularMdp& mdp, const PolicyTable& expert,
                      const IaviConfig& cfg = IaviConfig{});

}  // namespace iqlearn
