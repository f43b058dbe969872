#pragma once

#include <vector>

#include <Eigen/Dense>

#include "iqlearn/mdp.hpp"

namespace iqlearn {

struct MaxEntConfig {
    double learning_rate = 0.01;
    /// Outer gradient steps; the run stops early once the state reward
    /// changes by less than reward_change_tol in sup-norm.
    int max_outer_iterations = 2000;
    double reward_change_tol = 1e-4;
    /// Soft value-iteration backups per outer iteration; 0 runs the inner
    /// solve to soft_vi_tol. 1 gives the single-backup variant. Both reuse
    /// the previous outer iteration's values as a warm start.
    int inner_steps = 0;
    double soft_vi_tol = 1e-8;
    int soft_vi_max_iters = 100000;
    /// Expected visitation horizon; matched to the demonstration length.
    int horizon = 8;
};

struct SoftViResult {
    PolicyTable policy;
    Eigen::VectorXd v;
    int iterations = 0;
};

struct MaxEntLogRow {
    int iteration = 0;
    double grad_norm = 0.0;
    double wall_clock_s = 0.0;
};

struct MaxEntResult {
    Eigen::VectorXd weights;
    RewardTable reward;  // features * weights, broadcast across actions
    int iterations = 0;
    bool converged = false;
    std::vector<MaxEntLogRow> log;
};

/**
 * Soft value iteration: V(s) = log sum_a exp(r(s, a) + gamma * E[V(s')]),
 * with the successor term dropped at terminal states. The returned policy is
 * the softmax of the soft action values. inner_steps = 0 iterates to tol;
 * a positive count applies exactly that many backups. warm_start seeds V.
 */
SoftViResult soft_value_iteration(const TabularMdp& mdp, const RewardTable& reward, int inner_steps,
                                  double tol = 1e-8, int max_iters = 100000,
                                  const Eigen::VectorXd* warm_start = nullptr);

/**
 * Expected state-visitation counts over `horizon` steps of the policy from
 * the initial distribution: sum of the first `horizon` state marginals.
 * Terminal states absorb mass, and the result always sums to the horizon.
 */
Eigen::VectorXd expected_state_visitation(const TabularMdp& mdp, const PolicyTable& policy,
                                          int horizon, const Eigen::VectorXd& initial);

/// Mean per-episode feature counts of the demonstrations plus their empirical
/// initial-state distribution.
struct DemoStatistics {
    Eigen::VectorXd feature_expectation;
    Eigen::VectorXd initial_distribution;
};

DemoStatistics demo_statistics(const TrajectorySet& demos, const Eigen::MatrixXd& features);

/**
 * Gradient ascent on the demonstration likelihood of a linear state reward
 * r = features * w: each outer iteration solves the soft policy for the
 * current reward and steps along (demo expectations - policy expectations).
 * The log records gradient norm and cumulative wall-clock per iteration.
 */
MaxEntResult maxent_irl(const TabularMdp& mdp, const Eigen::MatrixXd& features,
                        const TrajectorySet& demos, const MaxEntConfig& cfg);

/// Same ascent but with exact expert statistics: demonstration expectations
/// are computed from the expert policy by the same visitation recursion
/// instead of from sampled episodes.
MaxEntResult maxent_irl_exact(const TabularMdp& mdp, const Eigen::MatrixXd& features,
                              const PolicyTable& expert, const Eigen::VectorXd& initial,
                              const MaxEntConfig& cfg);

}  // namespace iqlearn
