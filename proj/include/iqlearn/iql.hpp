#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "iqlearn/constraints.hpp"
#include "iqlearn/mdp.hpp"

namespace iqlearn {

struct IqlConfig {
    double alpha_r = 1e-3;
    double alpha_q = 1e-3;
    double alpha_sh = 1e-3;
    double alpha_c = 1e-3;
    double gamma = 0.9;
    /// Floor applied to action probabilities before taking logs.
    double epsilon_logprob = 1e-9;
    /// Optional replay limits: when positive, only the first `episodes`
    /// episodes and the first `horizon` steps of each are used.
    int episodes = 0;
    int horizon = 0;
    /// Replay passes over the data; with max_epochs > 1 the run stops early
    /// once the reward table moves less than reward_change_tol between passes.
    int max_epochs = 1;
    double reward_change_tol = 1e-4;
};

struct IqlState {
    RewardTable reward;
    QTable q;
    QTable q_shifted;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counter;
    std::optional<QTable> q_constrained;

    static IqlState init(int n_states, int n_actions, bool constrained = false);

    int n_states() const { return static_cast<int>(reward.values.rows()); }
    int n_actions() const { return static_cast<int>(reward.values.cols()); }
};

struct IqlRunResult {
    IqlState state;
    int epochs = 0;
    bool converged = false;
    double final_reward_change = 0.0;
};

/**
 * One stochastic update from a single observed transition, applied in place:
 * the visit counter, the empirical policy estimate, the shift table, the
 * reward at the taken action and finally its action value. When
 * exact_policy is non-null it replaces the count-based estimate inside the
 * log terms. A terminal next state contributes zero to every max-over-next
 * term.
 */
void iql_step(IqlState& state, const IqlConfig& cfg, const Transition& t, bool next_terminal,
              const PolicyTable* exact_policy = nullptr);

/// iql_step plus the update of the constrained action values, whose target
/// maximizes only over actions safe in the next state.
void ciql_step(IqlState& state, const IqlConfig& cfg, const Transition& t, bool next_terminal,
               const ConstraintSet& constraints, const PolicyTable* exact_policy = nullptr);

/**
 * Replays the demonstrations in stored order, episode by episode. With
 * constraints the constrained update runs after every step (feasibility is
 * validated up front). Returns the final tables plus convergence bookkeeping.
 */
IqlRunResult run_iql(const TrajectorySet& demos, int n_states, int n_actions,
                     const std::vector<bool>& terminal, const IqlConfig& cfg,
                     const ConstraintSet* constraints = nullptr,
                     const PolicyTable* exact_policy = nullptr);

/// Deterministic greedy policy over the safe set of each state; ties resolve
/// to the lowest action index. Never selects an unsafe action.
PolicyTable constrained_greedy_policy(const QTable& q_constrained, const ConstraintSet& constraints);

}  // namespace iqlearn
