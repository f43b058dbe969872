#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "iqlearn/constraints.hpp"
#include "iqlearn/mdp.hpp"
#include "iqlearn/nn.hpp"
#include "iqlearn/rng.hpp"

namespace iqlearn {

/// One stored transition. Feature vectors drive the networks; the tabular
/// indices stay alongside them for true-distribution lookups and safe sets,
/// -1 when the source states have no tabular identity.
struct ReplayEntry {
    Eigen::VectorXd state;
    Eigen::VectorXd next_state;
    int action = 0;
    bool next_terminal = false;
    int state_index = -1;
    int next_state_index = -1;
};

/// Fixed-capacity ring buffer; once full, each push evicts the oldest entry.
/// operator[] indexes the retained entries oldest-first.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(ReplayEntry e);
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    const ReplayEntry& operator[](std::size_t i) const;
    int feature_dim() const;

  private:
    std::size_t capacity_;
    std::size_t start_ = 0;
    std::vector<ReplayEntry> entries_;
};

/// Fills a buffer from demonstrations over a tabular model whose states are
/// embedded by rows of `features` (n_states x d). capacity 0 sizes the buffer
/// to hold everything.
ReplayBuffer buffer_from_trajectories(const TrajectorySet& demos, const Eigen::MatrixXd& features,
                                      const std::vector<bool>& terminal, std::size_t capacity = 0);

/// Online parameters, their Polyak-averaged target copy and the Adam moments
/// of the online net.
struct MlpBundle {
    MlpParams online;
    MlpParams target;
    AdamState adam;
};

struct DiqlNets {
    MlpBundle reward;
    MlpBundle q;
    MlpBundle q_shifted;
    MlpBundle classifier;
    std::optional<MlpBundle> q_constrained;
    int n_actions = 0;
};

struct DiqlConfig {
    std::vector<int> hidden = {64, 64};
    int minibatch = 32;
    double lr_reward = 1e-4;
    double lr_q = 1e-4;
    double lr_shifted = 1e-4;
    double lr_classifier = 1e-4;
    double lr_constrained = 1e-4;
    /// Target-network averaging weight.
    double tau = 1e-4;
    double gamma = 0.9;
    /// Probabilities at or below this are floored inside logs, and their
    /// reward-target terms are dropped entirely.
    double epsilon_clip = 1e-6;
    long iterations = 20000;
    /// Replaces the learned action distribution with a supplied exact one.
    bool use_true_distribution = false;
};

struct DiqlBatch {
    Eigen::MatrixXd states;       // d x m, columns are samples
    Eigen::MatrixXd next_states;  // d x m
    std::vector<int> actions;
    std::vector<char> next_terminal;
    std::vector<int> state_indices;
    std::vector<int> next_state_indices;

    int size() const { return static_cast<int>(actions.size()); }
};

/// Regression targets, all derived exclusively from target networks (plus
/// the supplied action distribution for the reward target).
struct DiqlTargets {
    Eigen::VectorXd y_shifted;
    Eigen::VectorXd y_reward;
    Eigen::VectorXd y_q;
    Eigen::VectorXd y_constrained;  // empty when no constrained head exists
    Eigen::MatrixXd eta;            // n_actions x m
    Eigen::MatrixXd reward_line;    // target reward net on the batch states
};

struct DiqlLosses {
    double reward = std::numeric_limits<double>::quiet_NaN();
    double q = std::numeric_limits<double>::quiet_NaN();
    double shifted = std::numeric_limits<double>::quiet_NaN();
    double classifier = std::numeric_limits<double>::quiet_NaN();
    double constrained = std::numeric_limits<double>::quiet_NaN();
};

struct DiqlTrainLogRow {
    long iteration = 0;
    DiqlLosses losses;
};

struct DiqlTrainResult {
    DiqlNets nets;
    std::vector<DiqlTrainLogRow> log;
};

DiqlNets init_diql_nets(int feature_dim, int n_actions, const DiqlConfig& cfg, std::uint64_t seed,
                        bool constrained);

/// Uniform minibatch sample with replacement.
DiqlBatch sample_batch(const ReplayBuffer& buffer, int m, Rng& rng);

/// Class probabilities of the online action classifier for one state.
Eigen::VectorXd classifier_probs(const DiqlNets& nets, const Eigen::VectorXd& state);

/**
 * All regression targets for a batch. `pi` holds the action distribution per
 * sample (n_actions x m). Terminal next states contribute zero to every
 * max-over-next term; with constraints the constrained target maximizes only
 * over actions safe in the next state, which requires tabular next-state
 * indices. Reads target parameters only, so perturbing any online network
 * leaves the result unchanged.
 */
DiqlTargets compute_targets(const DiqlNets& nets, const DiqlBatch& batch, const Eigen::MatrixXd& pi,
                            const DiqlConfig& cfg, const ConstraintSet* constraints = nullptr);

/// One minibatch iteration: shift-net step, classifier step (skipped under
/// use_true_distribution), reward step against the clipped target, value
/// step, then one Polyak update of every target copy.
DiqlLosses diql_iteration(DiqlNets& nets, const ReplayBuffer& buffer, const DiqlConfig& cfg,
                          Rng& rng, const PolicyTable* true_distribution = nullptr);

/// diql_iteration plus the constrained value head, whose target maximizes
/// over the safe set of the next state.
DiqlLosses dciql_iteration(DiqlNets& nets, const ReplayBuffer& buffer, const DiqlConfig& cfg,
                           Rng& rng, const ConstraintSet& constraints,
                           const PolicyTable* true_distribution = nullptr);

/// Runs cfg.iterations minibatch iterations from a fresh network stack; the
/// same seed reproduces parameters bitwise. Losses are logged every
/// log_every iterations (and at the final one).
DiqlTrainResult train_diql(const ReplayBuffer& buffer, int n_actions, const DiqlConfig& cfg,
                           std::uint64_t seed, const ConstraintSet* constraints = nullptr,
                           const PolicyTable* true_distribution = nullptr, long log_every = 100);

/// Applies a network to every row of `features` (n_states x d); returns the
/// n_states x n_outputs table. Used to read tabular reward and value tables
/// off the function approximators.
Eigen::MatrixXd evaluate_states(const MlpParams& net, const Eigen::MatrixXd& features);

}  // namespace iqlearn
