#pragma once

#include <Eigen/Dense>

namespace iqlearn {

/**
 * Per-state linear system relating rewards to log-policy targets.
 *
 * For n actions the coefficient matrix has ones on the diagonal and
 * -1/(n-1) off the diagonal. Its rows sum to zero, so its rank is n - 1 and
 * solutions form the one-dimensional family r + c * 1. The target vector is
 * built so it always lies in the column space, which keeps the system
 * consistent for every input.
 */

/// Coefficient matrix for n >= 2 actions. Throws ModelError for n < 2.
Eigen::MatrixXd build_coefficient_matrix(int n);

/// Target vector: y_i = eta_i - mean of the other eta entries. Entries of
/// the result always sum to zero (up to rounding).
Eigen::VectorXd build_target_vector(const Eigen::VectorXd& eta);

/**
 * Minimum-norm least-squares solution of the per-state system for the given
 * eta vector. The residual of the returned vector is zero up to rounding and
 * its mean is zero, which pins the representative of the solution family.
 */
Eigen::VectorXd solve_state_rewards(const Eigen::VectorXd& eta);

/**
 * Caches the orthogonal decomposition of the coefficient matrix so the same
 * action count can be solved repeatedly without re-factorizing.
 */
class StateRewardSolver {
  public:
    explicit StateRewardSolver(int n_actions);

    int n_actions() const { return n_; }

    /// Minimum-norm solution for one eta vector of length n_actions.
    Eigen::VectorXd solve(const Eigen::VectorXd& eta) const;

  private:
    int n_;
    Eigen::MatrixXd x_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> decomposition_;
};

}  // namespace iqlearn
