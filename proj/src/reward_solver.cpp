#include "iqlearn/reward_solver.hpp"

#include "iqlearn/errors.hpp"

namespace iqlearn {

Eigen::MatrixXd build_coefficient_matrix(int n) {
    if (n < 2) throw ModelError("the reward system needs at least two actions");
    const double off = -1.0 / static_cast<double>(n - 1);
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(n, n, off);
    x.diagonal().setOnes();
    return x;
}

Eigen::VectorXd build_target_vector(const Eigen::VectorXd& eta) {
    const int n = static_cast<int>(eta.size());
    if (n < 2) throw ModelError("the reward system needs at least two actions");
    if (!eta.allFinite()) throw ModelError("eta contains non-finite entries");
    const double total = eta.sum();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y[i] = eta[i] - (total - eta[i]) / static_cast<double>(n - 1);
    return y;
}

Eigen::VectorXd solve_state_rewards(const Eigen::VectorXd& eta) {
    return StateRewardSolver(static_cast<int>(eta.size())).solve(eta);
}

StateRewardSolver::StateRewardSolver(int n_actions)
    : n_(n_actions), x_(build_coefficient_matrix(n_actions)) {
    decomposition_.compute(x_);
}

Eigen::VectorXd StateRewardSolver::solve(const Eigen::VectorXd& eta) const {
    if (static_cast<int>(eta.size()) != n_)
        throw ModelError("eta length does not match the solver's action count");
    return decomposition_.solve(build_target_vector(eta));
}

}  // namespace iqlearn
