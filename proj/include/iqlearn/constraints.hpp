#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iqlearn/errors.hpp"
#include "iqlearn/mdp.hpp"

namespace iqlearn {

/// One constraint: a per-state-action cost and the threshold under which the
/// pair counts as safe. Tabular costs keep constraint sets serializable.
struct Constraint {
    Eigen::MatrixXd cost;  // n_states x n_actions
    double beta = 0.5;
    std::string name;
};

struct ConstraintSet {
    std::vector<Constraint> constraints;

    bool empty() const { return constraints.empty(); }

    bool safe(int state, int action) const {
        for (const Constraint& c : constraints)
            if (c.cost(state, action) > c.beta) return false;
        return true;
    }
};

/// Actions admissible in `state`: cost at most beta under every constraint.
/// Throws InfeasibleConstraintError when the intersection is empty.
std::vector<int> safe_set(const ConstraintSet& constraints, int state, int n_actions);

/// Checks every state has at least one safe action; throws
/// InfeasibleConstraintError listing all offending states otherwise.
void validate_feasibility(const ConstraintSet& constraints, int n_states, int n_actions);

/// Transitions in `demos` whose (state, action) violates any constraint.
long count_violations(const ConstraintSet& constraints, const TrajectorySet& demos);

}  // namespace iqlearn
