#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iqlearn/constraints.hpp"
#include "iqlearn/mdp.hpp"

namespace iqlearn {

/**
 * Randomized grid benchmark. States are cells of an n x n grid in row-major
 * order; the five actions are up, down, left, right and stay. A move lands
 * on the intended neighbour (clamped at the boundary) with probability
 * 1 - wind, otherwise it is redrawn uniformly over all five moves. The grid
 * has no terminal states.
 */
struct ObjectworldSpec {
    int n = 32;
    int colors = 2;
    int objects = 50;
    double wind = 0.3;
    std::uint64_t seed = 0;
    double gamma = 0.9;
    /// Continuous features are distances to the nearest object of each inner
    /// and outer color; the binary variant thresholds them instead.
    bool binary_features = false;
    double binary_threshold = 3.0;
};

struct PlacedObject {
    int cell = 0;
    int inner_color = 0;
    int outer_color = 0;
};

struct ObjectworldInstance {
    ObjectworldSpec spec;
    std::vector<PlacedObject> objects;
    TabularMdp mdp;
    /// Per state, 2 * colors entries: distance to the nearest object of each
    /// inner color, then of each outer color, capped at n when absent.
    Eigen::MatrixXd features;
    /// +1 within distance 3 of an outer-color-0 object and distance 2 of an
    /// outer-color-1 object, -1 within distance 3 of outer color 0 otherwise,
    /// 0 elsewhere; identical across actions.
    RewardTable true_reward;
};

enum class ObjectworldAction { up = 0, down = 1, left = 2, right = 3, stay = 4 };

/// Deterministic construction: equal ObjectworldSpec values yield the same
/// instance bitwise. Object cells are distinct; colors need at least two
/// entries because the true reward reads outer colors 0 and 1.
ObjectworldInstance generate(const ObjectworldSpec& spec);

/// Feature row of one state, recomputed from the object list.
Eigen::VectorXd features_for(const ObjectworldInstance& instance, int state);

/// Boltzmann policy of the optimal action values under the true reward.
PolicyTable objectworld_expert(const ObjectworldInstance& instance, double tol = 1e-10);

/// Constraint specification: an action is forbidden when its intended
/// destination cell lies within `radius` of any object of the given outer
/// color. Wind is ignored when judging the destination.
struct ObjectworldConstraintSpec {
    int outer_color = 0;
    double radius = 1.0;
    double beta = 0.5;
};

/// Builds the indicator-cost constraint set for the instance and validates
/// that every state keeps at least one admissible action.
ConstraintSet constrained_variant(const ObjectworldInstance& instance,
                                  const ObjectworldConstraintSpec& cspec);

/// FNV-1a hash of the canonical serialized form; equal inputs give equal
/// hashes across platforms.
std::uint64_t instance_hash(const ObjectworldInstance& instance);

/// Row-major cell helpers.
inline int cell_of(int row, int col, int n) { return row * n + col; }
inline int row_of(int cell, int n) { return cell / n; }
inline int col_of(int cell, int n) { return cell % n; }

/// Destination cell of one action with the boundary clamp and no wind.
int intended_destination(int cell, ObjectworldAction action, int n);

}  // namespace iqlearn
