#include "iqlearn/objectworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "iqlearn/iql.hpp"
#include "iqlearn/rng.hpp"

namespace iqlearn {

int intended_destination(int cell, ObjectworldAction action, int n) {
    int r = row_of(cell, n);
    int c = col_of(cell, n);
    switch (action) {
        case ObjectworldAction::up: r -= 1; break;
        case ObjectworldAction::down: r += 1; break;
        case ObjectworldAction::left: c -= 1; break;
        case ObjectworldAction::right: c += 1; break;
        case ObjectworldAction::stay: break;
    }
    r = std::clamp(r, 0, n - 1);
    c = std::clamp(c, 0, n - 1);
    return cell_of(r, c, n);
}

namespace {

constexpr int kActions = 5;

double cell_distance(int a, int b, int n) {
    const double dr = static_cast<double>(row_of(a, n) - row_of(b, n));
    const double dc = static_cast<double>(col_of(a, n) - col_of(b, n));
    return std::sqrt(dr * dr + dc * dc);
}

/// Distance from `cell` to the nearest listed object cell; +inf when empty.
double nearest_distance(int cell, const std::vector<int>& object_cells, int n) {
    double best = std::numeric_limits<double>::infinity();
    for (const int oc : object_cells) best = std::min(best, cell_distance(cell, oc, n));
    return best;
}

struct ColorIndex {
    std::vector<std::vector<int>> inner;  // object cells per inner color
    std::vector<std::vector<int>> outer;
};

ColorIndex index_colors(const ObjectworldInstance& inst) {
    ColorIndex idx;
    idx.inner.resize(static_cast<std::size_t>(inst.spec.colors));
    idx.outer.resize(static_cast<std::size_t>(inst.spec.colors));
    for (const PlacedObject& o : inst.objects) {
        idx.inner[static_cast<std::size_t>(o.inner_color)].push_back(o.cell);
        idx.outer[static_cast<std::size_t>(o.outer_color)].push_back(o.cell);
    }
    return idx;
}

Eigen::VectorXd state_features(const ObjectworldInstance& inst, const ColorIndex& idx, int state) {
    const int colors = inst.spec.colors;
    const int n = inst.spec.n;
    Eigen::VectorXd f(2 * colors);
    for (int k = 0; k < colors; ++k) {
        const double d_inner = nearest_distance(state, idx.inner[static_cast<std::size_t>(k)], n);
        const double d_outer = nearest_distance(state, idx.outer[static_cast<std::size_t>(k)], n);
        f[k] = std::isinf(d_inner) ? static_cast<double>(n) : d_inner;
        f[colors + k] = std::isinf(d_outer) ? static_cast<double>(n) : d_outer;
    }
    if (inst.spec.binary_features)
        for (int i = 0; i < f.size(); ++i) f[i] = f[i] <= inst.spec.binary_threshold ? 1.0 : 0.0;
    return f;
}

void validate_spec(const ObjectworldSpec& spec) {
    if (spec.n < 1) throw ModelError("grid size must be positive");
    if (spec.colors < 2) throw ModelError("the benchmark needs at least two colors");
    if (spec.objects < 0 || spec.objects > spec.n * spec.n)
        throw ModelError("object count must fit on the grid");
    if (spec.wind < 0.0 || spec.wind > 1.0) throw ModelError("wind must lie in [0, 1]");
    if (spec.gamma < 0.0 || spec.gamma > 1.0) throw ModelError("gamma must lie in [0, 1]");
}

}  // namespace

ObjectworldInstance generate(const ObjectworldSpec& spec) {
    validate_spec(spec);
    const int S = spec.n * spec.n;

    ObjectworldInstance inst;
    inst.spec = spec;

    Rng rng(spec.seed);
    // Distinct cells via a partial shuffle; draw order fixes the instance.
    std::vector<int> cells(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) cells[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < spec.objects; ++i) {
        const int j = i + rng.uniform_int(S - i);
        std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < spec.objects; ++i) {
        PlacedObject o;
        o.cell = cells[static_cast<std::size_t>(i)];
        o.inner_color = rng.uniform_int(spec.colors);
        o.outer_color = rng.uniform_int(spec.colors);
        inst.objects.push_back(o);
    }

    inst.mdp.n_states = S;
    inst.mdp.n_actions = kActions;
    inst.mdp.gamma = spec.gamma;
    inst.mdp.terminal.assign(static_cast<std::size_t>(S), false);
    inst.mdp.transitions.assign(kActions, Eigen::MatrixXd::Zero(S, S));
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < kActions; ++a) {
            const int dest = intended_destination(s, static_cast<ObjectworldAction>(a), spec.n);
            inst.mdp.transitions[static_cast<std::size_t>(a)](s, dest) += 1.0 - spec.wind;
        }
        for (int b = 0; b < kActions; ++b) {
            const int dest = intended_destination(s, static_cast<ObjectworldAction>(b), spec.n);
            for (int a = 0; a < kActions; ++a)
                inst.mdp.transitions[static_cast<std::size_t>(a)](s, dest) += spec.wind / kActions;
        }
    }

    const ColorIndex idx = index_colors(inst);
    inst.features.resize(S, 2 * spec.colors);
    for (int s = 0; s < S; ++s) inst.features.row(s) = state_features(inst, idx, s).transpose();

    inst.true_reward.values.resize(S, kActions);
    for (int s = 0; s < S; ++s) {
        const double d0 = nearest_distance(s, idx.outer[0], spec.n);
        const double d1 = nearest_distance(s, idx.outer[1], spec.n);
        double r = 0.0;
        if (d0 <= 3.0) r = d1 <= 2.0 ? 1.0 : -1.0;
        inst.true_reward.values.row(s).setConstant(r);
    }
    return inst;
}

Eigen::VectorXd features_for(const ObjectworldInstance& instance, int state) {
    if (state < 0 || state >= instance.mdp.n_states) throw ModelError("state index out of range");
    return state_features(instance, index_colors(instance), state);
}

PolicyTable objectworld_expert(const ObjectworldInstance& instance, double tol) {
    return boltzmann_policy(value_iteration(instance.mdp, instance.true_reward, tol).q);
}

ConstraintSet constrained_variant(const ObjectworldInstance& instance,
                                  const ObjectworldConstraintSpec& cspec) {
    if (cspec.outer_color < 0 || cspec.outer_color >= instance.spec.colors)
        throw ModelError("constraint color out of range");

    const ColorIndex idx = index_colors(instance);
    const std::vector<int>& guarded = idx.outer[static_cast<std::size_t>(cspec.outer_color)];
    const int S = instance.mdp.n_states;

    Constraint c;
    c.beta = cspec.beta;
    c.name = "avoid-outer-color-" + std::to_string(cspec.outer_color);
    c.cost = Eigen::MatrixXd::Zero(S, kActions);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < kActions; ++a) {
            const int dest = intended_destination(s, static_cast<ObjectworldAction>(a), instance.spec.n);
            if (nearest_distance(dest, guarded, instance.spec.n) <= cspec.radius) c.cost(s, a) = 1.0;
        }

    ConstraintSet set;
    set.constraints.push_back(std::move(c));
    validate_feasibility(set, S, kActions);
    return set;
}

std::uint64_t instance_hash(const ObjectworldInstance& instance) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    };
    const auto mix_double = [&mix](double x) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        mix(bits);
    };

    mix(static_cast<std::uint64_t>(instance.spec.n));
    mix(static_cast<std::uint64_t>(instance.spec.colors));
    mix(static_cast<std::uint64_t>(instance.spec.objects));
    mix_double(instance.spec.wind);
    mix(instance.spec.seed);
    mix_double(instance.spec.gamma);
    mix(instance.spec.binary_features ? 1 : 0);
    mix_double(instance.spec.binary_threshold);
    for (const PlacedObject& o : instance.objects) {
        mix(static_cast<std::uint64_t>(o.cell));
        mix(static_cast<std::uint64_t>(o.inner_color));
        mix(static_cast<std::uint64_t>(o.outer_color));
    }
    for (int s = 0; s < instance.features.rows(); ++s)
        for (int j = 0; j < instance.features.cols(); ++j) mix_double(instance.features(s, j));
    for (int s = 0; s < instance.true_reward.values.rows(); ++s)
        for (int a = 0; a < instance.true_reward.values.cols(); ++a)
            mix_double(instance.true_reward.values(s, a));
    return h;
}

}  // namespace iqlearn
