#include "iqlearn/iql.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace iqlearn {

std::vector<int> safe_set(const ConstraintSet& constraints, int state, int n_actions) {
    if (n_actions <= 0) throw ModelError("action count must be positive");
    std::vector<int> safe;
    safe.reserve(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a)
        if (constraints.safe(state, a)) safe.push_back(a);
    if (safe.empty())
        throw InfeasibleConstraintError(
            "no admissible action in state " + std::to_string(state), {state});
    return safe;
}

void validate_feasibility(const ConstraintSet& constraints, int n_states, int n_actions) {
    for (const Constraint& c : constraints.constraints)
        if (c.cost.rows() != n_states || c.cost.cols() != n_actions || !c.cost.allFinite())
            throw ModelError("constraint cost table does not match the model");
    std::vector<int> offending;
    for (int s = 0; s < n_states; ++s) {
        bool feasible = false;
        for (int a = 0; a < n_actions && !feasible; ++a) feasible = constraints.safe(s, a);
        if (!feasible) offending.push_back(s);
    }
    if (!offending.empty()) {
        std::string what = "constraints leave no admissible action in states:";
        for (const int s : offending) what += " " + std::to_string(s);
        throw InfeasibleConstraintError(what, std::move(offending));
    }
}

long count_violations(const ConstraintSet& constraints, const TrajectorySet& demos) {
    long n = 0;
    for (const Episode& ep : demos.episodes)
        for (const Transition& t : ep)
            if (!constraints.safe(t.state, t.action)) ++n;
    return n;
}

IqlState IqlState::init(int n_states, int n_actions, bool constrained) {
    if (n_states <= 0 || n_actions < 2)
        throw ModelError("tabular learning needs at least one state and two actions");
    IqlState st;
    st.reward.values = Eigen::MatrixXd::Zero(n_states, n_actions);
    st.q.values = Eigen::MatrixXd::Zero(n_states, n_actions);
    st.q_shifted.values = Eigen::MatrixXd::Zero(n_states, n_actions);
    st.counter = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_states, n_actions);
    if (constrained) st.q_constrained = QTable{Eigen::MatrixXd::Zero(n_states, n_actions)};
    return st;
}

namespace {

void check_step_inputs(const IqlState& st, const IqlConfig& cfg, const Transition& t) {
    const int S = st.n_states();
    const int A = st.n_actions();
    if (t.state < 0 || t.state >= S || t.next_state < 0 || t.next_state >= S || t.action < 0 ||
        t.action >= A)
        throw ModelError("transition indices fall outside the tables");
    if (cfg.alpha_r < 0 || cfg.alpha_r > 1 || cfg.alpha_q < 0 || cfg.alpha_q > 1 ||
        cfg.alpha_sh < 0 || cfg.alpha_sh > 1 || cfg.alpha_c < 0 || cfg.alpha_c > 1)
        throw ModelError("learning rates must lie in [0, 1]");
    if (cfg.gamma < 0 || cfg.gamma > 1) throw ModelError("gamma must lie in [0, 1]");
    if (cfg.epsilon_logprob <= 0) throw ModelError("the log floor must be positive");
}

}  // namespace

void iql_step(IqlState& st, const IqlConfig& cfg, const Transition& t, bool next_terminal,
              const PolicyTable* exact_policy) {
    check_step_inputs(st, cfg, t);
    const int A = st.n_actions();
    const int s = t.state;
    const int a = t.action;

    st.counter(s, a) += 1;

    Eigen::VectorXd pi(A);
    if (exact_policy != nullptr) {
        if (exact_policy->probs.rows() != st.n_states() || exact_policy->probs.cols() != A)
            throw ModelError("exact policy shape does not match the tables");
        pi = exact_policy->probs.row(s).transpose();
    } else {
        const Eigen::VectorXd counts = st.counter.row(s).cast<double>().transpose();
        pi = counts / counts.sum();
    }

    const double max_q_next = next_terminal ? 0.0 : st.q.values.row(t.next_state).maxCoeff();

    st.q_shifted.values(s, a) =
        (1.0 - cfg.alpha_sh) * st.q_shifted.values(s, a) + cfg.alpha_sh * cfg.gamma * max_q_next;

    Eigen::VectorXd eta(A);
    for (int b = 0; b < A; ++b)
        eta[b] = std::log(std::max(pi[b], cfg.epsilon_logprob)) - st.q_shifted.values(s, b);

    double others = 0.0;
    for (int b = 0; b < A; ++b)
        if (b != a) others += st.reward.values(s, b) - eta[b];
    const double target_r = eta[a] + others / static_cast<double>(A - 1);
    st.reward.values(s, a) = (1.0 - cfg.alpha_r) * st.reward.values(s, a) + cfg.alpha_r * target_r;

    const double target_q = st.reward.values(s, a) + cfg.gamma * max_q_next;
    st.q.values(s, a) = (1.0 - cfg.alpha_q) * st.q.values(s, a) + cfg.alpha_q * target_q;
}

void ciql_step(IqlState& st, const IqlConfig& cfg, const Transition& t, bool next_terminal,
               const ConstraintSet& constraints, const PolicyTable* exact_policy) {
    if (!st.q_constrained.has_value())
        throw ModelError("constrained update requires a state initialized with a constrained table");
    iql_step(st, cfg, t, next_terminal, exact_policy);

    const std::vector<int> safe = safe_set(constraints, t.next_state, st.n_actions());
    double max_qc_next = 0.0;
    if (!next_terminal) {
        max_qc_next = st.q_constrained->values(t.next_state, safe.front());
        for (const int b : safe)
            max_qc_next = std::max(max_qc_next, st.q_constrained->values(t.next_state, b));
    }
    const double target = st.reward.values(t.state, t.action) + cfg.gamma * max_qc_next;
    double& qc = st.q_constrained->values(t.state, t.action);
    qc = (1.0 - cfg.alpha_c) * qc + cfg.alpha_c * target;
}

IqlRunResult run_iql(const TrajectorySet& demos, int n_states, int n_actions,
                     const std::vector<bool>& terminal, const IqlConfig& cfg,
                     const ConstraintSet* constraints, const PolicyTable* exact_policy) {
    if (demos.n_transitions() == 0) throw ModelError("demonstrations are empty");
    if (static_cast<int>(terminal.size()) != n_states)
        throw ModelError("terminal flags must cover every state");
    if (cfg.max_epochs <= 0) throw ModelError("epoch cap must be positive");
    if (constraints != nullptr) validate_feasibility(*constraints, n_states, n_actions);

    IqlRunResult out;
    out.state = IqlState::init(n_states, n_actions, constraints != nullptr);

    const std::size_t episode_limit =
        cfg.episodes > 0 ? std::min<std::size_t>(demos.episodes.size(), static_cast<std::size_t>(cfg.episodes))
                         : demos.episodes.size();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const Eigen::MatrixXd before = out.state.reward.values;
        for (std::size_t e = 0; e < episode_limit; ++e) {
            const Episode& ep = demos.episodes[e];
            const std::size_t step_limit =
                cfg.horizon > 0 ? std::min<std::size_t>(ep.size(), static_cast<std::size_t>(cfg.horizon))
                                : ep.size();
            for (std::size_t i = 0; i < step_limit; ++i) {
                const Transition& t = ep[i];
                if (t.next_state < 0 || t.next_state >= n_states)
                    throw ModelError("demonstration indices fall outside the model");
                const bool next_terminal = terminal[static_cast<std::size_t>(t.next_state)];
                if (constraints != nullptr)
                    ciql_step(out.state, cfg, t, next_terminal, *constraints, exact_policy);
                else
                    iql_step(out.state, cfg, t, next_terminal, exact_policy);
            }
        }
        out.epochs = epoch;
        out.final_reward_change = (out.state.reward.values - before).cwiseAbs().maxCoeff();
        if (cfg.max_epochs > 1 && out.final_reward_change < cfg.reward_change_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

PolicyTable constrained_greedy_policy(const QTable& q_constrained, const ConstraintSet& constraints) {
    const int S = static_cast<int>(q_constrained.values.rows());
    const int A = static_cast<int>(q_constrained.values.cols());
    if (S == 0 || A == 0) throw ModelError("constrained action values are empty");

    PolicyTable out;
    out.probs = Eigen::MatrixXd::Zero(S, A);
    for (int s = 0; s < S; ++s) {
        const std::vector<int> safe = safe_set(constraints, s, A);
        int best = safe.front();
        for (const int a : safe)
            if (q_constrained.values(s, a) > q_constrained.values(s, best)) best = a;
        out.probs(s, best) = 1.0;
    }
    return out;
}

}  // namespace iqlearn
