#include <doctest.h>

#include <cmath>

#include "iqlearn/mdp.hpp"
#include "iqlearn/rng.hpp"
#include "test_helpers.hpp"

using namespace iqlearn;

namespace {

RewardTable constant_reward(const TabularMdp& m, double c) {
    return RewardTable{Eigen::MatrixXd::Constant(m.n_states, m.n_actions, c)};
}

/// One Bellman backup of q under the library's terminal convention.
Eigen::MatrixXd bellman_apply(const TabularMdp& m, const RewardTable& r, const Eigen::MatrixXd& q) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    Eigen::MatrixXd out(m.n_states, m.n_actions);
    for (int a = 0; a < m.n_actions; ++a)
        out.col(a) = r.values.col(a) + m.gamma * (m.transitions[static_cast<std::size_t>(a)] * v);
    for (int s = 0; s < m.n_states; ++s)
        if (m.terminal[static_cast<std::size_t>(s)]) out.row(s) = r.values.row(s);
    return out;
}

}  // namespace

TEST_SUITE("mdp") {
    TEST_CASE("validate rejects malformed models") {
        TabularMdp m = testutil::chain2();
        CHECK_NOTHROW(m.validate());

        TabularMdp bad_gamma = m;
        bad_gamma.gamma = 1.5;
        CHECK_THROWS_AS(bad_gamma.validate(), ModelError);

        TabularMdp bad_row = m;
        bad_row.transitions[0](0, 1) = 0.5;  // row sums to 0.5
        CHECK_THROWS_AS(bad_row.validate(), ModelError);

        TabularMdp bad_shape = m;
        bad_shape.transitions.pop_back();
        CHECK_THROWS_AS(bad_shape.validate(), ModelError);

        TabularMdp bad_terminal = m;
        bad_terminal.terminal.pop_back();
        CHECK_THROWS_AS(bad_terminal.validate(), ModelError);
    }

    TEST_CASE("value iteration on a terminal state returns its reward") {
        const TabularMdp m = testutil::single_terminal(3);
        RewardTable r{Eigen::MatrixXd::Zero(1, 3)};
        r.values << 1.5, -0.5, 0.25;
        const ViResult res = value_iteration(m, r);
        CHECK(res.converged);
        CHECK((res.q.values - r.values).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("two-state chain accumulates one discounted terminal reward") {
        const TabularMdp m = testutil::chain2(0.9);
        RewardTable r{Eigen::MatrixXd::Zero(2, 2)};
        r.values << 1, 1, 2, 2;
        const ViResult res = value_iteration(m, r);
        CHECK(res.converged);
        CHECK(res.q.values(0, 0) == doctest::Approx(2.8).epsilon(1e-12));
        CHECK(res.q.values(0, 1) == doctest::Approx(2.8).epsilon(1e-12));
        CHECK(res.q.values(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
    }

    TEST_CASE("zero reward gives zero values") {
        Rng rng(5);
        const TabularMdp m = testutil::random_ergodic(rng);
        const ViResult res = value_iteration(m, constant_reward(m, 0.0));
        CHECK(res.converged);
        CHECK(res.q.values.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("value iteration satisfies the Bellman equation on random models") {
        Rng rng(101);
        for (int trial = 0; trial < 100; ++trial) {
            const TabularMdp m = trial % 2 == 0 ? testutil::random_ergodic(rng, 20, 5, 0.95)
                                                : testutil::random_acyclic(rng, 20, 5, 0.95);
            const RewardTable r{testutil::random_table(rng, m.n_states, m.n_actions)};
            const ViResult res = value_iteration(m, r, 1e-12);
            REQUIRE(res.converged);
            const double residual =
                (bellman_apply(m, r, res.q.values) - res.q.values).cwiseAbs().maxCoeff();
            CHECK(residual <= 1e-11);
        }
    }

    TEST_CASE("undiscounted divergence raises instead of spinning") {
        TabularMdp m = testutil::cycle2(1.0);
        CHECK_THROWS_AS((void)value_iteration(m, constant_reward(m, 1.0), 1e-10, 50),
                        ConvergenceError);
    }

    TEST_CASE("boltzmann policy matches the closed form on two actions") {
        QTable q{Eigen::MatrixXd::Zero(1, 2)};
        q.values << 1.0, 0.0;
        const PolicyTable pi = boltzmann_policy(q);
        const double e = std::exp(1.0);
        CHECK(pi.probs(0, 0) == doctest::Approx(e / (1 + e)).epsilon(1e-14));
        CHECK(pi.probs(0, 1) == doctest::Approx(1 / (1 + e)).epsilon(1e-14));
    }

    TEST_CASE("boltzmann policy is uniform on constant rows and shift invariant") {
        Rng rng(21);
        const Eigen::MatrixXd base = testutil::random_table(rng, 6, 4, -3, 3);
        const PolicyTable p1 = boltzmann_policy(QTable{base});
        for (int s = 0; s < 6; ++s) CHECK(p1.probs.row(s).sum() == doctest::Approx(1.0).epsilon(1e-14));

        Eigen::MatrixXd shifted = base;
        for (int s = 0; s < 6; ++s) shifted.row(s).array() += rng.uniform(-10, 10);
        const PolicyTable p2 = boltzmann_policy(QTable{shifted});
        CHECK((p1.probs - p2.probs).cwiseAbs().maxCoeff() <= 1e-14);

        const PolicyTable uniform = boltzmann_policy(QTable{Eigen::MatrixXd::Constant(3, 5, 2.5)});
        CHECK((uniform.probs.array() - 0.2).abs().maxCoeff() <= 1e-15);
    }

    TEST_CASE("policy evaluation on the chain matches hand values") {
        const TabularMdp m = testutil::chain2(0.9);
        RewardTable r{Eigen::MatrixXd::Zero(2, 2)};
        r.values << 1, 1, 2, 2;
        Rng rng(33);
        const PolicyTable pi = testutil::random_policy(rng, 2, 2);
        const Eigen::VectorXd v = policy_evaluation(m, r, pi);
        CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(v[0] == doctest::Approx(2.8).epsilon(1e-10));
    }

    TEST_CASE("terminal states with zero reward end the return") {
        TabularMdp m = testutil::chain2(0.9);
        RewardTable r{Eigen::MatrixXd::Zero(2, 2)};
        r.values << 3, 3, 0, 0;
        Rng rng(34);
        const PolicyTable pi = testutil::random_policy(rng, 2, 2);
        const Eigen::VectorXd v = policy_evaluation(m, r, pi);
        CHECK(v[0] == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-10));
    }

    TEST_CASE("policy evaluation of a uniform symmetric loop hits the geometric sum") {
        const TabularMdp m = testutil::cycle2(0.5);
        RewardTable r = constant_reward(m, 1.0);
        PolicyTable pi{Eigen::MatrixXd::Constant(2, 2, 0.5)};
        const Eigen::VectorXd v = policy_evaluation(m, r, pi);
        CHECK(v[0] == doctest::Approx(2.0).epsilon(1e-9));  // 1 / (1 - 0.5)
        CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-9));
    }

    TEST_CASE("identical rewards give zero expected value difference") {
        Rng rng(55);
        for (int trial = 0; trial < 20; ++trial) {
            const TabularMdp m = testutil::random_ergodic(rng, 12, 4);
            const RewardTable r{testutil::random_table(rng, m.n_states, m.n_actions)};
            CHECK(std::abs(expected_value_difference(m, r, r)) <= 1e-8);
        }
    }

    TEST_CASE("a global constant shift never changes the recovered behaviour") {
        Rng rng(56);
        for (int trial = 0; trial < 10; ++trial) {
            const TabularMdp m = testutil::random_ergodic(rng, 10, 3);
            const RewardTable r{testutil::random_table(rng, m.n_states, m.n_actions)};
            RewardTable shifted = r;
            shifted.values.array() += rng.uniform(-5, 5);
            CHECK(std::abs(expected_value_difference(m, r, shifted)) <= 1e-8);
        }
    }

    TEST_CASE("per-state shifts are value-neutral when every state is terminal") {
        TabularMdp m;
        m.n_states = 3;
        m.n_actions = 3;
        m.gamma = 0.9;
        m.terminal = {true, true, true};
        m.transitions.assign(3, Eigen::MatrixXd::Identity(3, 3));

        Rng rng(57);
        const RewardTable r{testutil::random_table(rng, 3, 3)};
        RewardTable shifted = r;
        for (int s = 0; s < 3; ++s) shifted.values.row(s).array() += rng.uniform(-4, 4);
        CHECK(std::abs(expected_value_difference(m, r, shifted)) <= 1e-8);
    }

    TEST_CASE("the expert policy itself scores a zero gap") {
        Rng rng(58);
        const TabularMdp m = testutil::random_ergodic(rng, 8, 3);
        const RewardTable r{testutil::random_table(rng, m.n_states, m.n_actions)};
        const PolicyTable expert = boltzmann_policy(value_iteration(m, r).q);
        CHECK(std::abs(policy_value_difference(m, r, expert)) <= 1e-8);
    }

    TEST_CASE("sampled trajectories are reproducible and respect the model") {
        Rng rng(70);
        const TabularMdp m = testutil::random_ergodic(rng, 10, 4);
        const PolicyTable pi = testutil::random_policy(rng, m.n_states, m.n_actions);

        const TrajectorySet a = sample_trajectories(m, pi, 50, 12, 99);
        const TrajectorySet b = sample_trajectories(m, pi, 50, 12, 99);
        REQUIRE(a.episodes.size() == 50);
        CHECK(a.episodes == b.episodes);
        CHECK(a.n_transitions() == 50 * 12);

        for (const Episode& ep : a.episodes)
            for (const Transition& t : ep) {
                CHECK(pi.probs(t.state, t.action) > 0.0);
                CHECK(m.prob(t.state, t.action, t.next_state) > 0.0);
            }

        const TrajectorySet c = sample_trajectories(m, pi, 50, 12, 100);
        CHECK(a.episodes != c.episodes);
    }

    TEST_CASE("episodes stop at terminal states") {
        const TabularMdp m = testutil::chain2();
        PolicyTable pi{Eigen::MatrixXd::Constant(2, 2, 0.5)};
        const TrajectorySet demos = sample_trajectories(m, pi, 200, 7, 5);
        for (const Episode& ep : demos.episodes) {
            // Starts at s0: one step into the terminal state. Starts at s1: empty.
            CHECK(ep.size() <= 1);
            if (!ep.empty()) {
                CHECK(ep.front().state == 0);
                CHECK(ep.front().next_state == 1);
            }
        }
        CHECK(sample_trajectories(m, pi, 0, 5, 1).episodes.empty());
    }

    TEST_CASE("topological order puts successors first on the chain") {
        const StateOrder order = topological_state_order(testutil::chain3());
        REQUIRE(order.acyclic);
        REQUIRE(order.order.size() == 3);
        CHECK(order.order[0] == 2);
        CHECK(order.order[1] == 1);
        CHECK(order.order[2] == 0);
    }

    TEST_CASE("cycles and self-loops are reported as cyclic") {
        CHECK_FALSE(topological_state_order(testutil::cycle2()).acyclic);

        TabularMdp m = testutil::chain2();
        m.transitions[0](0, 0) = 0.5;  // self-loop at the non-terminal state
        m.transitions[0](0, 1) = 0.5;
        CHECK_FALSE(topological_state_order(m).acyclic);
    }

    TEST_CASE("every support successor precedes its source on random DAGs") {
        Rng rng(81);
        for (int trial = 0; trial < 25; ++trial) {
            const TabularMdp m = testutil::random_acyclic(rng);
            const StateOrder order = topological_state_order(m);
            REQUIRE(order.acyclic);

            std::vector<int> position(static_cast<std::size_t>(m.n_states));
            for (int i = 0; i < m.n_states; ++i)
                position[static_cast<std::size_t>(order.order[static_cast<std::size_t>(i)])] = i;
            for (int s = 0; s < m.n_states; ++s) {
                if (m.terminal[static_cast<std::size_t>(s)]) continue;
                for (int a = 0; a < m.n_actions; ++a)
                    for (int s2 = 0; s2 < m.n_states; ++s2)
                        if (m.prob(s, a, s2) > 0.0)
                            CHECK(position[static_cast<std::size_t>(s2)] <
                                  position[static_cast<std::size_t>(s)]);
            }
        }
    }

    TEST_CASE("policy divergence helpers match hand values") {
        PolicyTable p{Eigen::MatrixXd(2, 2)};
        p.probs << 1.0, 0.0, 0.5, 0.5;
        PolicyTable q{Eigen::MatrixXd(2, 2)};
        q.probs << 0.5, 0.5, 0.5, 0.5;
        CHECK(max_policy_kl(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(mean_policy_kl(p, q) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
        CHECK(mean_policy_kl(p, p) == doctest::Approx(0.0));
    }
}
