#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "iqlearn/serialize.hpp"
#include "test_helpers.hpp"

using namespace iqlearn;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/iqlearn_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

bool same_params(const MlpParams& a, const MlpParams& b) {
    if (a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    return true;
}

}  // namespace

TEST_SUITE("serialize") {
    TEST_CASE("models round-trip exactly") {
        Rng rng(3);
        const TabularMdp m = testutil::random_ergodic(rng, 7, 3, 0.85);
        const nlohmann::json doc = to_json(m);
        CHECK(doc.at("schema") == kSchemaVersion);
        CHECK(doc.at("kind") == "tabular_mdp");
        const TabularMdp back = mdp_from_json(doc);
        CHECK(back.n_states == 7);
        CHECK(back.n_actions == 3);
        CHECK(back.gamma == m.gamma);
        CHECK(back.terminal == m.terminal);
        for (int a = 0; a < 3; ++a)
            CHECK(back.transitions[static_cast<std::size_t>(a)] ==
                  m.transitions[static_cast<std::size_t>(a)]);
    }

    TEST_CASE("loading validates the schema envelope") {
        Rng rng(4);
        const TabularMdp m = testutil::random_ergodic(rng, 3, 2);
        nlohmann::json doc = to_json(m);
        doc["schema"] = 99;
        CHECK_THROWS_AS((void)mdp_from_json(doc), SchemaError);
        doc = to_json(m);
        doc["kind"] = "banana";
        CHECK_THROWS_AS((void)mdp_from_json(doc), SchemaError);
        doc = to_json(m);
        doc.erase("schema");
        CHECK_THROWS_AS((void)mdp_from_json(doc), SchemaError);
        CHECK_THROWS_AS((void)mdp_from_json(nlohmann::json::array()), SchemaError);
    }

    TEST_CASE("malformed models are rejected on load") {
        Rng rng(5);
        nlohmann::json doc = to_json(testutil::random_ergodic(rng, 3, 2));
        doc["transitions"][0][0][0] = 5.0;  // row no longer stochastic
        CHECK_THROWS_AS((void)mdp_from_json(doc), ModelError);
    }

    TEST_CASE("tables round-trip under their declared kind") {
        Rng rng(6);
        const Eigen::MatrixXd t = testutil::random_table(rng, 4, 3);
        const nlohmann::json doc = table_to_json(t, "reward_table");
        CHECK(doc.at("kind") == "reward_table");
        CHECK(doc.at("n_states") == 4);
        CHECK(doc.at("n_actions") == 3);
        CHECK(table_from_json(doc, "reward_table") == t);
        CHECK_THROWS_AS((void)table_from_json(doc, "q_table"), SchemaError);
    }

    TEST_CASE("doubles survive the text format bit for bit") {
        Rng rng(7);
        Eigen::MatrixXd t(2, 2);
        t << 1.0 / 3.0, -0.1234567890123456789, 1e-300, 12345678.90123456789;
        const Eigen::MatrixXd back = table_from_json(table_to_json(t, "q_table"), "q_table");
        CHECK(back == t);
        CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    }

    TEST_CASE("trajectories round-trip with their sampling metadata") {
        TrajectorySet demos;
        demos.seed = 42;
        demos.horizon = 8;
        demos.episodes.push_back({Transition{0, 1, 2}, Transition{2, 0, 1}});
        demos.episodes.push_back({});
        demos.episodes.push_back({Transition{1, 4, 0}});
        const TrajectorySet back = trajectories_from_json(to_json(demos));
        CHECK(back.seed == 42);
        CHECK(back.horizon == 8);
        CHECK(back.episodes == demos.episodes);
    }

    TEST_CASE("benchmark instances round-trip including their hash") {
        ObjectworldSpec spec;
        spec.n = 6;
        spec.objects = 4;
        spec.seed = 9;
        const ObjectworldInstance inst = generate(spec);
        const ObjectworldInstance back = objectworld_from_json(to_json(inst));
        CHECK(back.spec.n == 6);
        CHECK(back.spec.seed == 9);
        CHECK(back.features == inst.features);
        CHECK(back.true_reward.values == inst.true_reward.values);
        CHECK(instance_hash(back) == instance_hash(inst));
        for (int a = 0; a < 5; ++a)
            CHECK(back.mdp.transitions[static_cast<std::size_t>(a)] ==
                  inst.mdp.transitions[static_cast<std::size_t>(a)]);
    }

    TEST_CASE("network parameters round-trip exactly") {
        const MlpParams p = mlp_init({3, 8, 2}, 11);
        const MlpParams back = mlp_from_json(to_json(p));
        CHECK(same_params(p, back));
        nlohmann::json doc = to_json(p);
        doc["layers"][0]["w"][0].erase(0);  // break a row length
        CHECK_THROWS_AS((void)mlp_from_json(doc), SchemaError);
    }

    TEST_CASE("learner checkpoints restore tables, counter and config") {
        Rng rng(13);
        IqlState st = IqlState::init(4, 3, true);
        st.reward.values = testutil::random_table(rng, 4, 3);
        st.q.values = testutil::random_table(rng, 4, 3);
        st.q_shifted.values = testutil::random_table(rng, 4, 3);
        st.q_constrained->values = testutil::random_table(rng, 4, 3);
        st.counter(2, 1) = 7;
        st.counter(0, 0) = 123456789012345LL;
        IqlConfig cfg;
        cfg.alpha_r = 0.25;
        cfg.max_epochs = 7;

        Rng gen(99);
        (void)gen.uniform();
        const IqlCheckpoint back =
            iql_checkpoint_from_json(iql_checkpoint_to_json(st, cfg, gen.save_state()));
        CHECK(back.state.reward.values == st.reward.values);
        CHECK(back.state.q.values == st.q.values);
        CHECK(back.state.q_shifted.values == st.q_shifted.values);
        REQUIRE(back.state.q_constrained.has_value());
        CHECK(back.state.q_constrained->values == st.q_constrained->values);
        CHECK(back.state.counter == st.counter);
        CHECK(back.config.alpha_r == 0.25);
        CHECK(back.config.max_epochs == 7);
        REQUIRE(back.rng_state.has_value());
        Rng resumed(0);
        resumed.load_state(*back.rng_state);
        CHECK(resumed.raw() == gen.raw());

        IqlState plain = IqlState::init(2, 2, false);
        const IqlCheckpoint p2 = iql_checkpoint_from_json(iql_checkpoint_to_json(plain, cfg));
        CHECK_FALSE(p2.state.q_constrained.has_value());
        CHECK_FALSE(p2.rng_state.has_value());
    }

    TEST_CASE("network checkpoints restore every bundle and the moments") {
        DiqlConfig cfg;
        cfg.hidden = {5};
        cfg.minibatch = 3;
        cfg.tau = 0.5;
        cfg.use_true_distribution = true;
        DiqlNets nets = init_diql_nets(2, 3, cfg, 17, true);
        nets.reward.adam.step = 12;
        nets.reward.adam.m.weights[0].setConstant(0.25);
        nets.q.online.weights[0].array() += 1.0;

        const DiqlCheckpoint back = diql_checkpoint_from_json(diql_checkpoint_to_json(nets, cfg));
        CHECK(back.nets.n_actions == 3);
        CHECK(same_params(back.nets.reward.online, nets.reward.online));
        CHECK(same_params(back.nets.reward.target, nets.reward.target));
        CHECK(same_params(back.nets.q.online, nets.q.online));
        CHECK(same_params(back.nets.classifier.target, nets.classifier.target));
        REQUIRE(back.nets.q_constrained.has_value());
        CHECK(same_params(back.nets.q_constrained->online, nets.q_constrained->online));
        CHECK(back.nets.reward.adam.step == 12);
        CHECK(back.nets.reward.adam.m.weights[0] == nets.reward.adam.m.weights[0]);
        CHECK(back.config.hidden == cfg.hidden);
        CHECK(back.config.tau == 0.5);
        CHECK(back.config.use_true_distribution);
    }

    TEST_CASE("documents survive the disk round-trip") {
        TempFile f("doc.json");
        Rng rng(19);
        const TabularMdp m = testutil::random_acyclic(rng, 10, 3);
        save_json(to_json(m), f.path);
        const TabularMdp back = mdp_from_json(load_json(f.path));
        for (int a = 0; a < m.n_actions; ++a)
            CHECK(back.transitions[static_cast<std::size_t>(a)] ==
                  m.transitions[static_cast<std::size_t>(a)]);
        CHECK_THROWS_AS((void)load_json("/tmp/iqlearn_test_does_not_exist.json"), SchemaError);

        TempFile garbage("garbage.json");
        std::ofstream(garbage.path) << "{not json";
        CHECK_THROWS_AS((void)load_json(garbage.path), SchemaError);
    }

    TEST_CASE("csv files list the header and verbatim cells") {
        TempFile f("table.csv");
        write_csv(f.path, {"a", "b"}, {{"1", "x"}, {format_double(0.5), "y"}});
        std::ifstream in(f.path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "a,b");
        std::getline(in, line);
        CHECK(line == "1,x");
        std::getline(in, line);
        CHECK(line == "0.5,y");
    }
}
