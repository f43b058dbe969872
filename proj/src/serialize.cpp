#include "iqlearn/serialize.hpp"

#include <cstdio>
#include <fstream>

#include "iqlearn/errors.hpp"

namespace iqlearn {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, long expect_rows = -1, long expect_cols = -1) {
    if (!rows.is_array()) throw SchemaError("expected an array of rows");
    const long nr = static_cast<long>(rows.size());
    if (expect_rows >= 0 && nr != expect_rows) throw SchemaError("unexpected row count");
    long nc = expect_cols;
    if (nr > 0) {
        if (!rows[0].is_array()) throw SchemaError("expected an array of rows");
        if (nc < 0) nc = static_cast<long>(rows[0].size());
    }
    if (nr == 0) return Eigen::MatrixXd(0, std::max<long>(nc, 0));

    Eigen::MatrixXd m(nr, nc);
    for (long r = 0; r < nr; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<long>(row.size()) != nc)
            throw SchemaError("ragged matrix rows");
        for (long c = 0; c < nc; ++c) {
            const json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw SchemaError("matrix entries must be numbers");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    if (!arr.is_array()) throw SchemaError("expected an array");
    Eigen::VectorXd v(static_cast<long>(arr.size()));
    for (long i = 0; i < v.size(); ++i) {
        if (!arr[static_cast<std::size_t>(i)].is_number())
            throw SchemaError("vector entries must be numbers");
        v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

void check_envelope(const json& doc, const std::string& kind) {
    if (!doc.is_object()) throw SchemaError("expected a JSON object");
    if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
        doc["schema"].get<int>() != kSchemaVersion)
        throw SchemaError("unsupported schema version for " + kind);
    if (!doc.contains("kind") || doc["kind"] != kind)
        throw SchemaError("expected document kind '" + kind + "'");
}

json envelope(const std::string& kind) {
    return json{{"schema", kSchemaVersion}, {"kind", kind}};
}

}  // namespace

json to_json(const TabularMdp& mdp) {
    json doc = envelope("tabular_mdp");
    doc["n_states"] = mdp.n_states;
    doc["n_actions"] = mdp.n_actions;
    doc["gamma"] = mdp.gamma;
    json terminal = json::array();
    for (const bool t : mdp.terminal) terminal.push_back(t);
    doc["terminal"] = std::move(terminal);
    json transitions = json::array();
    for (const Eigen::MatrixXd& p : mdp.transitions) transitions.push_back(matrix_to_json(p));
    doc["transitions"] = std::move(transitions);
    return doc;
}

TabularMdp mdp_from_json(const json& doc) {
    check_envelope(doc, "tabular_mdp");
    TabularMdp mdp;
    mdp.n_states = doc.at("n_states").get<int>();
    mdp.n_actions = doc.at("n_actions").get<int>();
    mdp.gamma = doc.at("gamma").get<double>();
    for (const json& t : doc.at("terminal")) mdp.terminal.push_back(t.get<bool>());
    for (const json& p : doc.at("transitions"))
        mdp.transitions.push_back(matrix_from_json(p, mdp.n_states, mdp.n_states));
    mdp.validate();
    return mdp;
}

json table_to_json(const Eigen::MatrixXd& values, const std::string& kind) {
    json doc = envelope(kind);
    doc["n_states"] = values.rows();
    doc["n_actions"] = values.cols();
    doc["values"] = matrix_to_json(values);
    return doc;
}

Eigen::MatrixXd table_from_json(const json& doc, const std::string& kind) {
    check_envelope(doc, kind);
    return matrix_from_json(doc.at("values"), doc.at("n_states").get<long>(),
                            doc.at("n_actions").get<long>());
}

json to_json(const TrajectorySet& demos) {
    json doc = envelope("trajectory_set");
    doc["seed"] = demos.seed;
    doc["horizon"] = demos.horizon;
    json episodes = json::array();
    for (const Episode& ep : demos.episodes) {
        json steps = json::array();
        for (const Transition& t : ep) steps.push_back(json::array({t.state, t.action, t.next_state}));
        episodes.push_back(std::move(steps));
    }
    doc["episodes"] = std::move(episodes);
    return doc;
}

TrajectorySet trajectories_from_json(const json& doc) {
    check_envelope(doc, "trajectory_set");
    TrajectorySet demos;
    demos.seed = doc.at("seed").get<std::uint64_t>();
    demos.horizon = doc.at("horizon").get<int>();
    for (const json& ep : doc.at("episodes")) {
        Episode episode;
        for (const json& step : ep) {
            if (!step.is_array() || step.size() != 3)
                throw SchemaError("each step must be a [state, action, next_state] triple");
            episode.push_back(Transition{step[0].get<int>(), step[1].get<int>(), step[2].get<int>()});
        }
        demos.episodes.push_back(std::move(episode));
    }
    return demos;
}

json to_json(const ObjectworldInstance& instance) {
    json doc = envelope("objectworld_instance");
    doc["spec"] = json{{"n", instance.spec.n},
                       {"colors", instance.spec.colors},
                       {"objects", instance.spec.objects},
                       {"wind", instance.spec.wind},
                       {"seed", instance.spec.seed},
                       {"gamma", instance.spec.gamma},
                       {"binary_features", instance.spec.binary_features},
                       {"binary_threshold", instance.spec.binary_threshold}};
    json objects = json::array();
    for (const PlacedObject& o : instance.objects)
        objects.push_back(json{{"cell", o.cell}, {"inner", o.inner_color}, {"outer", o.outer_color}});
    doc["objects"] = std::move(objects);
    doc["mdp"] = to_json(instance.mdp);
    doc["features"] = matrix_to_json(instance.features);
    doc["true_reward"] = table_to_json(instance.true_reward.values, "reward_table");
    return doc;
}

ObjectworldInstance objectworld_from_json(const json& doc) {
    check_envelope(doc, "objectworld_instance");
    ObjectworldInstance inst;
    const json& spec = doc.at("spec");
    inst.spec.n = spec.at("n").get<int>();
    inst.spec.colors = spec.at("colors").get<int>();
    inst.spec.objects = spec.at("objects").get<int>();
    inst.spec.wind = spec.at("wind").get<double>();
    inst.spec.seed = spec.at("seed").get<std::uint64_t>();
    inst.spec.gamma = spec.at("gamma").get<double>();
    inst.spec.binary_features = spec.at("binary_features").get<bool>();
    inst.spec.binary_threshold = spec.at("binary_threshold").get<double>();
    for (const json& o : doc.at("objects"))
        inst.objects.push_back(
            PlacedObject{o.at("cell").get<int>(), o.at("inner").get<int>(), o.at("outer").get<int>()});
    inst.mdp = mdp_from_json(doc.at("mdp"));
    inst.features = matrix_from_json(doc.at("features"), inst.mdp.n_states, 2L * inst.spec.colors);
    inst.true_reward.values = table_from_json(doc.at("true_reward"), "reward_table");
    return inst;
}

json to_json(const MlpParams& params) {
    json doc = envelope("mlp");
    json sizes = json::array();
    for (const int s : params.layer_sizes()) sizes.push_back(s);
    doc["sizes"] = std::move(sizes);
    json layers = json::array();
    for (std::size_t l = 0; l < params.weights.size(); ++l)
        layers.push_back(json{{"w", matrix_to_json(params.weights[l])},
                              {"b", vector_to_json(params.biases[l])}});
    doc["layers"] = std::move(layers);
    return doc;
}

MlpParams mlp_from_json(const json& doc) {
    check_envelope(doc, "mlp");
    MlpParams p;
    const json& layers = doc.at("layers");
    for (const json& layer : layers) {
        p.weights.push_back(matrix_from_json(layer.at("w")));
        p.biases.push_back(vector_from_json(layer.at("b")));
    }
    const json& sizes = doc.at("sizes");
    const std::vector<int> actual = p.layer_sizes();
    if (sizes.size() != actual.size()) throw SchemaError("layer sizes disagree with tensors");
    for (std::size_t i = 0; i < actual.size(); ++i)
        if (sizes[i].get<int>() != actual[i]) throw SchemaError("layer sizes disagree with tensors");
    return p;
}

namespace {

json iql_config_to_json(const IqlConfig& cfg) {
    return json{{"alpha_r", cfg.alpha_r},
                {"alpha_q", cfg.alpha_q},
                {"alpha_sh", cfg.alpha_sh},
                {"alpha_c", cfg.alpha_c},
                {"gamma", cfg.gamma},
                {"epsilon_logprob", cfg.epsilon_logprob},
                {"episodes", cfg.episodes},
                {"horizon", cfg.horizon},
                {"max_epochs", cfg.max_epochs},
                {"reward_change_tol", cfg.reward_change_tol}};
}

IqlConfig iql_config_from_json(const json& doc) {
    IqlConfig cfg;
    cfg.alpha_r = doc.at("alpha_r").get<double>();
    cfg.alpha_q = doc.at("alpha_q").get<double>();
    cfg.alpha_sh = doc.at("alpha_sh").get<double>();
    cfg.alpha_c = doc.at("alpha_c").get<double>();
    cfg.gamma = doc.at("gamma").get<double>();
    cfg.epsilon_logprob = doc.at("epsilon_logprob").get<double>();
    cfg.episodes = doc.at("episodes").get<int>();
    cfg.horizon = doc.at("horizon").get<int>();
    cfg.max_epochs = doc.at("max_epochs").get<int>();
    cfg.reward_change_tol = doc.at("reward_change_tol").get<double>();
    return cfg;
}

}  // namespace

json iql_checkpoint_to_json(const IqlState& state, const IqlConfig& cfg,
                            const std::optional<std::string>& rng_state) {
    json doc = envelope("iql_checkpoint");
    doc["config"] = iql_config_to_json(cfg);
    doc["reward"] = matrix_to_json(state.reward.values);
    doc["q"] = matrix_to_json(state.q.values);
    doc["q_shifted"] = matrix_to_json(state.q_shifted.values);
    json counter = json::array();
    for (int s = 0; s < state.counter.rows(); ++s) {
        json row = json::array();
        for (int a = 0; a < state.counter.cols(); ++a) row.push_back(state.counter(s, a));
        counter.push_back(std::move(row));
    }
    doc["counter"] = std::move(counter);
    doc["q_constrained"] =
        state.q_constrained.has_value() ? matrix_to_json(state.q_constrained->values) : json();
    doc["rng_state"] = rng_state.has_value() ? json(*rng_state) : json();
    return doc;
}

IqlCheckpoint iql_checkpoint_from_json(const json& doc) {
    check_envelope(doc, "iql_checkpoint");
    IqlCheckpoint cp;
    cp.config = iql_config_from_json(doc.at("config"));
    cp.state.reward.values = matrix_from_json(doc.at("reward"));
    cp.state.q.values = matrix_from_json(doc.at("q"), cp.state.reward.values.rows(),
                                         cp.state.reward.values.cols());
    cp.state.q_shifted.values = matrix_from_json(doc.at("q_shifted"), cp.state.reward.values.rows(),
                                                 cp.state.reward.values.cols());
    const json& counter = doc.at("counter");
    cp.state.counter.resize(cp.state.reward.values.rows(), cp.state.reward.values.cols());
    if (static_cast<long>(counter.size()) != cp.state.counter.rows())
        throw SchemaError("counter row count mismatch");
    for (long s = 0; s < cp.state.counter.rows(); ++s) {
        const json& row = counter[static_cast<std::size_t>(s)];
        if (static_cast<long>(row.size()) != cp.state.counter.cols())
            throw SchemaError("counter column count mismatch");
        for (long a = 0; a < cp.state.counter.cols(); ++a)
            cp.state.counter(s, a) = row[static_cast<std::size_t>(a)].get<std::int64_t>();
    }
    if (!doc.at("q_constrained").is_null())
        cp.state.q_constrained = QTable{matrix_from_json(doc.at("q_constrained"),
                                                         cp.state.reward.values.rows(),
                                                         cp.state.reward.values.cols())};
    if (!doc.at("rng_state").is_null()) cp.rng_state = doc.at("rng_state").get<std::string>();
    return cp;
}

namespace {

json diql_config_to_json(const DiqlConfig& cfg) {
    return json{{"hidden", cfg.hidden},
                {"minibatch", cfg.minibatch},
                {"lr_reward", cfg.lr_reward},
                {"lr_q", cfg.lr_q},
                {"lr_shifted", cfg.lr_shifted},
                {"lr_classifier", cfg.lr_classifier},
                {"lr_constrained", cfg.lr_constrained},
                {"tau", cfg.tau},
                {"gamma", cfg.gamma},
                {"epsilon_clip", cfg.epsilon_clip},
                {"iterations", cfg.iterations},
                {"use_true_distribution", cfg.use_true_distribution}};
}

DiqlConfig diql_config_from_json(const json& doc) {
    DiqlConfig cfg;
    cfg.hidden = doc.at("hidden").get<std::vector<int>>();
    cfg.minibatch = doc.at("minibatch").get<int>();
    cfg.lr_reward = doc.at("lr_reward").get<double>();
    cfg.lr_q = doc.at("lr_q").get<double>();
    cfg.lr_shifted = doc.at("lr_shifted").get<double>();
    cfg.lr_classifier = doc.at("lr_classifier").get<double>();
    cfg.lr_constrained = doc.at("lr_constrained").get<double>();
    cfg.tau = doc.at("tau").get<double>();
    cfg.gamma = doc.at("gamma").get<double>();
    cfg.epsilon_clip = doc.at("epsilon_clip").get<double>();
    cfg.iterations = doc.at("iterations").get<long>();
    cfg.use_true_distribution = doc.at("use_true_distribution").get<bool>();
    return cfg;
}

json bundle_to_json(const MlpBundle& b) {
    return json{{"online", to_json(b.online)},
                {"target", to_json(b.target)},
                {"adam_m", to_json(b.adam.m)},
                {"adam_v", to_json(b.adam.v)},
                {"adam_step", b.adam.step}};
}

MlpBundle bundle_from_json(const json& doc) {
    MlpBundle b;
    b.online = mlp_from_json(doc.at("online"));
    b.target = mlp_from_json(doc.at("target"));
    b.adam.m = mlp_from_json(doc.at("adam_m"));
    b.adam.v = mlp_from_json(doc.at("adam_v"));
    b.adam.step = doc.at("adam_step").get<long>();
    return b;
}

}  // namespace

json diql_checkpoint_to_json(const DiqlNets& nets, const DiqlConfig& cfg,
                             const std::optional<std::string>& rng_state) {
    json doc = envelope("diql_checkpoint");
    doc["config"] = diql_config_to_json(cfg);
    doc["n_actions"] = nets.n_actions;
    doc["reward"] = bundle_to_json(nets.reward);
    doc["q"] = bundle_to_json(nets.q);
    doc["q_shifted"] = bundle_to_json(nets.q_shifted);
    doc["classifier"] = bundle_to_json(nets.classifier);
    doc["q_constrained"] =
        nets.q_constrained.has_value() ? bundle_to_json(*nets.q_constrained) : json();
    doc["rng_state"] = rng_state.has_value() ? json(*rng_state) : json();
    return doc;
}

DiqlCheckpoint diql_checkpoint_from_json(const json& doc) {
    check_envelope(doc, "diql_checkpoint");
    DiqlCheckpoint cp;
    cp.config = diql_config_from_json(doc.at("config"));
    cp.nets.n_actions = doc.at("n_actions").get<int>();
    cp.nets.reward = bundle_from_json(doc.at("reward"));
    cp.nets.q = bundle_from_json(doc.at("q"));
    cp.nets.q_shifted = bundle_from_json(doc.at("q_shifted"));
    cp.nets.classifier = bundle_from_json(doc.at("classifier"));
    if (!doc.at("q_constrained").is_null())
        cp.nets.q_constrained = bundle_from_json(doc.at("q_constrained"));
    if (!doc.at("rng_state").is_null()) cp.rng_state = doc.at("rng_state").get<std::string>();
    return cp;
}

void save_json(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open " + path + " for writing");
    out << doc.dump(1, '\t') << '\n';
    if (!out) throw SchemaError("failed while writing " + path);
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError("malformed JSON in " + path + ": " + e.what());
    }
    return doc;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "");
    out << '\n';
    for (const std::vector<std::string>& row : rows) {
        if (row.size() != header.size()) throw SchemaError("CSV row width disagrees with the header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "");
        out << '\n';
    }
    if (!out) throw SchemaError("failed while writing " + path);
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

}  // namespace iqlearn
