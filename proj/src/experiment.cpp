#include "iqlearn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "iqlearn/deep_iql.hpp"
#include "iqlearn/iavi.hpp"
#include "iqlearn/iql.hpp"
#include "iqlearn/maxent.hpp"
#include "iqlearn/serialize.hpp"

namespace iqlearn {

namespace {

using nlohmann::json;

const std::vector<std::string> kAlgorithms = {"iavi",  "iql",    "ciql",         "diql",
                                              "dciql", "maxent", "maxent-single"};

bool known_algorithm(const std::string& name) {
    for (const std::string& a : kAlgorithms)
        if (a == name) return true;
    return false;
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (obj.is_object() && obj.contains(key)) return obj.at(key).get<T>();
    return fallback;
}

json section(const json& cfg, const std::string& name) {
    if (cfg.is_object() && cfg.contains(name)) return cfg.at(name);
    return json::object();
}

struct DemoSettings {
    int episodes = 12500;
    int horizon = 8;
};

DemoSettings demo_settings(const json& cfg) {
    const json d = section(cfg, "demos");
    DemoSettings s;
    s.episodes = get_or(d, "episodes", s.episodes);
    s.horizon = get_or(d, "horizon", s.horizon);
    return s;
}

IaviConfig iavi_config(const json& cfg) {
    const json c = section(cfg, "iavi");
    IaviConfig out;
    out.epsilon_logprob = get_or(c, "epsilon_logprob", out.epsilon_logprob);
    out.convergence_tol = get_or(c, "convergence_tol", out.convergence_tol);
    out.max_sweeps = get_or(c, "max_sweeps", out.max_sweeps);
    return out;
}

IqlConfig iql_config(const json& cfg, double gamma) {
    const json c = section(cfg, "iql");
    IqlConfig out;
    out.gamma = gamma;
    out.alpha_r = get_or(c, "alpha_r", 1e-3);
    out.alpha_q = get_or(c, "alpha_q", 1e-3);
    out.alpha_sh = get_or(c, "alpha_sh", 1e-3);
    out.alpha_c = get_or(c, "alpha_c", 1e-3);
    out.epsilon_logprob = get_or(c, "epsilon_logprob", out.epsilon_logprob);
    out.max_epochs = get_or(c, "max_epochs", 400);
    out.reward_change_tol = get_or(c, "reward_change_tol", 1e-4);
    out.episodes = get_or(c, "episodes", 0);
    out.horizon = get_or(c, "horizon", 0);
    return out;
}

DiqlConfig diql_config(const json& cfg, double gamma, bool exact_distribution) {
    const json c = section(cfg, "diql");
    DiqlConfig out;
    out.gamma = gamma;
    out.hidden = get_or(c, "hidden", out.hidden);
    out.minibatch = get_or(c, "minibatch", out.minibatch);
    out.lr_reward = get_or(c, "lr_reward", out.lr_reward);
    out.lr_q = get_or(c, "lr_q", out.lr_q);
    out.lr_shifted = get_or(c, "lr_shifted", out.lr_shifted);
    out.lr_classifier = get_or(c, "lr_classifier", out.lr_classifier);
    out.lr_constrained = get_or(c, "lr_constrained", out.lr_constrained);
    out.tau = get_or(c, "tau", out.tau);
    out.epsilon_clip = get_or(c, "epsilon_clip", out.epsilon_clip);
    out.iterations = get_or(c, "iterations", out.iterations);
    out.use_true_distribution = exact_distribution;
    return out;
}

std::string diql_feature_kind(const json& cfg) {
    return get_or<std::string>(section(cfg, "diql"), "features", "onehot");
}

MaxEntConfig maxent_config(const json& cfg, bool single_step, int demo_horizon) {
    const json c = section(cfg, "maxent");
    MaxEntConfig out;
    out.learning_rate = get_or(c, "learning_rate", out.learning_rate);
    out.max_outer_iterations = get_or(c, "max_outer_iterations", out.max_outer_iterations);
    out.reward_change_tol = get_or(c, "reward_change_tol", out.reward_change_tol);
    out.soft_vi_tol = get_or(c, "soft_vi_tol", out.soft_vi_tol);
    out.horizon = get_or(c, "horizon", demo_horizon);
    out.inner_steps = single_step ? 1 : 0;
    return out;
}

ObjectworldConstraintSpec constraint_spec(const json& cfg) {
    const json c = section(cfg, "constraint");
    ObjectworldConstraintSpec out;
    out.outer_color = get_or(c, "outer_color", out.outer_color);
    out.radius = get_or(c, "radius", out.radius);
    out.beta = get_or(c, "beta", out.beta);
    return out;
}

bool needs_demos(const std::string& algorithm, bool exact_distribution) {
    if (algorithm == "iavi" || algorithm == "maxent" || algorithm == "maxent-single")
        return !exact_distribution;
    return true;  // every sample-based learner consumes a transition stream
}

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

void save_artifact(const json& doc, const std::string& run_dir, const std::string& name,
                   RunRecord& record) {
    if (run_dir.empty()) return;
    const std::string path = (std::filesystem::path(run_dir) / name).string();
    save_json(doc, path);
    record.artifacts[name] = path;
}

void save_csv_artifact(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows,
                       const std::string& run_dir, const std::string& name, RunRecord& record) {
    if (run_dir.empty()) return;
    const std::string path = (std::filesystem::path(run_dir) / name).string();
    write_csv(path, header, rows);
    record.artifacts[name] = path;
}

long greedy_violation_sweep(const PolicyTable& greedy, const ConstraintSet& constraints) {
    long violations = 0;
    for (int s = 0; s < greedy.probs.rows(); ++s)
        for (int a = 0; a < greedy.probs.cols(); ++a)
            if (greedy.probs(s, a) > 0.0 && !constraints.safe(s, a)) ++violations;
    return violations;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

json manifest_to_json(const ExperimentManifest& m) {
    json doc{{"schema", kSchemaVersion}, {"kind", "experiment_manifest"}};
    doc["algorithm"] = m.algorithm;
    doc["environment"] = m.environment_path;
    doc["demos"] = m.demos_path;
    doc["exact_distribution"] = m.exact_distribution;
    doc["seeds"] = m.seeds;
    doc["config"] = m.config;
    doc["output_dir"] = m.output_dir;
    return doc;
}

ExperimentManifest manifest_from_json(const json& doc) {
    if (!doc.is_object() || get_or(doc, "schema", -1) != kSchemaVersion ||
        get_or<std::string>(doc, "kind", "") != "experiment_manifest")
        throw SchemaError("expected an experiment manifest document");
    ExperimentManifest m;
    m.algorithm = doc.at("algorithm").get<std::string>();
    m.environment_path = doc.at("environment").get<std::string>();
    m.demos_path = get_or<std::string>(doc, "demos", "");
    m.exact_distribution = get_or(doc, "exact_distribution", false);
    m.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    m.config = get_or(doc, "config", json::object());
    m.output_dir = get_or<std::string>(doc, "output_dir", "");
    return m;
}

json record_to_json(const RunRecord& r) {
    json doc;
    doc["algorithm"] = r.algorithm;
    doc["seed"] = r.seed;
    doc["evd"] = r.evd;
    doc["wall_clock_s"] = r.wall_clock_s;
    doc["iterations"] = r.iterations;
    doc["converged"] = r.converged;
    doc["violations"] = r.violations;
    doc["demo_violations"] = r.demo_violations;
    doc["policy_kl"] = r.policy_kl;
    doc["transitions"] = r.transitions;
    doc["artifacts"] = r.artifacts;
    doc["error"] = r.error;
    return doc;
}

RunRecord record_from_json(const json& doc) {
    RunRecord r;
    r.algorithm = doc.at("algorithm").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    // EVD and KL can round-trip as null when a run produced no number.
    r.evd = doc.at("evd").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : doc.at("evd").get<double>();
    r.wall_clock_s = doc.at("wall_clock_s").get<double>();
    r.iterations = doc.at("iterations").get<long>();
    r.converged = doc.at("converged").get<bool>();
    r.violations = doc.at("violations").get<long>();
    r.demo_violations = get_or<long>(doc, "demo_violations", -1);
    r.policy_kl = doc.at("policy_kl").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : doc.at("policy_kl").get<double>();
    r.transitions = doc.at("transitions").get<long>();
    r.artifacts = get_or(doc, "artifacts", std::map<std::string, std::string>{});
    r.error = get_or<std::string>(doc, "error", "");
    return r;
}

RunRecord run_single(const ObjectworldInstance& instance, const ExperimentManifest& manifest,
                     std::uint64_t seed, const std::string& run_dir,
                     const TrajectorySet* shared_demos) {
    if (!known_algorithm(manifest.algorithm))
        throw ModelError("unknown algorithm '" + manifest.algorithm + "'");
    if (!run_dir.empty()) std::filesystem::create_directories(run_dir);

    const TabularMdp& mdp = instance.mdp;
    const PolicyTable expert = objectworld_expert(instance);
    const DemoSettings demo_cfg = demo_settings(manifest.config);

    RunRecord record;
    record.algorithm = manifest.algorithm;
    record.seed = seed;

    const bool constrained = manifest.algorithm == "ciql" || manifest.algorithm == "dciql";
    ConstraintSet constraints;
    if (constrained) constraints = constrained_variant(instance, constraint_spec(manifest.config));

    TrajectorySet demos;
    const bool use_demos = needs_demos(manifest.algorithm, manifest.exact_distribution);
    if (use_demos) {
        demos = shared_demos != nullptr
                    ? *shared_demos
                    : sample_trajectories(mdp, expert, demo_cfg.episodes, demo_cfg.horizon, seed);
        record.transitions = static_cast<long>(demos.n_transitions());
        if (constrained) record.demo_violations = count_violations(constraints, demos);
    }

    RewardTable learned_reward;
    PolicyTable learned_policy;
    bool evd_from_policy = false;  // constrained runs score their safe greedy policy

    if (manifest.algorithm == "iavi") {
        const PolicyTable observed = manifest.exact_distribution
                                         ? expert
                                         : empirical_policy(demos, mdp.n_states, mdp.n_actions).policy;
        const Stopwatch clock;
        const IaviResult result = iavi_solve(mdp, observed, iavi_config(manifest.config));
        record.wall_clock_s = clock.seconds();
        record.iterations = result.sweeps;
        record.converged = result.converged;
        learned_reward = result.reward;
        learned_policy = boltzmann_policy(result.q);
    } else if (manifest.algorithm == "iql" || manifest.algorithm == "ciql") {
        const IqlConfig cfg = iql_config(manifest.config, mdp.gamma);
        const Stopwatch clock;
        const IqlRunResult result =
            run_iql(demos, mdp.n_states, mdp.n_actions, mdp.terminal, cfg,
                    constrained ? &constraints : nullptr,
                    manifest.exact_distribution ? &expert : nullptr);
        record.wall_clock_s = clock.seconds();
        record.iterations = result.epochs;
        record.converged = result.converged;
        learned_reward = result.state.reward;
        learned_policy = boltzmann_policy(result.state.q);
        save_artifact(iql_checkpoint_to_json(result.state, cfg), run_dir, "iql_checkpoint.json",
                      record);
        if (constrained) {
            const PolicyTable greedy =
                constrained_greedy_policy(*result.state.q_constrained, constraints);
            record.violations = greedy_violation_sweep(greedy, constraints);
            record.evd = policy_value_difference(mdp, instance.true_reward, greedy);
            evd_from_policy = true;
        }
    } else if (manifest.algorithm == "diql" || manifest.algorithm == "dciql") {
        const DiqlConfig cfg = diql_config(manifest.config, mdp.gamma, manifest.exact_distribution);
        const std::string feature_kind = diql_feature_kind(manifest.config);
        const Eigen::MatrixXd features =
            feature_kind == "onehot"
                ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states))
                : instance.features;
        const ReplayBuffer buffer = buffer_from_trajectories(demos, features, mdp.terminal);

        const Stopwatch clock;
        const DiqlTrainResult result =
            train_diql(buffer, mdp.n_actions, cfg, mix_seed(seed, 0xd1),
                       constrained ? &constraints : nullptr,
                       manifest.exact_distribution ? &expert : nullptr);
        record.wall_clock_s = clock.seconds();
        record.iterations = cfg.iterations;
        record.converged = true;  // fixed budget, completed

        learned_reward.values = evaluate_states(result.nets.reward.online, features);
        learned_policy = boltzmann_policy(QTable{evaluate_states(result.nets.q.online, features)});

        std::vector<std::vector<std::string>> rows;
        for (const DiqlTrainLogRow& row : result.log)
            rows.push_back({std::to_string(row.iteration), format_double(row.losses.reward),
                            format_double(row.losses.q), format_double(row.losses.shifted),
                            format_double(row.losses.classifier),
                            format_double(row.losses.constrained)});
        save_csv_artifact({"iteration", "loss_reward", "loss_q", "loss_shifted", "loss_classifier",
                           "loss_constrained"},
                          rows, run_dir, "training_log.csv", record);
        save_artifact(diql_checkpoint_to_json(result.nets, cfg), run_dir, "diql_checkpoint.json",
                      record);

        if (constrained) {
            const QTable qc{evaluate_states(result.nets.q_constrained->online, features)};
            const PolicyTable greedy = constrained_greedy_policy(qc, constraints);
            record.violations = greedy_violation_sweep(greedy, constraints);
            record.evd = policy_value_difference(mdp, instance.true_reward, greedy);
            evd_from_policy = true;
        }
    } else {  // maxent | maxent-single
        const MaxEntConfig cfg =
            maxent_config(manifest.config, manifest.algorithm == "maxent-single", demo_cfg.horizon);
        MaxEntResult result;
        if (manifest.exact_distribution) {
            const Eigen::VectorXd initial =
                Eigen::VectorXd::Constant(mdp.n_states, 1.0 / mdp.n_states);
            const Stopwatch clock;
            result = maxent_irl_exact(mdp, instance.features, expert, initial, cfg);
            record.wall_clock_s = clock.seconds();
        } else {
            const Stopwatch clock;
            result = maxent_irl(mdp, instance.features, demos, cfg);
            record.wall_clock_s = clock.seconds();
        }
        record.iterations = result.iterations;
        record.converged = result.converged;
        learned_reward = result.reward;
        learned_policy = boltzmann_policy(value_iteration(mdp, learned_reward).q);

        std::vector<std::vector<std::string>> rows;
        for (const MaxEntLogRow& row : result.log)
            rows.push_back({std::to_string(row.iteration), format_double(row.grad_norm),
                            format_double(row.wall_clock_s)});
        save_csv_artifact({"iteration", "grad_norm", "wall_clock_s"}, rows, run_dir,
                          "training_log.csv", record);
    }

    if (!evd_from_policy) record.evd = expected_value_difference(mdp, instance.true_reward, learned_reward);
    record.policy_kl = mean_policy_kl(expert, learned_policy);
    save_artifact(table_to_json(learned_reward.values, "reward_table"), run_dir,
                  "learned_reward.json", record);
    return record;
}

namespace {

std::vector<RunRecord> run_over_seeds(const ObjectworldInstance& instance,
                                      const ExperimentManifest& manifest,
                                      const TrajectorySet* shared_demos, int jobs) {
    const std::size_t n = manifest.seeds.size();
    std::vector<RunRecord> records(n);
    std::atomic<std::size_t> cursor{0};

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) {
                const std::uint64_t seed = manifest.seeds[i];
                try {
                    std::string run_dir;
                    if (!manifest.output_dir.empty())
                        run_dir = (std::filesystem::path(manifest.output_dir) /
                                   (manifest.algorithm + "-seed" + std::to_string(seed)))
                                      .string();
                    records[i] = run_single(instance, manifest, seed, run_dir, shared_demos);
                } catch (const std::exception& e) {
                    // A failed seed is recorded in place; the others keep going.
                    records[i].algorithm = manifest.algorithm;
                    records[i].seed = seed;
                    records[i].error = e.what();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    return records;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentManifest& manifest, int jobs) {
    if (!known_algorithm(manifest.algorithm))
        throw ModelError("unknown algorithm '" + manifest.algorithm + "'");
    if (manifest.seeds.empty()) throw ModelError("the manifest lists no seeds");
    if (jobs <= 0) throw ModelError("jobs must be positive");

    const ObjectworldInstance instance = objectworld_from_json(load_json(manifest.environment_path));

    TrajectorySet shared_demos;
    const bool have_shared = !manifest.demos_path.empty();
    if (have_shared) shared_demos = trajectories_from_json(load_json(manifest.demos_path));

    if (!manifest.output_dir.empty()) {
        std::filesystem::create_directories(manifest.output_dir);
        save_json(manifest_to_json(manifest),
                  (std::filesystem::path(manifest.output_dir) / "manifest.json").string());
    }

    const std::vector<RunRecord> records =
        run_over_seeds(instance, manifest, have_shared ? &shared_demos : nullptr, jobs);

    if (!manifest.output_dir.empty()) {
        write_records(records,
                      (std::filesystem::path(manifest.output_dir) / "records.json").string());
        write_summary_csv(records,
                          (std::filesystem::path(manifest.output_dir) / "summary.csv").string());
    }
    return records;
}

SummaryStats summarize(const std::vector<RunRecord>& records) {
    SummaryStats s;
    s.n_runs = static_cast<int>(records.size());
    if (records.empty()) return s;
    // Failed seeds count toward n_runs but contribute no statistics.
    int clean = 0;
    for (const RunRecord& r : records) {
        if (!r.error.empty()) continue;
        ++clean;
        s.evd_mean += r.evd;
        s.wall_clock_mean += r.wall_clock_s;
        if (r.converged) ++s.n_converged;
    }
    if (clean == 0) {
        s.evd_mean = std::numeric_limits<double>::quiet_NaN();
        s.evd_sd = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.evd_mean /= clean;
    s.wall_clock_mean /= clean;
    if (clean > 1) {
        double ve = 0.0, vw = 0.0;
        for (const RunRecord& r : records) {
            if (!r.error.empty()) continue;
            ve += (r.evd - s.evd_mean) * (r.evd - s.evd_mean);
            vw += (r.wall_clock_s - s.wall_clock_mean) * (r.wall_clock_s - s.wall_clock_mean);
        }
        s.evd_sd = std::sqrt(ve / (clean - 1));
        s.wall_clock_sd = std::sqrt(vw / (clean - 1));
    }
    return s;
}

void write_records(const std::vector<RunRecord>& records, const std::string& path) {
    json doc{{"schema", kSchemaVersion}, {"kind", "run_records"}};
    json arr = json::array();
    for (const RunRecord& r : records) arr.push_back(record_to_json(r));
    doc["records"] = std::move(arr);
    save_json(doc, path);
}

std::vector<RunRecord> load_records(const std::string& path) {
    const json doc = load_json(path);
    if (get_or(doc, "schema", -1) != kSchemaVersion ||
        get_or<std::string>(doc, "kind", "") != "run_records")
        throw SchemaError("expected a run_records document");
    std::vector<RunRecord> records;
    for (const json& r : doc.at("records")) records.push_back(record_from_json(r));
    return records;
}

void write_summary_csv(const std::vector<RunRecord>& records, const std::string& path) {
    const SummaryStats s = summarize(records);
    const std::string algorithm = records.empty() ? "" : records.front().algorithm;
    write_csv(path,
              {"algorithm", "n_runs", "n_converged", "evd_mean", "evd_sd", "wall_clock_mean",
               "wall_clock_sd"},
              {{algorithm, std::to_string(s.n_runs), std::to_string(s.n_converged),
                format_double(s.evd_mean), format_double(s.evd_sd),
                format_double(s.wall_clock_mean), format_double(s.wall_clock_sd)}});
}

bool self_audit(const std::string& output_dir) {
    const std::filesystem::path dir(output_dir);
    const std::vector<RunRecord> records = load_records((dir / "records.json").string());
    const SummaryStats s = summarize(records);

    std::ifstream in((dir / "summary.csv").string());
    if (!in) throw SchemaError("cannot open " + (dir / "summary.csv").string());
    std::string header, line;
    if (!std::getline(in, header) || !std::getline(in, line)) return false;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) return false;

    const auto close = [](const std::string& text, double want) {
        const double got = std::stod(text);
        if (std::isnan(want)) return std::isnan(got);
        return std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want));
    };
    return fields[1] == std::to_string(s.n_runs) && fields[2] == std::to_string(s.n_converged) &&
           close(fields[3], s.evd_mean) && close(fields[4], s.evd_sd) &&
           close(fields[5], s.wall_clock_mean) && close(fields[6], s.wall_clock_sd);
}

std::vector<CurvePoint> trajectory_curve(const ExperimentManifest& manifest,
                                         const std::vector<int>& counts, int jobs) {
    if (counts.empty()) throw ModelError("the curve needs at least one episode count");
    for (const int c : counts)
        if (c <= 0) throw ModelError("episode counts must be positive");

    const ObjectworldInstance instance = objectworld_from_json(load_json(manifest.environment_path));
    const PolicyTable expert = objectworld_expert(instance);
    const DemoSettings demo_cfg = demo_settings(manifest.config);

    if (!manifest.output_dir.empty()) std::filesystem::create_directories(manifest.output_dir);

    std::vector<CurvePoint> curve;
    for (const int count : counts) {
        ExperimentManifest point = manifest;
        point.output_dir.clear();  // per-count records are written below
        if (!point.config.is_object()) point.config = json::object();
        point.config["demos"]["episodes"] = count;

        std::vector<RunRecord> records(manifest.seeds.size());
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr failure;
        std::mutex failure_lock;
        const int workers =
            std::max(1, std::min<int>(jobs, static_cast<int>(manifest.seeds.size())));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < manifest.seeds.size();
                     i = cursor.fetch_add(1)) {
                    try {
                        const std::uint64_t seed = manifest.seeds[i];
                        const TrajectorySet demos = sample_trajectories(
                            instance.mdp, expert, count, demo_cfg.horizon,
                            mix_seed(seed, static_cast<std::uint64_t>(count)));
                        std::string run_dir;
                        if (!manifest.output_dir.empty())
                            run_dir = (std::filesystem::path(manifest.output_dir) /
                                       ("count" + std::to_string(count) + "-seed" +
                                        std::to_string(seed)))
                                          .string();
                        records[i] = run_single(instance, point, seed, run_dir, &demos);
                    } catch (...) {
                        const std::lock_guard<std::mutex> hold(failure_lock);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);

        const SummaryStats s = summarize(records);
        curve.push_back(CurvePoint{count, s.evd_mean, s.evd_sd});
        if (!manifest.output_dir.empty())
            write_records(records, (std::filesystem::path(manifest.output_dir) /
                                    ("records-count" + std::to_string(count) + ".json"))
                                       .string());
    }

    if (!manifest.output_dir.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const CurvePoint& p : curve)
            rows.push_back({std::to_string(p.episodes), format_double(p.evd_mean),
                            format_double(p.evd_sd)});
        write_csv((std::filesystem::path(manifest.output_dir) / "curve.csv").string(),
                  {"episodes", "evd_mean", "evd_sd"}, rows);
    }
    return curve;
}

}  // namespace iqlearn
