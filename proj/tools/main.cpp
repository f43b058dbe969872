#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iqlearn/experiment.hpp"
#include "iqlearn/iavi.hpp"
#include "iqlearn/serialize.hpp"

namespace {

using iqlearn::ExperimentManifest;
using nlohmann::json;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::string token;
    for (const char c : text + ",") {
        if (c == ',') {
            if (!token.empty()) seeds.push_back(std::stoull(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "expected a comma-separated list");
    return seeds;
}

std::vector<int> parse_count_list(const std::string& text) {
    std::vector<int> counts;
    for (const std::uint64_t s : parse_seed_list(text)) counts.push_back(static_cast<int>(s));
    return counts;
}

int cmd_gen_env(const iqlearn::ObjectworldSpec& spec, const std::string& out) {
    const iqlearn::ObjectworldInstance instance = iqlearn::generate(spec);
    iqlearn::save_json(iqlearn::to_json(instance), out);
    std::cout << "wrote " << out << " (" << instance.mdp.n_states << " states, hash "
              << iqlearn::instance_hash(instance) << ")\n";
    return 0;
}

int cmd_sample_demos(const std::string& env_path, int episodes, int horizon, std::uint64_t seed,
                     bool exact, const std::string& out) {
    const iqlearn::ObjectworldInstance instance =
        iqlearn::objectworld_from_json(iqlearn::load_json(env_path));
    const iqlearn::PolicyTable expert = iqlearn::objectworld_expert(instance);
    if (exact) {
        iqlearn::save_json(iqlearn::table_to_json(expert.probs, "policy_table"), out);
        std::cout << "wrote exact expert action distribution to " << out << "\n";
        return 0;
    }
    const iqlearn::TrajectorySet demos =
        iqlearn::sample_trajectories(instance.mdp, expert, episodes, horizon, seed);
    iqlearn::save_json(iqlearn::to_json(demos), out);
    std::cout << "wrote " << demos.episodes.size() << " episodes (" << demos.n_transitions()
              << " transitions) to " << out << "\n";
    return 0;
}

int cmd_run(ExperimentManifest manifest, const std::string& config_path, int jobs) {
    if (!config_path.empty()) manifest.config = iqlearn::load_json(config_path);
    const std::vector<iqlearn::RunRecord> records = iqlearn::run_experiment(manifest, jobs);
    const iqlearn::SummaryStats s = iqlearn::summarize(records);
    std::cout << manifest.algorithm << ": evd " << s.evd_mean << " +- " << s.evd_sd
              << ", wall-clock " << s.wall_clock_mean << " s over " << s.n_runs << " seed(s), "
              << s.n_converged << " converged\n";
    int failed = 0;
    for (const iqlearn::RunRecord& r : records)
        if (!r.error.empty()) {
            std::cerr << "seed " << r.seed << " failed: " << r.error << "\n";
            ++failed;
        }
    if (!manifest.output_dir.empty()) std::cout << "outputs under " << manifest.output_dir << "\n";
    return failed == 0 ? 0 : 1;
}

int cmd_curve(ExperimentManifest manifest, const std::string& config_path,
              const std::string& counts_text, int jobs) {
    if (!config_path.empty()) manifest.config = iqlearn::load_json(config_path);
    const std::vector<iqlearn::CurvePoint> curve =
        iqlearn::trajectory_curve(manifest, parse_count_list(counts_text), jobs);
    for (const iqlearn::CurvePoint& p : curve)
        std::cout << p.episodes << " episodes: evd " << p.evd_mean << " +- " << p.evd_sd << "\n";
    return 0;
}

int cmd_evd(const std::string& env_path, const std::string& reward_path) {
    const iqlearn::ObjectworldInstance instance =
        iqlearn::objectworld_from_json(iqlearn::load_json(env_path));
    iqlearn::RewardTable learned;
    learned.values = iqlearn::table_from_json(iqlearn::load_json(reward_path), "reward_table");
    std::cout << iqlearn::expected_value_difference(instance.mdp, instance.true_reward, learned)
              << "\n";
    return 0;
}

int cmd_inspect(const std::string& dir) {
    const std::vector<iqlearn::RunRecord> records =
        iqlearn::load_records(dir + "/records.json");
    const iqlearn::SummaryStats s = iqlearn::summarize(records);
    std::cout << "runs " << s.n_runs << ", converged " << s.n_converged << ", evd " << s.evd_mean
              << " +- " << s.evd_sd << ", wall-clock " << s.wall_clock_mean << " +- "
              << s.wall_clock_sd << " s\n";
    const bool ok = iqlearn::self_audit(dir);
    std::cout << (ok ? "summary.csv matches the records" : "summary.csv DISAGREES with the records")
              << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse reinforcement learning toolkit: closed-form and sampled reward recovery "
                 "on tabular models, deep variants, a maximum-entropy baseline and a randomized "
                 "grid benchmark"};
    app.require_subcommand(1);

    // gen-env
    iqlearn::ObjectworldSpec spec;
    std::string out_path;
    CLI::App* gen = app.add_subcommand("gen-env", "Generate a benchmark grid environment");
    gen->add_option("--n", spec.n, "Grid side length")->capture_default_str();
    gen->add_option("--colors", spec.colors, "Number of colors")->capture_default_str();
    gen->add_option("--objects", spec.objects, "Number of placed objects")->capture_default_str();
    gen->add_option("--wind", spec.wind, "Random-move probability")->capture_default_str();
    gen->add_option("--seed", spec.seed, "Placement seed")->capture_default_str();
    gen->add_option("--gamma", spec.gamma, "Discount factor")->capture_default_str();
    gen->add_flag("--binary-features", spec.binary_features, "Threshold features to {0, 1}");
    gen->add_option("--binary-threshold", spec.binary_threshold, "Distance threshold")
        ->capture_default_str();
    gen->add_option("--out", out_path, "Output environment file")->required();

    // sample-demos
    std::string env_path;
    int episodes = 12500;
    int horizon = 8;
    std::uint64_t demo_seed = 0;
    bool exact = false;
    CLI::App* demos = app.add_subcommand("sample-demos", "Sample expert demonstrations");
    demos->add_option("--env", env_path, "Environment file")->required();
    demos->add_option("--episodes", episodes, "Episode count")->capture_default_str();
    demos->add_option("--horizon", horizon, "Steps per episode")->capture_default_str();
    demos->add_option("--seed", demo_seed, "Sampling seed")->capture_default_str();
    demos->add_flag("--exact", exact, "Write the exact expert action distribution instead");
    demos->add_option("--out", out_path, "Output file")->required();

    // run
    ExperimentManifest manifest;
    std::string seeds_text = "0";
    std::string config_path;
    int jobs = 1;
    CLI::App* run = app.add_subcommand("run", "Run an algorithm over seeds");
    run->add_option("--env", manifest.environment_path, "Environment file")->required();
    run->add_option("--algorithm", manifest.algorithm,
                    "iavi | iql | ciql | diql | dciql | maxent | maxent-single")
        ->required();
    run->add_option("--seeds", seeds_text, "Comma-separated seed list")->capture_default_str();
    run->add_option("--demos", manifest.demos_path, "Fixed demonstration file shared by all seeds");
    run->add_flag("--exact-distribution", manifest.exact_distribution,
                  "Use the exact expert action distribution");
    run->add_option("--config", config_path, "JSON config override file");
    run->add_option("--out", manifest.output_dir, "Output directory");
    run->add_option("--jobs", jobs, "Parallel seed runs")->capture_default_str();

    // curve
    std::string counts_text = "8,32,128,512";
    CLI::App* curve = app.add_subcommand("curve", "EVD as a function of demonstration budget");
    curve->add_option("--env", manifest.environment_path, "Environment file")->required();
    curve->add_option("--algorithm", manifest.algorithm, "Algorithm name")->required();
    curve->add_option("--counts", counts_text, "Comma-separated episode counts")
        ->capture_default_str();
    curve->add_option("--seeds", seeds_text, "Comma-separated seed list")->capture_default_str();
    curve->add_option("--config", config_path, "JSON config override file");
    curve->add_option("--out", manifest.output_dir, "Output directory");
    curve->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();

    // evd
    std::string reward_path;
    CLI::App* evd = app.add_subcommand("evd", "Score a learned reward table against an environment");
    evd->add_option("--env", env_path, "Environment file")->required();
    evd->add_option("--reward", reward_path, "Learned reward table file")->required();

    // inspect
    std::string dir;
    CLI::App* summ = app.add_subcommand("inspect", "Recompute and audit a run directory");
    summ->add_option("--dir", dir, "Experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_env(spec, out_path);
        if (demos->parsed()) return cmd_sample_demos(env_path, episodes, horizon, demo_seed, exact, out_path);
        if (run->parsed()) {
            manifest.seeds = parse_seed_list(seeds_text);
            return cmd_run(manifest, config_path, jobs);
        }
        if (curve->parsed()) {
            manifest.seeds = parse_seed_list(seeds_text);
            return cmd_curve(manifest, config_path, counts_text, jobs);
        }
        if (evd->parsed()) return cmd_evd(env_path, reward_path);
        if (summ->parsed()) return cmd_inspect(dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
