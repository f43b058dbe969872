#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqlearn/mdp.hpp"
#include "iqlearn/objectworld.hpp"

namespace iqlearn {

/**
 * One experiment: an algorithm, an environment file, demonstration settings
 * and per-algorithm config overrides, fanned out over seeds. Per-seed outputs
 * land in their own subdirectory of output_dir; nothing is shared between
 * runs except the immutable environment and manifest.
 */
struct ExperimentManifest {
    std::string algorithm;  // iavi | iql | ciql | diql | dciql | maxent | maxent-single
    std::string environment_path;
    /// Optional fixed demonstration file shared by every seed; when empty,
    /// each seed samples its own set.
    std::string demos_path;
    /// Feed algorithms the exact expert action distribution instead of
    /// demonstration counts (classifier estimates for the deep variants).
    bool exact_distribution = false;
    std::vector<std::uint64_t> seeds = {0};
    nlohmann::json config = nlohmann::json::object();
    std::string output_dir;
};

struct RunRecord {
    std::string algorithm;
    std::uint64_t seed = 0;
    double evd = std::numeric_limits<double>::quiet_NaN();
    double wall_clock_s = 0.0;
    long iterations = 0;
    bool converged = false;
    /// Constrained runs: unsafe greedy choices over an exhaustive state
    /// sweep; -1 when the algorithm has no constraints.
    long violations = -1;
    /// Constraint violations inside the demonstrations, -1 when unconstrained.
    long demo_violations = -1;
    /// Mean KL from the expert policy to the recovered policy.
    double policy_kl = std::numeric_limits<double>::quiet_NaN();
    long transitions = 0;
    std::map<std::string, std::string> artifacts;
    /// Empty on success; otherwise the failure message for this seed. A
    /// failed seed never aborts the remaining seeds of the experiment.
    std::string error;
};

struct SummaryStats {
    double evd_mean = 0.0;
    double evd_sd = 0.0;
    double wall_clock_mean = 0.0;
    double wall_clock_sd = 0.0;
    int n_runs = 0;
    int n_converged = 0;
};

nlohmann::json manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const nlohmann::json& doc);

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);

/// One run of the manifest's algorithm for one seed. Demonstrations come
/// from `shared_demos` when non-null, otherwise they are sampled with the
/// run seed. Wall-clock covers only the solver call. run_dir may be empty to
/// skip writing artifacts.
RunRecord run_single(const ObjectworldInstance& instance, const ExperimentManifest& manifest,
                     std::uint64_t seed, const std::string& run_dir,
                     const TrajectorySet* shared_demos = nullptr);

/// Loads the environment, fans seeds out over at most `jobs` worker threads
/// and writes manifest, per-run artifacts, records.json and summary.csv into
/// manifest.output_dir (when set).
std::vector<RunRecord> run_experiment(const ExperimentManifest& manifest, int jobs = 1);

/// Mean and sample standard deviation of EVD and wall-clock.
SummaryStats summarize(const std::vector<RunRecord>& records);

void write_records(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> load_records(const std::string& path);
void write_summary_csv(const std::vector<RunRecord>& records, const std::string& path);

/// Recomputes the summary from records.json and checks it against
/// summary.csv; returns false on any mismatch beyond 1e-9.
bool self_audit(const std::string& output_dir);

struct CurvePoint {
    int episodes = 0;
    double evd_mean = 0.0;
    double evd_sd = 0.0;
};

/**
 * EVD as a function of demonstration budget: for each episode count the
 * manifest's algorithm runs once per seed on freshly sampled demonstrations
 * (demo seed derived deterministically from the run seed and the count).
 * Writes curve.csv plus per-count records under output_dir when set.
 */
std::vector<CurvePoint> trajectory_curve(const ExperimentManifest& manifest,
                                         const std::vector<int>& counts, int jobs = 1);

/// Stable mix of a seed with a salt, used to derive per-count demo seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace iqlearn
