#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqlearn/deep_iql.hpp"
#include "iqlearn/iql.hpp"
#include "iqlearn/mdp.hpp"
#include "iqlearn/nn.hpp"
#include "iqlearn/objectworld.hpp"

namespace iqlearn {

/**
 * Every document carries {"schema": 1, "kind": "..."} and loaders reject
 * anything else with SchemaError. Numeric payloads are nested arrays, so
 * documents stay readable and language-neutral.
 */
inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& doc);

/// kind is one of "reward_table", "q_table", "policy_table".
nlohmann::json table_to_json(const Eigen::MatrixXd& values, const std::string& kind);
Eigen::MatrixXd table_from_json(const nlohmann::json& doc, const std::string& kind);

nlohmann::json to_json(const TrajectorySet& demos);
TrajectorySet trajectories_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const ObjectworldInstance& instance);
ObjectworldInstance objectworld_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& doc);

/// Learner checkpoint: tables, visit counter, config echo and an optional
/// random-generator state, enough to resume a run exactly.
nlohmann::json iql_checkpoint_to_json(const IqlState& state, const IqlConfig& cfg,
                                      const std::optional<std::string>& rng_state = std::nullopt);
struct IqlCheckpoint {
    IqlState state;
    IqlConfig config;
    std::optional<std::string> rng_state;
};
IqlCheckpoint iql_checkpoint_from_json(const nlohmann::json& doc);

/// Network checkpoint: every bundle's online, target and Adam tensors plus
/// the config echo and an optional random-generator state.
nlohmann::json diql_checkpoint_to_json(const DiqlNets& nets, const DiqlConfig& cfg,
                                       const std::optional<std::string>& rng_state = std::nullopt);
struct DiqlCheckpoint {
    DiqlNets nets;
    DiqlConfig config;
    std::optional<std::string> rng_state;
};
DiqlCheckpoint diql_checkpoint_from_json(const nlohmann::json& doc);

void save_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json load_json(const std::string& path);

/// Minimal CSV writer; values are written verbatim, so callers quote when
/// needed. format_double round-trips doubles exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string format_double(double x);

}  // namespace iqlearn
