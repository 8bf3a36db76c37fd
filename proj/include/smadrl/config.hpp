#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smadrl/analysis.hpp"
#include "smadrl/dqn.hpp"
#include "smadrl/env.hpp"

namespace smadrl {

// IQL: local reward, no pheromones. IQL_G: global reward. IQL_GS: global
// reward and pheromones. IQL_GSC: IQL_GS trained with the agent curriculum.
enum class Method : std::uint8_t { IQL, IQL_G, IQL_GS, IQL_GSC };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);

struct CurriculumConfig {
  int phase_episodes = 200;
};

struct RunConfig {
  int episodes = 200;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";
};

struct ExperimentConfig {
  Method method = Method::IQL_GS;
  ChamberSpec arena;
  int num_agents = 1;
  int episode_length = 5000;
  int observation_radius = 1;
  int dig_duration = 1;
  RewardConfig reward;  // `mode` is overridden by the method
  PheromoneParams pheromone;
  DqnConfig learner;
  CurriculumConfig curriculum;
  RunConfig run;
  AnalysisConfig analysis;

  bool global_reward() const { return method != Method::IQL; }
  bool stigmergy() const { return method == Method::IQL_GS || method == Method::IQL_GSC; }
  bool curriculum_enabled() const { return method == Method::IQL_GSC && num_agents > 1; }

  // Environment settings implied by the method; `agents` < 0 means num_agents.
  EnvConfig env_config(int agents = -1) const;
  int obs_dim() const { return observation_dim(observation_radius); }

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError naming the offending key for unknown keys or bad types.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

}  // namespace smadrl
