#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "smadrl/grid.hpp"
#include "smadrl/rng.hpp"
#include "smadrl/stigmergy.hpp"

namespace smadrl {

enum class AgentMode : std::uint8_t {
  GoingToDig,
  Digging,
  ExitDigging,
  GoingHome,
  Dumping,
  ExitHome,
  Collision,
};
inline constexpr int kNumModes = 7;

enum class Action : std::uint8_t { North, South, West, East, Stop };
inline constexpr int kNumActions = 5;

std::string_view to_string(AgentMode mode);
std::string_view to_string(Action action);
std::optional<AgentMode> parse_mode(std::string_view name);
std::optional<Action> parse_action(std::string_view name);

// Target cell of an action; Stop returns the cell itself.
Cell apply_action(Cell from, Action action);

struct AgentState {
  int id = 0;
  Cell position;
  Action orientation = Action::North;  // last successful move direction
  AgentMode mode = AgentMode::GoingToDig;
  AgentMode resume_mode = AgentMode::GoingToDig;  // task mode under a Collision overlay
  bool laden = false;
  int collision_count = 0;
  Action prev_action = Action::Stop;
  int dig_timer = 0;  // steps spent digging or dumping

  AgentMode task_mode() const { return mode == AgentMode::Collision ? resume_mode : mode; }
};

enum class RewardMode : std::uint8_t { Local, Global };

struct RewardConfig {
  double distance = 2.5;
  double collision = -2.0;
  double pickup = 50.0;
  double trip = 50.0;
  double w_distance = 0.2;
  double w_collision = 0.2;
  double w_pickup = 0.2;
  double w_trip = 0.4;
  RewardMode mode = RewardMode::Local;

  void validate() const;
};

enum class MoveOutcome : std::uint8_t { Moved, Collided, Stayed };

struct AgentEvents {
  bool picked_up = false;
  bool delivered_trip = false;
  bool collided = false;
};

struct StepInfo {
  int tunnel_occupancy = 0;
  int step_index = 0;
};

struct StepResult {
  std::vector<std::vector<float>> observations;
  std::vector<double> rewards;
  std::vector<AgentEvents> events;
  bool done = false;
  StepInfo info;
};

struct EnvConfig {
  GridLayout layout = GridLayout::chambers({});
  int num_agents = 1;
  int episode_length = 5000;
  std::uint64_t seed = 0;
  RewardConfig reward;
  PheromoneParams pheromone;
  int observation_radius = 1;
  bool stigmergy_enabled = true;
  int dig_duration = 1;

  void validate() const;
};

// 8 agent features, one pheromone triple per field-of-view cell, and the
// tunnel density.
constexpr int observation_dim(int radius) { return 8 + 3 * fov_cell_count(radius) + 1; }

// Simultaneous-move resolution. Stop and invalid moves never displace anyone;
// the result keeps one agent per cell.
//  - a move into a wall or into the cell of an agent that does not leave collides;
//  - two agents swapping cells both collide;
//  - k >= 2 agents contesting one cell: the earliest under a random
//    permutation drawn from `rng` wins, the rest collide;
//  - following chains are resolved to a fixpoint; closed cycles collide.
// The permutation is drawn on every call so the rng stream does not depend on
// whether a contest happened.
std::vector<MoveOutcome> resolve_moves(const GridLayout& layout, std::span<const Cell> positions,
                                       std::span<const Action> actions, Rng& rng);

struct ModeEvents {
  bool picked_up = false;
  bool delivered_trip = false;
};

// Mode FSM. `agent.position` must already reflect the outcome. Updates mode,
// resume mode, laden flag, dig timer and collision count.
ModeEvents update_mode(AgentState& agent, MoveOutcome outcome, const GridLayout& layout,
                       int dig_duration);

struct RewardInputs {
  bool moved_closer = false;
  bool collided = false;
  bool laden = false;  // before the step
  int own_pickups = 0;
  int own_trips = 0;
  int team_pickups = 0;  // all agents, this one included
  int team_trips = 0;
};

// w_d r_d + w_c r_c + w_p r_p + w_s r_s. In Global mode the pickup and trip
// terms count every agent's events; distance and collision stay individual.
double compute_reward(const RewardInputs& in, const RewardConfig& config);

class Env {
 public:
  explicit Env(EnvConfig config);

  StepResult reset(std::uint64_t seed);
  StepResult step(std::span<const Action> actions);

  const EnvConfig& config() const { return config_; }
  const GridLayout& layout() const { return config_.layout; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const PheromoneMap& pheromones() const { return pheromones_; }
  const DistanceField& home_distance() const { return dist_home_; }
  const DistanceField& source_distance() const { return dist_source_; }
  int step_index() const { return step_index_; }
  bool done() const { return done_; }
  int obs_dim() const { return observation_dim(config_.observation_radius); }

  const std::vector<Action>& last_actions() const { return last_actions_; }
  const std::vector<double>& last_rewards() const { return last_rewards_; }
  const std::vector<AgentEvents>& last_events() const { return last_events_; }

  void observe(int agent_id, std::span<float> out) const;
  std::vector<float> observe(int agent_id) const;

 private:
  StepResult snapshot() const;
  int tunnel_occupancy() const;

  EnvConfig config_;
  DistanceField dist_home_;
  DistanceField dist_source_;
  PheromoneMap pheromones_;
  Rng rng_;
  std::vector<AgentState> agents_;
  std::vector<Cell> positions_;
  std::vector<Action> last_actions_;
  std::vector<double> last_rewards_;
  std::vector<AgentEvents> last_events_;
  int step_index_ = 0;
  bool done_ = true;
  bool started_ = false;
};

}  // namespace smadrl
