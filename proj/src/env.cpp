#include "smadrl/env.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>
#include <string>

#include "smadrl/errors.hpp"

namespace smadrl {

namespace {

constexpr std::array<std::string_view, kNumModes> kModeNames{
    "GoingToDig", "Digging", "ExitDigging", "GoingHome", "Dumping", "ExitHome", "Collision"};
constexpr std::array<std::string_view, kNumActions> kActionNames{"North", "South", "West", "East",
                                                                 "Stop"};

enum class Pending : std::uint8_t { Undecided, Moved, Collided, Stayed };

int occupant_of(std::span<const Cell> positions, Cell c) {
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (positions[j] == c) return static_cast<int>(j);
  }
  return -1;
}

}  // namespace

std::string_view to_string(AgentMode mode) { return kModeNames[static_cast<int>(mode)]; }
std::string_view to_string(Action action) { return kActionNames[static_cast<int>(action)]; }

std::optional<AgentMode> parse_mode(std::string_view name) {
  for (int i = 0; i < kNumModes; ++i) {
    if (kModeNames[i] == name) return static_cast<AgentMode>(i);
  }
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  return std::nullopt;
}

Cell apply_action(Cell from, Action action) {
  switch (action) {
    case Action::North: return {from.x, from.y - 1};
    case Action::South: return {from.x, from.y + 1};
    case Action::West: return {from.x - 1, from.y};
    case Action::East: return {from.x + 1, from.y};
    case Action::Stop: break;
  }
  return from;
}

void RewardConfig::validate() const {
  if (!(w_distance > 0 && w_collision > 0 && w_pickup > 0 && w_trip > 0)) {
    throw ConfigError("reward: all four weights must be positive");
  }
}

void EnvConfig::validate() const {
  validate_layout(layout);
  reward.validate();
  pheromone.validate();
  if (num_agents < 1) throw ConfigError("env: num_agents must be at least 1");
  if (num_agents > static_cast<int>(layout.home_cells().size())) {
    throw ConfigError("env: more agents (" + std::to_string(num_agents) + ") than home cells (" +
                      std::to_string(layout.home_cells().size()) + ")");
  }
  if (episode_length < 1) throw ConfigError("env: episode_length must be positive");
  if (observation_radius < 1) throw ConfigError("env: observation_radius must be at least 1");
  if (dig_duration < 1) throw ConfigError("env: dig_duration must be at least 1");
}

std::vector<MoveOutcome> resolve_moves(const GridLayout& layout, std::span<const Cell> positions,
                                       std::span<const Action> actions, Rng& rng) {
  const std::size_t n = positions.size();
  if (actions.size() != n) throw std::invalid_argument("resolve_moves: one action per agent");

  std::vector<int> rank(n);
  {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.below(i)]);
    }
    for (std::size_t k = 0; k < n; ++k) rank[perm[k]] = static_cast<int>(k);
  }

  std::vector<Pending> state(n, Pending::Undecided);
  std::vector<Cell> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = apply_action(positions[i], actions[i]);
    if (actions[i] == Action::Stop) {
      state[i] = Pending::Stayed;
    } else if (!layout.walkable(target[i])) {
      state[i] = Pending::Collided;
    }
  }

  // Swaps.
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i] != Pending::Undecided) continue;
    const int j = occupant_of(positions, target[i]);
    if (j >= 0 && state[j] == Pending::Undecided && target[j] == positions[i]) {
      state[i] = Pending::Collided;
      state[j] = Pending::Collided;
    }
  }

  // Contests for the same target cell.
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i] != Pending::Undecided) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && state[j] == Pending::Undecided && target[j] == target[i] && rank[j] < rank[i]) {
        state[i] = Pending::Collided;
        break;
      }
    }
  }

  // Chains.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] != Pending::Undecided) continue;
      const int j = occupant_of(positions, target[i]);
      Pending next = Pending::Undecided;
      if (j < 0 || state[j] == Pending::Moved) {
        next = Pending::Moved;
      } else if (state[j] == Pending::Stayed || state[j] == Pending::Collided) {
        next = Pending::Collided;
      }
      if (next != Pending::Undecided) {
        state[i] = next;
        changed = true;
      }
    }
  }

  std::vector<MoveOutcome> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (state[i]) {
      case Pending::Moved: out[i] = MoveOutcome::Moved; break;
      case Pending::Stayed: out[i] = MoveOutcome::Stayed; break;
      default: out[i] = MoveOutcome::Collided; break;  // includes closed cycles
    }
  }
  return out;
}

ModeEvents update_mode(AgentState& agent, MoveOutcome outcome, const GridLayout& layout,
                       int dig_duration) {
  ModeEvents events;
  const AgentMode task = agent.task_mode();
  if (outcome == MoveOutcome::Collided) {
    agent.mode = AgentMode::Collision;
    agent.resume_mode = task;
    ++agent.collision_count;
    return events;
  }

  const Cell at = agent.position;
  AgentMode next = task;
  switch (task) {
    case AgentMode::GoingToDig:
      if (layout.is_source(at)) {
        next = AgentMode::Digging;
        agent.dig_timer = 0;
      }
      break;
    case AgentMode::Digging:
      if (!layout.is_source(at)) {
        next = AgentMode::GoingToDig;
      } else if (++agent.dig_timer >= dig_duration) {
        agent.laden = true;
        events.picked_up = true;
        next = AgentMode::ExitDigging;
      }
      break;
    case AgentMode::ExitDigging:
      if (!layout.is_source(at)) next = AgentMode::GoingHome;
      break;
    case AgentMode::GoingHome:
      if (layout.is_home(at)) {
        next = AgentMode::Dumping;
        agent.dig_timer = 0;
      }
      break;
    case AgentMode::Dumping:
      if (!layout.is_home(at)) {
        next = AgentMode::GoingHome;
      } else if (++agent.dig_timer >= 1) {
        agent.laden = false;
        events.delivered_trip = true;
        next = AgentMode::ExitHome;
      }
      break;
    case AgentMode::ExitHome:
      if (!layout.is_home(at)) next = AgentMode::GoingToDig;
      break;
    case AgentMode::Collision:
      break;  // unreachable: task_mode() never returns Collision
  }
  agent.mode = next;
  agent.resume_mode = next;
  return events;
}

double compute_reward(const RewardInputs& in, const RewardConfig& config) {
  const double rd = in.moved_closer ? config.distance : 0.0;
  const double rc = (in.collided && !in.laden) ? config.collision : 0.0;
  const bool global = config.mode == RewardMode::Global;
  const double rp = config.pickup * (global ? in.team_pickups : in.own_pickups);
  const double rs = config.trip * (global ? in.team_trips : in.own_trips);
  return config.w_distance * rd + config.w_collision * rc + config.w_pickup * rp +
         config.w_trip * rs;
}

Env::Env(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  dist_home_ = DistanceField(config_.layout, config_.layout.home_cells());
  dist_source_ = DistanceField(config_.layout, config_.layout.source_cells());
  pheromones_ = PheromoneMap(config_.layout, config_.pheromone);
}

StepResult Env::reset(std::uint64_t seed) {
  config_.seed = seed;
  rng_ = Rng(seed);
  pheromones_.clear();
  const int n = config_.num_agents;
  agents_.assign(n, AgentState{});
  positions_.resize(n);
  for (int i = 0; i < n; ++i) {
    agents_[i].id = i;
    agents_[i].position = config_.layout.home_cells()[i];
    positions_[i] = agents_[i].position;
  }
  last_actions_.assign(n, Action::Stop);
  last_rewards_.assign(n, 0.0);
  last_events_.assign(n, AgentEvents{});
  step_index_ = 0;
  done_ = false;
  started_ = true;
  return snapshot();
}

StepResult Env::step(std::span<const Action> actions) {
  if (!started_) throw std::logic_error("env: step before reset");
  if (done_) throw std::logic_error("env: step on a finished episode");
  const int n = config_.num_agents;
  if (static_cast<int>(actions.size()) != n) {
    throw std::invalid_argument("env: expected " + std::to_string(n) + " actions, got " +
                                std::to_string(actions.size()));
  }
  for (Action a : actions) {
    if (static_cast<int>(a) >= kNumActions) throw std::invalid_argument("env: bad action index");
  }

  std::vector<bool> laden_before(n);
  std::vector<int> dist_before(n);
  for (int i = 0; i < n; ++i) {
    laden_before[i] = agents_[i].laden;
    const DistanceField& goal = agents_[i].laden ? dist_home_ : dist_source_;
    dist_before[i] = goal.at(agents_[i].position);
  }

  const auto outcomes = resolve_moves(config_.layout, positions_, actions, rng_);

  int team_pickups = 0;
  int team_trips = 0;
  for (int i = 0; i < n; ++i) {
    AgentState& agent = agents_[i];
    if (outcomes[i] == MoveOutcome::Moved) {
      agent.position = apply_action(agent.position, actions[i]);
      agent.orientation = actions[i];
      positions_[i] = agent.position;
    }
    const ModeEvents ev = update_mode(agent, outcomes[i], config_.layout, config_.dig_duration);
    agent.prev_action = actions[i];
    last_events_[i] = {ev.picked_up, ev.delivered_trip, outcomes[i] == MoveOutcome::Collided};
    team_pickups += ev.picked_up ? 1 : 0;
    team_trips += ev.delivered_trip ? 1 : 0;
  }

  // Traces are laid on arrival; an agent that stays put only reinforces its
  // cell through the beta term of the decay.
  for (int i = 0; i < n; ++i) {
    const AgentState& agent = agents_[i];
    if (outcomes[i] != MoveOutcome::Moved) continue;
    pheromones_.deposit(agent.position,
                        {agent.laden, static_cast<int>(agent.prev_action), static_cast<int>(agent.mode)},
                        step_index_ + 1);
  }
  pheromones_.decay_all(positions_);

  for (int i = 0; i < n; ++i) {
    const DistanceField& goal = laden_before[i] ? dist_home_ : dist_source_;
    RewardInputs in;
    in.moved_closer = dist_before[i] - goal.at(agents_[i].position) > 0;
    in.collided = last_events_[i].collided;
    in.laden = laden_before[i];
    in.own_pickups = last_events_[i].picked_up ? 1 : 0;
    in.own_trips = last_events_[i].delivered_trip ? 1 : 0;
    in.team_pickups = team_pickups;
    in.team_trips = team_trips;
    last_rewards_[i] = compute_reward(in, config_.reward);
  }
  last_actions_.assign(actions.begin(), actions.end());

  ++step_index_;
  done_ = step_index_ >= config_.episode_length;
  return snapshot();
}

int Env::tunnel_occupancy() const {
  int count = 0;
  for (Cell p : positions_) count += config_.layout.is_tunnel(p) ? 1 : 0;
  return count;
}

void Env::observe(int agent_id, std::span<float> out) const {
  const int dim = obs_dim();
  if (agent_id < 0 || agent_id >= config_.num_agents) throw std::out_of_range("env: bad agent id");
  if (static_cast<int>(out.size()) != dim) throw std::invalid_argument("env: observation buffer size");
  const AgentState& a = agents_[agent_id];
  const GridLayout& layout = config_.layout;
  constexpr int kCollisionCap = 100;

  out[0] = static_cast<float>(static_cast<int>(a.mode)) / 6.0f;
  out[1] = static_cast<float>(a.position.x) / layout.width();
  out[2] = static_cast<float>(a.position.y) / layout.height();
  out[3] = static_cast<float>(static_cast<int>(a.orientation)) / 3.0f;
  out[4] = static_cast<float>(static_cast<int>(a.prev_action)) / 4.0f;
  out[5] = static_cast<float>(std::min(a.collision_count, kCollisionCap)) / kCollisionCap;
  const int home_max = std::max(1, dist_home_.max_finite());
  const int source_max = std::max(1, dist_source_.max_finite());
  out[6] = static_cast<float>(dist_home_.at(a.position)) / home_max;
  out[7] = static_cast<float>(dist_source_.at(a.position)) / source_max;

  auto rest = out.subspan(8);
  if (!config_.stigmergy_enabled) {
    std::fill(rest.begin(), rest.end(), 0.0f);
    return;
  }
  const int fov = fov_cell_count(config_.observation_radius);
  pheromones_.read_fov_into(a.position, config_.observation_radius, rest.first(3 * fov));
  rest[3 * fov] = static_cast<float>(tunnel_density(layout, positions_));
}

std::vector<float> Env::observe(int agent_id) const {
  std::vector<float> out(static_cast<std::size_t>(obs_dim()));
  observe(agent_id, out);
  return out;
}

StepResult Env::snapshot() const {
  StepResult r;
  const int n = config_.num_agents;
  r.observations.reserve(n);
  for (int i = 0; i < n; ++i) r.observations.push_back(observe(i));
  r.rewards = last_rewards_;
  r.events = last_events_;
  r.done = done_;
  r.info = {tunnel_occupancy(), step_index_};
  return r;
}

}  // namespace smadrl
