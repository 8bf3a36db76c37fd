#include "smadrl/config.hpp"

#include <array>
#include <fstream>
#include <initializer_list>

#include "smadrl/errors.hpp"

namespace smadrl {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kMethodNames{"IQL", "IQL_G", "IQL_GS", "IQL_GSC"};

void reject_unknown(const json& section, std::string_view path,
                    std::initializer_list<std::string_view> allowed) {
  if (!section.is_object()) throw ConfigError("config: '" + std::string(path) + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) {
      const std::string full = path.empty() ? key : std::string(path) + "." + key;
      throw ConfigError("config: unknown key '" + full + "'");
    }
  }
}

template <typename T>
void read(const json& section, std::string_view path, const char* key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + std::string(path) + "." + key + "'");
  }
}

// Integral fields must not silently truncate a real number.
void read_int(const json& section, std::string_view path, const char* key, int& out) {
  if (!section.contains(key)) return;
  const auto& v = section.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError("config: '" + std::string(path) + "." + key + "' must be an integer");
  }
  out = v.get<int>();
}

}  // namespace

std::string_view to_string(Method method) { return kMethodNames[static_cast<int>(method)]; }

std::optional<Method> parse_method(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  return std::nullopt;
}

EnvConfig ExperimentConfig::env_config(int agents) const {
  EnvConfig env;
  env.layout = GridLayout::chambers(arena);
  env.num_agents = agents < 0 ? num_agents : agents;
  env.episode_length = episode_length;
  env.reward = reward;
  env.reward.mode = global_reward() ? RewardMode::Global : RewardMode::Local;
  env.pheromone = pheromone;
  env.observation_radius = observation_radius;
  env.stigmergy_enabled = stigmergy();
  env.dig_duration = dig_duration;
  return env;
}

void ExperimentConfig::validate() const {
  env_config().validate();
  learner.validate();
  if (curriculum.phase_episodes < 1) throw ConfigError("config: curriculum.phase_episodes must be positive");
  if (run.episodes < 1) throw ConfigError("config: run.episodes must be positive");
  if (run.seeds.empty()) throw ConfigError("config: run.seeds must not be empty");
  if (analysis.clog_threshold < 1) throw ConfigError("config: analysis.clog_threshold must be positive");
  if (analysis.oat_max_occupancy < 0) throw ConfigError("config: analysis.oat_max_occupancy must be >= 0");
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  reject_unknown(doc, "", {"method", "env", "learner", "pheromone", "curriculum", "run", "analysis"});

  if (doc.contains("method")) {
    const auto& m = doc.at("method");
    const auto parsed = m.is_string() ? parse_method(m.get<std::string>()) : std::nullopt;
    if (!parsed) throw ConfigError("config: bad value for 'method' (IQL, IQL_G, IQL_GS or IQL_GSC)");
    c.method = *parsed;
  }

  if (doc.contains("env")) {
    const json& e = doc.at("env");
    reject_unknown(e, "env",
                   {"home_width", "home_height", "source_width", "source_height", "tunnel_length",
                    "num_agents", "episode_length", "observation_radius", "dig_duration", "reward"});
    read_int(e, "env", "home_width", c.arena.home_width);
    read_int(e, "env", "home_height", c.arena.home_height);
    read_int(e, "env", "source_width", c.arena.source_width);
    read_int(e, "env", "source_height", c.arena.source_height);
    read_int(e, "env", "tunnel_length", c.arena.tunnel_length);
    read_int(e, "env", "num_agents", c.num_agents);
    read_int(e, "env", "episode_length", c.episode_length);
    read_int(e, "env", "observation_radius", c.observation_radius);
    read_int(e, "env", "dig_duration", c.dig_duration);
    if (e.contains("reward")) {
      const json& r = e.at("reward");
      reject_unknown(r, "env.reward",
                     {"distance", "collision", "pickup", "trip", "w_distance", "w_collision",
                      "w_pickup", "w_trip"});
      read(r, "env.reward", "distance", c.reward.distance);
      read(r, "env.reward", "collision", c.reward.collision);
      read(r, "env.reward", "pickup", c.reward.pickup);
      read(r, "env.reward", "trip", c.reward.trip);
      read(r, "env.reward", "w_distance", c.reward.w_distance);
      read(r, "env.reward", "w_collision", c.reward.w_collision);
      read(r, "env.reward", "w_pickup", c.reward.w_pickup);
      read(r, "env.reward", "w_trip", c.reward.w_trip);
    }
  }

  if (doc.contains("learner")) {
    const json& l = doc.at("learner");
    reject_unknown(l, "learner",
                   {"lr", "gamma", "batch_size", "buffer_capacity", "sync_interval", "learn_start",
                    "update_every", "hidden", "epsilon"});
    read(l, "learner", "lr", c.learner.lr);
    read(l, "learner", "gamma", c.learner.gamma);
    read_int(l, "learner", "batch_size", c.learner.batch_size);
    int capacity = static_cast<int>(c.learner.buffer_capacity);
    read_int(l, "learner", "buffer_capacity", capacity);
    if (capacity < 1) throw ConfigError("config: learner.buffer_capacity must be positive");
    c.learner.buffer_capacity = static_cast<std::size_t>(capacity);
    read_int(l, "learner", "sync_interval", c.learner.sync_interval);
    read_int(l, "learner", "learn_start", c.learner.learn_start);
    read_int(l, "learner", "update_every", c.learner.update_every);
    read(l, "learner", "hidden", c.learner.hidden);
    if (l.contains("epsilon")) {
      const json& eps = l.at("epsilon");
      reject_unknown(eps, "learner.epsilon", {"start", "end", "fraction"});
      read(eps, "learner.epsilon", "start", c.learner.eps_start);
      read(eps, "learner.epsilon", "end", c.learner.eps_end);
      read(eps, "learner.epsilon", "fraction", c.learner.eps_fraction);
    }
  }

  if (doc.contains("pheromone")) {
    const json& p = doc.at("pheromone");
    reject_unknown(p, "pheromone", {"rho0", "alpha", "beta"});
    read(p, "pheromone", "rho0", c.pheromone.rho0);
    read(p, "pheromone", "alpha", c.pheromone.alpha);
    read(p, "pheromone", "beta", c.pheromone.beta);
  }

  if (doc.contains("curriculum")) {
    const json& cu = doc.at("curriculum");
    reject_unknown(cu, "curriculum", {"phase_episodes"});
    read_int(cu, "curriculum", "phase_episodes", c.curriculum.phase_episodes);
  }

  if (doc.contains("run")) {
    const json& r = doc.at("run");
    reject_unknown(r, "run", {"episodes", "seeds", "output_dir"});
    read_int(r, "run", "episodes", c.run.episodes);
    read(r, "run", "seeds", c.run.seeds);
    read(r, "run", "output_dir", c.run.output_dir);
  }

  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    reject_unknown(a, "analysis", {"clog_threshold", "oat_max_occupancy"});
    read_int(a, "analysis", "clog_threshold", c.analysis.clog_threshold);
    read_int(a, "analysis", "oat_max_occupancy", c.analysis.oat_max_occupancy);
  }

  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  return {
      {"method", std::string(to_string(c.method))},
      {"env",
       {{"home_width", c.arena.home_width},
        {"home_height", c.arena.home_height},
        {"source_width", c.arena.source_width},
        {"source_height", c.arena.source_height},
        {"tunnel_length", c.arena.tunnel_length},
        {"num_agents", c.num_agents},
        {"episode_length", c.episode_length},
        {"observation_radius", c.observation_radius},
        {"dig_duration", c.dig_duration},
        {"reward",
         {{"distance", c.reward.distance},
          {"collision", c.reward.collision},
          {"pickup", c.reward.pickup},
          {"trip", c.reward.trip},
          {"w_distance", c.reward.w_distance},
          {"w_collision", c.reward.w_collision},
          {"w_pickup", c.reward.w_pickup},
          {"w_trip", c.reward.w_trip}}}}},
      {"learner",
       {{"lr", c.learner.lr},
        {"gamma", c.learner.gamma},
        {"batch_size", c.learner.batch_size},
        {"buffer_capacity", c.learner.buffer_capacity},
        {"sync_interval", c.learner.sync_interval},
        {"learn_start", c.learner.learn_start},
        {"update_every", c.learner.update_every},
        {"hidden", c.learner.hidden},
        {"epsilon",
         {{"start", c.learner.eps_start},
          {"end", c.learner.eps_end},
          {"fraction", c.learner.eps_fraction}}}}},
      {"pheromone", {{"rho0", c.pheromone.rho0}, {"alpha", c.pheromone.alpha}, {"beta", c.pheromone.beta}}},
      {"curriculum", {{"phase_episodes", c.curriculum.phase_episodes}}},
      {"run", {{"episodes", c.run.episodes}, {"seeds", c.run.seeds}, {"output_dir", c.run.output_dir}}},
      {"analysis",
       {{"clog_threshold", c.analysis.clog_threshold},
        {"oat_max_occupancy", c.analysis.oat_max_occupancy}}},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace smadrl
