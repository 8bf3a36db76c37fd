#include "smadrl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "smadrl/errors.hpp"
#include "smadrl/format.hpp"

namespace smadrl {

namespace {

constexpr std::uint64_t kEnvStream = 0x100000;
constexpr std::uint64_t kEvalStream = 0x200000;
constexpr std::uint64_t kRandomPolicyStream = 0x300000;

std::uint64_t train_episode_seed(std::uint64_t seed, int episode) {
  return mix_seed(seed, kEnvStream + static_cast<std::uint64_t>(episode));
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int episode) {
  return mix_seed(seed, kEvalStream + static_cast<std::uint64_t>(episode));
}

}  // namespace

std::vector<Phase> training_phases(const ExperimentConfig& config) {
  std::vector<Phase> phases;
  if (!config.curriculum_enabled()) {
    Phase p;
    p.active_agents = config.num_agents;
    p.learners.resize(config.num_agents);
    std::iota(p.learners.begin(), p.learners.end(), 0);
    p.episodes = config.run.episodes;
    phases.push_back(p);
    return phases;
  }
  phases.push_back({0, 2, {0, 1}, config.curriculum.phase_episodes});
  for (int k = 1; k + 1 < config.num_agents; ++k) {
    phases.push_back({k, k + 2, {k + 1}, config.curriculum.phase_episodes});
  }
  return phases;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log) {
  out << "episode,phase,active_agents,total_pellets,collisions,clog_events";
  for (int i = 0; i < log.num_agents; ++i) out << ",reward_" << i;
  for (int i = 0; i < log.num_agents; ++i) out << ",pellets_" << i;
  out << '\n';
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << e.phase << ',' << e.active_agents << ',' << e.total_pellets << ','
        << e.collisions << ',' << e.clog_events;
    for (double r : e.rewards) out << ',' << format_double(r);
    for (auto p : e.pellets) out << ',' << p;
    out << '\n';
  }
}

void write_timing_csv(std::ostream& out, const TrainLog& log) {
  out << "episode,wall_seconds\n";
  for (const auto& e : log.episodes) out << e.episode << ',' << format_double(e.wall_seconds) << '\n';
}

TrainLog read_train_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("train log: empty file");
  const auto header = split(line, ',');
  constexpr std::size_t kFixed = 6;
  if (header.size() < kFixed || (header.size() - kFixed) % 2 != 0 || header[0] != "episode") {
    throw IoError("train log: unexpected header");
  }
  TrainLog log;
  log.num_agents = static_cast<int>((header.size() - kFixed) / 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw IoError("train log: wrong field count");
    try {
      EpisodeLog e;
      e.episode = static_cast<int>(parse_int(f[0]));
      e.phase = static_cast<int>(parse_int(f[1]));
      e.active_agents = static_cast<int>(parse_int(f[2]));
      e.total_pellets = parse_int(f[3]);
      e.collisions = parse_int(f[4]);
      e.clog_events = parse_int(f[5]);
      for (int i = 0; i < log.num_agents; ++i) e.rewards.push_back(parse_double(f[kFixed + i]));
      for (int i = 0; i < log.num_agents; ++i) e.pellets.push_back(parse_int(f[kFixed + log.num_agents + i]));
      log.episodes.push_back(std::move(e));
    } catch (const std::invalid_argument& ex) {
      throw IoError(std::string("train log: ") + ex.what());
    }
  }
  return log;
}

Trainer::Trainer(ExperimentConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  phases_ = training_phases(config_);
  const int obs_dim = config_.obs_dim();
  agents_.reserve(config_.num_agents);
  for (int i = 0; i < config_.num_agents; ++i) {
    agents_.emplace_back(obs_dim, config_.learner, mix_seed(seed, static_cast<std::uint64_t>(i)));
  }
  log_.num_agents = config_.num_agents;
  apply_phase(phases_.front());
}

Trainer::Trainer(Checkpoint checkpoint)
    : config_(std::move(checkpoint.config)),
      seed_(checkpoint.seed),
      episodes_done_(checkpoint.episodes_done),
      agents_(std::move(checkpoint.agents)) {
  config_.validate();
  phases_ = training_phases(config_);
  if (static_cast<int>(agents_.size()) != config_.num_agents) {
    throw IoError("checkpoint: agent count does not match the config");
  }
  log_.num_agents = config_.num_agents;
}

int Trainer::total_episodes() const {
  int total = 0;
  for (const auto& p : phases_) total += p.episodes;
  return total;
}

const Phase& Trainer::current_phase() const {
  int start = 0;
  for (const auto& p : phases_) {
    if (episodes_done_ < start + p.episodes) return p;
    start += p.episodes;
  }
  return phases_.back();
}

void Trainer::apply_phase(const Phase& phase) {
  const std::int64_t phase_steps = static_cast<std::int64_t>(phase.episodes) * config_.episode_length;
  for (int i = 0; i < static_cast<int>(agents_.size()); ++i) {
    const bool learns = std::find(phase.learners.begin(), phase.learners.end(), i) != phase.learners.end();
    agents_[i].set_learning(learns);
    if (learns && agents_[i].steps() == 0) agents_[i].set_training_horizon(phase_steps);
  }
}

const EpisodeLog& Trainer::run_episode() {
  if (finished()) throw std::logic_error("trainer: all episodes already ran");
  const auto started = std::chrono::steady_clock::now();
  const Phase& phase = current_phase();
  apply_phase(phase);

  const int n = phase.active_agents;
  Env env(config_.env_config(n));
  StepResult step = env.reset(train_episode_seed(seed_, episodes_done_));
  ClogDetector clogs(env.layout(), config_.analysis.clog_threshold);

  EpisodeLog rec;
  rec.episode = episodes_done_;
  rec.phase = phase.index;
  rec.active_agents = n;
  rec.rewards.assign(config_.num_agents, 0.0);
  rec.pellets.assign(config_.num_agents, 0);

  std::vector<Action> actions(n);
  std::vector<std::vector<float>> obs = std::move(step.observations);
  while (!env.done()) {
    for (int i = 0; i < n; ++i) actions[i] = static_cast<Action>(agents_[i].select_action(obs[i]));
    step = env.step(actions);
    for (int i = 0; i < n; ++i) {
      // The episode end is a time limit, not a terminal state.
      agents_[i].observe(obs[i], static_cast<int>(actions[i]), static_cast<float>(step.rewards[i]),
                         step.observations[i], false);
      rec.rewards[i] += step.rewards[i];
      if (step.events[i].delivered_trip) ++rec.pellets[i];
      if (step.events[i].collided) ++rec.collisions;
    }
    clogs.feed(make_step_record(env, rec.episode));
    obs = std::move(step.observations);
  }
  clogs.finish();
  rec.clog_events = static_cast<std::int64_t>(clogs.events().size());
  rec.total_pellets = std::accumulate(rec.pellets.begin(), rec.pellets.end(), std::int64_t{0});
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  ++episodes_done_;
  log_.episodes.push_back(std::move(rec));
  return log_.episodes.back();
}

void Trainer::run(int max_episodes) {
  for (int k = 0; !finished() && (max_episodes < 0 || k < max_episodes); ++k) run_episode();
}

Checkpoint Trainer::checkpoint() const { return {config_, seed_, episodes_done_, agents_}; }

std::pair<Checkpoint, TrainLog> run_training(const ExperimentConfig& config, std::uint64_t seed) {
  Trainer trainer(config, seed);
  trainer.run();
  return {trainer.checkpoint(), trainer.log()};
}

namespace {

EvalResult rollout(const ExperimentConfig& config, std::vector<DqnAgent>* agents,
                   const EvalOptions& options) {
  if (options.episodes < 0) throw std::invalid_argument("evaluate: negative episode count");
  EnvConfig env_config = config.env_config();
  if (options.steps_per_episode > 0) env_config.episode_length = options.steps_per_episode;
  Env env(env_config);
  const int n = env_config.num_agents;
  Rng policy_rng(mix_seed(options.seed, kRandomPolicyStream));

  EvalResult result;
  std::vector<StepRecord> episode;
  std::vector<Action> actions(n);
  for (int e = 0; e < options.episodes; ++e) {
    StepResult step = env.reset(eval_episode_seed(options.seed, e));
    episode.clear();
    while (!env.done()) {
      for (int i = 0; i < n; ++i) {
        actions[i] = options.random_policy
                         ? static_cast<Action>(policy_rng.below(kNumActions))
                         : static_cast<Action>((*agents)[i].select_action(step.observations[i]));
      }
      step = env.step(actions);
      episode.push_back(make_step_record(env, e));
      if (options.pheromone_csv && options.pheromone_every > 0 &&
          env.step_index() % options.pheromone_every == 0) {
        const bool header = e == 0 && env.step_index() == options.pheromone_every;
        env.pheromones().write_csv(*options.pheromone_csv, e, env.step_index(), header);
      }
    }
    result.metrics.push_back(episode_metrics(env.layout(), episode, config.analysis));
    if (options.keep_trace) result.trace.insert(result.trace.end(), episode.begin(), episode.end());
  }
  return result;
}

}  // namespace

EvalResult evaluate(const Checkpoint& checkpoint, const EvalOptions& options) {
  if (static_cast<int>(checkpoint.agents.size()) != checkpoint.config.num_agents) {
    throw ConfigError("evaluate: checkpoint holds " + std::to_string(checkpoint.agents.size()) +
                      " agents but the config expects " + std::to_string(checkpoint.config.num_agents));
  }
  std::vector<DqnAgent> agents = checkpoint.agents;
  for (auto& a : agents) {
    if (a.obs_dim() != checkpoint.config.obs_dim()) throw ConfigError("evaluate: observation size mismatch");
    a.set_learning(false);
  }
  return rollout(checkpoint.config, &agents, options);
}

EvalResult evaluate_random(const ExperimentConfig& config, const EvalOptions& options) {
  EvalOptions o = options;
  o.random_policy = true;
  return rollout(config, nullptr, o);
}

void check_compatible(const Checkpoint& checkpoint, const ExperimentConfig& config) {
  const ExperimentConfig& c = checkpoint.config;
  auto fail = [](const std::string& what) {
    throw ConfigError("config does not match checkpoint: " + what);
  };
  if (c.method != config.method) fail("method");
  if (c.num_agents != config.num_agents) fail("num_agents");
  if (c.arena.home_width != config.arena.home_width || c.arena.home_height != config.arena.home_height ||
      c.arena.source_width != config.arena.source_width ||
      c.arena.source_height != config.arena.source_height ||
      c.arena.tunnel_length != config.arena.tunnel_length) {
    fail("arena");
  }
  if (c.observation_radius != config.observation_radius) fail("observation_radius");
  if (c.learner.hidden != config.learner.hidden) fail("learner.hidden");
}

}  // namespace smadrl
