#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "smadrl/analysis.hpp"
#include "smadrl/checkpoint.hpp"
#include "smadrl/config.hpp"
#include "smadrl/dqn.hpp"
#include "smadrl/trace.hpp"

namespace smadrl {

// One training phase: which agents are present and which of them learn.
struct Phase {
  int index = 0;
  int active_agents = 1;
  std::vector<int> learners;
  int episodes = 0;
};

// Without curriculum a single phase trains every agent for run.episodes.
// With curriculum, phase 0 trains agents {0, 1} together; phase k >= 1 adds
// agent k + 1 as the only learner while the others act greedily and stay fixed.
std::vector<Phase> training_phases(const ExperimentConfig& config);

struct EpisodeLog {
  int episode = 0;
  int phase = 0;
  int active_agents = 0;
  std::vector<double> rewards;         // per agent, summed over the episode
  std::vector<std::int64_t> pellets;   // per agent trips
  std::int64_t total_pellets = 0;
  std::int64_t collisions = 0;
  std::int64_t clog_events = 0;
  double wall_seconds = 0.0;  // written only to the timing sidecar
};

struct TrainLog {
  int num_agents = 0;
  std::vector<EpisodeLog> episodes;
};

void write_train_log_csv(std::ostream& out, const TrainLog& log);
void write_timing_csv(std::ostream& out, const TrainLog& log);
TrainLog read_train_log_csv(std::istream& in);

class Trainer {
 public:
  Trainer(ExperimentConfig config, std::uint64_t seed);
  explicit Trainer(Checkpoint checkpoint);

  int total_episodes() const;
  int episodes_done() const { return episodes_done_; }
  bool finished() const { return episodes_done_ >= total_episodes(); }

  // Runs the next episode and appends its log record. Throws DivergenceError
  // on a non-finite loss; checkpoint() then captures the state at the failure.
  const EpisodeLog& run_episode();
  // Runs up to `max_episodes` more episodes (all remaining when negative).
  void run(int max_episodes = -1);

  const ExperimentConfig& config() const { return config_; }
  const TrainLog& log() const { return log_; }
  const std::vector<DqnAgent>& agents() const { return agents_; }
  const Phase& current_phase() const;
  Checkpoint checkpoint() const;

 private:
  void apply_phase(const Phase& phase);

  ExperimentConfig config_;
  std::uint64_t seed_ = 0;
  int episodes_done_ = 0;
  std::vector<Phase> phases_;
  std::vector<DqnAgent> agents_;
  TrainLog log_;
};

std::pair<Checkpoint, TrainLog> run_training(const ExperimentConfig& config, std::uint64_t seed);

struct EvalOptions {
  int episodes = 10;
  std::uint64_t seed = 0;
  int steps_per_episode = 0;   // 0: the config's episode length
  bool random_policy = false;  // uniform random actions instead of the networks
  bool keep_trace = false;
  std::ostream* pheromone_csv = nullptr;  // map dumps every `pheromone_every` steps
  int pheromone_every = 0;
};

struct EvalResult {
  std::vector<EpisodeMetrics> metrics;
  std::vector<StepRecord> trace;
};

// Greedy rollouts of every agent in the checkpoint with the full team.
EvalResult evaluate(const Checkpoint& checkpoint, const EvalOptions& options);
// Uniform random policy on the config's environment; the baseline floor.
EvalResult evaluate_random(const ExperimentConfig& config, const EvalOptions& options);

// Throws ConfigError when `config` describes a different experiment than the
// checkpoint (method, team size, arena, observation or network shape).
void check_compatible(const Checkpoint& checkpoint, const ExperimentConfig& config);

}  // namespace smadrl
