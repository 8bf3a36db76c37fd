#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smadrl/mlp.hpp"
#include "smadrl/rng.hpp"

namespace smadrl {

struct Transition {
  std::vector<float> obs;
  int action = 0;
  float reward = 0.0f;
  std::vector<float> next_obs;
  bool done = false;
};

// Fixed-capacity ring of transitions with FIFO eviction and uniform sampling
// with replacement.
class ReplayBuffer {
 public:
  using Matrix = Mlp<float>::Matrix;

  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, int obs_dim);

  void push(std::span<const float> obs, int action, float reward, std::span<const float> next_obs,
            bool done);
  void push(const Transition& t) { push(t.obs, t.action, t.reward, t.next_obs, t.done); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  // i = 0 is the oldest stored transition.
  Transition get(std::size_t i) const;

  struct Batch {
    Matrix obs;       // obs_dim x batch
    Matrix next_obs;  // obs_dim x batch
    std::vector<int> actions;
    std::vector<float> rewards;
    std::vector<std::uint8_t> done;
  };
  void sample(std::size_t batch, Rng& rng, Batch& out) const;

  // Raw ring state, for checkpoints.
  std::size_t head() const { return head_; }
  std::span<const float> raw_obs() const { return obs_; }
  std::span<const float> raw_next_obs() const { return next_obs_; }
  std::span<const int> raw_actions() const { return actions_; }
  std::span<const float> raw_rewards() const { return rewards_; }
  std::span<const std::uint8_t> raw_done() const { return done_; }
  void restore(std::size_t size, std::size_t head, std::vector<float> obs, std::vector<float> next_obs,
               std::vector<int> actions, std::vector<float> rewards, std::vector<std::uint8_t> done);

 private:
  std::size_t capacity_ = 0;
  int obs_dim_ = 0;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // next write slot
  std::vector<float> obs_;
  std::vector<float> next_obs_;
  std::vector<int> actions_;
  std::vector<float> rewards_;
  std::vector<std::uint8_t> done_;
};

// Linear decay from `start` to `end` over `horizon` steps, then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.02;
  std::int64_t horizon = 0;

  double at(std::int64_t step) const;
};

// Epsilon-greedy choice; ties in the greedy branch go to the lowest index.
// With epsilon == 0 the rng is not consumed.
int act(std::span<const float> q_values, double epsilon, Rng& rng);
int argmax(std::span<const float> values);

// Double-DQN targets: y = r for terminal transitions, otherwise
// r + gamma * Q_target(s', argmax_a Q_online(s', a)).
template <typename T>
std::vector<T> td_targets(const Mlp<T>& online, const Mlp<T>& target,
                          const typename Mlp<T>::Matrix& next_obs, std::span<const T> rewards,
                          std::span<const std::uint8_t> done, T gamma);

struct DqnConfig {
  std::vector<int> hidden{128, 128, 128};
  double lr = 1e-4;
  double gamma = 0.99;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  int sync_interval = 1000;  // gradient updates between target syncs
  int learn_start = 1000;    // transitions stored before the first update
  int update_every = 1;      // environment steps per gradient update
  double eps_start = 1.0;
  double eps_end = 0.02;
  double eps_fraction = 0.1;  // share of the learning phase used for the decay

  void validate() const;
};

// Independent double-DQN learner. A frozen agent (learning() == false) acts
// greedily and never touches its parameters, optimizer, target net or replay.
class DqnAgent {
 public:
  DqnAgent() = default;
  DqnAgent(int obs_dim, const DqnConfig& config, std::uint64_t seed);

  int select_action(std::span<const float> obs);
  std::vector<float> q_values(std::span<const float> obs) const;

  // Stores the transition and runs one update when warm. Returns the loss if
  // an update happened.
  std::optional<float> observe(std::span<const float> obs, int action, float reward,
                               std::span<const float> next_obs, bool done);

  float train_step();
  void sync_target();

  void set_learning(bool on) { learning_ = on; }
  bool learning() const { return learning_; }
  // Total environment steps of this agent's learning phase.
  void set_training_horizon(std::int64_t total_steps);
  double epsilon() const;

  const DqnConfig& config() const { return config_; }
  int obs_dim() const { return online_.input_dim(); }
  Mlp<float>& online() { return online_; }
  const Mlp<float>& online() const { return online_; }
  Mlp<float>& target() { return target_; }
  const Mlp<float>& target() const { return target_; }
  AdamState<float>& adam() { return adam_; }
  const AdamState<float>& adam() const { return adam_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  EpsilonSchedule& schedule() { return schedule_; }
  const EpsilonSchedule& schedule() const { return schedule_; }
  std::int64_t steps() const { return steps_; }
  std::int64_t updates() const { return updates_; }
  void set_counters(std::int64_t steps, std::int64_t updates) {
    steps_ = steps;
    updates_ = updates;
  }

 private:
  DqnConfig config_;
  Mlp<float> online_;
  Mlp<float> target_;
  AdamState<float> adam_;
  Rng rng_;
  ReplayBuffer replay_;
  EpsilonSchedule schedule_;
  bool learning_ = true;
  std::int64_t steps_ = 0;
  std::int64_t updates_ = 0;

  ReplayBuffer::Batch batch_;
  std::vector<float, Eigen::aligned_allocator<float>> grads_;
};

}  // namespace smadrl
