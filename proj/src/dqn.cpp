#include "smadrl/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smadrl/errors.hpp"

namespace smadrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim)
    : capacity_(capacity),
      obs_dim_(obs_dim),
      obs_(capacity * obs_dim),
      next_obs_(capacity * obs_dim),
      actions_(capacity),
      rewards_(capacity),
      done_(capacity) {
  if (capacity == 0 || obs_dim <= 0) throw std::invalid_argument("replay: empty capacity or dimension");
}

void ReplayBuffer::push(std::span<const float> obs, int action, float reward,
                        std::span<const float> next_obs, bool done) {
  if (static_cast<int>(obs.size()) != obs_dim_ || static_cast<int>(next_obs.size()) != obs_dim_) {
    throw std::invalid_argument("replay: observation dimension mismatch");
  }
  const std::size_t slot = head_;
  std::copy(obs.begin(), obs.end(), obs_.begin() + slot * obs_dim_);
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + slot * obs_dim_);
  actions_[slot] = action;
  rewards_[slot] = reward;
  done_[slot] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::get(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay: index past the end");
  const std::size_t slot = (head_ + capacity_ - size_ + i) % capacity_;
  Transition t;
  t.obs.assign(obs_.begin() + slot * obs_dim_, obs_.begin() + (slot + 1) * obs_dim_);
  t.next_obs.assign(next_obs_.begin() + slot * obs_dim_, next_obs_.begin() + (slot + 1) * obs_dim_);
  t.action = actions_[slot];
  t.reward = rewards_[slot];
  t.done = done_[slot] != 0;
  return t;
}

void ReplayBuffer::sample(std::size_t batch, Rng& rng, Batch& out) const {
  if (size_ == 0) throw std::logic_error("replay: sampling from an empty buffer");
  out.obs.resize(obs_dim_, static_cast<Eigen::Index>(batch));
  out.next_obs.resize(obs_dim_, static_cast<Eigen::Index>(batch));
  out.actions.resize(batch);
  out.rewards.resize(batch);
  out.done.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    // Occupied slots are always [0, size_) in storage order.
    const std::size_t slot = rng.below(size_);
    std::copy_n(obs_.begin() + slot * obs_dim_, obs_dim_, out.obs.col(b).data());
    std::copy_n(next_obs_.begin() + slot * obs_dim_, obs_dim_, out.next_obs.col(b).data());
    out.actions[b] = actions_[slot];
    out.rewards[b] = rewards_[slot];
    out.done[b] = done_[slot];
  }
}

void ReplayBuffer::restore(std::size_t size, std::size_t head, std::vector<float> obs,
                           std::vector<float> next_obs, std::vector<int> actions,
                           std::vector<float> rewards, std::vector<std::uint8_t> done) {
  if (size > capacity_ || head >= capacity_ || obs.size() != obs_.size() ||
      next_obs.size() != next_obs_.size() || actions.size() != capacity_ ||
      rewards.size() != capacity_ || done.size() != capacity_) {
    throw std::invalid_argument("replay: restored state does not match capacity");
  }
  size_ = size;
  head_ = head;
  obs_ = std::move(obs);
  next_obs_ = std::move(next_obs);
  actions_ = std::move(actions);
  rewards_ = std::move(rewards);
  done_ = std::move(done);
}

double EpsilonSchedule::at(std::int64_t step) const {
  if (horizon <= 0 || step >= horizon) return end;
  if (step <= 0) return start;
  const double frac = static_cast<double>(step) / static_cast<double>(horizon);
  return start + (end - start) * frac;
}

int argmax(std::span<const float> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

int act(std::span<const float> q_values, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.below(q_values.size()));
  }
  return argmax(q_values);
}

template <typename T>
std::vector<T> td_targets(const Mlp<T>& online, const Mlp<T>& target,
                          const typename Mlp<T>::Matrix& next_obs, std::span<const T> rewards,
                          std::span<const std::uint8_t> done, T gamma) {
  const auto batch = next_obs.cols();
  if (static_cast<Eigen::Index>(rewards.size()) != batch ||
      static_cast<Eigen::Index>(done.size()) != batch) {
    throw std::invalid_argument("td_targets: batch size mismatch");
  }
  const auto q_online = online.forward(next_obs);
  const auto q_target = target.forward(next_obs);
  std::vector<T> y(static_cast<std::size_t>(batch));
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (done[b]) {
      y[b] = rewards[b];
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q_online.rows(); ++a) {
      if (q_online(a, b) > q_online(best, b)) best = a;
    }
    y[b] = rewards[b] + gamma * q_target(best, b);
  }
  return y;
}

template std::vector<float> td_targets<float>(const Mlp<float>&, const Mlp<float>&,
                                              const Mlp<float>::Matrix&, std::span<const float>,
                                              std::span<const std::uint8_t>, float);
template std::vector<double> td_targets<double>(const Mlp<double>&, const Mlp<double>&,
                                                const Mlp<double>::Matrix&, std::span<const double>,
                                                std::span<const std::uint8_t>, double);

void DqnConfig::validate() const {
  if (hidden.empty()) throw ConfigError("learner: at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("learner: hidden sizes must be positive");
  }
  if (!(lr > 0)) throw ConfigError("learner: lr must be positive");
  if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("learner: gamma must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("learner: batch_size must be positive");
  if (buffer_capacity < 1) throw ConfigError("learner: buffer_capacity must be positive");
  if (sync_interval < 1) throw ConfigError("learner: sync_interval must be positive");
  if (learn_start < 1) throw ConfigError("learner: learn_start must be positive");
  if (update_every < 1) throw ConfigError("learner: update_every must be positive");
  if (!(eps_start >= 0 && eps_start <= 1 && eps_end >= 0 && eps_end <= eps_start)) {
    throw ConfigError("learner: epsilon must satisfy 0 <= end <= start <= 1");
  }
  if (!(eps_fraction > 0 && eps_fraction <= 1)) throw ConfigError("learner: eps_fraction must lie in (0, 1]");
}

DqnAgent::DqnAgent(int obs_dim, const DqnConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed), replay_(config.buffer_capacity, obs_dim) {
  config_.validate();
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
  sizes.push_back(5);
  online_ = Mlp<float>(sizes);
  online_.init_uniform(rng_);
  target_ = online_;
  adam_ = AdamState<float>(online_.param_count(), config_.lr);
  schedule_ = {config_.eps_start, config_.eps_end, 0};
  grads_.assign(online_.param_count(), 0.0f);
}

void DqnAgent::set_training_horizon(std::int64_t total_steps) {
  schedule_.horizon = static_cast<std::int64_t>(
      std::llround(config_.eps_fraction * static_cast<double>(total_steps)));
}

double DqnAgent::epsilon() const { return learning_ ? schedule_.at(steps_) : 0.0; }

std::vector<float> DqnAgent::q_values(std::span<const float> obs) const { return online_.forward(obs); }

int DqnAgent::select_action(std::span<const float> obs) {
  const auto q = q_values(obs);
  return act(q, epsilon(), rng_);
}

std::optional<float> DqnAgent::observe(std::span<const float> obs, int action, float reward,
                                       std::span<const float> next_obs, bool done) {
  if (!learning_) return std::nullopt;
  ++steps_;
  replay_.push(obs, action, reward, next_obs, done);
  if (static_cast<std::int64_t>(replay_.size()) < config_.learn_start) return std::nullopt;
  if (steps_ % config_.update_every != 0) return std::nullopt;
  return train_step();
}

float DqnAgent::train_step() {
  replay_.sample(static_cast<std::size_t>(config_.batch_size), rng_, batch_);
  const auto y = td_targets<float>(online_, target_, batch_.next_obs, batch_.rewards, batch_.done,
                                   static_cast<float>(config_.gamma));
  const float loss = loss_and_grads<float>(online_, batch_.obs, batch_.actions, y, grads_);
  adam_update<float>(online_.params(), adam_, grads_);
  ++updates_;
  if (updates_ % config_.sync_interval == 0) sync_target();
  return loss;
}

void DqnAgent::sync_target() { target_ = online_; }

}  // namespace smadrl
