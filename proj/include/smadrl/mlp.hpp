#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smadrl/rng.hpp"

namespace smadrl {

// Fully connected network with rectified-linear hidden layers and a linear
// output layer. All parameters live in one flat buffer: for each layer the
// weight matrix (out x in, column-major) followed by the bias vector.
template <typename T>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Mlp() = default;
  // sizes = {input, hidden..., output}; at least two entries.
  explicit Mlp(std::vector<int> sizes);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  std::size_t param_count() const { return params_.size(); }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }

  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Vector> bias(int layer);
  Eigen::Map<const Vector> bias(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
  }

  // Columns of `inputs` are samples; returns output_dim x batch.
  Matrix forward(const Matrix& inputs) const;
  std::vector<T> forward(std::span<const T> input) const;

  bool operator==(const Mlp& other) const {
    return sizes_ == other.sizes_ && params_ == other.params_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  // Eigen picks vectorised paths by address alignment, so a fixed alignment
  // keeps results bit-identical across copies of the same network.
  std::vector<T, Eigen::aligned_allocator<T>> params_;
};

// Mean squared TD error over the batch, counting only the taken action's
// output, and its gradient with respect to every parameter (written into
// `grads`, which must have param_count() entries). Targets are constants.
// Throws DivergenceError if the loss is not finite.
template <typename T>
T loss_and_grads(const Mlp<T>& net, const typename Mlp<T>::Matrix& inputs,
                 std::span<const int> actions, std::span<const T> targets, std::span<T> grads);

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
  double step_size = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n, double lr = 1e-4) : m(n, T(0)), v(n, T(0)), step_size(lr) {}
};

// Bias-corrected Adam step; increments t.
template <typename T>
void adam_update(std::span<T> params, AdamState<T>& adam, std::span<const T> grads);

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace smadrl
