#include "smadrl/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "smadrl/errors.hpp"

namespace smadrl {

template <typename T>
Mlp<T>::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, T(0));
}

template <typename T>
void Mlp<T>::init_uniform(Rng& rng) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t begin = offsets_[l];
    const std::size_t end = bias_offset(l) + sizes_[l + 1];
    for (std::size_t i = begin; i < end; ++i) {
      params_[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
    }
  }
}

template <typename T>
Eigen::Map<typename Mlp<T>::Matrix> Mlp<T>::weight(int layer) {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

template <typename T>
Eigen::Map<const typename Mlp<T>::Matrix> Mlp<T>::weight(int layer) const {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

template <typename T>
Eigen::Map<typename Mlp<T>::Vector> Mlp<T>::bias(int layer) {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

template <typename T>
Eigen::Map<const typename Mlp<T>::Vector> Mlp<T>::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

template <typename T>
typename Mlp<T>::Matrix Mlp<T>::forward(const Matrix& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw std::invalid_argument("mlp: input has " + std::to_string(inputs.rows()) +
                                " rows, expected " + std::to_string(input_dim()));
  }
  Matrix h = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.cwiseMax(T(0));
    h = std::move(z);
  }
  return h;
}

template <typename T>
std::vector<T> Mlp<T>::forward(std::span<const T> input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw std::invalid_argument("mlp: input has " + std::to_string(input.size()) +
                                " entries, expected " + std::to_string(input_dim()));
  }
  const Matrix x = Eigen::Map<const Matrix>(input.data(), input_dim(), 1);
  const Matrix y = forward(x);
  return std::vector<T>(y.data(), y.data() + y.size());
}

template <typename T>
T loss_and_grads(const Mlp<T>& net, const typename Mlp<T>::Matrix& inputs,
                 std::span<const int> actions, std::span<const T> targets, std::span<T> grads) {
  using Matrix = typename Mlp<T>::Matrix;
  const int batch = static_cast<int>(inputs.cols());
  if (inputs.rows() != net.input_dim()) throw std::invalid_argument("loss: input dimension mismatch");
  if (static_cast<int>(actions.size()) != batch || static_cast<int>(targets.size()) != batch) {
    throw std::invalid_argument("loss: actions/targets must match the batch size");
  }
  if (grads.size() != net.param_count()) throw std::invalid_argument("loss: gradient buffer size");
  if (batch == 0) throw std::invalid_argument("loss: empty batch");

  const int layers = net.num_layers();
  std::vector<Matrix> acts;
  acts.reserve(layers + 1);
  acts.push_back(inputs);
  for (int l = 0; l < layers; ++l) {
    Matrix z = net.weight(l) * acts.back();
    z.colwise() += net.bias(l);
    if (l + 1 < layers) z = z.cwiseMax(T(0));
    acts.push_back(std::move(z));
  }

  const Matrix& q = acts.back();
  Matrix delta = Matrix::Zero(q.rows(), batch);
  T loss = T(0);
  const T scale = T(2) / static_cast<T>(batch);
  for (int b = 0; b < batch; ++b) {
    const int a = actions[b];
    if (a < 0 || a >= q.rows()) throw std::invalid_argument("loss: action index out of range");
    const T diff = q(a, b) - targets[b];
    loss += diff * diff;
    delta(a, b) = scale * diff;
  }
  loss /= static_cast<T>(batch);
  if (!std::isfinite(static_cast<double>(loss))) {
    throw DivergenceError("non-finite loss in gradient update");
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int rows = net.sizes()[l + 1];
    const int cols = net.sizes()[l];
    Eigen::Map<Matrix> dw(grads.data() + net.weight_offset(l), rows, cols);
    Eigen::Map<typename Mlp<T>::Vector> db(grads.data() + net.bias_offset(l), rows);
    dw.noalias() = delta * acts[l].transpose();
    db = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = net.weight(l).transpose() * delta;
      delta = back.cwiseProduct((acts[l].array() > T(0)).template cast<T>().matrix());
    }
  }
  return loss;
}

template <typename T>
void adam_update(std::span<T> params, AdamState<T>& adam, std::span<const T> grads) {
  if (params.size() != grads.size() || adam.m.size() != params.size() ||
      adam.v.size() != params.size()) {
    throw std::invalid_argument("adam: shape mismatch");
  }
  ++adam.t;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
  const T b1 = static_cast<T>(adam.beta1);
  const T b2 = static_cast<T>(adam.beta2);
  const T lr_t = static_cast<T>(adam.step_size / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(adam.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    adam.m[i] = b1 * adam.m[i] + (T(1) - b1) * g;
    adam.v[i] = b2 * adam.v[i] + (T(1) - b2) * g * g;
    params[i] -= lr_t * adam.m[i] / (std::sqrt(adam.v[i] * inv_c2) + eps);
  }
}

template class Mlp<float>;
template class Mlp<double>;

template float loss_and_grads<float>(const Mlp<float>&, const Mlp<float>::Matrix&,
                                     std::span<const int>, std::span<const float>, std::span<float>);
template double loss_and_grads<double>(const Mlp<double>&, const Mlp<double>::Matrix&,
                                       std::span<const int>, std::span<const double>,
                                       std::span<double>);
template void adam_update<float>(std::span<float>, AdamState<float>&, std::span<const float>);
template void adam_update<double>(std::span<double>, AdamState<double>&, std::span<const double>);

}  // namespace smadrl
