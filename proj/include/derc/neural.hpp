#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "derc/dataset.hpp"
#include "derc/error.hpp"

// Minimal dense-network engine with exact reverse-mode gradients.
//
// Batches are row-major in the sense that each row is one sample; a layer
// maps a bs x n_in batch to bs x n_out through  act(X W^T + 1 b^T).
namespace derc::nn {

enum class Activation { relu, sigmoid, linear };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation: " + name);
}

struct DenseLayer {
  Matrix weights;  // n_out x n_in
  Vector bias;     // n_out
  Activation activation = Activation::linear;

  [[nodiscard]] Eigen::Index fan_in() const { return weights.cols(); }
  [[nodiscard]] Eigen::Index fan_out() const { return weights.rows(); }
};

/// Encoder (W) and decoder (W') stacks.
///
/// For a variational autoencoder the last encoder layer produces the latent
/// mean and `log_var_head`, fed by the same penultimate activation, produces
/// the log-variance. Encoding always yields the mean.
struct NetworkParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  std::optional<DenseLayer> log_var_head;

  [[nodiscard]] bool variational() const { return log_var_head.has_value(); }
  [[nodiscard]] Eigen::Index input_dim() const { return encoder.front().fan_in(); }
  [[nodiscard]] Eigen::Index latent_dim() const { return encoder.back().fan_out(); }
};

// Half-width of the uniform initialisation range: sqrt(3 s / n_input), s = 1/3.
inline double init_bound(std::size_t n_input, double scale = 1.0 / 3.0) {
  if (n_input == 0) throw ArgumentError("init_bound: n_input must be >= 1");
  return std::sqrt(3.0 * scale / static_cast<double>(n_input));
}

inline Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, std::size_t n_input,
                           std::mt19937_64& rng) {
  const double l = init_bound(n_input);
  std::uniform_real_distribution<double> dist(-l, l);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, std::size_t n_input,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_uniform(rows, cols, n_input, rng);
}

inline DenseLayer make_dense(Eigen::Index n_in, Eigen::Index n_out, Activation act,
                             std::mt19937_64& rng) {
  return {init_uniform(n_out, n_in, static_cast<std::size_t>(n_in), rng), Vector::Zero(n_out), act};
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Matrix activate(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::sigmoid: return pre.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::linear: return pre;
  }
  return pre;
}

// Multiplies the upstream gradient by the activation derivative in place.
// relu'(0) is taken as 0.
inline void activation_backward(Matrix& grad, const Matrix& pre, const Matrix& out,
                                Activation act) {
  switch (act) {
    case Activation::relu:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::sigmoid:
      grad.array() *= out.array() * (1.0 - out.array());
      break;
    case Activation::linear:
      break;
  }
}

struct LayerCache {
  Matrix input;
  Matrix pre;
  Matrix output;
};

struct ForwardCache {
  std::vector<LayerCache> layers;

  [[nodiscard]] const Matrix& output() const { return layers.back().output; }
};

inline void check_input(std::span<const DenseLayer> layers, const Matrix& batch) {
  if (layers.empty()) throw ArgumentError("forward: empty layer stack");
  if (batch.cols() != layers.front().fan_in())
    throw ArgumentError("forward: batch width " + std::to_string(batch.cols()) +
                        " does not match layer fan-in " +
                        std::to_string(layers.front().fan_in()));
}

inline ForwardCache forward(std::span<const DenseLayer> layers, const Matrix& batch) {
  check_input(layers, batch);
  ForwardCache cache;
  cache.layers.reserve(layers.size());
  const Matrix* input = &batch;
  for (const auto& layer : layers) {
    LayerCache c;
    c.input = *input;
    c.pre.noalias() = c.input * layer.weights.transpose();
    c.pre.rowwise() += layer.bias.transpose();
    c.output = activate(c.pre, layer.activation);
    cache.layers.push_back(std::move(c));
    input = &cache.layers.back().output;
  }
  return cache;
}

// Inference-only forward pass.
inline Matrix apply(std::span<const DenseLayer> layers, const Matrix& batch) {
  check_input(layers, batch);
  Matrix x = batch;
  for (const auto& layer : layers) {
    Matrix pre = x * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    x = activate(pre, layer.activation);
  }
  return x;
}

struct LayerGrad {
  Matrix weights;
  Vector bias;
};

struct BackwardResult {
  std::vector<LayerGrad> grads;
  Matrix input_grad;  // empty unless requested
};

/// Reverse-mode pass through a cached forward evaluation.
inline BackwardResult backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                               const Matrix& output_grad, bool want_input_grad = true) {
  if (cache.layers.size() != layers.size()) throw ArgumentError("backward: cache/stack mismatch");
  BackwardResult out;
  out.grads.resize(layers.size());
  Matrix delta = output_grad;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const auto& layer = layers[idx];
    const auto& c = cache.layers[idx];
    activation_backward(delta, c.pre, c.output, layer.activation);
    out.grads[idx].weights.noalias() = delta.transpose() * c.input;
    out.grads[idx].bias = delta.colwise().sum().transpose();
    if (idx > 0 || want_input_grad) {
      Matrix next = delta * layer.weights;
      delta = std::move(next);
    }
  }
  if (want_input_grad) out.input_grad = std::move(delta);
  return out;
}

struct Loss {
  double value = 0.0;
  Matrix grad;
};

/// Reconstruction error averaged over every element of the batch, with its
/// gradient 2 (r - x) / (n d) with respect to the reconstruction.
inline Loss mse_loss(const Matrix& x, const Matrix& r) {
  if (x.rows() != r.rows() || x.cols() != r.cols())
    throw ArgumentError("mse_loss: shape mismatch");
  if (x.size() == 0) throw ArgumentError("mse_loss: empty batch");
  const double count = static_cast<double>(x.size());
  Matrix diff = r - x;
  Loss out;
  out.value = diff.squaredNorm() / count;
  out.grad = (2.0 / count) * diff;
  return out;
}

struct NetworkGrads {
  std::vector<LayerGrad> encoder;
  std::vector<LayerGrad> decoder;
  std::optional<LayerGrad> log_var_head;
};

/// Classical momentum: v <- momentum v - lr g;  p <- p + v.
///
/// Velocity buffers are addressed by slot index and created on first use,
/// so every caller must visit its parameters in a fixed order.
struct SgdMomentum {
  double lr = 0.01;
  double momentum = 0.9;
  std::vector<Vector> velocity;

  void update(std::size_t slot, double* param, const double* grad, Eigen::Index size) {
    if (slot >= velocity.size()) velocity.resize(slot + 1);
    Vector& v = velocity[slot];
    if (v.size() == 0) v = Vector::Zero(size);
    if (v.size() != size) throw ArgumentError("SgdMomentum: parameter shape changed for slot");
    Eigen::Map<Vector> p(param, size);
    Eigen::Map<const Vector> g(grad, size);
    v = momentum * v - lr * g;
    p += v;
  }

  void update(std::size_t slot, Matrix& param, const Matrix& grad) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
      throw ArgumentError("SgdMomentum: gradient shape mismatch");
    update(slot, param.data(), grad.data(), param.size());
  }

  void update(std::size_t slot, Vector& param, const Vector& grad) {
    if (param.size() != grad.size()) throw ArgumentError("SgdMomentum: gradient shape mismatch");
    update(slot, param.data(), grad.data(), param.size());
  }
};

inline std::size_t sgd_layers_step(SgdMomentum& opt, std::vector<DenseLayer>& layers,
                                   const std::vector<LayerGrad>& grads, std::size_t slot) {
  if (layers.size() != grads.size()) throw ArgumentError("sgd step: gradient count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    opt.update(slot++, layers[i].weights, grads[i].weights);
    opt.update(slot++, layers[i].bias, grads[i].bias);
  }
  return slot;
}

/// Applies one step to every parameter of the network; returns the next
/// free optimizer slot so callers can append further parameter groups.
inline std::size_t sgd_momentum_step(SgdMomentum& opt, NetworkParams& params,
                                     const NetworkGrads& grads, std::size_t slot = 0) {
  slot = sgd_layers_step(opt, params.encoder, grads.encoder, slot);
  if (params.log_var_head && grads.log_var_head) {
    opt.update(slot++, params.log_var_head->weights, grads.log_var_head->weights);
    opt.update(slot++, params.log_var_head->bias, grads.log_var_head->bias);
  }
  return sgd_layers_step(opt, params.decoder, grads.decoder, slot);
}

}  // namespace derc::nn
