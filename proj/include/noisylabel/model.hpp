#pragma once

// Small dense softmax classifier (linear, or one ReLU hidden layer) with
// explicit backprop and an Adam optimizer.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "noisylabel/dataset.hpp"
#include "noisylabel/numerics.hpp"

namespace noisylabel {

enum class Architecture { kLinear, kOneHidden };

// Dense layer: out = W * in + b, W row-major [outputs x inputs].
struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Vector weights;
  Vector bias;

  double weight(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ModelParams {
  Architecture architecture = Architecture::kLinear;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden_units = 0;  // kOneHidden only
  std::vector<Layer> layers;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline bool all_finite(const ModelParams& model) {
  for (const auto& layer : model.layers) {
    if (!all_finite(layer.weights) || !all_finite(layer.bias)) return false;
  }
  return true;
}

// Gaussian weights with std 1/sqrt(fan_in), zero biases.
inline ModelParams init_model(Architecture arch, std::size_t input_dim, std::size_t num_classes,
                              std::size_t hidden_units, RngStream rng) {
  require(input_dim >= 1, "init_model: input_dim must be >= 1");
  require(num_classes >= 2, "init_model: need at least 2 classes");
  ModelParams model{arch, input_dim, num_classes, arch == Architecture::kOneHidden ? hidden_units : 0, {}};
  auto make_layer = [&rng](std::size_t in, std::size_t out) {
    Layer layer{in, out, Vector(in * out), Vector(out, 0.0)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : layer.weights) w = scale * rng.normal();
    return layer;
  };
  if (arch == Architecture::kLinear) {
    model.layers.push_back(make_layer(input_dim, num_classes));
  } else {
    require(hidden_units >= 1, "init_model: hidden_units must be >= 1");
    model.layers.push_back(make_layer(input_dim, hidden_units));
    model.layers.push_back(make_layer(hidden_units, num_classes));
  }
  return model;
}

namespace detail {

inline Vector affine(const Layer& layer, std::span<const double> in) {
  Vector out(layer.bias);
  for (std::size_t r = 0; r < layer.outputs; ++r) {
    const double* row = layer.weights.data() + r * layer.inputs;
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.inputs; ++c) acc += row[c] * in[c];
    out[r] += acc;
  }
  return out;
}

}  // namespace detail

// Activations kept for the backward pass.
struct ForwardPass {
  Vector hidden;  // post-ReLU, empty for the linear model
  Vector logits;
};

inline ForwardPass forward(const ModelParams& model, std::span<const double> x) {
  require(x.size() == model.input_dim, "forward: feature dimension mismatch");
  ForwardPass pass;
  if (model.architecture == Architecture::kLinear) {
    pass.logits = detail::affine(model.layers[0], x);
    return pass;
  }
  pass.hidden = detail::affine(model.layers[0], x);
  for (double& h : pass.hidden) h = std::max(0.0, h);
  pass.logits = detail::affine(model.layers[1], pass.hidden);
  return pass;
}

inline Vector logits(const ModelParams& model, std::span<const double> x) { return forward(model, x).logits; }

inline ProbVector predict_proba(const ModelParams& model, std::span<const double> x) {
  return softmax(forward(model, x).logits);
}

// Same shapes as the model, zero-filled.
inline std::vector<Layer> zero_gradients(const ModelParams& model) {
  std::vector<Layer> grads = model.layers;
  for (auto& g : grads) {
    std::fill(g.weights.begin(), g.weights.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
  return grads;
}

// grads += scale * dL/dtheta for one example, given dL/dlogits.
inline void accumulate_gradient(const ModelParams& model, std::span<const double> x, const ForwardPass& pass,
                                std::span<const double> grad_logits, double scale, std::vector<Layer>& grads) {
  auto accumulate_layer = [scale](const Layer& layer, Layer& g, std::span<const double> in,
                                  std::span<const double> grad_out) {
    for (std::size_t r = 0; r < layer.outputs; ++r) {
      const double go = scale * grad_out[r];
      if (go == 0.0) continue;
      double* row = g.weights.data() + r * layer.inputs;
      for (std::size_t c = 0; c < layer.inputs; ++c) row[c] += go * in[c];
      g.bias[r] += go;
    }
  };
  if (model.architecture == Architecture::kLinear) {
    accumulate_layer(model.layers[0], grads[0], x, grad_logits);
    return;
  }
  const Layer& out_layer = model.layers[1];
  Vector grad_hidden(out_layer.inputs, 0.0);
  for (std::size_t r = 0; r < out_layer.outputs; ++r) {
    for (std::size_t c = 0; c < out_layer.inputs; ++c) grad_hidden[c] += out_layer.weight(r, c) * grad_logits[r];
  }
  for (std::size_t c = 0; c < grad_hidden.size(); ++c) {
    if (pass.hidden[c] <= 0.0) grad_hidden[c] = 0.0;
  }
  accumulate_layer(out_layer, grads[1], pass.hidden, grad_logits);
  accumulate_layer(model.layers[0], grads[0], x, grad_hidden);
}

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  explicit Adam(const ModelParams& model) : first_(zero_gradients(model)), second_(zero_gradients(model)) {}

  void step(ModelParams& model, const std::vector<Layer>& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto update = [&](Vector& theta, const Vector& g, Vector& m, Vector& v) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEpsilon);
      }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weights, grads[l].weights, first_[l].weights, second_[l].weights);
      update(model.layers[l].bias, grads[l].bias, first_[l].bias, second_[l].bias);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  std::vector<Layer> first_;
  std::vector<Layer> second_;
  std::size_t t_ = 0;
};

// Clip-level accuracy: average the patch softmax outputs of each clip, take the
// argmax (lowest index on ties) and compare with the clip's label.
inline double evaluate(const ModelParams& model, const Dataset& data) {
  require(!data.empty(), "evaluate: empty dataset");
  const auto clips = patches_by_clip(data);
  std::size_t correct = 0;
  for (const auto& [clip, indices] : clips) {
    Vector mean(model.num_classes, 0.0);
    for (std::size_t i : indices) {
      const ProbVector p = predict_proba(model, data[i].features);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p[k];
    }
    if (static_cast<int>(argmax(mean)) == data[indices.front()].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(clips.size());
}

}  // namespace noisylabel
