#pragma once

// Per-example classification losses on (target distribution, softmax output)
// pairs and their gradients with respect to the logits. All losses accept soft
// targets, so smoothed and mixed labels need no special handling.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noisylabel/numerics.hpp"

namespace noisylabel {

// Target distribution over K classes; one-hot is the hard-label case.
using LabelDistribution = std::vector<double>;
using ExampleId = std::int64_t;

inline constexpr double kProbabilityFloor = 1e-12;

enum class LossKind { kCce, kMae, kLq };

struct LossSpec {
  LossKind kind = LossKind::kCce;
  double q = 0.7;  // only read for kLq

  static LossSpec cce() { return {LossKind::kCce, 0.7}; }
  static LossSpec mae() { return {LossKind::kMae, 0.7}; }
  static LossSpec lq(double q) { return {LossKind::kLq, q}; }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

inline bool valid_q(double q) { return std::isfinite(q) && q > 0.0 && q <= 1.0; }

inline void validate(const LossSpec& spec) {
  if (spec.kind == LossKind::kLq) {
    require(valid_q(spec.q), "loss: q must lie in (0, 1], got " + std::to_string(spec.q));
  }
}

inline const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCce: return "cce";
    case LossKind::kMae: return "mae";
    case LossKind::kLq: return "lq";
  }
  return "?";
}

namespace detail {

inline void require_same_length(std::span<const double> y, std::span<const double> p, const char* op) {
  require(y.size() == p.size(), std::string(op) + ": target and prediction lengths differ");
  require(!y.empty(), std::string(op) + ": empty distribution");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Pull a gradient w.r.t. softmax outputs back to the logits:
//   dL/dz_k = p_k * (g_k - sum_j p_j g_j)
inline Vector through_softmax(std::span<const double> p, std::span<const double> grad_p) {
  const double mean = dot(p, grad_p);
  Vector out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[k] * (grad_p[k] - mean);
  return out;
}

}  // namespace detail

inline double cce(std::span<const double> y, std::span<const double> p) {
  detail::require_same_length(y, p, "cce");
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] != 0.0) loss -= y[k] * std::log(std::max(p[k], kProbabilityFloor));
  }
  return loss;
}

inline double mae(std::span<const double> y, std::span<const double> p) {
  detail::require_same_length(y, p, "mae");
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) loss += std::abs(y[k] - p[k]);
  return loss;
}

// (1 - <y, p>^q) / q
inline double lq_loss(std::span<const double> y, std::span<const double> p, double q) {
  require(valid_q(q), "lq_loss: q must lie in (0, 1], got " + std::to_string(q));
  detail::require_same_length(y, p, "lq_loss");
  const double agreement = std::max(detail::dot(y, p), kProbabilityFloor);
  return (1.0 - std::pow(agreement, q)) / q;
}

inline double loss_value(const LossSpec& spec, std::span<const double> y, std::span<const double> p) {
  switch (spec.kind) {
    case LossKind::kCce: return cce(y, p);
    case LossKind::kMae: return mae(y, p);
    case LossKind::kLq: return lq_loss(y, p, spec.q);
  }
  throw InvalidInput("loss_value: unknown loss kind");
}

// dL/dz given the softmax probabilities p = softmax(z).
inline Vector loss_gradient_from_probs(const LossSpec& spec, std::span<const double> y, std::span<const double> p) {
  validate(spec);
  detail::require_same_length(y, p, "loss_gradient");
  const std::size_t k_count = y.size();
  switch (spec.kind) {
    case LossKind::kCce: {
      // sum(y) * p - y; sum(y) is 1 for a valid target but kept exact.
      double mass = 0.0;
      for (double v : y) mass += v;
      Vector g(k_count);
      for (std::size_t k = 0; k < k_count; ++k) g[k] = mass * p[k] - y[k];
      return g;
    }
    case LossKind::kMae: {
      Vector grad_p(k_count);
      for (std::size_t k = 0; k < k_count; ++k) {
        const double diff = y[k] - p[k];
        grad_p[k] = diff > 0.0 ? -1.0 : (diff < 0.0 ? 1.0 : 0.0);
      }
      return detail::through_softmax(p, grad_p);
    }
    case LossKind::kLq: {
      // dL/dz_k = d^(q-1) * p_k * (d - y_k), with d = <y, p>.
      const double agreement = std::max(detail::dot(y, p), kProbabilityFloor);
      const double scale = std::pow(agreement, spec.q - 1.0);
      Vector g(k_count);
      for (std::size_t k = 0; k < k_count; ++k) g[k] = scale * p[k] * (agreement - y[k]);
      return g;
    }
  }
  throw InvalidInput("loss_gradient: unknown loss kind");
}

inline Vector loss_gradient_wrt_logits(const LossSpec& spec, std::span<const double> y, std::span<const double> logits) {
  validate(spec);
  require(all_finite(logits), "loss_gradient_wrt_logits: logits must be finite");
  const ProbVector p = softmax(logits);
  return loss_gradient_from_probs(spec, y, p);
}

struct LossReport {
  std::vector<double> per_example;
  std::vector<ExampleId> example_ids;
};

inline LossReport batch_losses(const LossSpec& spec, std::span<const LabelDistribution> targets,
                               std::span<const ProbVector> predictions, std::span<const ExampleId> ids) {
  validate(spec);
  require(targets.size() == predictions.size() && targets.size() == ids.size(),
          "batch_losses: targets, predictions and ids must have equal lengths");
  LossReport report;
  report.per_example.reserve(targets.size());
  report.example_ids.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    report.per_example.push_back(loss_value(spec, targets[i], predictions[i]));
  }
  return report;
}

}  // namespace noisylabel
