#pragma once

// Label smoothing: y'(k) = (1 - eps) * [k == t] + eps / K, with an optional
// two-group policy that lowers eps for low-noise classes and raises it for
// high-noise ones.

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "noisylabel/errors.hpp"
#include "noisylabel/losses.hpp"

namespace noisylabel {

enum class NoiseGroup { kLow, kHigh };

using NoiseGroupMap = std::map<int, NoiseGroup>;

struct SmoothingPolicy {
  double epsilon = 0.0;
  double delta_epsilon = 0.0;
  std::optional<NoiseGroupMap> group_of_class;  // absent: uniform policy
};

inline void validate(const SmoothingPolicy& policy) {
  require(std::isfinite(policy.epsilon) && policy.epsilon >= 0.0 && policy.epsilon < 1.0,
          "smoothing: epsilon must lie in [0, 1)");
  require(std::isfinite(policy.delta_epsilon) && policy.delta_epsilon >= 0.0,
          "smoothing: delta_epsilon must be >= 0");
  require(policy.epsilon - policy.delta_epsilon >= 0.0, "smoothing: epsilon - delta_epsilon must be >= 0");
  require(policy.epsilon + policy.delta_epsilon < 1.0, "smoothing: epsilon + delta_epsilon must be < 1");
}

inline LabelDistribution one_hot(int target_class, std::size_t num_classes) {
  require(num_classes >= 2, "one_hot: need at least 2 classes");
  require(target_class >= 0 && static_cast<std::size_t>(target_class) < num_classes,
          "one_hot: target class out of range");
  LabelDistribution y(num_classes, 0.0);
  y[static_cast<std::size_t>(target_class)] = 1.0;
  return y;
}

inline LabelDistribution smooth_uniform(int target_class, std::size_t num_classes, double epsilon) {
  require(std::isfinite(epsilon) && epsilon >= 0.0 && epsilon < 1.0, "smooth_uniform: epsilon must lie in [0, 1)");
  LabelDistribution y = one_hot(target_class, num_classes);
  const double spread = epsilon / static_cast<double>(num_classes);
  for (auto& v : y) v = (1.0 - epsilon) * v + spread;
  return y;
}

inline double effective_epsilon(int target_class, const SmoothingPolicy& policy) {
  if (!policy.group_of_class) return policy.epsilon;
  const auto it = policy.group_of_class->find(target_class);
  if (it == policy.group_of_class->end()) {
    throw ConfigError("smoothing.groups: class " + std::to_string(target_class) + " has no noise group");
  }
  return it->second == NoiseGroup::kLow ? policy.epsilon - policy.delta_epsilon
                                        : policy.epsilon + policy.delta_epsilon;
}

inline LabelDistribution smooth_with_policy(int target_class, std::size_t num_classes, const SmoothingPolicy& policy) {
  validate(policy);
  return smooth_uniform(target_class, num_classes, effective_epsilon(target_class, policy));
}

}  // namespace noisylabel
