#pragma once

// mixup: x~ = lambda * x_i + (1 - lambda) * x_j, y~ = lambda * y_i + (1 - lambda) * y_j,
// lambda ~ Beta(alpha, alpha), drawn independently for every pair.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "noisylabel/errors.hpp"
#include "noisylabel/losses.hpp"
#include "noisylabel/numerics.hpp"

namespace noisylabel {

enum class Pairing { kIntraBatch, kInterBatch };

struct MixupPolicy {
  bool enabled = false;
  double alpha = 0.3;
  std::size_t warm_up_epochs = 0;
  Pairing pairing = Pairing::kIntraBatch;
};

// Grids explored for mixup: alpha in {0.1, 0.2, 0.3, 0.4, 1, 2}, warm-up in {0, 5, 10}.
inline constexpr double kMixupAlphaGrid[] = {0.1, 0.2, 0.3, 0.4, 1.0, 2.0};
inline constexpr std::size_t kMixupWarmUpGrid[] = {0, 5, 10};

inline void validate(const MixupPolicy& policy) {
  if (policy.enabled) {
    require(std::isfinite(policy.alpha) && policy.alpha > 0.0, "mixup: alpha must be positive when enabled");
  }
}

struct Batch {
  std::vector<Vector> features;
  std::vector<LabelDistribution> targets;

  std::size_t size() const { return features.size(); }
};

struct MixedExample {
  Vector features;
  LabelDistribution target;
};

inline MixedExample mix_pair(std::span<const double> x_i, std::span<const double> y_i, std::span<const double> x_j,
                             std::span<const double> y_j, double lambda) {
  require(x_i.size() == x_j.size(), "mix_pair: feature dimensions differ");
  require(y_i.size() == y_j.size(), "mix_pair: label dimensions differ");
  require(lambda >= 0.0 && lambda <= 1.0, "mix_pair: lambda must lie in [0, 1]");
  const double rest = 1.0 - lambda;
  MixedExample out{Vector(x_i.size()), LabelDistribution(y_i.size())};
  for (std::size_t d = 0; d < x_i.size(); ++d) out.features[d] = lambda * x_i[d] + rest * x_j[d];
  for (std::size_t k = 0; k < y_i.size(); ++k) out.target[k] = lambda * y_i[k] + rest * y_j[k];
  return out;
}

inline bool mixup_active(const MixupPolicy& policy, std::size_t epoch) {
  return policy.enabled && epoch >= policy.warm_up_epochs;
}

// Mixes each example with a partner: a seeded permutation of the same batch
// (intra) or the example at the same position of `partner` (inter). Returns the
// batch unchanged while mixup is disabled or still warming up.
inline Batch apply_mixup(const Batch& batch, const Batch* partner, const MixupPolicy& policy, std::size_t epoch,
                         RngStream& rng) {
  require(batch.size() > 0, "apply_mixup: empty batch");
  require(batch.targets.size() == batch.size(), "apply_mixup: features and targets differ in length");
  validate(policy);
  if (!mixup_active(policy, epoch)) return batch;

  std::vector<std::size_t> order;
  const Batch* source = &batch;
  if (policy.pairing == Pairing::kInterBatch) {
    if (partner == nullptr) throw ConfigError("mixup.pairing: inter-batch pairing needs a partner batch");
    require(partner->size() == batch.size() && partner->targets.size() == batch.size(),
            "apply_mixup: partner batch size differs");
    source = partner;
    order.resize(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    order = random_permutation(batch.size(), rng);
  }

  Batch out;
  out.features.reserve(batch.size());
  out.targets.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double lambda = sample_beta(policy.alpha, rng);
    const std::size_t j = order[i];
    auto mixed = mix_pair(batch.features[i], batch.targets[i], source->features[j], source->targets[j], lambda);
    out.features.push_back(std::move(mixed.features));
    out.targets.push_back(std::move(mixed.target));
  }
  return out;
}

}  // namespace noisylabel
