#pragma once

// Large-loss instance rejection. A threshold t is derived from an array of
// per-example losses (t = m * max, or t = percentile(l)); losses above t are
// treated as likely label noise. Two consumers: per-mini-batch discarding once
// the first training stage is over, and one-shot pruning of whole clips.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noisylabel/dataset.hpp"
#include "noisylabel/errors.hpp"
#include "noisylabel/losses.hpp"
#include "noisylabel/numerics.hpp"

namespace noisylabel {

enum class RuleKind { kMaxFraction, kPercentile };

struct SelectionRule {
  RuleKind kind = RuleKind::kMaxFraction;
  double m = 1.0;    // kMaxFraction, in [0, 1]
  double l = 100.0;  // kPercentile, in [0, 100]

  static SelectionRule max_fraction(double m) { return {RuleKind::kMaxFraction, m, 100.0}; }
  static SelectionRule percentile(double l) { return {RuleKind::kPercentile, 1.0, l}; }

  // Reject about `count` of `batch_size` instances per batch.
  static SelectionRule discard_count(std::size_t count, std::size_t batch_size) {
    require(batch_size > 0 && count < batch_size, "discard_count: count must be below the batch size");
    return percentile(100.0 * (1.0 - static_cast<double>(count) / static_cast<double>(batch_size)));
  }

  friend bool operator==(const SelectionRule&, const SelectionRule&) = default;
};

inline void validate(const SelectionRule& rule) {
  if (rule.kind == RuleKind::kMaxFraction) {
    require(rule.m >= 0.0 && rule.m <= 1.0, "selection rule: m must lie in [0, 1]");
  } else {
    require(rule.l >= 0.0 && rule.l <= 100.0, "selection rule: l must lie in [0, 100]");
  }
}

enum class Strategy { kNone, kDiscard, kPrune };

struct StagePlan {
  std::size_t n1 = 0;
  Strategy strategy = Strategy::kNone;
  SelectionRule rule;
  std::size_t prune_count = 0;
  // When set, prune this fraction of the training clips instead of prune_count.
  std::optional<double> prune_fraction;
  // Number of prune rounds, spaced n1 epochs apart. 1 is the single-shot mode.
  std::size_t prune_rounds = 1;
};

inline void validate(const StagePlan& plan) {
  validate(plan.rule);
  if (plan.prune_fraction) {
    require(*plan.prune_fraction >= 0.0 && *plan.prune_fraction < 1.0, "stage: prune_fraction must lie in [0, 1)");
  }
  require(plan.prune_rounds >= 1, "stage: prune_rounds must be >= 1");
  if (plan.strategy == Strategy::kPrune && plan.prune_rounds > 1) {
    require(plan.n1 >= 1, "stage: iterative pruning needs n1 >= 1");
  }
}

inline double threshold_from_rule(std::span<const double> losses, const SelectionRule& rule) {
  require(!losses.empty(), "threshold_from_rule: empty input");
  require(all_finite(losses), "threshold_from_rule: losses must be finite");
  validate(rule);
  if (rule.kind == RuleKind::kMaxFraction) {
    return rule.m * *std::max_element(losses.begin(), losses.end());
  }
  return percentile(losses, rule.l);
}

// true = keep. Before epoch n1 everything is kept. If the threshold would reject
// every instance, the minimum-loss instance(s) are kept instead.
inline std::vector<bool> discard_mask(std::span<const double> losses, const SelectionRule& rule, std::size_t epoch,
                                      std::size_t n1) {
  require(!losses.empty(), "discard_mask: empty input");
  if (epoch < n1) return std::vector<bool>(losses.size(), true);
  const double threshold = threshold_from_rule(losses, rule);
  std::vector<bool> keep(losses.size());
  bool any = false;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    keep[i] = losses[i] <= threshold;
    any = any || keep[i];
  }
  if (!any) {
    const double lowest = *std::min_element(losses.begin(), losses.end());
    for (std::size_t i = 0; i < losses.size(); ++i) keep[i] = losses[i] == lowest;
  }
  return keep;
}

inline std::vector<bool> discard_mask(const LossReport& report, const SelectionRule& rule, std::size_t epoch,
                                      std::size_t n1) {
  return discard_mask(report.per_example, rule, epoch, n1);
}

// Arithmetic mean of patch losses per clip.
inline std::map<ClipId, double> clip_losses(const LossReport& patch_losses,
                                            const std::map<ExampleId, ClipId>& clip_of_example) {
  require(patch_losses.per_example.size() == patch_losses.example_ids.size(),
          "clip_losses: loss and id lengths differ");
  std::map<ClipId, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < patch_losses.per_example.size(); ++i) {
    const auto it = clip_of_example.find(patch_losses.example_ids[i]);
    if (it == clip_of_example.end()) {
      throw ConfigError("clip_losses: example " + std::to_string(patch_losses.example_ids[i]) +
                        " has no clip assignment");
    }
    auto& [sum, count] = sums[it->second];
    sum += patch_losses.per_example[i];
    ++count;
  }
  std::map<ClipId, double> out;
  for (const auto& [clip, acc] : sums) out[clip] = acc.first / static_cast<double>(acc.second);
  return out;
}

struct PruneRecord {
  ClipId clip_id = 0;
  double clip_loss = 0.0;
  std::size_t rank = 0;  // 1 = largest loss
  bool removed = false;
  std::size_t round = 1;

  friend bool operator==(const PruneRecord&, const PruneRecord&) = default;
};

struct PruneResult {
  Dataset kept;
  std::vector<ClipId> removed;  // in rank order
  std::vector<PruneRecord> records;
};

// Clips ordered from most to least suspicious: loss descending, then clip id
// descending, so the lower id survives a tie.
inline std::vector<std::pair<ClipId, double>> rank_clips(const std::map<ClipId, double>& clip_loss_map) {
  std::vector<std::pair<ClipId, double>> ranked(clip_loss_map.begin(), clip_loss_map.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first > b.first;
  });
  return ranked;
}

inline PruneResult prune_dataset(const Dataset& dataset, const std::map<ClipId, double>& clip_loss_map,
                                 std::size_t prune_count, std::size_t round = 1) {
  require(prune_count < clip_loss_map.size(), "prune_dataset: prune_count must be below the clip count");
  const auto ranked = rank_clips(clip_loss_map);
  PruneResult result;
  std::set<ClipId> removed;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const bool drop = r < prune_count;
    if (drop) {
      removed.insert(ranked[r].first);
      result.removed.push_back(ranked[r].first);
    }
    result.records.push_back({ranked[r].first, ranked[r].second, r + 1, drop, round});
  }
  for (const auto& ex : dataset) {
    if (!clip_loss_map.contains(ex.clip_id)) {
      throw ConfigError("prune_dataset: clip " + std::to_string(ex.clip_id) + " has no clip loss");
    }
    if (!removed.contains(ex.clip_id)) result.kept.push_back(ex);
  }
  return result;
}

}  // namespace noisylabel
