#pragma once

// Training loop: stratified clip-level validation split, seeded mini-batches,
// optional label smoothing and mixup, two-stage large-loss rejection (discard
// per batch or prune clips after n1 epochs), Adam with plateau halving and
// early stopping on validation accuracy.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "noisylabel/dataset.hpp"
#include "noisylabel/errors.hpp"
#include "noisylabel/losses.hpp"
#include "noisylabel/mixup.hpp"
#include "noisylabel/model.hpp"
#include "noisylabel/numerics.hpp"
#include "noisylabel/selection.hpp"
#include "noisylabel/smoothing.hpp"

namespace noisylabel {

struct TrainConfig {
  std::size_t batch_size = 64;
  double initial_lr = 0.001;
  std::size_t lr_halving_patience = 5;
  std::size_t early_stop_patience = 15;
  double val_fraction = 0.15;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  Architecture architecture = Architecture::kLinear;
  std::size_t hidden_units = 32;
  LossSpec loss;
  StagePlan stage;
  std::optional<SmoothingPolicy> smoothing;
  std::optional<MixupPolicy> mixup;
};

inline void validate(const TrainConfig& config) {
  require(config.batch_size >= 1, "train: batch_size must be >= 1");
  require(std::isfinite(config.initial_lr) && config.initial_lr > 0.0, "train: initial_lr must be positive");
  require(config.lr_halving_patience >= 1, "train: lr_halving_patience must be >= 1");
  require(config.early_stop_patience >= 1, "train: early_stop_patience must be >= 1");
  require(config.val_fraction > 0.0 && config.val_fraction < 1.0, "train: val_fraction must lie in (0, 1)");
  if (config.architecture == Architecture::kOneHidden) {
    require(config.hidden_units >= 1, "train: hidden_units must be >= 1");
  }
  validate(config.loss);
  validate(config.stage);
  if (config.smoothing) validate(*config.smoothing);
  if (config.mixup) validate(*config.mixup);
}

struct EpochRecord {
  std::size_t epoch = 0;  // 0-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
  double kept_fraction = 1.0;
  std::size_t train_clips = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct Split {
  Dataset train;
  Dataset validation;
};

// Per class, ceil(val_fraction * clips) clips go to validation (at most all but
// one). Whole clips move together; both parts keep dataset order.
inline Split stratified_split(const Dataset& data, double val_fraction, std::uint64_t seed) {
  require(val_fraction > 0.0 && val_fraction < 1.0, "stratified_split: val_fraction must lie in (0, 1)");
  std::map<int, std::vector<ClipId>> clips_of_class;
  std::set<ClipId> seen;
  for (const auto& ex : data) {
    if (seen.insert(ex.clip_id).second) clips_of_class[ex.label].push_back(ex.clip_id);
  }
  RngStream rng(seed, 0x5u);
  std::set<ClipId> validation_clips;
  for (auto& [label, clips] : clips_of_class) {
    require(clips.size() >= 2, "stratified_split: class " + std::to_string(label) + " has fewer than 2 clips");
    shuffle(clips, rng);
    // The small slack keeps 0.15 * 100 from rounding up to 16.
    auto take = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(clips.size()) - 1e-9));
    take = std::clamp<std::size_t>(take, 1, clips.size() - 1);
    validation_clips.insert(clips.begin(), clips.begin() + static_cast<std::ptrdiff_t>(take));
  }
  Split split;
  for (const auto& ex : data) (validation_clips.contains(ex.clip_id) ? split.validation : split.train).push_back(ex);
  return split;
}

struct PlateauState {
  double lr = 0.0;
  std::size_t counter = 0;
  double best = 0.0;

  friend bool operator==(const PlateauState&, const PlateauState&) = default;
};

// Strict improvement resets the counter; `patience` non-improving epochs halve the rate.
inline PlateauState plateau_step(double best_so_far, double current_val_acc, std::size_t stall_counter, double lr,
                                 std::size_t patience) {
  require(lr > 0.0, "plateau_step: lr must be positive");
  if (current_val_acc > best_so_far) return {lr, 0, current_val_acc};
  ++stall_counter;
  if (stall_counter >= patience) return {lr / 2.0, 0, best_so_far};
  return {lr, stall_counter, best_so_far};
}

struct TrainResult {
  ModelParams model;        // parameters from the best-validation epoch
  ModelParams final_model;  // parameters after the last completed epoch
  std::vector<EpochRecord> history;
  std::optional<std::vector<PruneRecord>> prune_report;
  std::vector<ClipId> pruned_clips;
  std::optional<std::size_t> best_epoch;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

enum StreamId : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kMixupStream = 3, kPartnerStream = 4 };

inline std::size_t count_classes(const Dataset& data) {
  int top = 1;
  for (const auto& ex : data) {
    require(ex.label >= 0, "train: labels must be nonnegative");
    top = std::max(top, ex.label);
  }
  return static_cast<std::size_t>(top) + 1;
}

inline std::vector<LabelDistribution> make_targets(const Dataset& data, std::size_t num_classes,
                                                   const std::optional<SmoothingPolicy>& smoothing) {
  std::vector<LabelDistribution> targets;
  targets.reserve(data.size());
  for (const auto& ex : data) {
    targets.push_back(smoothing ? smooth_with_policy(ex.label, num_classes, *smoothing)
                                : one_hot(ex.label, num_classes));
  }
  return targets;
}

inline Batch gather(const Dataset& data, const std::vector<LabelDistribution>& targets,
                    std::span<const std::size_t> indices) {
  Batch batch;
  batch.features.reserve(indices.size());
  batch.targets.reserve(indices.size());
  for (std::size_t i : indices) {
    batch.features.push_back(data[i].features);
    batch.targets.push_back(targets[i]);
  }
  return batch;
}

inline std::size_t resolve_prune_count(const StagePlan& plan, std::size_t clip_count) {
  if (!plan.prune_fraction) return plan.prune_count;
  return static_cast<std::size_t>(std::llround(*plan.prune_fraction * static_cast<double>(clip_count)));
}

}  // namespace detail

// Scores every example with the current model under `loss`.
inline LossReport score_dataset(const ModelParams& model, const LossSpec& loss, const Dataset& data,
                                const std::vector<LabelDistribution>& targets) {
  LossReport report;
  report.per_example.reserve(data.size());
  report.example_ids.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    report.per_example.push_back(loss_value(loss, targets[i], predict_proba(model, data[i].features)));
    report.example_ids.push_back(data[i].example_id);
  }
  return report;
}

inline TrainResult train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  require(!dataset.empty(), "train: empty dataset");
  validate(config);
  const std::size_t num_classes = detail::count_classes(dataset);
  const std::size_t dims = feature_dim(dataset);
  for (const auto& ex : dataset) require(ex.features.size() == dims, "train: inconsistent feature dimensions");

  Split split = stratified_split(dataset, config.val_fraction, config.seed);
  Dataset train_set = std::move(split.train);
  const Dataset& validation = split.validation;
  std::vector<LabelDistribution> targets = detail::make_targets(train_set, num_classes, config.smoothing);

  const RngStream root(config.seed, 0);
  RngStream shuffle_rng = root.child(detail::kShuffleStream);
  RngStream mixup_rng = root.child(detail::kMixupStream);
  RngStream partner_rng = root.child(detail::kPartnerStream);

  TrainResult result;
  ModelParams model =
      init_model(config.architecture, dims, num_classes, config.hidden_units, root.child(detail::kInitStream));
  result.model = model;
  Adam optimizer(model);

  const StagePlan& stage = config.stage;
  const bool discarding = stage.strategy == Strategy::kDiscard;
  const MixupPolicy mixup = config.mixup.value_or(MixupPolicy{});
  std::size_t prunes_done = 0;

  double lr = config.initial_lr;
  PlateauState plateau{lr, 0, -1.0};
  double best_accuracy = -1.0;
  std::size_t epochs_without_improvement = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    // Pruning runs once n1 epochs are complete (and every n1 epochs after, in iterative mode).
    if (stage.strategy == Strategy::kPrune && prunes_done < stage.prune_rounds &&
        epoch == stage.n1 * (prunes_done + 1)) {
      const std::size_t clip_count = count_clips(train_set);
      const std::size_t prune_count = detail::resolve_prune_count(stage, clip_count);
      if (prune_count >= clip_count) {
        throw TrainingError(epoch, "prune_count " + std::to_string(prune_count) + " >= training clip count " +
                                       std::to_string(clip_count));
      }
      const LossReport scores = score_dataset(model, config.loss, train_set, targets);
      const auto per_clip = clip_losses(scores, clip_assignment(train_set));
      PruneResult pruned = prune_dataset(train_set, per_clip, prune_count, prunes_done + 1);
      ++prunes_done;
      std::set<ClipId> removed(pruned.removed.begin(), pruned.removed.end());
      std::vector<LabelDistribution> kept_targets;
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        if (!removed.contains(train_set[i].clip_id)) kept_targets.push_back(std::move(targets[i]));
      }
      targets = std::move(kept_targets);
      train_set = std::move(pruned.kept);
      if (!result.prune_report) result.prune_report.emplace();
      result.prune_report->insert(result.prune_report->end(), pruned.records.begin(), pruned.records.end());
      result.pruned_clips.insert(result.pruned_clips.end(), pruned.removed.begin(), pruned.removed.end());
    }

    const std::vector<std::size_t> order = random_permutation(train_set.size(), shuffle_rng);
    std::vector<std::size_t> partner_order;
    if (mixup_active(mixup, epoch) && mixup.pairing == Pairing::kInterBatch) {
      partner_order = random_permutation(train_set.size(), partner_rng);
    }

    double loss_sum = 0.0;
    std::size_t kept_total = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> slice(order.data() + start, stop - start);
      Batch batch = detail::gather(train_set, targets, slice);
      if (mixup_active(mixup, epoch)) {
        if (mixup.pairing == Pairing::kInterBatch) {
          const Batch partner =
              detail::gather(train_set, targets, std::span<const std::size_t>(partner_order.data() + start, stop - start));
          batch = apply_mixup(batch, &partner, mixup, epoch, mixup_rng);
        } else {
          batch = apply_mixup(batch, nullptr, mixup, epoch, mixup_rng);
        }
      }

      std::vector<ForwardPass> passes;
      std::vector<ProbVector> probs;
      std::vector<double> losses;
      passes.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        passes.push_back(forward(model, batch.features[i]));
        if (!all_finite(passes.back().logits)) throw TrainingError(epoch, "non-finite logits");
        probs.push_back(softmax(passes.back().logits));
        losses.push_back(loss_value(config.loss, batch.targets[i], probs.back()));
        if (!std::isfinite(losses.back())) throw TrainingError(epoch, "non-finite loss");
      }

      const std::vector<bool> keep = discarding ? discard_mask(losses, stage.rule, epoch, stage.n1)
                                                : std::vector<bool>(batch.size(), true);
      const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
      auto grads = zero_gradients(model);
      const double scale = 1.0 / static_cast<double>(kept);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!keep[i]) continue;
        loss_sum += losses[i];
        const Vector g = loss_gradient_from_probs(config.loss, batch.targets[i], probs[i]);
        accumulate_gradient(model, batch.features[i], passes[i], g, scale, grads);
      }
      kept_total += kept;
      optimizer.step(model, grads, lr);
    }
    if (!all_finite(model)) throw TrainingError(epoch, "parameters diverged");

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = kept_total > 0 ? loss_sum / static_cast<double>(kept_total) : 0.0;
    record.val_accuracy = evaluate(model, validation);
    record.lr = lr;
    record.kept_fraction = train_set.empty() ? 1.0 : static_cast<double>(kept_total) / static_cast<double>(train_set.size());
    record.train_clips = count_clips(train_set);
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.val_accuracy > best_accuracy) {
      best_accuracy = record.val_accuracy;
      epochs_without_improvement = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else {
      ++epochs_without_improvement;
    }
    plateau = plateau_step(plateau.best, record.val_accuracy, plateau.counter, lr, config.lr_halving_patience);
    lr = plateau.lr;
    if (epochs_without_improvement >= config.early_stop_patience) break;
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace noisylabel
