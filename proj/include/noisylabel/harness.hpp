#pragma once

// Synthetic benchmark: Gaussian blobs with a patch/clip hierarchy, clip-level
// label-noise injection with hidden ground truth, and the seeded multi-run
// experiment protocol (mean accuracy with a 95% t-interval).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "noisylabel/dataset.hpp"
#include "noisylabel/errors.hpp"
#include "noisylabel/model.hpp"
#include "noisylabel/numerics.hpp"
#include "noisylabel/smoothing.hpp"
#include "noisylabel/trainer.hpp"

namespace noisylabel {

// Clean label of an OOV clip: its content belongs to none of the K classes.
inline constexpr int kNoClass = -1;

struct GroundTruth {
  int clean_label = 0;
  bool corrupted = false;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Examples plus the ground truth only the harness may read. `truth` runs
// parallel to `examples`; the trainer only ever receives `examples`.
struct LabeledDataset {
  std::size_t num_classes = 0;
  Dataset examples;
  std::vector<GroundTruth> truth;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct BlobSpec {
  std::size_t classes = 4;
  std::size_t clips_per_class = 50;
  std::size_t patches_per_clip = 3;
  std::size_t dims = 8;
  double spread = 0.5;
  std::uint64_t seed = 0;
};

inline void validate(const BlobSpec& spec) {
  require(spec.classes >= 2, "generate_blobs: need at least 2 classes");
  require(spec.clips_per_class >= 1, "generate_blobs: clips_per_class must be >= 1");
  require(spec.patches_per_clip >= 1, "generate_blobs: patches_per_clip must be >= 1");
  require(spec.dims >= 1, "generate_blobs: dims must be >= 1");
  require(std::isfinite(spec.spread) && spec.spread > 0.0, "generate_blobs: spread must be positive");
}

enum class NoiseKind { kSymmetric, kOov };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double rate = 0.0;
  std::uint64_t seed = 0;
  // Restrict corruption to clips whose clean class is listed. Empty: all clips.
  std::vector<int> classes;
};

namespace detail {

enum HarnessStream : std::uint64_t { kCenterStream = 11, kTrainClipStream = 12, kTestClipStream = 13, kNoiseStream = 20 };

inline int origin_class(const Example& ex, const GroundTruth& truth) {
  return truth.clean_label == kNoClass ? ex.label : truth.clean_label;
}

}  // namespace detail

// Class centers at seeded uniformly random points on the unit sphere.
inline std::vector<Vector> class_centers(std::size_t classes, std::size_t dims, RngStream rng) {
  std::vector<Vector> centers(classes, Vector(dims));
  for (auto& c : centers) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : c) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : c) v /= norm;
  }
  return centers;
}

// Each clip center is its class center plus N(0, spread^2) per dimension; each
// patch adds another N(0, spread^2) around its clip center. Classes are
// interleaved clip by clip.
inline LabeledDataset sample_clips(const std::vector<Vector>& centers, std::size_t clips_per_class,
                                   std::size_t patches_per_clip, double spread, RngStream rng,
                                   ExampleId first_example = 0, ClipId first_clip = 0) {
  LabeledDataset out;
  out.num_classes = centers.size();
  ExampleId next_example = first_example;
  ClipId next_clip = first_clip;
  for (std::size_t c = 0; c < clips_per_class; ++c) {
    for (std::size_t k = 0; k < centers.size(); ++k) {
      Vector clip_center = centers[k];
      for (double& v : clip_center) v += spread * rng.normal();
      for (std::size_t p = 0; p < patches_per_clip; ++p) {
        Example ex{next_example++, next_clip, clip_center, static_cast<int>(k)};
        for (double& v : ex.features) v += spread * rng.normal();
        out.examples.push_back(std::move(ex));
        out.truth.push_back({static_cast<int>(k), false});
      }
      ++next_clip;
    }
  }
  return out;
}

inline LabeledDataset generate_blobs(const BlobSpec& spec) {
  validate(spec);
  const RngStream root(spec.seed, 0);
  const auto centers = class_centers(spec.classes, spec.dims, root.child(detail::kCenterStream));
  return sample_clips(centers, spec.clips_per_class, spec.patches_per_clip, spec.spread,
                      root.child(detail::kTrainClipStream));
}

namespace detail {

// Clips eligible under `spec`, shuffled, truncated to round(rate * eligible).
inline std::vector<ClipId> pick_clips(const LabeledDataset& data, const NoiseSpec& spec, RngStream& rng) {
  require(spec.rate >= 0.0 && spec.rate <= 1.0, "noise: rate must lie in [0, 1]");
  const std::set<int> classes(spec.classes.begin(), spec.classes.end());
  std::vector<ClipId> eligible;
  std::set<ClipId> seen;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& ex = data.examples[i];
    if (!seen.insert(ex.clip_id).second) continue;
    if (data.truth[i].corrupted) continue;
    if (!classes.empty() && !classes.contains(origin_class(ex, data.truth[i]))) continue;
    eligible.push_back(ex.clip_id);
  }
  const auto count = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(eligible.size())));
  shuffle(eligible, rng);
  eligible.resize(std::min(count, eligible.size()));
  return eligible;
}

}  // namespace detail

// Flips round(rate * N_clips) clips to a uniformly chosen different class.
inline LabeledDataset inject_symmetric_noise(LabeledDataset data, const NoiseSpec& spec) {
  require(data.num_classes >= 2, "inject_symmetric_noise: need at least 2 classes");
  require(data.truth.size() == data.examples.size(), "inject_symmetric_noise: truth/examples length mismatch");
  RngStream rng(spec.seed, detail::kNoiseStream);
  const auto chosen = detail::pick_clips(data, spec, rng);
  std::map<ClipId, int> new_label;
  const auto first = patches_by_clip(data.examples);
  for (ClipId clip : chosen) {
    const int current = data.examples[first.at(clip).front()].label;
    auto other = static_cast<int>(rng.below(data.num_classes - 1));
    if (other >= current) ++other;
    new_label[clip] = other;
  }
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto it = new_label.find(data.examples[i].clip_id);
    if (it == new_label.end()) continue;
    data.examples[i].label = it->second;
    data.truth[i].corrupted = true;
  }
  return data;
}

// Replaces the features of round(rate * N_clips) clips with uniform draws from a
// box centered on the data with twice its per-dimension range. Labels stay.
inline LabeledDataset inject_oov_noise(LabeledDataset data, const NoiseSpec& spec) {
  require(data.truth.size() == data.examples.size(), "inject_oov_noise: truth/examples length mismatch");
  RngStream rng(spec.seed, detail::kNoiseStream + 1);
  const auto chosen = detail::pick_clips(data, spec, rng);
  if (chosen.empty()) return data;
  const std::size_t dims = feature_dim(data.examples);
  Vector lo(dims, INFINITY), hi(dims, -INFINITY);
  for (const auto& ex : data.examples) {
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], ex.features[d]);
      hi[d] = std::max(hi[d], ex.features[d]);
    }
  }
  const std::set<ClipId> replace(chosen.begin(), chosen.end());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    auto& ex = data.examples[i];
    if (!replace.contains(ex.clip_id)) continue;
    for (std::size_t d = 0; d < dims; ++d) {
      const double mid = 0.5 * (lo[d] + hi[d]);
      const double range = hi[d] - lo[d];
      ex.features[d] = rng.uniform(mid - range, mid + range);
    }
    data.truth[i] = {kNoClass, true};
  }
  return data;
}

inline LabeledDataset inject_noise(LabeledDataset data, const NoiseSpec& spec) {
  return spec.kind == NoiseKind::kSymmetric ? inject_symmetric_noise(std::move(data), spec)
                                            : inject_oov_noise(std::move(data), spec);
}

inline std::size_t count_corrupted_clips(const LabeledDataset& data) {
  std::set<ClipId> clips;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    if (data.truth[i].corrupted) clips.insert(data.examples[i].clip_id);
  }
  return clips.size();
}

// Fraction of corrupted clips per originating class.
inline std::map<int, double> class_corruption_rates(const LabeledDataset& data) {
  std::map<int, std::pair<std::size_t, std::size_t>> tally;
  std::set<ClipId> seen;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    if (!seen.insert(data.examples[i].clip_id).second) continue;
    auto& [corrupted, total] = tally[detail::origin_class(data.examples[i], data.truth[i])];
    corrupted += data.truth[i].corrupted ? 1 : 0;
    ++total;
  }
  std::map<int, double> rates;
  for (const auto& [k, t] : tally) rates[k] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return rates;
}

// Classes below the median corruption rate are low-noise, the rest high-noise.
inline NoiseGroupMap groups_from_rates(const std::map<int, double>& rates) {
  require(!rates.empty(), "groups_from_rates: no classes");
  Vector values;
  for (const auto& [k, r] : rates) values.push_back(r);
  const double median = percentile(values, 50.0);
  NoiseGroupMap groups;
  for (const auto& [k, r] : rates) groups[k] = r < median ? NoiseGroup::kLow : NoiseGroup::kHigh;
  return groups;
}

// Fraction of removed clips that were actually corrupted.
inline std::optional<double> prune_precision(const LabeledDataset& data, const std::vector<ClipId>& removed) {
  if (removed.empty()) return std::nullopt;
  std::set<ClipId> corrupted;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    if (data.truth[i].corrupted) corrupted.insert(data.examples[i].clip_id);
  }
  std::size_t hits = 0;
  for (ClipId c : removed) hits += corrupted.contains(c) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(removed.size());
}

struct ExperimentConfig {
  BlobSpec data;
  std::size_t test_clips_per_class = 100;
  std::vector<NoiseSpec> noise;
  TrainConfig train;
  // Derive the two-group smoothing map from the injected per-class rates.
  bool auto_smoothing_groups = false;
  std::size_t runs = 7;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
};

struct RunDiagnostics {
  double accuracy = 0.0;  // percent, clean test set
  std::size_t epochs = 0;
  std::optional<double> prune_precision;
};

struct RunSummary {
  std::vector<double> per_run_accuracy;  // percent
  double mean = 0.0;
  double ci_half_width = 0.0;
  std::string fingerprint;
  std::vector<RunDiagnostics> runs;
};

struct RunData {
  LabeledDataset train;  // noisy, with hidden truth
  LabeledDataset test;   // clean
};

// Dataset for run `run_index`: depends on the data/noise settings and
// base_seed + run_index only, so methods compared on the same base seed see
// identical noisy data.
inline RunData make_run_data(const ExperimentConfig& config, std::size_t run_index) {
  validate(config.data);
  require(config.test_clips_per_class >= 1, "experiment: test_clips_per_class must be >= 1");
  const std::uint64_t run_seed = config.base_seed + run_index;
  const RngStream root(run_seed, 0);
  const auto centers = class_centers(config.data.classes, config.data.dims, root.child(detail::kCenterStream));
  RunData out;
  out.train = sample_clips(centers, config.data.clips_per_class, config.data.patches_per_clip, config.data.spread,
                           root.child(detail::kTrainClipStream));
  const auto n_train = static_cast<ExampleId>(out.train.examples.size());
  const auto n_clips = static_cast<ClipId>(config.data.clips_per_class * config.data.classes);
  out.test = sample_clips(centers, config.test_clips_per_class, config.data.patches_per_clip, config.data.spread,
                          root.child(detail::kTestClipStream), n_train, n_clips);
  for (std::size_t j = 0; j < config.noise.size(); ++j) {
    NoiseSpec spec = config.noise[j];
    spec.seed = root.child(detail::kNoiseStream + j).next_u64();
    out.train = inject_noise(std::move(out.train), spec);
  }
  return out;
}

inline TrainConfig run_train_config(const ExperimentConfig& config, const LabeledDataset& train_data,
                                    std::size_t run_index) {
  TrainConfig train = config.train;
  train.seed = config.base_seed + run_index;
  if (config.auto_smoothing_groups && train.smoothing) {
    train.smoothing->group_of_class = groups_from_rates(class_corruption_rates(train_data));
  }
  return train;
}

inline RunDiagnostics run_once(const ExperimentConfig& config, std::size_t run_index) {
  const RunData data = make_run_data(config, run_index);
  const TrainConfig train_config = run_train_config(config, data.train, run_index);
  const TrainResult result = train(data.train.examples, train_config);
  RunDiagnostics diag;
  diag.accuracy = 100.0 * evaluate(result.model, data.test.examples);
  diag.epochs = result.history.size();
  diag.prune_precision = prune_precision(data.train, result.pruned_clips);
  return diag;
}

inline RunSummary summarize(std::vector<RunDiagnostics> runs, std::string fingerprint = {}) {
  RunSummary summary;
  for (const auto& r : runs) summary.per_run_accuracy.push_back(r.accuracy);
  const MeanCi ci = mean_ci(summary.per_run_accuracy);
  summary.mean = ci.mean;
  summary.ci_half_width = ci.half_width;
  summary.fingerprint = std::move(fingerprint);
  summary.runs = std::move(runs);
  return summary;
}

// Runs are independent; with threads > 1 they execute concurrently and results
// are collected by run index.
inline RunSummary run_experiment(const ExperimentConfig& config, std::string fingerprint = {}) {
  require(config.runs >= 1, "experiment: runs must be >= 1");
  std::vector<RunDiagnostics> runs(config.runs);
  std::vector<std::string> errors(config.runs);
  auto work = [&](std::size_t i) {
    try {
      runs[i] = run_once(config, i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.threads, 1, config.runs);
  if (threads == 1) {
    for (std::size_t i = 0; i < config.runs; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < config.runs; i = next++) work(i);
      });
    }
  }
  for (std::size_t i = 0; i < config.runs; ++i) {
    if (!errors[i].empty()) throw ExperimentError(i, errors[i]);
  }
  return summarize(std::move(runs), std::move(fingerprint));
}

}  // namespace noisylabel
