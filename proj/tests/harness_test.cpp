#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "noisylabel/errors.hpp"
#include "noisylabel/harness.hpp"

namespace nl = noisylabel;

namespace {

nl::LabeledDataset blobs(std::uint64_t seed, double spread = 0.5) {
  nl::BlobSpec spec;
  spec.seed = seed;
  spec.spread = spread;
  return nl::generate_blobs(spec);
}

std::map<nl::ClipId, int> clip_labels(const nl::Dataset& d) {
  std::map<nl::ClipId, int> out;
  for (const auto& ex : d) out[ex.clip_id] = ex.label;
  return out;
}

nl::ExperimentConfig small_experiment() {
  nl::ExperimentConfig config;
  config.data.clips_per_class = 12;
  config.test_clips_per_class = 10;
  config.train.max_epochs = 4;
  config.train.initial_lr = 0.02;
  config.runs = 3;
  config.base_seed = 40;
  return config;
}

}  // namespace

TEST(Blobs, DefaultShape) {
  const auto d = blobs(1);
  EXPECT_EQ(d.examples.size(), 600u);
  EXPECT_EQ(nl::count_clips(d.examples), 200u);
  std::map<int, std::size_t> per_class;
  for (const auto& [clip, label] : clip_labels(d.examples)) ++per_class[label];
  for (const auto& [label, n] : per_class) EXPECT_EQ(n, 50u);
  for (const auto& ex : d.examples) EXPECT_EQ(ex.features.size(), 8u);
  for (std::size_t i = 0; i < d.examples.size(); ++i) EXPECT_EQ(d.examples[i].example_id, static_cast<nl::ExampleId>(i));
}

TEST(Blobs, Deterministic) {
  EXPECT_EQ(blobs(5), blobs(5));
  EXPECT_NE(blobs(5), blobs(6));
}

TEST(Blobs, VanishingSpreadCollapsesClips) {
  const auto d = blobs(2, 1e-12);
  for (const auto& [clip, idx] : nl::patches_by_clip(d.examples)) {
    for (std::size_t i : idx) {
      for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(d.examples[i].features[k], d.examples[idx[0]].features[k], 1e-10);
    }
  }
}

TEST(Blobs, RejectsInvalidCounts) {
  nl::BlobSpec spec;
  spec.classes = 1;
  EXPECT_THROW(nl::generate_blobs(spec), nl::InvalidInput);
  spec = {};
  spec.clips_per_class = 0;
  EXPECT_THROW(nl::generate_blobs(spec), nl::InvalidInput);
  spec = {};
  spec.spread = 0.0;
  EXPECT_THROW(nl::generate_blobs(spec), nl::InvalidInput);
}

TEST(SymmetricNoise, ZeroRateIsIdentity) {
  const auto d = blobs(3);
  EXPECT_EQ(nl::inject_symmetric_noise(d, {nl::NoiseKind::kSymmetric, 0.0, 1, {}}), d);
}

TEST(SymmetricNoise, ExactCountAndConsistentClips) {
  const auto d = blobs(3);
  for (double rate : {0.3, 0.4, 0.5}) {
    const auto noisy = nl::inject_symmetric_noise(d, {nl::NoiseKind::kSymmetric, rate, 9, {}});
    EXPECT_EQ(nl::count_corrupted_clips(noisy), static_cast<std::size_t>(std::llround(rate * 200)));
    std::map<nl::ClipId, std::set<int>> labels;
    for (std::size_t i = 0; i < noisy.examples.size(); ++i) {
      const auto& ex = noisy.examples[i];
      const auto& truth = noisy.truth[i];
      labels[ex.clip_id].insert(ex.label);
      EXPECT_EQ(truth.corrupted, ex.label != truth.clean_label);
      EXPECT_EQ(ex.features, d.examples[i].features);
    }
    for (const auto& [clip, set] : labels) EXPECT_EQ(set.size(), 1u);
  }
}

TEST(SymmetricNoise, FullRateFlipsEverything) {
  const auto noisy = nl::inject_symmetric_noise(blobs(4), {nl::NoiseKind::kSymmetric, 1.0, 2, {}});
  for (std::size_t i = 0; i < noisy.examples.size(); ++i) EXPECT_NE(noisy.examples[i].label, noisy.truth[i].clean_label);
}

TEST(SymmetricNoise, FlipsSpreadOverOtherClasses) {
  nl::BlobSpec spec;
  spec.clips_per_class = 2000;
  spec.patches_per_clip = 1;
  const auto noisy = nl::inject_symmetric_noise(nl::generate_blobs(spec), {nl::NoiseKind::kSymmetric, 1.0, 3, {}});
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < noisy.examples.size(); ++i) ++counts[{noisy.truth[i].clean_label, noisy.examples[i].label}];
  for (const auto& [pair, n] : counts) EXPECT_NEAR(n, 2000.0 / 3.0, 5 * std::sqrt(2000.0 * 2 / 9));
  EXPECT_EQ(counts.size(), 12u);
}

TEST(SymmetricNoise, ClassSubsetAndRates) {
  auto d = blobs(5);
  d = nl::inject_symmetric_noise(d, {nl::NoiseKind::kSymmetric, 0.2, 1, {0, 1}});
  d = nl::inject_symmetric_noise(d, {nl::NoiseKind::kSymmetric, 0.5, 2, {2, 3}});
  const auto rates = nl::class_corruption_rates(d);
  // The exact count applies to the eligible pool, so only the pooled rates are fixed.
  EXPECT_NEAR((rates.at(0) + rates.at(1)) / 2, 0.2, 1e-12);
  EXPECT_NEAR((rates.at(2) + rates.at(3)) / 2, 0.5, 1e-12);
  const auto groups = nl::groups_from_rates(rates);
  EXPECT_EQ(groups.at(0), nl::NoiseGroup::kLow);
  EXPECT_EQ(groups.at(3), nl::NoiseGroup::kHigh);
}

TEST(SymmetricNoise, SecondPassSkipsCorruptedClips) {
  auto d = nl::inject_symmetric_noise(blobs(6), {nl::NoiseKind::kSymmetric, 0.5, 1, {}});
  d = nl::inject_symmetric_noise(d, {nl::NoiseKind::kSymmetric, 0.5, 2, {}});
  EXPECT_EQ(nl::count_corrupted_clips(d), 150u);
}

TEST(OovNoise, ExactCountLabelsKeptFeaturesOutside) {
  const auto d = blobs(7);
  EXPECT_EQ(nl::inject_oov_noise(d, {nl::NoiseKind::kOov, 0.0, 1, {}}), d);
  const auto noisy = nl::inject_oov_noise(d, {nl::NoiseKind::kOov, 0.5, 1, {}});
  EXPECT_EQ(nl::count_corrupted_clips(noisy), 100u);

  std::vector<double> lo(8, INFINITY), hi(8, -INFINITY);
  for (const auto& ex : d.examples) {
    for (std::size_t k = 0; k < 8; ++k) {
      lo[k] = std::min(lo[k], ex.features[k]);
      hi[k] = std::max(hi[k], ex.features[k]);
    }
  }
  std::size_t replaced = 0, outside = 0;
  for (std::size_t i = 0; i < noisy.examples.size(); ++i) {
    EXPECT_EQ(noisy.examples[i].label, d.examples[i].label);
    if (!noisy.truth[i].corrupted) continue;
    EXPECT_EQ(noisy.truth[i].clean_label, nl::kNoClass);
    ++replaced;
    bool in = true;
    for (std::size_t k = 0; k < 8; ++k) in = in && noisy.examples[i].features[k] >= lo[k] && noisy.examples[i].features[k] <= hi[k];
    outside += !in;
  }
  // Each coordinate lands inside the clean range with probability 1/2.
  const double oracle = 1.0 - std::pow(0.5, 8);
  const double frac = static_cast<double>(outside) / static_cast<double>(replaced);
  EXPECT_GE(frac, 0.9);
  EXPECT_NEAR(frac, oracle, 0.03);
}

TEST(PrunePrecision, CountsCorruptedRemovals) {
  const auto d = nl::inject_symmetric_noise(blobs(8), {nl::NoiseKind::kSymmetric, 0.5, 1, {}});
  std::vector<nl::ClipId> corrupted, clean;
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    (d.truth[i].corrupted ? corrupted : clean).push_back(d.examples[i].clip_id);
  }
  EXPECT_FALSE(nl::prune_precision(d, {}));
  EXPECT_DOUBLE_EQ(*nl::prune_precision(d, {corrupted[0], corrupted[3], clean[0], clean[3]}), 0.5);
}

TEST(Experiment, PairedRunsShareDatasets) {
  auto a = small_experiment();
  a.noise.push_back({nl::NoiseKind::kSymmetric, 0.4, 0, {}});
  auto b = a;
  b.train.loss = nl::LossSpec::lq(0.7);
  b.train.stage.strategy = nl::Strategy::kPrune;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto da = nl::make_run_data(a, i), db = nl::make_run_data(b, i);
    EXPECT_EQ(da.train, db.train);
    EXPECT_EQ(da.test, db.test);
  }
  EXPECT_NE(nl::make_run_data(a, 0).train, nl::make_run_data(a, 1).train);
}

TEST(Experiment, TestSetIsCleanAndDisjoint) {
  auto config = small_experiment();
  config.noise.push_back({nl::NoiseKind::kSymmetric, 1.0, 0, {}});
  config.noise.push_back({nl::NoiseKind::kOov, 0.5, 0, {}});
  const auto data = nl::make_run_data(config, 0);
  EXPECT_EQ(nl::count_corrupted_clips(data.test), 0u);
  EXPECT_EQ(nl::count_clips(data.test.examples), 40u);
  for (std::size_t i = 0; i < data.test.examples.size(); ++i) EXPECT_EQ(data.test.examples[i].label, data.test.truth[i].clean_label);
  std::set<nl::ExampleId> ids;
  std::set<nl::ClipId> clips;
  for (const auto& ex : data.train.examples) {
    ids.insert(ex.example_id);
    clips.insert(ex.clip_id);
  }
  for (const auto& ex : data.test.examples) {
    EXPECT_FALSE(ids.contains(ex.example_id));
    EXPECT_FALSE(clips.contains(ex.clip_id));
  }
}

TEST(Experiment, RunSeedsAndAutoGroups) {
  auto config = small_experiment();
  config.noise.push_back({nl::NoiseKind::kSymmetric, 0.2, 0, {0, 1}});
  config.noise.push_back({nl::NoiseKind::kSymmetric, 0.5, 0, {2, 3}});
  config.train.smoothing = nl::SmoothingPolicy{0.15, 0.05, std::nullopt};
  config.auto_smoothing_groups = true;
  const auto data = nl::make_run_data(config, 2);
  const auto train = nl::run_train_config(config, data.train, 2);
  EXPECT_EQ(train.seed, 42u);
  ASSERT_TRUE(train.smoothing->group_of_class);
  EXPECT_EQ(train.smoothing->group_of_class->at(1), nl::NoiseGroup::kLow);
  EXPECT_EQ(train.smoothing->group_of_class->at(2), nl::NoiseGroup::kHigh);
}

TEST(Experiment, SummaryAndDeterminismAcrossThreads) {
  auto config = small_experiment();
  const auto serial = nl::run_experiment(config);
  config.threads = 3;
  const auto parallel = nl::run_experiment(config);
  EXPECT_EQ(serial.per_run_accuracy, parallel.per_run_accuracy);
  ASSERT_EQ(serial.per_run_accuracy.size(), 3u);
  const auto ci = nl::mean_ci(serial.per_run_accuracy);
  EXPECT_EQ(serial.mean, ci.mean);
  EXPECT_EQ(serial.ci_half_width, ci.half_width);
  config.runs = 1;
  EXPECT_EQ(nl::run_experiment(config).ci_half_width, 0.0);
}

TEST(Experiment, FailingRunNamesIndex) {
  auto config = small_experiment();
  config.train.stage.strategy = nl::Strategy::kPrune;
  config.train.stage.n1 = 1;
  config.train.stage.prune_count = 10000;
  try {
    nl::run_experiment(config);
    FAIL() << "expected ExperimentError";
  } catch (const nl::ExperimentError& e) {
    EXPECT_EQ(e.run_index(), 0u);
    EXPECT_NE(std::string(e.what()).find("run 0"), std::string::npos) << e.what();
  }
}

TEST(Experiment, SummarizeIdenticalRuns) {
  const auto s = nl::summarize({{70.0, 3, std::nullopt}, {70.0, 4, std::nullopt}});
  EXPECT_EQ(s.mean, 70.0);
  EXPECT_EQ(s.ci_half_width, 0.0);
}
