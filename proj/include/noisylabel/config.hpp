#pragma once

// Experiment configuration file (JSON object tree). Every section is optional
// and falls back to the defaults below; unknown keys are rejected with the
// dotted path of the offending field.
//
// {
//   "data":      {"classes":4,"clips_per_class":50,"patches_per_clip":3,"dims":8,"spread":0.5,
//                 "test_clips_per_class":100},
//   "noise":     [{"kind":"symmetric"|"oov","rate":0.4,"classes":[0,1]}],
//   "train":     {"batch_size":64,"initial_lr":0.001,"lr_halving_patience":5,"early_stop_patience":15,
//                 "val_fraction":0.15,"max_epochs":100,"seed":0,"architecture":"linear"|"one_hidden",
//                 "hidden_units":32},
//   "loss":      {"kind":"cce"|"mae"|"lq","q":0.7},
//   "stage":     {"strategy":"none"|"discard"|"prune","n1":10,
//                 "rule":{"kind":"max_fraction","m":0.93} | {"kind":"percentile","l":95}
//                        | {"kind":"discard_count","count":5},
//                 "prune_count":0,"prune_fraction":0.2,"prune_rounds":1},
//   "smoothing": null | {"epsilon":0.15,"delta_epsilon":0.05,"groups":"auto" | {"0":"low","1":"high"}},
//   "mixup":     null | {"enabled":true,"alpha":0.3,"warm_up_epochs":10,"pairing":"intra"|"inter"},
//   "runs":7, "base_seed":0, "threads":1,
//   "output":    {"summary":"","metrics":"","model":"","prune_report":""}
// }

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "noisylabel/errors.hpp"
#include "noisylabel/harness.hpp"
#include "noisylabel/trainer.hpp"

namespace noisylabel::config {

using json = nlohmann::json;

struct OutputPaths {
  std::string summary;
  std::string metrics;
  std::string model;
  std::string prune_report;
};

struct ResolvedConfig {
  ExperimentConfig experiment;
  OutputPaths output;
};

namespace detail {

// Reads keys from one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const std::string where = key.empty() ? (path_.empty() ? "config" : path_) : field(key);
    throw ConfigError(where + ": " + message);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    if (!has(key)) return fallback;
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "wrong type");
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) fail(key, "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool ok, Section& s, const std::string& key, const std::string& message) {
  if (!ok) s.fail(key, message);
}

inline BlobSpec parse_data(Section s, std::size_t& test_clips) {
  BlobSpec d;
  d.classes = s.count("classes", d.classes);
  d.clips_per_class = s.count("clips_per_class", d.clips_per_class);
  d.patches_per_clip = s.count("patches_per_clip", d.patches_per_clip);
  d.dims = s.count("dims", d.dims);
  d.spread = s.number("spread", d.spread);
  test_clips = s.count("test_clips_per_class", test_clips);
  s.finish();
  check(d.classes >= 2, s, "classes", "must be >= 2");
  check(d.clips_per_class >= 2, s, "clips_per_class", "must be >= 2 (validation split needs 2 clips per class)");
  check(d.patches_per_clip >= 1, s, "patches_per_clip", "must be >= 1");
  check(d.dims >= 1, s, "dims", "must be >= 1");
  check(d.spread > 0.0, s, "spread", "must be positive");
  check(test_clips >= 1, s, "test_clips_per_class", "must be >= 1");
  return d;
}

inline NoiseSpec parse_noise(Section s) {
  NoiseSpec n;
  const auto kind = s.get<std::string>("kind", "symmetric");
  if (kind == "symmetric") {
    n.kind = NoiseKind::kSymmetric;
  } else if (kind == "oov") {
    n.kind = NoiseKind::kOov;
  } else {
    s.fail("kind", "expected \"symmetric\" or \"oov\"");
  }
  n.rate = s.number("rate", 0.0);
  n.seed = s.get<std::uint64_t>("seed", 0);
  n.classes = s.get<std::vector<int>>("classes", {});
  s.finish();
  check(n.rate >= 0.0 && n.rate <= 1.0, s, "rate", "must lie in [0, 1]");
  return n;
}

inline LossSpec parse_loss(Section s) {
  LossSpec loss;
  const auto kind = s.get<std::string>("kind", "cce");
  if (kind == "cce") {
    loss.kind = LossKind::kCce;
  } else if (kind == "mae") {
    loss.kind = LossKind::kMae;
  } else if (kind == "lq") {
    loss.kind = LossKind::kLq;
  } else {
    s.fail("kind", "expected \"cce\", \"mae\" or \"lq\"");
  }
  loss.q = s.number("q", loss.q);
  s.finish();
  check(valid_q(loss.q), s, "q", "Lq exponent must lie in (0, 1], got " + json(loss.q).dump());
  return loss;
}

inline SelectionRule parse_rule(Section s, std::size_t batch_size) {
  const auto kind = s.get<std::string>("kind", "max_fraction");
  SelectionRule rule;
  if (kind == "max_fraction") {
    rule = SelectionRule::max_fraction(s.number("m", 0.93));
    check(rule.m >= 0.0 && rule.m <= 1.0, s, "m", "must lie in [0, 1]");
  } else if (kind == "percentile") {
    rule = SelectionRule::percentile(s.number("l", 95.0));
    check(rule.l >= 0.0 && rule.l <= 100.0, s, "l", "must lie in [0, 100]");
  } else if (kind == "discard_count") {
    const std::size_t c = s.count("count", 1);
    check(c < batch_size, s, "count", "must be below train.batch_size");
    rule = SelectionRule::discard_count(c, batch_size);
  } else {
    s.fail("kind", "expected \"max_fraction\", \"percentile\" or \"discard_count\"");
  }
  s.finish();
  return rule;
}

inline StagePlan parse_stage(Section s, std::size_t batch_size) {
  StagePlan stage;
  const auto strategy = s.get<std::string>("strategy", "none");
  if (strategy == "none") {
    stage.strategy = Strategy::kNone;
  } else if (strategy == "discard") {
    stage.strategy = Strategy::kDiscard;
  } else if (strategy == "prune") {
    stage.strategy = Strategy::kPrune;
  } else {
    s.fail("strategy", "expected \"none\", \"discard\" or \"prune\"");
  }
  stage.n1 = s.count("n1", stage.n1);
  if (s.has("rule")) stage.rule = parse_rule(Section(s.raw("rule"), s.field("rule")), batch_size);
  stage.prune_count = s.count("prune_count", 0);
  if (s.has("prune_fraction")) {
    stage.prune_fraction = s.number("prune_fraction", 0.0);
    check(*stage.prune_fraction >= 0.0 && *stage.prune_fraction < 1.0, s, "prune_fraction", "must lie in [0, 1)");
  }
  stage.prune_rounds = s.count("prune_rounds", 1);
  s.finish();
  check(stage.prune_rounds >= 1, s, "prune_rounds", "must be >= 1");
  check(!(stage.strategy == Strategy::kPrune && stage.prune_rounds > 1 && stage.n1 == 0), s, "n1",
        "iterative pruning needs n1 >= 1");
  return stage;
}

inline SmoothingPolicy parse_smoothing(Section s, bool& auto_groups) {
  SmoothingPolicy p;
  p.epsilon = s.number("epsilon", 0.1);
  p.delta_epsilon = s.number("delta_epsilon", 0.0);
  auto_groups = false;
  if (s.has("groups")) {
    const json& g = s.raw("groups");
    if (g.is_string()) {
      if (g.get<std::string>() != "auto") s.fail("groups", "expected \"auto\" or a class -> group map");
      auto_groups = true;
    } else if (g.is_object()) {
      NoiseGroupMap map;
      for (const auto& [key, value] : g.items()) {
        int cls = -1;
        try {
          std::size_t used = 0;
          cls = std::stoi(key, &used);
          if (used != key.size()) cls = -1;
        } catch (const std::exception&) {
        }
        if (cls < 0) s.fail("groups", "class key '" + key + "' is not a class index");
        const std::string group = value.is_string() ? value.get<std::string>() : "";
        if (group == "low") {
          map[cls] = NoiseGroup::kLow;
        } else if (group == "high") {
          map[cls] = NoiseGroup::kHigh;
        } else {
          s.fail("groups", "group for class " + key + " must be \"low\" or \"high\"");
        }
      }
      p.group_of_class = std::move(map);
    } else {
      s.fail("groups", "expected \"auto\" or a class -> group map");
    }
  }
  s.finish();
  check(p.epsilon >= 0.0 && p.epsilon < 1.0, s, "epsilon", "must lie in [0, 1)");
  check(p.delta_epsilon >= 0.0, s, "delta_epsilon", "must be >= 0");
  check(p.epsilon - p.delta_epsilon >= 0.0, s, "delta_epsilon", "epsilon - delta_epsilon must be >= 0");
  check(p.epsilon + p.delta_epsilon < 1.0, s, "delta_epsilon", "epsilon + delta_epsilon must be < 1");
  return p;
}

inline MixupPolicy parse_mixup(Section s) {
  MixupPolicy m;
  m.enabled = s.get<bool>("enabled", true);
  m.alpha = s.number("alpha", m.alpha);
  m.warm_up_epochs = s.count("warm_up_epochs", 0);
  const auto pairing = s.get<std::string>("pairing", "intra");
  if (pairing == "intra") {
    m.pairing = Pairing::kIntraBatch;
  } else if (pairing == "inter") {
    m.pairing = Pairing::kInterBatch;
  } else {
    s.fail("pairing", "expected \"intra\" or \"inter\"");
  }
  s.finish();
  check(!m.enabled || m.alpha > 0.0, s, "alpha", "must be positive");
  return m;
}

inline void parse_train(Section s, TrainConfig& t) {
  t.batch_size = s.count("batch_size", t.batch_size);
  t.initial_lr = s.number("initial_lr", t.initial_lr);
  t.lr_halving_patience = s.count("lr_halving_patience", t.lr_halving_patience);
  t.early_stop_patience = s.count("early_stop_patience", t.early_stop_patience);
  t.val_fraction = s.number("val_fraction", t.val_fraction);
  t.max_epochs = s.count("max_epochs", t.max_epochs);
  t.seed = s.get<std::uint64_t>("seed", t.seed);
  const auto arch = s.get<std::string>("architecture", "linear");
  if (arch == "linear") {
    t.architecture = Architecture::kLinear;
  } else if (arch == "one_hidden") {
    t.architecture = Architecture::kOneHidden;
  } else {
    s.fail("architecture", "expected \"linear\" or \"one_hidden\"");
  }
  t.hidden_units = s.count("hidden_units", t.hidden_units);
  s.finish();
  check(t.batch_size >= 1, s, "batch_size", "must be >= 1");
  check(t.initial_lr > 0.0, s, "initial_lr", "must be positive");
  check(t.lr_halving_patience >= 1, s, "lr_halving_patience", "must be >= 1");
  check(t.early_stop_patience >= 1, s, "early_stop_patience", "must be >= 1");
  check(t.val_fraction > 0.0 && t.val_fraction < 1.0, s, "val_fraction", "must lie in (0, 1)");
  check(t.hidden_units >= 1, s, "hidden_units", "must be >= 1");
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kDiscard: return "discard";
    case Strategy::kPrune: return "prune";
  }
  return "?";
}

}  // namespace detail

inline ResolvedConfig from_json(const json& root) {
  ResolvedConfig cfg;
  ExperimentConfig& e = cfg.experiment;
  detail::Section top(root, "");
  if (top.has("data")) e.data = detail::parse_data(detail::Section(top.raw("data"), "data"), e.test_clips_per_class);
  if (top.has("noise")) {
    const json& list = top.raw("noise");
    if (!list.is_array()) top.fail("noise", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      e.noise.push_back(detail::parse_noise(detail::Section(list[i], "noise[" + std::to_string(i) + "]")));
    }
  }
  // train first: rule parsing needs the batch size.
  if (top.has("train")) detail::parse_train(detail::Section(top.raw("train"), "train"), e.train);
  if (top.has("loss")) e.train.loss = detail::parse_loss(detail::Section(top.raw("loss"), "loss"));
  if (top.has("stage")) e.train.stage = detail::parse_stage(detail::Section(top.raw("stage"), "stage"), e.train.batch_size);
  if (top.has("smoothing")) {
    e.train.smoothing =
        detail::parse_smoothing(detail::Section(top.raw("smoothing"), "smoothing"), e.auto_smoothing_groups);
  }
  if (top.has("mixup")) e.train.mixup = detail::parse_mixup(detail::Section(top.raw("mixup"), "mixup"));
  e.runs = top.count("runs", e.runs);
  e.base_seed = top.get<std::uint64_t>("base_seed", e.base_seed);
  e.threads = top.count("threads", e.threads);
  if (top.has("output")) {
    detail::Section out(top.raw("output"), "output");
    cfg.output.summary = out.get<std::string>("summary", "");
    cfg.output.metrics = out.get<std::string>("metrics", "");
    cfg.output.model = out.get<std::string>("model", "");
    cfg.output.prune_report = out.get<std::string>("prune_report", "");
    out.finish();
  }
  top.finish();
  if (e.runs < 1) top.fail("runs", "must be >= 1");
  return cfg;
}

inline ResolvedConfig parse(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config: not valid JSON: ") + err.what());
  }
  return from_json(root);
}

inline json to_json(const ResolvedConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  const TrainConfig& t = e.train;
  json noise = json::array();
  for (const auto& n : e.noise) {
    noise.push_back({{"kind", n.kind == NoiseKind::kSymmetric ? "symmetric" : "oov"},
                     {"rate", n.rate},
                     {"seed", n.seed},
                     {"classes", n.classes}});
  }
  json rule = t.stage.rule.kind == RuleKind::kMaxFraction ? json{{"kind", "max_fraction"}, {"m", t.stage.rule.m}}
                                                          : json{{"kind", "percentile"}, {"l", t.stage.rule.l}};
  json stage = {{"strategy", detail::strategy_name(t.stage.strategy)},
                {"n1", t.stage.n1},
                {"rule", rule},
                {"prune_count", t.stage.prune_count},
                {"prune_fraction", t.stage.prune_fraction ? json(*t.stage.prune_fraction) : json(nullptr)},
                {"prune_rounds", t.stage.prune_rounds}};
  json smoothing = nullptr;
  if (t.smoothing) {
    json groups = nullptr;
    if (e.auto_smoothing_groups) {
      groups = "auto";
    } else if (t.smoothing->group_of_class) {
      groups = json::object();
      for (const auto& [k, g] : *t.smoothing->group_of_class) groups[std::to_string(k)] = g == NoiseGroup::kLow ? "low" : "high";
    }
    smoothing = {{"epsilon", t.smoothing->epsilon}, {"delta_epsilon", t.smoothing->delta_epsilon}, {"groups", groups}};
  }
  json mixup = nullptr;
  if (t.mixup) {
    mixup = {{"enabled", t.mixup->enabled},
             {"alpha", t.mixup->alpha},
             {"warm_up_epochs", t.mixup->warm_up_epochs},
             {"pairing", t.mixup->pairing == Pairing::kIntraBatch ? "intra" : "inter"}};
  }
  return {{"data",
           {{"classes", e.data.classes},
            {"clips_per_class", e.data.clips_per_class},
            {"patches_per_clip", e.data.patches_per_clip},
            {"dims", e.data.dims},
            {"spread", e.data.spread},
            {"test_clips_per_class", e.test_clips_per_class}}},
          {"noise", noise},
          {"train",
           {{"batch_size", t.batch_size},
            {"initial_lr", t.initial_lr},
            {"lr_halving_patience", t.lr_halving_patience},
            {"early_stop_patience", t.early_stop_patience},
            {"val_fraction", t.val_fraction},
            {"max_epochs", t.max_epochs},
            {"seed", t.seed},
            {"architecture", t.architecture == Architecture::kLinear ? "linear" : "one_hidden"},
            {"hidden_units", t.hidden_units}}},
          {"loss", {{"kind", to_string(t.loss.kind)}, {"q", t.loss.q}}},
          {"stage", stage},
          {"smoothing", smoothing},
          {"mixup", mixup},
          {"runs", e.runs},
          {"base_seed", e.base_seed},
          {"threads", e.threads},
          {"output",
           {{"summary", cfg.output.summary},
            {"metrics", cfg.output.metrics},
            {"model", cfg.output.model},
            {"prune_report", cfg.output.prune_report}}}};
}

// FNV-1a over the resolved method/data settings (output paths and thread count excluded).
inline std::string fingerprint(const ResolvedConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace noisylabel::config
