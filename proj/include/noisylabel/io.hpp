#pragma once

// File formats. Datasets, epoch metrics and prune reports are JSON Lines (one
// object per line); models and experiment summaries are single JSON objects.
//
//   dataset line:  {"example_id":0,"clip_id":0,"features":[...],"label":2}
//                  private files add "clean_label" (-1 for OOV) and "corrupted"
//   metrics line:  {"epoch":0,"train_loss":..,"val_accuracy":..,"lr":..,"kept_fraction":..,"train_clips":..}
//   prune line:    {"clip_id":..,"clip_loss":..,"rank":1,"removed":true,"round":1}
//   model:         {"format":"noisylabel-model","version":1,"architecture":"linear"|"one_hidden",
//                   "input_dim":F,"num_classes":K,"hidden_units":H,
//                   "layers":[{"inputs":..,"outputs":..,"weights":[row-major],"bias":[..]}]}
//   summary:       {"fingerprint":..,"runs":N,"per_run_accuracy":[..],"mean":..,"ci_half_width":..,
//                   "prune_precision":[..|null]}
//
// Doubles are written with round-trip precision, so parse(write(x)) == x.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "noisylabel/errors.hpp"
#include "noisylabel/harness.hpp"
#include "noisylabel/model.hpp"
#include "noisylabel/selection.hpp"
#include "noisylabel/trainer.hpp"

namespace noisylabel::io {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  return out;
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("line " + std::to_string(number) + ": " + e.what());
    }
    try {
      fn(record);
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

// ---- datasets ---------------------------------------------------------------

inline json example_to_json(const Example& ex) {
  return {{"example_id", ex.example_id}, {"clip_id", ex.clip_id}, {"features", ex.features}, {"label", ex.label}};
}

inline void write_dataset(std::ostream& out, const LabeledDataset& data, bool include_private) {
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    json line = example_to_json(data.examples[i]);
    if (include_private) {
      line["clean_label"] = data.truth[i].clean_label;
      line["corrupted"] = data.truth[i].corrupted;
    }
    out << line.dump() << '\n';
  }
}

// Files without private fields read as clean (clean_label = label). The class
// count is one past the largest label seen.
inline LabeledDataset read_dataset(std::istream& in) {
  LabeledDataset data;
  int top = 1;
  for_each_json_line(in, [&](const json& j) {
    Example ex;
    ex.example_id = j.at("example_id").get<ExampleId>();
    ex.clip_id = j.at("clip_id").get<ClipId>();
    ex.features = j.at("features").get<Vector>();
    ex.label = j.at("label").get<int>();
    GroundTruth truth{j.value("clean_label", ex.label), j.value("corrupted", false)};
    top = std::max({top, ex.label, truth.clean_label});
    data.examples.push_back(std::move(ex));
    data.truth.push_back(truth);
  });
  data.num_classes = static_cast<std::size_t>(top) + 1;
  return data;
}

inline bool has_private_fields(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return json::parse(line).contains("corrupted");
  }
  return false;
}

// ---- metrics ----------------------------------------------------------------

inline json epoch_to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},       {"train_loss", r.train_loss},       {"val_accuracy", r.val_accuracy},
          {"lr", r.lr},             {"kept_fraction", r.kept_fraction}, {"train_clips", r.train_clips}};
}

inline EpochRecord epoch_from_json(const json& j) {
  return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(),  j.at("val_accuracy").get<double>(),
          j.at("lr").get<double>(),         j.at("kept_fraction").get<double>(), j.at("train_clips").get<std::size_t>()};
}

inline std::vector<EpochRecord> read_metrics(std::istream& in) {
  std::vector<EpochRecord> out;
  for_each_json_line(in, [&](const json& j) { out.push_back(epoch_from_json(j)); });
  return out;
}

// ---- prune reports ----------------------------------------------------------

inline json prune_record_to_json(const PruneRecord& r) {
  return {{"clip_id", r.clip_id}, {"clip_loss", r.clip_loss}, {"rank", r.rank}, {"removed", r.removed}, {"round", r.round}};
}

inline void write_prune_report(std::ostream& out, const std::vector<PruneRecord>& records) {
  for (const auto& r : records) out << prune_record_to_json(r).dump() << '\n';
}

inline std::vector<PruneRecord> read_prune_report(std::istream& in) {
  std::vector<PruneRecord> out;
  for_each_json_line(in, [&](const json& j) {
    out.push_back({j.at("clip_id").get<ClipId>(), j.at("clip_loss").get<double>(), j.at("rank").get<std::size_t>(),
                   j.at("removed").get<bool>(), j.value("round", std::size_t{1})});
  });
  return out;
}

// ---- models -----------------------------------------------------------------

inline json model_to_json(const ModelParams& model) {
  json layers = json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
  }
  return {{"format", "noisylabel-model"},
          {"version", 1},
          {"architecture", model.architecture == Architecture::kLinear ? "linear" : "one_hidden"},
          {"input_dim", model.input_dim},
          {"num_classes", model.num_classes},
          {"hidden_units", model.hidden_units},
          {"layers", layers}};
}

inline ModelParams model_from_json(const json& j) {
  if (j.value("format", "") != "noisylabel-model") throw FormatError("not a noisylabel model file");
  if (j.value("version", 0) != 1) throw FormatError("unsupported model version");
  ModelParams model;
  const auto arch = j.at("architecture").get<std::string>();
  if (arch == "linear") {
    model.architecture = Architecture::kLinear;
  } else if (arch == "one_hidden") {
    model.architecture = Architecture::kOneHidden;
  } else {
    throw FormatError("unknown architecture '" + arch + "'");
  }
  model.input_dim = j.at("input_dim").get<std::size_t>();
  model.num_classes = j.at("num_classes").get<std::size_t>();
  model.hidden_units = j.at("hidden_units").get<std::size_t>();
  for (const auto& lj : j.at("layers")) {
    Layer l{lj.at("inputs").get<std::size_t>(), lj.at("outputs").get<std::size_t>(), lj.at("weights").get<Vector>(),
            lj.at("bias").get<Vector>()};
    if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
      throw FormatError("layer shape does not match its weight arrays");
    }
    model.layers.push_back(std::move(l));
  }
  const std::size_t expected = model.architecture == Architecture::kLinear ? 1 : 2;
  if (model.layers.size() != expected || model.layers.front().inputs != model.input_dim ||
      model.layers.back().outputs != model.num_classes) {
    throw FormatError("layers do not match the architecture descriptor");
  }
  return model;
}

// ---- summaries --------------------------------------------------------------

inline json summary_to_json(const RunSummary& s) {
  json precision = json::array();
  for (const auto& r : s.runs) precision.push_back(r.prune_precision ? json(*r.prune_precision) : json(nullptr));
  json epochs = json::array();
  for (const auto& r : s.runs) epochs.push_back(r.epochs);
  return {{"fingerprint", s.fingerprint},
          {"runs", s.per_run_accuracy.size()},
          {"per_run_accuracy", s.per_run_accuracy},
          {"mean", s.mean},
          {"ci_half_width", s.ci_half_width},
          {"epochs", epochs},
          {"prune_precision", precision}};
}

inline RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.fingerprint = j.at("fingerprint").get<std::string>();
  s.per_run_accuracy = j.at("per_run_accuracy").get<Vector>();
  s.mean = j.at("mean").get<double>();
  s.ci_half_width = j.at("ci_half_width").get<double>();
  const json epochs = j.value("epochs", json::array());
  const json precision = j.value("prune_precision", json::array());
  for (std::size_t i = 0; i < s.per_run_accuracy.size(); ++i) {
    RunDiagnostics d;
    d.accuracy = s.per_run_accuracy[i];
    if (i < epochs.size()) d.epochs = epochs[i].get<std::size_t>();
    if (i < precision.size() && !precision[i].is_null()) d.prune_precision = precision[i].get<double>();
    s.runs.push_back(d);
  }
  return s;
}

// "acc = 66.5 ± 0.6"
inline std::string format_accuracy(double mean, double half_width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "acc = %.1f ± %.1f", mean, half_width);
  return buf;
}

}  // namespace noisylabel::io
