// noisylabel: command-line front end for dataset generation/corruption,
// single training runs, multi-run experiments and prune reports.
//
// Relative output paths are resolved against $NOISYLABEL_OUTPUT_DIR when set.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "noisylabel/config.hpp"
#include "noisylabel/io.hpp"
#include "noisylabel/noisylabel.hpp"

namespace nl = noisylabel;
namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string output_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* dir = std::getenv("NOISYLABEL_OUTPUT_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  fs::create_directories(dir);
  return (fs::path(dir) / path).string();
}

std::string read_file(const std::string& path) {
  auto in = nl::io::open_in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nl::config::ResolvedConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return nl::config::parse(read_file(path));
}

void write_dataset_file(const std::string& path, const nl::LabeledDataset& data, bool include_private) {
  auto out = nl::io::open_out(output_path(path));
  nl::io::write_dataset(out, data, include_private);
  if (!out) throw nl::io::FormatError("failed writing " + path);
}

nl::LabeledDataset read_dataset_file(const std::string& path) {
  auto in = nl::io::open_in(path);
  return nl::io::read_dataset(in);
}

nl::LossSpec parse_loss_flag(const std::string& kind, double q) {
  nlohmann::json j = {{"kind", kind}, {"q", q}};
  return nl::config::detail::parse_loss(nl::config::detail::Section(j, "loss"));
}

// ---- dataset generate / corrupt ---------------------------------------------

struct GenerateArgs {
  nl::BlobSpec spec;
  std::string out;
  bool public_only = false;
};

int run_generate(const GenerateArgs& args) {
  const auto data = nl::generate_blobs(args.spec);
  write_dataset_file(args.out, data, !args.public_only);
  std::cout << "wrote " << data.examples.size() << " examples (" << nl::count_clips(data.examples) << " clips) to "
            << output_path(args.out) << "\n";
  return 0;
}

struct CorruptArgs {
  std::string kind = "symmetric";
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> classes;
  std::string in;
  std::string out;
  bool public_only = false;
};

int run_corrupt(const CorruptArgs& args) {
  nl::NoiseSpec spec;
  if (args.kind == "symmetric") {
    spec.kind = nl::NoiseKind::kSymmetric;
  } else if (args.kind == "oov") {
    spec.kind = nl::NoiseKind::kOov;
  } else {
    throw nl::ConfigError("--kind: expected symmetric or oov");
  }
  spec.rate = args.rate;
  spec.seed = args.seed;
  spec.classes = args.classes;
  const auto before = read_dataset_file(args.in);
  const std::size_t already = nl::count_corrupted_clips(before);
  const auto data = nl::inject_noise(before, spec);
  write_dataset_file(args.out, data, !args.public_only);
  std::cout << "corrupted " << nl::count_corrupted_clips(data) - already << " of " << nl::count_clips(data.examples)
            << " clips; wrote " << output_path(args.out) << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string metrics;
  std::string model;
  std::string prune_report;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_epochs;
  std::optional<std::string> loss;
  std::optional<double> q;
  bool print_config = false;
};

nl::config::ResolvedConfig resolve_train_config(const TrainArgs& args) {
  auto cfg = load_config(args.config);
  auto& t = cfg.experiment.train;
  if (args.seed) t.seed = *args.seed;
  if (args.max_epochs) t.max_epochs = *args.max_epochs;
  if (args.loss || args.q) t.loss = parse_loss_flag(args.loss.value_or(nl::to_string(t.loss.kind)), args.q.value_or(t.loss.q));
  if (!args.metrics.empty()) cfg.output.metrics = args.metrics;
  if (!args.model.empty()) cfg.output.model = args.model;
  if (!args.prune_report.empty()) cfg.output.prune_report = args.prune_report;
  if (cfg.output.metrics.empty()) cfg.output.metrics = "metrics.jsonl";
  if (cfg.output.model.empty()) cfg.output.model = "model.json";
  if (cfg.output.prune_report.empty()) cfg.output.prune_report = "prune_report.jsonl";
  return cfg;
}

int run_train(const TrainArgs& args) {
  const auto cfg = resolve_train_config(args);
  if (args.print_config) {
    std::cout << nl::config::to_json(cfg).dump(2) << "\n";
    return 0;
  }
  // Without --data, train on run 0 of the configured synthetic benchmark.
  nl::LabeledDataset data;
  nl::TrainConfig train_config = cfg.experiment.train;
  if (!args.data.empty()) {
    data = read_dataset_file(args.data);
    if (cfg.experiment.auto_smoothing_groups && train_config.smoothing) {
      train_config.smoothing->group_of_class = nl::groups_from_rates(nl::class_corruption_rates(data));
    }
  } else {
    nl::ExperimentConfig experiment = cfg.experiment;
    experiment.base_seed = train_config.seed;
    data = nl::make_run_data(experiment, 0).train;
    train_config = nl::run_train_config(experiment, data, 0);
  }

  auto metrics = nl::io::open_out(output_path(cfg.output.metrics));
  const auto result = nl::train(data.examples, train_config, [&metrics](const nl::EpochRecord& r) {
    metrics << nl::io::epoch_to_json(r).dump() << '\n';
    metrics.flush();
  });
  if (!metrics) throw nl::io::FormatError("failed writing " + cfg.output.metrics);

  {
    auto model = nl::io::open_out(output_path(cfg.output.model));
    model << nl::io::model_to_json(result.model).dump() << '\n';
    if (!model) throw nl::io::FormatError("failed writing " + cfg.output.model);
  }
  if (result.prune_report) {
    auto report = nl::io::open_out(output_path(cfg.output.prune_report));
    nl::io::write_prune_report(report, *result.prune_report);
    if (!report) throw nl::io::FormatError("failed writing " + cfg.output.prune_report);
    if (const auto precision = nl::prune_precision(data, result.pruned_clips)) {
      std::cout << "pruned " << result.pruned_clips.size() << " clips, corrupted-clip precision " << *precision
                << "\n";
    }
  }
  std::cout << "trained " << result.history.size() << " epochs";
  if (result.best_epoch) {
    std::cout << ", best validation accuracy " << result.history[*result.best_epoch].val_accuracy << " at epoch "
              << *result.best_epoch;
  }
  std::cout << "\n";
  return 0;
}

// ---- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::size_t> threads;
  std::string summary;
  bool print_config = false;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  auto cfg = load_config(args.config);
  if (args.runs) cfg.experiment.runs = *args.runs;
  if (args.base_seed) cfg.experiment.base_seed = *args.base_seed;
  if (args.threads) cfg.experiment.threads = *args.threads;
  if (!args.summary.empty()) cfg.output.summary = args.summary;
  if (cfg.output.summary.empty()) cfg.output.summary = "summary.json";
  if (cfg.experiment.runs < 1) throw nl::ConfigError("runs: must be >= 1");
  if (args.print_config) {
    std::cout << nl::config::to_json(cfg).dump(2) << "\n";
    return 0;
  }
  const auto summary = nl::run_experiment(cfg.experiment, nl::config::fingerprint(cfg));
  auto out = nl::io::open_out(output_path(cfg.output.summary));
  out << nl::io::summary_to_json(summary).dump(2) << '\n';
  if (!out) throw nl::io::FormatError("failed writing " + cfg.output.summary);
  std::cout << nl::io::format_accuracy(summary.mean, summary.ci_half_width) << "\n";
  return 0;
}

// ---- prune-report -----------------------------------------------------------

struct PruneArgs {
  std::string model;
  std::string data;
  std::string out;
  std::size_t count = 0;
  std::optional<double> fraction;
  std::string loss = "lq";
  double q = 0.7;
};

// Ranks every clip of a dataset by its mean patch loss under a trained model.
int run_prune_report(const PruneArgs& args) {
  const nl::LossSpec loss = parse_loss_flag(args.loss, args.q);
  const auto model = nl::io::model_from_json(nlohmann::json::parse(read_file(args.model)));
  const auto data = read_dataset_file(args.data);
  if (data.examples.empty()) throw nl::InvalidInput("prune-report: empty dataset");
  std::vector<nl::LabelDistribution> targets;
  for (const auto& ex : data.examples) targets.push_back(nl::one_hot(ex.label, model.num_classes));
  const auto scores = nl::score_dataset(model, loss, data.examples, targets);
  const auto per_clip = nl::clip_losses(scores, nl::clip_assignment(data.examples));
  std::size_t count = args.count;
  if (args.fraction) count = static_cast<std::size_t>(std::llround(*args.fraction * static_cast<double>(per_clip.size())));
  const auto pruned = nl::prune_dataset(data.examples, per_clip, count);
  auto out = nl::io::open_out(output_path(args.out));
  nl::io::write_prune_report(out, pruned.records);
  if (!out) throw nl::io::FormatError("failed writing " + args.out);
  std::cout << "ranked " << per_clip.size() << " clips, flagged " << pruned.removed.size();
  if (const auto precision = nl::prune_precision(data, pruned.removed); precision && nl::count_corrupted_clips(data) > 0) {
    std::cout << ", corrupted-clip precision " << *precision;
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust training toolkit: label smoothing, mixup, Lq loss and large-loss selection"};
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "Generate or corrupt synthetic datasets");
  dataset->require_subcommand(1);

  GenerateArgs gen;
  auto* generate = dataset->add_subcommand("generate", "Write a synthetic blob dataset");
  generate->add_option("--classes", gen.spec.classes, "Number of classes")->check(CLI::Range(2, 1 << 20));
  generate->add_option("--clips-per-class", gen.spec.clips_per_class, "Clips per class")->check(CLI::Range(1, 1 << 24));
  generate->add_option("--patches-per-clip", gen.spec.patches_per_clip, "Patches per clip")->check(CLI::Range(1, 1 << 20));
  generate->add_option("--dims", gen.spec.dims, "Feature dimension")->check(CLI::Range(1, 1 << 20));
  generate->add_option("--spread", gen.spec.spread, "Clip and patch standard deviation")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.spec.seed, "Seed");
  generate->add_option("--out", gen.out, "Output JSONL path")->required();
  generate->add_flag("--public", gen.public_only, "Omit the harness-private clean_label/corrupted fields");

  CorruptArgs cor;
  auto* corrupt = dataset->add_subcommand("corrupt", "Inject clip-level label noise");
  corrupt->add_option("--kind", cor.kind, "symmetric | oov")->check(CLI::IsMember({"symmetric", "oov"}));
  corrupt->add_option("--rate", cor.rate, "Fraction of clips to corrupt")->check(CLI::Range(0.0, 1.0));
  corrupt->add_option("--seed", cor.seed, "Seed");
  corrupt->add_option("--classes", cor.classes, "Restrict corruption to these clean classes");
  corrupt->add_option("--in", cor.in, "Input JSONL path")->required()->check(CLI::ExistingFile);
  corrupt->add_option("--out", cor.out, "Output JSONL path")->required();
  corrupt->add_flag("--public", cor.public_only, "Omit the harness-private fields");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Run one training and write metrics, model and prune report");
  train->add_option("--config", tr.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  train->add_option("--data", tr.data, "Training data JSONL; defaults to the configured synthetic data")
      ->check(CLI::ExistingFile);
  train->add_option("--metrics", tr.metrics, "Per-epoch metrics JSONL");
  train->add_option("--model", tr.model, "Model JSON");
  train->add_option("--prune-report", tr.prune_report, "Prune report JSONL (prune strategy only)");
  train->add_option("--seed", tr.seed, "Override train.seed");
  train->add_option("--max-epochs", tr.max_epochs, "Override train.max_epochs");
  train->add_option("--loss", tr.loss, "Override loss.kind")->check(CLI::IsMember({"cce", "mae", "lq"}));
  train->add_option("--q", tr.q, "Override loss.q");
  train->add_flag("--print-config", tr.print_config, "Print the resolved configuration and exit");

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Seeded multi-run experiment with a 95% t-interval");
  experiment->add_option("--config", ex.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  experiment->add_option("--runs", ex.runs, "Override runs");
  experiment->add_option("--base-seed", ex.base_seed, "Override base_seed");
  experiment->add_option("--threads", ex.threads, "Override threads");
  experiment->add_option("--summary", ex.summary, "Summary JSON path");
  experiment->add_flag("--print-config", ex.print_config, "Print the resolved configuration and exit");

  PruneArgs pr;
  auto* prune = app.add_subcommand("prune-report", "Rank clips by mean patch loss under a trained model");
  prune->add_option("--model", pr.model, "Model JSON")->required()->check(CLI::ExistingFile);
  prune->add_option("--data", pr.data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  prune->add_option("--out", pr.out, "Report JSONL path")->required();
  auto* count_opt = prune->add_option("--count", pr.count, "Number of clips to flag");
  prune->add_option("--fraction", pr.fraction, "Fraction of clips to flag")->excludes(count_opt)->check(CLI::Range(0.0, 1.0));
  prune->add_option("--loss", pr.loss, "Scoring loss")->check(CLI::IsMember({"cce", "mae", "lq"}));
  prune->add_option("--q", pr.q, "Lq exponent");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return run_generate(gen);
    if (*corrupt) return run_corrupt(cor);
    if (*train) return run_train(tr);
    if (*experiment) return run_experiment_cmd(ex);
    if (*prune) return run_prune_report(pr);
  } catch (const nl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nl::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
