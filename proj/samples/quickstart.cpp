// Train plain CCE and Lq on the same noisy synthetic data and compare clean
// test accuracy.

#include <cstdio>

#include "noisylabel/noisylabel.hpp"

int main() {
  using namespace noisylabel;

  ExperimentConfig experiment;
  experiment.data.spread = 0.5;
  experiment.noise.push_back({NoiseKind::kSymmetric, 0.4, 0, {}});
  experiment.runs = 3;

  for (const LossSpec loss : {LossSpec::cce(), LossSpec::lq(0.7)}) {
    experiment.train.loss = loss;
    const RunSummary summary = run_experiment(experiment);
    std::printf("%-4s acc = %.1f ± %.1f\n", to_string(loss.kind), summary.mean, summary.ci_half_width);
  }
  return 0;
}
