#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "noisylabel/errors.hpp"
#include "noisylabel/losses.hpp"
#include "noisylabel/model.hpp"
#include "support.hpp"

namespace nl = noisylabel;
using support::Vec;

namespace {

// Flattened parameter view so finite differences can walk every weight.
std::vector<double*> parameters(nl::ModelParams& model) {
  std::vector<double*> out;
  for (auto& l : model.layers) {
    for (double& w : l.weights) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
  }
  return out;
}

std::vector<double> flatten(const std::vector<nl::Layer>& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

nl::ModelParams constant_model(std::size_t dims, std::size_t classes, int favourite) {
  nl::ModelParams m = nl::init_model(nl::Architecture::kLinear, dims, classes, 0, nl::RngStream(1, 0));
  std::fill(m.layers[0].weights.begin(), m.layers[0].weights.end(), 0.0);
  std::fill(m.layers[0].bias.begin(), m.layers[0].bias.end(), 0.0);
  m.layers[0].bias[static_cast<std::size_t>(favourite)] = 1.0;
  return m;
}

}  // namespace

TEST(Model, InitShapes) {
  const auto lin = nl::init_model(nl::Architecture::kLinear, 8, 4, 32, nl::RngStream(0, 1));
  ASSERT_EQ(lin.layers.size(), 1u);
  EXPECT_EQ(lin.layers[0].weights.size(), 32u);
  EXPECT_EQ(lin.hidden_units, 0u);
  const auto mlp = nl::init_model(nl::Architecture::kOneHidden, 8, 4, 32, nl::RngStream(0, 1));
  ASSERT_EQ(mlp.layers.size(), 2u);
  EXPECT_EQ(mlp.layers[0].outputs, 32u);
  EXPECT_EQ(mlp.layers[1].inputs, 32u);
  for (double b : mlp.layers[1].bias) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(lin, nl::init_model(nl::Architecture::kLinear, 8, 4, 32, nl::RngStream(0, 1)));
}

class ParameterGradient : public ::testing::TestWithParam<nl::Architecture> {};

TEST_P(ParameterGradient, BackpropMatchesFiniteDifferences) {
  nl::RngStream rng(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = nl::init_model(GetParam(), 5, 3, 6, rng.child(trial));
    const Vec x = support::random_logits(5, rng, 1.0);
    const Vec y = support::random_distribution(3, rng);
    const auto spec = nl::LossSpec::lq(0.6);
    const auto pass = nl::forward(model, x);
    auto grads = nl::zero_gradients(model);
    nl::accumulate_gradient(model, x, pass, nl::loss_gradient_wrt_logits(spec, y, pass.logits), 1.0, grads);
    const Vec analytic = flatten(grads);

    auto params = parameters(model);
    Vec numeric(params.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = *params[i];
      *params[i] = keep + h;
      const double up = nl::loss_value(spec, y, nl::predict_proba(model, x));
      *params[i] = keep - h;
      const double down = nl::loss_value(spec, y, nl::predict_proba(model, x));
      *params[i] = keep;
      numeric[i] = (up - down) / (2 * h);
    }
    EXPECT_LT(support::relative_error(analytic, numeric), 1e-5) << "trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(Architectures, ParameterGradient,
                         ::testing::Values(nl::Architecture::kLinear, nl::Architecture::kOneHidden));

TEST(Model, ScaleMultipliesAccumulatedGradient) {
  const auto model = nl::init_model(nl::Architecture::kOneHidden, 3, 2, 4, nl::RngStream(2, 0));
  const Vec x{0.5, -1.0, 2.0};
  const auto pass = nl::forward(model, x);
  const Vec g{0.3, -0.3};
  auto once = nl::zero_gradients(model);
  auto twice = nl::zero_gradients(model);
  nl::accumulate_gradient(model, x, pass, g, 0.5, once);
  nl::accumulate_gradient(model, x, pass, g, 0.25, twice);
  nl::accumulate_gradient(model, x, pass, g, 0.25, twice);
  const Vec a = flatten(once), b = flatten(twice);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto model = nl::init_model(nl::Architecture::kLinear, 2, 2, 0, nl::RngStream(3, 0));
  const auto before = model;
  auto grads = nl::zero_gradients(model);
  grads[0].weights = {0.5, -2.0, 0.0, 1e-3};
  nl::Adam adam(model);
  adam.step(model, grads, 0.01);
  EXPECT_EQ(adam.steps(), 1u);
  // Bias-corrected first step is lr * g / (|g| + eps).
  for (std::size_t i = 0; i < 4; ++i) {
    const double g = grads[0].weights[i];
    EXPECT_NEAR(model.layers[0].weights[i], before.layers[0].weights[i] - 0.01 * g / (std::abs(g) + 1e-8), 1e-12);
  }
}

TEST(Evaluate, ClipLevelAccuracy) {
  nl::Dataset balanced;
  for (int c = 0; c < 4; ++c) balanced.push_back({c, c, Vec{0.0, 0.0}, c});
  EXPECT_DOUBLE_EQ(nl::evaluate(constant_model(2, 4, 2), balanced), 0.25);

  nl::Dataset pair{{0, 0, Vec{1, 0}, 0}, {1, 0, Vec{1, 0}, 0}, {2, 1, Vec{0, 1}, 0}};
  nl::ModelParams m = constant_model(2, 2, 0);
  m.layers[0].bias = {0, 0};
  m.layers[0].weights = {5, 0, 0, 5};  // class 0 for x = (1, 0), class 1 for x = (0, 1)
  EXPECT_DOUBLE_EQ(nl::evaluate(m, pair), 0.5);
  pair[2].label = 1;
  EXPECT_DOUBLE_EQ(nl::evaluate(m, pair), 1.0);
  EXPECT_THROW(nl::evaluate(m, nl::Dataset{}), nl::InvalidInput);
}
