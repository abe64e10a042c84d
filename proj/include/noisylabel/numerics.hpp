#pragma once

// Deterministic numeric primitives: stable softmax, percentile, seeded random
// streams, Beta sampling and Student-t confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "noisylabel/errors.hpp"

namespace noisylabel {

using Vector = std::vector<double>;
// Softmax output: nonnegative, sums to 1.
using ProbVector = std::vector<double>;

inline constexpr double kDistributionTolerance = 1e-9;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Throws unless `values` is a probability vector of length >= 2.
inline void check_distribution(std::span<const double> values, const char* what) {
  require(values.size() >= 2, std::string(what) + ": need at least 2 classes");
  double sum = 0.0;
  for (double v : values) {
    require(std::isfinite(v) && v >= 0.0, std::string(what) + ": entries must be finite and >= 0");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kDistributionTolerance, std::string(what) + ": entries must sum to 1");
}

inline std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

inline ProbVector softmax(std::span<const double> logits) {
  require(logits.size() >= 2, "softmax: need at least 2 logits");
  require(all_finite(logits), "softmax: logits must be finite");
  const double shift = *std::max_element(logits.begin(), logits.end());
  ProbVector out(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - shift);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

// Linear interpolation between closest ranks on (N-1) spacing.
inline double percentile(std::span<const double> values, double l) {
  require(!values.empty(), "percentile: empty input");
  require(all_finite(values), "percentile: values must be finite");
  require(l >= 0.0 && l <= 100.0, "percentile: l must lie in [0, 100]");
  Vector sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double idx = (l / 100.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace detail {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// xoshiro256** keyed by (seed, stream_id). Copies are independent snapshots, so
// a stream passed by value replays the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::uint64_t key = stream_id ^ 0x6A09E667F3BCC909ULL;
    std::uint64_t sm = seed ^ detail::rotl(detail::splitmix64(key), 23);
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Derived stream for a sub-task; depends only on (seed, stream_id, child).
  RngStream child(std::uint64_t child_id) const {
    std::uint64_t key = stream_id_ * 0x9E3779B97F4A7C15ULL + child_id + 1;
    return RngStream(seed_, detail::splitmix64(key));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe to take the log of.
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::size_t below(std::size_t n) {
    require(n > 0, "RngStream::below: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return static_cast<std::size_t>(draw % bound);
  }

  // Standard normal via the polar method. No cached spare, so the draw count per call is data-dependent
  // but the sequence is fully determined by the stream.
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_[4]{};
};

// Fisher-Yates with our own index draws; std::shuffle is implementation-defined.
template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  return perm;
}

// log of a Gamma(shape, 1) variate (Marsaglia-Tsang). Working in log space keeps
// shape << 1 from underflowing to zero.
inline double sample_log_gamma(double shape, RngStream& rng) {
  require(shape > 0.0, "sample_log_gamma: shape must be positive");
  if (shape < 1.0) {
    return sample_log_gamma(shape + 1.0, rng) + std::log(rng.uniform_open()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x || std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return std::log(d) + std::log(v);
    }
  }
}

// Beta(alpha, alpha) as X / (X + Y) with X, Y ~ Gamma(alpha, 1).
inline double sample_beta(double alpha, RngStream& rng) {
  require(alpha > 0.0 && std::isfinite(alpha), "sample_beta: alpha must be positive");
  const double log_x = sample_log_gamma(alpha, rng);
  const double log_y = sample_log_gamma(alpha, rng);
  return 1.0 / (1.0 + std::exp(log_y - log_x));
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

// Mean and Student-t confidence half-width.
inline MeanCi mean_ci(std::span<const double> values, double level = 0.95) {
  require(!values.empty(), "mean_ci: empty input");
  require(level > 0.0 && level < 1.0, "mean_ci: level must lie in (0, 1)");
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / (n - 1.0));
  if (s == 0.0) return {mean, 0.0};
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 * (1.0 + level));
  return {mean, t * s / std::sqrt(n)};
}

}  // namespace noisylabel
