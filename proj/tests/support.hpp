#pragma once

// Oracles and random case generators shared by the unit tests and the
// acceptance runner. Nothing here calls into the loss or gradient code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "noisylabel/numerics.hpp"

namespace support {

using noisylabel::RngStream;
using Vec = std::vector<double>;

inline Vec random_logits(std::size_t k, RngStream& rng, double scale = 3.0) {
  Vec z(k);
  for (double& v : z) v = scale * rng.normal();
  return z;
}

inline Vec random_one_hot(std::size_t k, RngStream& rng) {
  Vec y(k, 0.0);
  y[rng.below(k)] = 1.0;
  return y;
}

// Dirichlet(1, ..., 1) via normalized exponentials.
inline Vec random_distribution(std::size_t k, RngStream& rng) {
  Vec y(k);
  double total = 0;
  for (double& v : y) {
    v = -std::log(rng.uniform_open());
    total += v;
  }
  for (double& v : y) v /= total;
  return y;
}

// Reference softmax in long double, written independently of the library.
inline Vec reference_softmax(const Vec& z) {
  long double top = *std::max_element(z.begin(), z.end());
  long double total = 0;
  std::vector<long double> e(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) total += e[k] = std::exp(static_cast<long double>(z[k]) - top);
  Vec p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = static_cast<double>(e[k] / total);
  return p;
}

inline double reference_cce(const Vec& y, const Vec& p) {
  long double s = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] != 0) s -= y[k] * std::log(static_cast<long double>(p[k]));
  }
  return static_cast<double>(s);
}

inline Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double norm(const Vec& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// ||a - b|| / max(||a||, ||b||), with an absolute floor for near-zero gradients.
inline double relative_error(const Vec& a, const Vec& b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm(d) / std::max({norm(a), norm(b), 1e-8});
}

}  // namespace support
