#include "mrfattn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mrfattn {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("empty logit vector");
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isnan(x)) throw std::invalid_argument("NaN in logit vector");
    m = std::max(m, x);
  }
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_sum_exp(const Vec& v) { return log_sum_exp(std::span<const double>(v.data(), v.size())); }

Vec log_softmax(const Vec& v, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("softmax temperature beta must be positive");
  Vec scaled = beta * v;
  // beta * (-inf) stays -inf for beta > 0
  return scaled.array() - log_sum_exp(scaled);
}

Vec softmax(const Vec& v, double beta) {
  // scalar exp: the vectorized one maps -inf to a denormal, not 0
  return log_softmax(v, beta).unaryExpr([](double x) { return std::exp(x); });
}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
  // 1 - u keeps the log argument in (0, 1]
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t SeededRng::categorical(const Vec& probs) {
  if (probs.size() == 0) throw std::invalid_argument("categorical over empty support");
  const double u = uniform();
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_positive = static_cast<std::size_t>(k);
    cdf += probs[k];
    if (u < cdf) return last_positive;
  }
  // rounding left the cdf a hair below 1
  return last_positive;
}

SeededRng SeededRng::fork(std::uint64_t stream) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

}  // namespace mrfattn
