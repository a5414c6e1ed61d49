#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mrfattn {

// All arithmetic is double precision. Vectors are column vectors; matrices
// that hold a set of points (keys, queries, patterns, inputs) store one point
// per row.
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an iteration produces a non-finite value (divergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ln(sum_k exp(v_k)), evaluated as m + ln(sum_k exp(v_k - m)) with m = max(v).
/// Entries equal to -inf are allowed (masked candidates) and contribute zero
/// mass; if every entry is -inf the result is -inf.
double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Vec& v);

/// exp(beta * v_k - lse(beta * v)). Throws std::invalid_argument if beta <= 0
/// or v is empty.
Vec softmax(const Vec& v, double beta = 1.0);

/// Same as softmax but returns log-probabilities.
Vec log_softmax(const Vec& v, double beta = 1.0);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

/// Row `i` of a point matrix as a column vector.
inline Vec row_vec(const Mat& m, Eigen::Index i) { return m.row(i).transpose(); }

/// Deterministic random source.
///
/// The generator is std::mt19937_64, whose output sequence is fixed by the C++
/// standard for a given seed. Distributions are derived here from the raw
/// 64-bit words rather than through <random> distribution objects, whose
/// algorithms are implementation-defined:
///   uniform  = (word >> 11) * 2^-53, in [0, 1)
///   normal   = Box-Muller on two uniforms (cosine branch only)
///   categorical = inverse CDF over the running sum, first index with u < cdf
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  std::size_t categorical(const Vec& probs);

  /// Independent substream identified by `stream`, derived from the master
  /// seed with splitmix64. Used to give Monte-Carlo batches their own streams.
  SeededRng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mrfattn
