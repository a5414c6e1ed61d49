#pragma once

#include <string>
#include <vector>

#include "mrfattn/marginal_attention.hpp"

namespace mrfattn {

// Approximations to the edge posterior and their information loss.

/// Shannon entropy in nats per edge variable, with 0 ln 0 = 0.
std::vector<double> entropy(const EdgePosterior& p);

/// D_KL[q || p] = sum_c q_c ln(q_c / p_c) per edge variable, with 0 ln 0 = 0.
/// An edge variable where q puts mass on a candidate with p = 0 gets +inf.
std::vector<double> kl_information_loss(const EdgePosterior& p, const EdgePosterior& q);

/// Keeps the k most probable candidates of every edge variable and
/// renormalizes. Ties go to the lower candidate index.
EdgePosterior topk_approx(const EdgePosterior& p, std::size_t k);

/// One independent draw per edge variable.
std::vector<std::size_t> sample_config(const EdgePosterior& p, SeededRng& rng);

struct HardSample {
  std::vector<std::size_t> config;
  std::vector<Vec> outputs;  // W_V x_source of the sampled edge, per edge variable
};

HardSample hard_sample(const PairwiseMRF& mrf, const EdgePosterior& p, const ValueSpec& values,
                       SeededRng& rng);

/// Point-mass posterior on `config`.
EdgePosterior point_mass(const EdgePosterior& shape, const std::vector<std::size_t>& config);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo mean of -ln p(phi*) over draws phi* ~ p, per edge variable. Its
/// expectation is the entropy of p.
std::vector<Estimate> expected_hard_loss(const EdgePosterior& p, std::size_t num_samples, SeededRng& rng);

struct ApproxMethod {
  enum class Kind { soft, hard, topk } kind = Kind::soft;
  std::size_t k = 0;  // topk only

  std::string name() const;
  /// "soft", "hard", or "top<k>".
  static ApproxMethod parse(const std::string& s);
};

struct MethodReport {
  ApproxMethod method;
  /// soft/topk: D_KL[q || p]. hard: Monte-Carlo mean of -ln p(phi*).
  std::vector<double> kl_per_edge_var;
  /// soft/topk: |approx output - soft output| (Frobenius over all rows).
  /// hard: Monte-Carlo mean of that norm over the drawn samples.
  double output_error = 0.0;
  /// Candidate potential evaluations plus value evaluations.
  std::size_t cost_proxy = 0;
};

struct ApproxReport {
  std::vector<double> entropy_p;
  std::vector<MethodReport> methods;
};

/// Soft attention is the reference; each method is scored against it. Hard
/// attention draws `num_samples` configurations from `rng`.
ApproxReport compare(const PairwiseMRF& mrf, const ValueSpec& values, const std::vector<ApproxMethod>& methods,
                     SeededRng& rng, std::size_t num_samples = 1);

/// CSV rows "edge_var,method,kl,entropy,output_error,cost".
void write_report_csv(std::ostream& os, const ApproxReport& report);

}  // namespace mrfattn
