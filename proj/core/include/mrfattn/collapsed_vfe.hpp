#pragma once

#include <iosfwd>
#include <vector>

#include "mrfattn/marginal_attention.hpp"
#include "mrfattn/mrf.hpp"

namespace mrfattn {

/// How a fixed-point step turns posterior-weighted edge gradients into means.
enum class FixedPointNormalization {
  raw_sum,        // mu_j = sum_i sum_c p_ic dg_ic/dmu_j, the plain CCCP update
  weighted_mean,  // raw_sum divided by the posterior mass latent j receives
};

struct CCCPState {
  Means mu;
  int iteration = 0;
  /// F at the initial means followed by F after every step.
  std::vector<double> f_trace;
  /// Infinity norm of dF/dmu at the same points as f_trace.
  std::vector<double> grad_norm_trace;
  bool converged = false;
  double tol = 1e-8;
  int max_iter = 100;
};

/// Collapsed free energy under the zeroth-order Laplace collapse,
///   F(mu) = -sum_i lse_c(edge_logit(i, c; mu)) - sum_v beta psi_v(mu).
/// Equal to -ln sum_E p(x, mu, E) with the partition function dropped.
double free_energy(const PairwiseMRF& mrf, const Means& mu);

/// dF/dmu_j = -sum_i sum_c p_ic beta dpsi_ic/dmu_j - beta dpsi_v/dmu_j.
Means free_energy_grad(const PairwiseMRF& mrf, const Means& mu);

/// One synchronous fixed-point update of every latent mean. The softmax
/// includes the log-prior and beta; the edge gradient outside it does not
/// carry beta. Requires quadratic node potentials and candidate edges with at
/// most one latent endpoint (so the edge part of F is concave in mu).
///
/// In raw_sum mode F(step(mu)) <= F(mu). In weighted_mean mode a latent that
/// receives no posterior mass keeps its current mean.
Means cccp_step(const PairwiseMRF& mrf, const Means& mu, FixedPointNormalization norm);

/// Iterates cccp_step until |F_t - F_{t-1}| < tol or max_iter steps. Throws
/// NumericError if F or mu become non-finite.
CCCPState solve(const PairwiseMRF& mrf, Means mu0, FixedPointNormalization norm, double tol = 1e-8,
                int max_iter = 100);

double max_abs(const Means& v);

/// CSV rows "iteration,F,grad_norm", no header.
void write_trace_csv(std::ostream& os, const CCCPState& state);

}  // namespace mrfattn
