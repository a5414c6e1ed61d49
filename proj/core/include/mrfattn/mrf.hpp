#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrfattn/numerics.hpp"

namespace mrfattn {

/// Directed candidate edge between two node indices of a NodeSet.
struct Edge {
  std::size_t source;
  std::size_t target;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Variational means, one vector per latent node, in latent order.
using Means = std::vector<Vec>;

/// Observed and latent node values sharing one dimension.
///
/// Observed nodes occupy indices [0, num_observed()), latent nodes follow at
/// [num_observed(), size()). The stored latent values are the means used when
/// no explicit Means are passed to an evaluation.
class NodeSet {
 public:
  NodeSet() = default;
  NodeSet(std::vector<Vec> observed, std::vector<Vec> latent);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return observed_.size() + latent_.size(); }
  std::size_t num_observed() const { return observed_.size(); }
  std::size_t num_latent() const { return latent_.size(); }

  bool is_latent(std::size_t node) const { return node >= observed_.size(); }
  std::size_t latent_slot(std::size_t node) const { return node - observed_.size(); }
  std::size_t latent_node(std::size_t slot) const { return observed_.size() + slot; }

  const std::vector<Vec>& observed() const { return observed_; }
  const Means& latent() const { return latent_; }
  void set_latent(Means mu);

  /// Value of `node`, reading latent nodes from `mu`.
  const Vec& value(std::size_t node, const Means& mu) const {
    return is_latent(node) ? mu[latent_slot(node)] : observed_[node];
  }
  const Vec& value(std::size_t node) const { return value(node, latent_); }

  /// Throws std::invalid_argument unless `mu` has one finite vector of size
  /// dim() per latent node.
  void check_means(const Means& mu) const;

 private:
  std::vector<Vec> observed_;
  Means latent_;
  std::size_t dim_ = 0;
};

/// One latent categorical choice among candidate edges, with a normalized
/// log-prior. A log-prior entry of -inf masks that candidate.
class EdgeVariable {
 public:
  /// Validates that exp(log_prior) sums to 1 within 1e-12.
  EdgeVariable(std::vector<Edge> candidates, std::vector<double> log_prior,
               std::size_t bilinear = 0);

  static EdgeVariable uniform(std::vector<Edge> candidates, std::size_t bilinear = 0);
  /// Normalizes arbitrary log-weights (-inf allowed) into a prior.
  static EdgeVariable weighted(std::vector<Edge> candidates, std::vector<double> log_weights,
                               std::size_t bilinear = 0);

  std::size_t size() const { return candidates_.size(); }
  const std::vector<Edge>& candidates() const { return candidates_; }
  const std::vector<double>& log_prior() const { return log_prior_; }
  /// Index into PotentialSpec::bilinears of the form used by this variable.
  std::size_t bilinear() const { return bilinear_; }

 private:
  std::vector<Edge> candidates_;
  std::vector<double> log_prior_;
  std::size_t bilinear_;
};

enum class NodePotential {
  none,       // psi_v = 0
  quadratic,  // psi_v(x) = -1/2 |x|^2
};

/// Node potential kind plus the bilinear edge forms psi_e(x_s, x_t) = x_t' W x_s.
/// bilinears[0] is the default form; edge variables may select another.
struct PotentialSpec {
  NodePotential node = NodePotential::none;
  std::vector<Mat> bilinears;
};

/// Pairwise MRF with a factorized structural prior over its edge set.
///
/// The log-joint is unnormalized: the partition function never enters any
/// computed quantity (posteriors, free-energy differences, gradients).
class PairwiseMRF {
 public:
  PairwiseMRF(NodeSet nodes, std::vector<EdgeVariable> edge_vars, PotentialSpec potentials,
              double beta = 1.0);

  const NodeSet& nodes() const { return nodes_; }
  NodeSet& mutable_nodes() { return nodes_; }
  const std::vector<EdgeVariable>& edge_vars() const { return edge_vars_; }
  const PotentialSpec& potentials() const { return potentials_; }
  double beta() const { return beta_; }

  const Mat& bilinear_of(const EdgeVariable& ev) const { return potentials_.bilinears[ev.bilinear()]; }

 private:
  NodeSet nodes_;
  std::vector<EdgeVariable> edge_vars_;
  PotentialSpec potentials_;
  double beta_;
};

/// x_t' W x_s.
double edge_potential(const Vec& source, const Vec& target, const Mat& w);

/// log_prior[cand] + beta * psi_e for candidate `cand` of edge variable `ev`.
double edge_logit(const PairwiseMRF& mrf, std::size_t ev, std::size_t cand);
double edge_logit(const PairwiseMRF& mrf, std::size_t ev, std::size_t cand, const Means& mu);

/// All candidate logits of one edge variable.
Vec edge_logits(const PairwiseMRF& mrf, std::size_t ev, const Means& mu);

/// sum_v beta * psi_v over every node (observed and latent).
double node_log_potential(const PairwiseMRF& mrf, const Means& mu);

/// Unnormalized ln p(x, E) for one candidate choice per edge variable:
/// node term first, then edge_logit for each edge variable in index order.
double log_joint(const PairwiseMRF& mrf, std::span<const std::size_t> config);
double log_joint(const PairwiseMRF& mrf, std::span<const std::size_t> config, const Means& mu);

// Builders for the named structural priors. Point sets are matrices with one
// point per row; `bilinear` is the combined form W = W_Q' W_K.

/// Keys at [0, n), queries at [n, n + m); query i chooses among keys.
PairwiseMRF cross_attention_mrf(const Mat& queries, const Mat& keys, const Mat& bilinear,
                                double beta = 1.0);
/// Node i chooses among all n nodes, itself included.
PairwiseMRF self_attention_mrf(const Mat& inputs, const Mat& bilinear, double beta = 1.0);

/// beta = 1/sqrt(d), the usual scaled dot-product temperature.
double inverse_sqrt_temperature(std::size_t dim);

std::vector<Vec> rows_of(const Mat& m);
Mat stack_rows(std::span<const Vec> rows);

}  // namespace mrfattn
