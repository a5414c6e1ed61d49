#pragma once

#include <vector>

#include "mrfattn/mrf.hpp"

namespace mrfattn {

/// Per edge variable, the posterior over its candidates: one row of the
/// attention matrix each.
struct EdgePosterior {
  std::vector<Vec> rows;

  std::size_t size() const { return rows.size(); }
  const Vec& operator[](std::size_t i) const { return rows[i]; }
};

/// Linear value map applied to the source node of the chosen edge.
struct ValueSpec {
  Mat w_v;  // d_out x d
};

/// Exact factorized posterior: row i = softmax over candidates of edge_logit(i, .).
EdgePosterior edge_posterior(const PairwiseMRF& mrf);
EdgePosterior edge_posterior(const PairwiseMRF& mrf, const Means& mu);

/// W_V x_source for a candidate edge.
Vec edge_value(const PairwiseMRF& mrf, const ValueSpec& values, const Edge& e);

/// Posterior expectation of the value per edge variable. Rows are evaluated in
/// edge-variable order and candidates in candidate order.
std::vector<Vec> attend(const PairwiseMRF& mrf, const ValueSpec& values);

/// Reference attention with explicit loops. `queries` is m x d, `keys` n x d,
/// W_Q and W_K are d_k x d, W_V is d_out x d. Row i of the result is
/// sum_j softmax_j(beta * q_i' W_Q' W_K k_j) W_V k_j.
Mat closed_form_cross_attention(const Mat& queries, const Mat& keys, const Mat& w_q, const Mat& w_k,
                                const Mat& w_v, double beta);

/// closed_form_cross_attention with queries = keys = inputs.
Mat closed_form_self_attention(const Mat& inputs, const Mat& w_q, const Mat& w_k, const Mat& w_v,
                               double beta);

/// The m x n weight matrix used by closed_form_cross_attention.
Mat closed_form_attention_weights(const Mat& queries, const Mat& keys, const Mat& w_q, const Mat& w_k,
                                  double beta);

}  // namespace mrfattn
