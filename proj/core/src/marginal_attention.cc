#include "mrfattn/marginal_attention.hpp"

#include <cmath>
#include <limits>

namespace mrfattn {

EdgePosterior edge_posterior(const PairwiseMRF& mrf, const Means& mu) {
  mrf.nodes().check_means(mu);
  EdgePosterior post;
  post.rows.reserve(mrf.edge_vars().size());
  for (std::size_t i = 0; i < mrf.edge_vars().size(); ++i) {
    post.rows.push_back(softmax(edge_logits(mrf, i, mu)));
  }
  return post;
}

EdgePosterior edge_posterior(const PairwiseMRF& mrf) { return edge_posterior(mrf, mrf.nodes().latent()); }

Vec edge_value(const PairwiseMRF& mrf, const ValueSpec& values, const Edge& e) {
  return values.w_v * mrf.nodes().value(e.source);
}

std::vector<Vec> attend(const PairwiseMRF& mrf, const ValueSpec& values) {
  if (values.w_v.cols() != static_cast<Eigen::Index>(mrf.nodes().dim())) {
    throw std::invalid_argument("value map W_V must have d columns");
  }
  if (!values.w_v.allFinite()) throw std::invalid_argument("value map W_V has non-finite entries");
  const EdgePosterior post = edge_posterior(mrf);
  std::vector<Vec> out;
  out.reserve(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) {
    const auto& cands = mrf.edge_vars()[i].candidates();
    Vec acc = Vec::Zero(values.w_v.rows());
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double p = post[i][static_cast<Eigen::Index>(c)];
      if (p == 0.0) continue;
      acc += p * edge_value(mrf, values, cands[c]);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

namespace {

void check_shapes(const Mat& queries, const Mat& keys, const Mat& w_q, const Mat& w_k) {
  if (queries.rows() < 1 || keys.rows() < 1) throw std::invalid_argument("attention needs at least one query and key");
  if (queries.cols() != keys.cols()) throw std::invalid_argument("queries and keys must share a dimension");
  if (w_q.cols() != queries.cols() || w_k.cols() != keys.cols() || w_q.rows() != w_k.rows()) {
    throw std::invalid_argument("W_Q and W_K must both be d_k x d");
  }
}

}  // namespace

Mat closed_form_attention_weights(const Mat& queries, const Mat& keys, const Mat& w_q, const Mat& w_k,
                                  double beta) {
  check_shapes(queries, keys, w_q, w_k);
  if (!(beta > 0.0)) throw std::invalid_argument("softmax temperature beta must be positive");
  const Eigen::Index m = queries.rows(), n = keys.rows(), d = queries.cols(), dk = w_q.rows();

  // projected queries and keys, explicit loops
  Mat pq(m, dk), pk(n, dk);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index a = 0; a < dk; ++a) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) s += w_q(a, b) * queries(i, b);
      pq(i, a) = s;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < dk; ++a) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) s += w_k(a, b) * keys(j, b);
      pk(j, a) = s;
    }
  }

  Mat weights(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index a = 0; a < dk; ++a) s += pq(i, a) * pk(j, a);
      weights(i, j) = beta * s;
      mx = std::max(mx, weights(i, j));
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      weights(i, j) = std::exp(weights(i, j) - mx);
      z += weights(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) weights(i, j) /= z;
  }
  return weights;
}

Mat closed_form_cross_attention(const Mat& queries, const Mat& keys, const Mat& w_q, const Mat& w_k,
                                const Mat& w_v, double beta) {
  if (w_v.cols() != keys.cols()) throw std::invalid_argument("W_V must have d columns");
  const Mat weights = closed_form_attention_weights(queries, keys, w_q, w_k, beta);
  const Eigen::Index m = queries.rows(), n = keys.rows(), d = keys.cols(), dout = w_v.rows();

  Mat values(n, dout);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < dout; ++a) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) s += w_v(a, b) * keys(j, b);
      values(j, a) = s;
    }
  }
  Mat out = Mat::Zero(m, dout);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index a = 0; a < dout; ++a) out(i, a) += weights(i, j) * values(j, a);
    }
  }
  return out;
}

Mat closed_form_self_attention(const Mat& inputs, const Mat& w_q, const Mat& w_k, const Mat& w_v,
                               double beta) {
  return closed_form_cross_attention(inputs, inputs, w_q, w_k, w_v, beta);
}

}  // namespace mrfattn
