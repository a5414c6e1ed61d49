#include "mrfattn/mrf.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mrfattn {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

NodeSet::NodeSet(std::vector<Vec> observed, std::vector<Vec> latent)
    : observed_(std::move(observed)), latent_(std::move(latent)) {
  require(size() > 0, "node set is empty");
  dim_ = static_cast<std::size_t>(observed_.empty() ? latent_.front().size() : observed_.front().size());
  require(dim_ >= 1, "node dimension must be at least 1");
  for (const auto* group : {&observed_, &latent_}) {
    for (const Vec& v : *group) {
      require(static_cast<std::size_t>(v.size()) == dim_, "node vectors must share one dimension");
      require(v.allFinite(), "node vector has non-finite entries");
    }
  }
}

void NodeSet::check_means(const Means& mu) const {
  require(mu.size() == latent_.size(), "expected " + std::to_string(latent_.size()) +
                                           " latent means, got " + std::to_string(mu.size()));
  for (const Vec& v : mu) {
    require(static_cast<std::size_t>(v.size()) == dim_, "latent mean has wrong dimension");
    require(v.allFinite(), "latent mean has non-finite entries");
  }
}

void NodeSet::set_latent(Means mu) {
  check_means(mu);
  latent_ = std::move(mu);
}

EdgeVariable::EdgeVariable(std::vector<Edge> candidates, std::vector<double> log_prior,
                           std::size_t bilinear)
    : candidates_(std::move(candidates)), log_prior_(std::move(log_prior)), bilinear_(bilinear) {
  require(!candidates_.empty(), "edge variable needs at least one candidate");
  require(candidates_.size() == log_prior_.size(), "log_prior length must match candidates");
  for (std::size_t a = 0; a < candidates_.size(); ++a) {
    for (std::size_t b = a + 1; b < candidates_.size(); ++b) {
      require(!(candidates_[a] == candidates_[b]), "edge variable candidates must be distinct");
    }
  }
  for (double lp : log_prior_) {
    require(!std::isnan(lp) && lp != std::numeric_limits<double>::infinity(),
            "log_prior entries must be finite or -inf");
  }
  const double total = log_sum_exp(std::span<const double>(log_prior_));
  require(std::abs(total) <= 1e-12, "edge prior is not normalized (log-sum-exp = " +
                                        std::to_string(total) + ")");
}

EdgeVariable EdgeVariable::uniform(std::vector<Edge> candidates, std::size_t bilinear) {
  const double lp = -std::log(static_cast<double>(candidates.size()));
  std::vector<double> log_prior(candidates.size(), lp);
  return EdgeVariable(std::move(candidates), std::move(log_prior), bilinear);
}

EdgeVariable EdgeVariable::weighted(std::vector<Edge> candidates, std::vector<double> log_weights,
                                    std::size_t bilinear) {
  require(!log_weights.empty(), "edge variable needs at least one candidate");
  const double total = log_sum_exp(std::span<const double>(log_weights));
  require(std::isfinite(total), "edge prior weights have no finite mass");
  for (double& w : log_weights) w -= total;
  return EdgeVariable(std::move(candidates), std::move(log_weights), bilinear);
}

PairwiseMRF::PairwiseMRF(NodeSet nodes, std::vector<EdgeVariable> edge_vars,
                         PotentialSpec potentials, double beta)
    : nodes_(std::move(nodes)),
      edge_vars_(std::move(edge_vars)),
      potentials_(std::move(potentials)),
      beta_(beta) {
  require(beta_ > 0.0 && std::isfinite(beta_), "temperature beta must be positive and finite");
  const auto d = static_cast<Eigen::Index>(nodes_.dim());
  for (const Mat& w : potentials_.bilinears) {
    require(w.rows() == d && w.cols() == d, "bilinear edge form must be d x d");
    require(w.allFinite(), "bilinear edge form has non-finite entries");
  }
  for (const EdgeVariable& ev : edge_vars_) {
    require(ev.bilinear() < potentials_.bilinears.size(), "edge variable references missing bilinear form");
    for (const Edge& e : ev.candidates()) {
      require(e.source < nodes_.size() && e.target < nodes_.size(), "candidate edge references invalid node");
    }
  }
}

double edge_potential(const Vec& source, const Vec& target, const Mat& w) {
  return target.dot(w * source);
}

double edge_logit(const PairwiseMRF& mrf, std::size_t ev, std::size_t cand, const Means& mu) {
  require(ev < mrf.edge_vars().size(), "edge variable index out of range");
  const EdgeVariable& var = mrf.edge_vars()[ev];
  require(cand < var.size(), "candidate index out of range");
  const double lp = var.log_prior()[cand];
  if (lp == -std::numeric_limits<double>::infinity()) return lp;
  const Edge& e = var.candidates()[cand];
  const NodeSet& nodes = mrf.nodes();
  return lp + mrf.beta() * edge_potential(nodes.value(e.source, mu), nodes.value(e.target, mu),
                                          mrf.bilinear_of(var));
}

double edge_logit(const PairwiseMRF& mrf, std::size_t ev, std::size_t cand) {
  return edge_logit(mrf, ev, cand, mrf.nodes().latent());
}

Vec edge_logits(const PairwiseMRF& mrf, std::size_t ev, const Means& mu) {
  require(ev < mrf.edge_vars().size(), "edge variable index out of range");
  const std::size_t n = mrf.edge_vars()[ev].size();
  Vec out(static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) out[static_cast<Eigen::Index>(c)] = edge_logit(mrf, ev, c, mu);
  return out;
}

double node_log_potential(const PairwiseMRF& mrf, const Means& mu) {
  if (mrf.potentials().node == NodePotential::none) return 0.0;
  const NodeSet& nodes = mrf.nodes();
  double s = 0.0;
  for (std::size_t v = 0; v < nodes.size(); ++v) s += -0.5 * nodes.value(v, mu).squaredNorm();
  return mrf.beta() * s;
}

double log_joint(const PairwiseMRF& mrf, std::span<const std::size_t> config, const Means& mu) {
  require(config.size() == mrf.edge_vars().size(), "config length must equal number of edge variables");
  mrf.nodes().check_means(mu);
  double s = node_log_potential(mrf, mu);
  for (std::size_t i = 0; i < config.size(); ++i) s += edge_logit(mrf, i, config[i], mu);
  return s;
}

double log_joint(const PairwiseMRF& mrf, std::span<const std::size_t> config) {
  return log_joint(mrf, config, mrf.nodes().latent());
}

std::vector<Vec> rows_of(const Mat& m) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(row_vec(m, i));
  return out;
}

Mat stack_rows(std::span<const Vec> rows) {
  if (rows.empty()) return Mat(0, 0);
  Mat out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

PairwiseMRF cross_attention_mrf(const Mat& queries, const Mat& keys, const Mat& bilinear, double beta) {
  require(queries.rows() >= 1 && keys.rows() >= 1, "cross attention needs at least one query and one key");
  require(queries.cols() == keys.cols(), "queries and keys must share a dimension");
  std::vector<Vec> observed = rows_of(keys);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) observed.push_back(row_vec(queries, i));
  const auto n = static_cast<std::size_t>(keys.rows());
  std::vector<EdgeVariable> evs;
  for (std::size_t i = 0; i < static_cast<std::size_t>(queries.rows()); ++i) {
    std::vector<Edge> cands;
    for (std::size_t j = 0; j < n; ++j) cands.push_back({j, n + i});
    evs.push_back(EdgeVariable::uniform(std::move(cands)));
  }
  return PairwiseMRF(NodeSet(std::move(observed), {}), std::move(evs),
                     PotentialSpec{NodePotential::none, {bilinear}}, beta);
}

PairwiseMRF self_attention_mrf(const Mat& inputs, const Mat& bilinear, double beta) {
  require(inputs.rows() >= 1, "self attention needs at least one node");
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::vector<EdgeVariable> evs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Edge> cands;
    for (std::size_t j = 0; j < n; ++j) cands.push_back({j, i});
    evs.push_back(EdgeVariable::uniform(std::move(cands)));
  }
  return PairwiseMRF(NodeSet(rows_of(inputs), {}), std::move(evs),
                     PotentialSpec{NodePotential::none, {bilinear}}, beta);
}

double inverse_sqrt_temperature(std::size_t dim) {
  require(dim >= 1, "dimension must be at least 1");
  return 1.0 / std::sqrt(static_cast<double>(dim));
}

}  // namespace mrfattn
