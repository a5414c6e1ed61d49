#include "mrfattn/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace mrfattn::oracle {

JointTable enumerate_joint(const PairwiseMRF& mrf, const Means& mu) {
  const auto& evs = mrf.edge_vars();
  std::size_t total = 1;
  for (const EdgeVariable& ev : evs) {
    if (total > kMaxJointConfigs / ev.size()) {
      throw std::length_error("joint table exceeds " + std::to_string(kMaxJointConfigs) + " configurations");
    }
    total *= ev.size();
  }
  JointTable table;
  table.configs.reserve(total);
  table.log_joint.reserve(total);
  std::vector<std::size_t> config(evs.size(), 0);
  for (std::size_t row = 0; row < total; ++row) {
    table.configs.push_back(config);
    table.log_joint.push_back(log_joint(mrf, config, mu));
    // odometer increment
    for (std::size_t k = evs.size(); k-- > 0;) {
      if (++config[k] < evs[k].size()) break;
      config[k] = 0;
    }
  }
  return table;
}

JointTable enumerate_joint(const PairwiseMRF& mrf) { return enumerate_joint(mrf, mrf.nodes().latent()); }

double log_partition(const JointTable& table) {
  return log_sum_exp(std::span<const double>(table.log_joint));
}

EdgePosterior joint_marginals(const PairwiseMRF& mrf, const JointTable& table) {
  const double lz = log_partition(table);
  EdgePosterior post;
  for (const EdgeVariable& ev : mrf.edge_vars()) post.rows.push_back(Vec::Zero(static_cast<Eigen::Index>(ev.size())));
  for (std::size_t r = 0; r < table.configs.size(); ++r) {
    const double w = std::exp(table.log_joint[r] - lz);
    for (std::size_t i = 0; i < post.size(); ++i) post.rows[i][static_cast<Eigen::Index>(table.configs[r][i])] += w;
  }
  return post;
}

Mat gmm_responsibilities(const Mat& points, const Mat& means) {
  if (points.rows() == 0 || means.rows() == 0) throw std::invalid_argument("EM needs points and means");
  if (points.cols() != means.cols()) throw std::invalid_argument("points and means must share a dimension");
  const Eigen::Index n = points.rows(), m = means.rows();
  Mat r(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec log_lik(m);
    for (Eigen::Index i = 0; i < m; ++i) log_lik[i] = -0.5 * (points.row(j) - means.row(i)).squaredNorm();
    r.col(j) = softmax(log_lik);
  }
  return r;
}

Mat gmm_em_step(const Mat& points, const Mat& means) {
  const Mat r = gmm_responsibilities(points, means);
  Mat next(means.rows(), means.cols());
  for (Eigen::Index i = 0; i < means.rows(); ++i) {
    Vec acc = Vec::Zero(means.cols());
    double mass = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
      acc += r(i, j) * points.row(j).transpose();
      mass += r(i, j);
    }
    if (mass > 0.0) {
      next.row(i) = (acc / mass).transpose();
    } else {
      next.row(i) = means.row(i);
    }
  }
  return next;
}

}  // namespace mrfattn::oracle
