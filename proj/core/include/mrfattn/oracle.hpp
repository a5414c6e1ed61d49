#pragma once

#include <vector>

#include "mrfattn/marginal_attention.hpp"
#include "mrfattn/mrf.hpp"

namespace mrfattn::oracle {

// Brute-force references. Nothing here uses the factorized structure of the
// prior: the joint is enumerated configuration by configuration.

inline constexpr std::size_t kMaxJointConfigs = 1'000'000;

struct JointTable {
  std::vector<std::vector<std::size_t>> configs;  // lexicographic, last edge variable fastest
  std::vector<double> log_joint;
};

/// Every joint edge configuration with its unnormalized log-joint. Throws
/// std::length_error beyond kMaxJointConfigs rows.
JointTable enumerate_joint(const PairwiseMRF& mrf);
JointTable enumerate_joint(const PairwiseMRF& mrf, const Means& mu);

/// ln sum over the whole table.
double log_partition(const JointTable& table);

/// -ln sum_E p(x, mu, E) from the table.
inline double joint_free_energy(const JointTable& table) { return -log_partition(table); }

/// Per edge variable marginals of the normalized table.
EdgePosterior joint_marginals(const PairwiseMRF& mrf, const JointTable& table);

/// One EM step for a mixture of unit-variance isotropic Gaussians with uniform
/// mixing weights. `points` is n x d, `means` m x d.
Mat gmm_em_step(const Mat& points, const Mat& means);

/// m x n responsibilities of the same model.
Mat gmm_responsibilities(const Mat& points, const Mat& means);

}  // namespace mrfattn::oracle
