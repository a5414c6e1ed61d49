#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mrfattn/mechanisms.hpp"
#include "mrfattn/mrf.hpp"
#include "test_util.hpp"

namespace mrfattn {
namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TEST(EdgeLogit, UniformPriorZeroPotential) {
  const PairwiseMRF mrf(NodeSet({vec2(1, 0), vec2(0, 1), vec2(0, 0)}, {}),
                        {EdgeVariable::uniform({{0, 2}, {1, 2}})},
                        PotentialSpec{NodePotential::none, {Mat::Zero(2, 2)}});
  EXPECT_DOUBLE_EQ(edge_logit(mrf, 0, 0), std::log(0.5));
  EXPECT_DOUBLE_EQ(edge_logit(mrf, 0, 1), std::log(0.5));
}

TEST(EdgeLogit, SingleCandidateIsScaledPotential) {
  const double beta = 2.5;
  Mat w(2, 2);
  w << 1.0, 2.0, -0.5, 3.0;
  const Vec s = vec2(0.3, -1.2), t = vec2(2.0, 0.7);
  const PairwiseMRF mrf(NodeSet({s, t}, {}), {EdgeVariable::uniform({{0, 1}})},
                        PotentialSpec{NodePotential::none, {w}}, beta);
  const double psi = t.dot(w * s);
  EXPECT_DOUBLE_EQ(edge_logit(mrf, 0, 0), beta * psi);
}

TEST(EdgeLogit, HandEvaluatedBilinear) {
  const double beta = 1.7;
  const PairwiseMRF mrf(NodeSet({vec2(1, 0), vec2(0, 1), vec2(5, 5), vec2(1, 0)}, {}),
                        {EdgeVariable::uniform({{0, 3}, {1, 3}, {2, 3}})},
                        PotentialSpec{NodePotential::none, {Mat::Identity(2, 2)}}, beta);
  EXPECT_NEAR(edge_logit(mrf, 0, 0), std::log(1.0 / 3.0) + beta * 1.0, 1e-15);
  EXPECT_THROW(edge_logit(mrf, 0, 3), std::invalid_argument);
  EXPECT_THROW(edge_logit(mrf, 1, 0), std::invalid_argument);
}

TEST(LogJoint, ZeroPotentialsGiveLogPriors) {
  std::vector<EdgeVariable> evs;
  evs.push_back(EdgeVariable::uniform({{0, 3}, {1, 3}}));
  evs.push_back(EdgeVariable::uniform({{0, 4}, {1, 4}, {2, 4}}));
  evs.push_back(EdgeVariable::uniform({{2, 0}}));
  std::vector<Vec> nodes(5, vec2(1, 1));
  const PairwiseMRF mrf(NodeSet(nodes, {}), std::move(evs), PotentialSpec{NodePotential::none, {Mat::Zero(2, 2)}});
  const std::vector<std::size_t> config{1, 2, 0};
  EXPECT_NEAR(log_joint(mrf, config), std::log(0.5) + std::log(1.0 / 3.0), 1e-15);
}

TEST(LogJoint, QuadraticNodeOnly) {
  const double beta = 0.8;
  const PairwiseMRF mrf(NodeSet({vec2(3, 4)}, {}), {}, PotentialSpec{NodePotential::quadratic, {}}, beta);
  EXPECT_DOUBLE_EQ(log_joint(mrf, std::vector<std::size_t>{}), -0.5 * 25.0 * beta);
}

TEST(LogJoint, RandomThreeNodeInstanceMatchesRecomputation) {
  SeededRng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat x = testing::random_mat(rng, 3, 3);
    const Mat w = testing::random_mat(rng, 3, 3);
    const double beta = 0.3 + rng.uniform();
    std::vector<EdgeVariable> evs;
    evs.push_back(EdgeVariable::weighted({{0, 2}, {1, 2}}, {0.3, -1.0}));
    evs.push_back(EdgeVariable::uniform({{1, 0}, {2, 0}, {0, 0}}));
    const PairwiseMRF mrf(NodeSet(rows_of(x), {}), std::move(evs), PotentialSpec{NodePotential::quadratic, {w}}, beta);
    const std::vector<std::size_t> config{1, 2};

    // recompute from scratch with explicit loops
    auto bil = [&](int s, int t) {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) acc += x(t, a) * w(a, b) * x(s, b);
      }
      return acc;
    };
    double node = 0.0;
    for (int v = 0; v < 3; ++v) {
      for (int a = 0; a < 3; ++a) node -= 0.5 * x(v, a) * x(v, a);
    }
    const double lz = std::log(std::exp(0.3) + std::exp(-1.0));
    const double expected = beta * node + (-1.0 - lz) + beta * bil(1, 2) + std::log(1.0 / 3.0) + beta * bil(0, 0);
    EXPECT_NEAR(log_joint(mrf, config), expected, 1e-12);

    // same floating-point order as the documented decomposition
    const double decomposed = node_log_potential(mrf, mrf.nodes().latent()) + edge_logit(mrf, 0, 1) + edge_logit(mrf, 1, 2);
    EXPECT_EQ(log_joint(mrf, config), decomposed);
  }
}

TEST(LogJoint, InvalidConfig) {
  const PairwiseMRF mrf(NodeSet({vec2(1, 0), vec2(0, 1)}, {}), {EdgeVariable::uniform({{0, 1}})},
                        PotentialSpec{NodePotential::none, {Mat::Identity(2, 2)}});
  EXPECT_THROW(log_joint(mrf, std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(log_joint(mrf, std::vector<std::size_t>{1}), std::invalid_argument);
}

TEST(EdgeVariable, PriorValidation) {
  EXPECT_THROW(EdgeVariable({}, {}), std::invalid_argument);
  EXPECT_THROW(EdgeVariable({{0, 1}, {0, 1}}, {std::log(0.5), std::log(0.5)}), std::invalid_argument);
  EXPECT_THROW(EdgeVariable({{0, 1}, {2, 1}}, {0.0, 0.0}), std::invalid_argument);
  EXPECT_NO_THROW(EdgeVariable({{0, 1}, {2, 1}}, {std::log(0.25), std::log(0.75)}));

  const double ninf = -std::numeric_limits<double>::infinity();
  const EdgeVariable masked = EdgeVariable::weighted({{0, 3}, {1, 3}, {2, 3}}, {1.0, ninf, 1.0});
  EXPECT_EQ(masked.log_prior()[1], ninf);
  EXPECT_NEAR(masked.log_prior()[0], std::log(0.5), 1e-15);
  EXPECT_THROW(EdgeVariable::weighted({{0, 1}}, {ninf}), std::invalid_argument);
}

TEST(PairwiseMRF, ConstructionErrors) {
  const NodeSet nodes({vec2(1, 0), vec2(0, 1)}, {});
  EXPECT_THROW(PairwiseMRF(nodes, {EdgeVariable::uniform({{0, 5}})}, PotentialSpec{NodePotential::none, {Mat::Identity(2, 2)}}),
               std::invalid_argument);
  EXPECT_THROW(PairwiseMRF(nodes, {EdgeVariable::uniform({{0, 1}}, 1)}, PotentialSpec{NodePotential::none, {Mat::Identity(2, 2)}}),
               std::invalid_argument);
  EXPECT_THROW(PairwiseMRF(nodes, {}, PotentialSpec{NodePotential::none, {Mat::Identity(3, 3)}}), std::invalid_argument);
  EXPECT_THROW(PairwiseMRF(nodes, {}, PotentialSpec{}, 0.0), std::invalid_argument);
  EXPECT_THROW(NodeSet({vec2(1, 0), Vec::Zero(3)}, {}), std::invalid_argument);
  EXPECT_THROW(NodeSet({vec2(std::nan(""), 0)}, {}), std::invalid_argument);
}

TEST(Builders, PriorsAreNormalizedAndShaped) {
  SeededRng rng(1);
  const Mat q = testing::random_mat(rng, 3, 4), k = testing::random_mat(rng, 5, 4);
  const PairwiseMRF cross = cross_attention_mrf(q, k, Mat::Identity(4, 4));
  ASSERT_EQ(cross.edge_vars().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const EdgeVariable& ev = cross.edge_vars()[i];
    ASSERT_EQ(ev.size(), 5u);
    EXPECT_NEAR(Eigen::Map<const Vec>(ev.log_prior().data(), 5).array().exp().sum(), 1.0, 1e-12);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(ev.candidates()[j].source, j);
      EXPECT_EQ(ev.candidates()[j].target, 5 + i);
    }
  }

  const PairwiseMRF self = self_attention_mrf(k, Mat::Identity(4, 4));
  ASSERT_EQ(self.edge_vars().size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_EQ(self.edge_vars()[i].size(), 5u);
    EXPECT_EQ(self.edge_vars()[i].candidates()[i], (Edge{i, i}));  // self-edge included
  }

  SlotConfig sc;
  sc.inputs = k;
  sc.num_slots = 2;
  sc.w = Mat::Identity(4, 4);
  const PairwiseMRF slot = slot_mrf(sc, testing::random_mat(rng, 2, 4));
  ASSERT_EQ(slot.edge_vars().size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) {
    ASSERT_EQ(slot.edge_vars()[j].size(), 2u);
    for (const Edge& e : slot.edge_vars()[j].candidates()) {
      EXPECT_EQ(e.source, j);
      EXPECT_TRUE(slot.nodes().is_latent(e.target));
    }
  }

  BlockSlotConfig bc;
  bc.slots = sc;
  bc.block_dims = {1, 3};
  bc.memories = {testing::random_mat(rng, 2, 1), testing::random_mat(rng, 3, 3)};
  const PairwiseMRF block = block_slot_mrf(bc, testing::random_mat(rng, 2, 4));
  // 5 slot variables + 2 slots x 2 blocks memory variables
  ASSERT_EQ(block.edge_vars().size(), 9u);
  EXPECT_EQ(block.edge_vars()[5].size(), 2u);
  EXPECT_EQ(block.edge_vars()[6].size(), 3u);
}

TEST(Builders, InverseSqrtTemperature) {
  EXPECT_DOUBLE_EQ(inverse_sqrt_temperature(16), 0.25);
  EXPECT_THROW(inverse_sqrt_temperature(0), std::invalid_argument);
}

}  // namespace
}  // namespace mrfattn
