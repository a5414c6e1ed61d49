#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mrfattn/approx.hpp"
#include "test_util.hpp"

namespace mrfattn {
namespace {

using testing::random_mat;
using testing::uniform_int;

EdgePosterior rows(std::initializer_list<std::initializer_list<double>> list) {
  EdgePosterior p;
  for (const auto& r : list) {
    Vec v(static_cast<Eigen::Index>(r.size()));
    Eigen::Index k = 0;
    for (double x : r) v[k++] = x;
    p.rows.push_back(v);
  }
  return p;
}

EdgePosterior random_posterior(SeededRng& rng, int m, int max_n, double scale = 1.5) {
  EdgePosterior p;
  for (int i = 0; i < m; ++i) p.rows.push_back(softmax(testing::random_vec(rng, uniform_int(rng, 1, max_n), scale)));
  return p;
}

TEST(Entropy, Examples) {
  const auto h = entropy(rows({{1.0, 0.0}, {0.25, 0.25, 0.25, 0.25}, {0.7310585786300049, 0.2689414213699951}}));
  EXPECT_EQ(h[0], 0.0);
  EXPECT_NEAR(h[1], std::log(4.0), 1e-15);
  EXPECT_NEAR(h[2], 0.5822031088882179, 1e-15);
}

TEST(Entropy, DecreasesWithBeta) {
  SeededRng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vec logits = testing::random_vec(rng, uniform_int(rng, 2, 8));
    double prev = std::log(static_cast<double>(logits.size())) + 1e-12;
    for (double beta = 0.25; beta <= 64.0; beta *= 2.0) {
      const double h = entropy(EdgePosterior{{softmax(logits, beta)}})[0];
      EXPECT_LT(h, prev);
      prev = h;
    }
  }
}

TEST(KL, Examples) {
  const EdgePosterior p = rows({{0.7310585786300049, 0.2689414213699951}});
  EXPECT_NEAR(kl_information_loss(p, p)[0], 0.0, 1e-12);
  EXPECT_NEAR(kl_information_loss(p, rows({{1.0, 0.0}}))[0], 0.3132616875182228, 1e-15);

  const EdgePosterior u = rows({{0.2, 0.2, 0.2, 0.2, 0.2}});
  EXPECT_NEAR(kl_information_loss(u, rows({{0.0, 0.0, 1.0, 0.0, 0.0}}))[0], std::log(5.0), 1e-15);

  EXPECT_EQ(kl_information_loss(rows({{1.0, 0.0}}), rows({{0.5, 0.5}}))[0], std::numeric_limits<double>::infinity());
  EXPECT_THROW(kl_information_loss(p, rows({{1.0}})), std::invalid_argument);
}

TEST(KL, NonNegativeAndZeroOnlyAtEquality) {
  SeededRng rng(2);
  for (int t = 0; t < 200; ++t) {
    const EdgePosterior p = random_posterior(rng, 3, 6);
    EdgePosterior q;
    for (const Vec& r : p.rows) q.rows.push_back(softmax(testing::random_vec(rng, r.size())));
    for (double kl : kl_information_loss(p, q)) EXPECT_GE(kl, -1e-12);
    for (double kl : kl_information_loss(p, p)) EXPECT_NEAR(kl, 0.0, 1e-12);
  }
}

TEST(TopK, Examples) {
  const EdgePosterior p = rows({{0.5, 0.3, 0.2}});
  const EdgePosterior q2 = topk_approx(p, 2);
  EXPECT_NEAR(q2[0][0], 0.625, 1e-15);
  EXPECT_NEAR(q2[0][1], 0.375, 1e-15);
  EXPECT_EQ(q2[0][2], 0.0);
  // D_KL[q || p] = -ln(0.5 + 0.3) for a renormalized truncation
  EXPECT_NEAR(kl_information_loss(p, q2)[0], 0.22314355131420976, 1e-15);

  const EdgePosterior q1 = topk_approx(p, 1);
  EXPECT_EQ(q1[0][0], 1.0);
  EXPECT_NEAR(kl_information_loss(p, q1)[0], -std::log(0.5), 1e-15);

  EXPECT_EQ(topk_approx(p, 3)[0], p[0]);
  EXPECT_EQ(kl_information_loss(p, topk_approx(p, 3))[0], 0.0);
  EXPECT_THROW(topk_approx(p, 0), std::invalid_argument);
  EXPECT_THROW(topk_approx(p, 4), std::invalid_argument);
}

TEST(TopK, TiesGoToLowerIndex) {
  const EdgePosterior q = topk_approx(rows({{0.2, 0.4, 0.4}}), 1);
  EXPECT_EQ(q[0][1], 1.0);
  EXPECT_EQ(q[0][2], 0.0);
}

TEST(TopK, KlNonIncreasingInK) {
  SeededRng rng(3);
  for (int t = 0; t < 100; ++t) {
    const EdgePosterior p = random_posterior(rng, 1, 10);
    const auto n = static_cast<std::size_t>(p[0].size());
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= n; ++k) {
      const double kl = kl_information_loss(p, topk_approx(p, k))[0];
      EXPECT_GE(kl, -1e-12);
      EXPECT_LE(kl, prev + 1e-12);
      prev = kl;
    }
    EXPECT_NEAR(prev, 0.0, 1e-12);
  }
}

TEST(HardSample, DegenerateAndFrequencies) {
  SeededRng rng(4);
  const EdgePosterior one = rows({{1.0}});
  for (int t = 0; t < 10; ++t) EXPECT_EQ(sample_config(one, rng)[0], 0u);

  const EdgePosterior half = rows({{0.5, 0.5}});
  const int n = 100000;
  int first = 0;
  for (int t = 0; t < n; ++t) first += sample_config(half, rng)[0] == 0;
  const double sigma = std::sqrt(0.25 / n);
  EXPECT_LE(std::abs(first / static_cast<double>(n) - 0.5), 3.0 * sigma);
}

TEST(HardSample, SameSeedSameSequence) {
  SeededRng rng(5);
  const EdgePosterior p = random_posterior(rng, 4, 5);
  SeededRng a(99), b(99);
  for (int t = 0; t < 100; ++t) EXPECT_EQ(sample_config(p, a), sample_config(p, b));
}

TEST(ExpectedHardLoss, Examples) {
  SeededRng rng(6);
  const auto degenerate = expected_hard_loss(rows({{1.0, 0.0}}), 1000, rng);
  EXPECT_EQ(degenerate[0].mean, 0.0);
  EXPECT_EQ(degenerate[0].std_error, 0.0);

  const auto est = expected_hard_loss(rows({{0.25, 0.25, 0.25, 0.25}, {0.9, 0.1}}), 100000, rng);
  EXPECT_NEAR(est[0].mean, std::log(4.0), 1e-10);  // every draw costs ln 4
  EXPECT_NEAR(0.3250829733914482, -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-15);
  EXPECT_LE(std::abs(est[1].mean - 0.3250829733914482), 3.0 * est[1].std_error);
  EXPECT_THROW(expected_hard_loss(rows({{1.0}}), 0, rng), std::invalid_argument);
}

TEST(ExpectedHardLoss, BracketsEntropy) {
  SeededRng rng(7);
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    const EdgePosterior p = random_posterior(rng, 1, 6);
    const double h = entropy(p)[0];
    const Estimate e = expected_hard_loss(p, 100000, rng)[0];
    inside += std::abs(e.mean - h) <= 3.0 * e.std_error + 1e-12;
  }
  // 3 sigma holds with probability 0.997 per instance
  EXPECT_GE(inside, 98);
}

TEST(HardSample, OutputIsUnbiased) {
  SeededRng rng(8);
  const Mat k = random_mat(rng, 4, 3), q = random_mat(rng, 2, 3), wv = random_mat(rng, 2, 3);
  const PairwiseMRF mrf = cross_attention_mrf(q, k, Mat::Identity(3, 3));
  const ValueSpec values{wv};
  const EdgePosterior p = edge_posterior(mrf);
  const auto soft = attend(mrf, values);
  const int n = 100000;
  std::vector<Vec> sum(2, Vec::Zero(2)), sum_sq(2, Vec::Zero(2));
  for (int t = 0; t < n; ++t) {
    const HardSample s = hard_sample(mrf, p, values, rng);
    for (int i = 0; i < 2; ++i) {
      sum[i] += s.outputs[i];
      sum_sq[i] += s.outputs[i].cwiseProduct(s.outputs[i]);
    }
  }
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < 2; ++a) {
      const double mean = sum[i][a] / n;
      const double se = std::sqrt((sum_sq[i][a] / n - mean * mean) / n);
      EXPECT_LE(std::abs(mean - soft[i][a]), 3.0 * se);
    }
  }
}

TEST(ApproxMethod, Parse) {
  EXPECT_EQ(ApproxMethod::parse("soft").kind, ApproxMethod::Kind::soft);
  EXPECT_EQ(ApproxMethod::parse("hard").kind, ApproxMethod::Kind::hard);
  const ApproxMethod t = ApproxMethod::parse("top12");
  EXPECT_EQ(t.kind, ApproxMethod::Kind::topk);
  EXPECT_EQ(t.k, 12u);
  EXPECT_EQ(t.name(), "top12");
  EXPECT_THROW(ApproxMethod::parse("top"), std::invalid_argument);
  EXPECT_THROW(ApproxMethod::parse("topx"), std::invalid_argument);
  EXPECT_THROW(ApproxMethod::parse("linear"), std::invalid_argument);
}

TEST(Compare, SoftIsExactAndTopKMatchesDirectKl) {
  SeededRng rng(9);
  const Mat k = random_mat(rng, 5, 3), q = random_mat(rng, 3, 3);
  const PairwiseMRF mrf = cross_attention_mrf(q, k, Mat::Identity(3, 3));
  const ValueSpec values{Mat::Identity(3, 3)};
  const auto report = compare(mrf, values, {ApproxMethod::parse("soft"), ApproxMethod::parse("top2")}, rng);
  EXPECT_EQ(report.methods[0].output_error, 0.0);
  for (double kl : report.methods[0].kl_per_edge_var) EXPECT_EQ(kl, 0.0);
  const EdgePosterior p = edge_posterior(mrf);
  EXPECT_EQ(report.methods[1].kl_per_edge_var, kl_information_loss(p, topk_approx(p, 2)));
  EXPECT_EQ(report.entropy_p, entropy(p));
  EXPECT_EQ(report.methods[0].cost_proxy, 30u);  // 15 potentials + 15 values
  EXPECT_EQ(report.methods[1].cost_proxy, 21u);  // 15 potentials + 3 x 2 values
}

TEST(Compare, HardErrorShrinksWithBeta) {
  SeededRng rng(10);
  const Mat k = random_mat(rng, 6, 4), q = random_mat(rng, 3, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const PairwiseMRF mrf = cross_attention_mrf(q, k, Mat::Identity(4, 4), beta);
    SeededRng draws(11);
    const auto report = compare(mrf, ValueSpec{Mat::Identity(4, 4)}, {ApproxMethod::parse("hard")}, draws, 20000);
    EXPECT_LT(report.methods[0].output_error, prev) << beta;
    prev = report.methods[0].output_error;
  }
}

TEST(Compare, ReportCsv) {
  const PairwiseMRF mrf = cross_attention_mrf(Mat::Identity(1, 2), Mat::Identity(2, 2), Mat::Zero(2, 2));
  SeededRng rng(12);
  std::ostringstream os;
  write_report_csv(os, compare(mrf, ValueSpec{Mat::Identity(2, 2)}, {ApproxMethod::parse("top1")}, rng));
  // q = [1, 0], p = [0.5, 0.5]; output (1, 0) vs soft (0.5, 0.5)
  EXPECT_EQ(os.str(), "0,top1,0.69314718055994529,0.69314718055994529,0.70710678118654757,3\n");
}

}  // namespace
}  // namespace mrfattn
