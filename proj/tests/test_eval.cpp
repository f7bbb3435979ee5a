#include <gtest/gtest.h>

#include <cmath>

#include "nmm/error.hpp"
#include "nmm/eval.hpp"
#include "support.hpp"

namespace nmm {
namespace {

double brute_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / static_cast<double>(pos.size() * neg.size());
}

std::vector<double> draws(std::size_t n, testing::Rng& rng, int levels = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = levels > 0 ? std::floor(u(rng) * levels) : u(rng);
  return v;
}

TEST(Auc, Extremes) {
  EXPECT_EQ(auc({0.9, 0.8, 0.7}, {0.1, 0.2}), 1.0);
  EXPECT_EQ(auc({0.1}, {0.2, 0.3}), 0.0);
  EXPECT_EQ(auc({0.5, 0.5}, {0.5, 0.5, 0.5}), 0.5);
  EXPECT_THROW(auc({}, {0.1}), ContractViolation);
  EXPECT_THROW(auc({0.1}, {}), ContractViolation);
}

TEST(Auc, MatchesBruteForce) {
  testing::Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto pos = draws(5, rng), neg = draws(5, rng);
    EXPECT_NEAR(auc(pos, neg), brute_auc(pos, neg), 1e-15);
    // Heavy ties.
    const auto tp = draws(7, rng, 3), tn = draws(4, rng, 3);
    EXPECT_NEAR(auc(tp, tn), brute_auc(tp, tn), 1e-15);
  }
}

TEST(Auc, MonotoneInvarianceAndComplement) {
  testing::Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    auto pos = draws(20, rng), neg = draws(30, rng, t % 2 ? 5 : 0);
    const double base = auc(pos, neg);
    EXPECT_NEAR(auc(neg, pos), 1.0 - base, 1e-12);
    for (double& x : pos) x = std::exp(3 * x) - 7;
    for (double& x : neg) x = std::exp(3 * x) - 7;
    EXPECT_NEAR(auc(pos, neg), base, 1e-15);
  }
}

TEST(MultilabelMetrics, PerfectAndInverted) {
  const LabelMatrix truth = {{true, false, true}, {false, false, true}};
  const auto same = multilabel_metrics(truth, truth);
  EXPECT_EQ(same.ji, 1.0);
  EXPECT_EQ(same.hl, 0.0);
  EXPECT_EQ(same.f1, 1.0);
  LabelMatrix inverted = truth;
  for (auto& row : inverted) row.flip();
  EXPECT_EQ(multilabel_metrics(inverted, truth).hl, 1.0);
  EXPECT_EQ(multilabel_metrics({{false, false}}, {{false, false}}).ji, 1.0);
  EXPECT_THROW(multilabel_metrics({{true}}, {{true, false}}), ContractViolation);
}

TEST(MultilabelMetrics, MatchesDefinitionsByBruteForce) {
  testing::Rng rng(3);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 200; ++t) {
    LabelMatrix pred(3, std::vector<bool>(4)), truth(3, std::vector<bool>(4));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        pred[i][j] = coin(rng);
        truth[i][j] = coin(rng);
      }
    double ji = 0, mismatch = 0, tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < 3; ++i) {
      double inter = 0, uni = 0;
      for (int j = 0; j < 4; ++j) {
        inter += pred[i][j] && truth[i][j];
        uni += pred[i][j] || truth[i][j];
        mismatch += pred[i][j] != truth[i][j];
        tp += pred[i][j] && truth[i][j];
        fp += pred[i][j] && !truth[i][j];
        fn += !pred[i][j] && truth[i][j];
      }
      ji += uni == 0 ? 1.0 : inter / uni;
    }
    const double f1 = (2 * tp + fp + fn) == 0 ? 1.0 : 2 * tp / (2 * tp + fp + fn);
    const auto m = multilabel_metrics(pred, truth);
    EXPECT_NEAR(m.ji, ji / 3, 1e-15);
    EXPECT_NEAR(m.hl, mismatch / 12, 1e-15);
    EXPECT_NEAR(m.f1, f1, 1e-15);
    for (double v : {m.ji, m.hl, m.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

// Two Gaussian blobs, far apart, with class = blob.
struct Blobs {
  Matrix x;
  std::vector<std::vector<int>> labels;
};

Blobs blobs(std::size_t n, std::uint64_t seed) {
  testing::Rng rng(seed);
  Blobs b{Matrix(static_cast<Eigen::Index>(n), 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    Vector v = testing::gaussian_vector(3, rng) * 0.3;
    v(0) += c ? 2.0 : -2.0;
    b.x.row(static_cast<Eigen::Index>(i)) = v.transpose();
    b.labels.push_back({c});
  }
  return b;
}

TEST(Classify, SeparableDataIsLearned) {
  const Blobs b = blobs(200, 4);
  const ClassifyResult r = classify(b.x, b.labels, 2, 1);
  EXPECT_GT(r.train_accuracy, 0.95);
  EXPECT_EQ(r.test_nodes.size(), 40u);
  EXPECT_EQ(r.train_nodes.size(), 160u);
  EXPECT_GT(multilabel_metrics(r.test_pred, r.test_truth).ji, 0.9);
}

TEST(Classify, StratifiedAndDisjoint) {
  const Blobs b = blobs(100, 5);
  const ClassifyResult r = classify(b.x, b.labels, 2, 2);
  int class1 = 0;
  for (std::size_t node : r.test_nodes) {
    class1 += b.labels[node][0];
    EXPECT_EQ(std::count(r.train_nodes.begin(), r.train_nodes.end(), node), 0);
  }
  EXPECT_EQ(class1, 10);
}

TEST(Classify, SingleClassGivesPerfectJaccard) {
  const Blobs b = blobs(50, 6);
  const std::vector<std::vector<int>> one(50, std::vector<int>{0});
  const ClassifyResult r = classify(b.x, one, 1, 3);
  EXPECT_EQ(multilabel_metrics(r.test_pred, r.test_truth).ji, 1.0);
}

TEST(Classify, DeterministicBySeed) {
  const Blobs b = blobs(60, 7);
  const ClassifyResult a = classify(b.x, b.labels, 2, 9), c = classify(b.x, b.labels, 2, 9);
  EXPECT_EQ(a.test_nodes, c.test_nodes);
  EXPECT_EQ(a.test_pred, c.test_pred);
  EXPECT_EQ(a.train_accuracy, c.train_accuracy);
}

TEST(Classify, UnlabeledNodesAreIgnored) {
  Blobs b = blobs(40, 8);
  b.labels[0].clear();
  b.labels[1].clear();
  const ClassifyResult r = classify(b.x, b.labels, 2, 1);
  EXPECT_EQ(r.train_nodes.size() + r.test_nodes.size(), 38u);
}

}  // namespace
}  // namespace nmm
