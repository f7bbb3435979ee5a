#include "nmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "nmm/decoder.hpp"
#include "nmm/error.hpp"
#include "nmm/priors.hpp"

namespace nmm {
namespace {

constexpr int kIterations = 500;
constexpr double kLearningRate = 0.5;
constexpr double kL2 = 1e-4;

}  // namespace

double auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) {
    throw ContractViolation("auc needs at least one positive and one negative score");
  }
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) items.push_back({s, true});
  for (double s : scores_neg) items.push_back({s, false});
  for (const Item& it : items) {
    if (std::isnan(it.score)) throw ContractViolation("auc: NaN score");
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });
  // Average ranks (1-based) over tie groups, then the rank-sum statistic.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (items[t].positive) rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(scores_pos.size());
  const double n = static_cast<double>(scores_neg.size());
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

MultilabelMetrics multilabel_metrics(const LabelMatrix& pred, const LabelMatrix& truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw ContractViolation("multilabel_metrics: shapes differ or are empty");
  }
  const std::size_t classes = truth.front().size();
  double ji = 0.0;
  std::size_t mismatches = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != classes || truth[i].size() != classes) {
      throw ContractViolation("multilabel_metrics: ragged label matrix");
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const bool p = pred[i][c], t = truth[i][c];
      inter += p && t;
      uni += p || t;
      mismatches += p != t;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    ji += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  MultilabelMetrics m;
  m.ji = ji / static_cast<double>(pred.size());
  m.hl = classes == 0 ? 0.0
                      : static_cast<double>(mismatches) /
                            static_cast<double>(pred.size() * classes);
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return m;
}

ClassifyResult classify(const Matrix& features, const std::vector<std::vector<int>>& labels,
                        int num_classes, std::uint64_t seed) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ContractViolation("classify: one feature row per node required");
  }
  if (num_classes < 1) throw ContractViolation("classify: no classes");

  // Stratified 80/20 split by the smallest class id of each labeled node.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) continue;
    strata[*std::min_element(labels[i].begin(), labels[i].end())].push_back(i);
  }
  if (strata.empty()) throw ContractViolation("classify: no labeled nodes");
  Rng rng(seed);
  ClassifyResult r;
  for (auto& [cls, nodes] : strata) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::size_t n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(nodes.size())));
    if (nodes.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, nodes.size() - 1);
    r.train_nodes.insert(r.train_nodes.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train));
    r.test_nodes.insert(r.test_nodes.end(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train), nodes.end());
  }
  std::sort(r.train_nodes.begin(), r.train_nodes.end());
  std::sort(r.test_nodes.begin(), r.test_nodes.end());
  if (r.train_nodes.empty() || r.test_nodes.empty()) {
    throw ContractViolation("classify: too few labeled nodes for an 80/20 split");
  }

  auto truth_row = [&](std::size_t node) {
    std::vector<bool> row(static_cast<std::size_t>(num_classes), false);
    for (int c : labels[node]) row[static_cast<std::size_t>(c)] = true;
    return row;
  };

  // Standardize with training statistics; append a bias column.
  const Eigen::Index f = features.cols();
  auto gather = [&](const std::vector<std::size_t>& nodes) {
    Matrix x(static_cast<Eigen::Index>(nodes.size()), f + 1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)).head(f) = features.row(static_cast<Eigen::Index>(nodes[i]));
      x(static_cast<Eigen::Index>(i), f) = 1.0;
    }
    return x;
  };
  Matrix xtr = gather(r.train_nodes), xte = gather(r.test_nodes);
  for (Eigen::Index c = 0; c < f; ++c) {
    const double mu = xtr.col(c).mean();
    const double sd = std::sqrt((xtr.col(c).array() - mu).square().mean());
    const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
    xtr.col(c) = ((xtr.col(c).array() - mu) * scale).matrix();
    xte.col(c) = ((xte.col(c).array() - mu) * scale).matrix();
  }

  const auto m = static_cast<double>(xtr.rows());
  std::size_t correct = 0;
  r.test_pred.assign(r.test_nodes.size(), std::vector<bool>(static_cast<std::size_t>(num_classes)));
  for (int c = 0; c < num_classes; ++c) {
    Vector y(xtr.rows());
    for (std::size_t i = 0; i < r.train_nodes.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = truth_row(r.train_nodes[i])[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    }
    const double frac = y.mean();
    Vector w = Vector::Zero(f + 1);
    auto predict = [&](const Matrix& x) -> Vector {
      if (frac == 0.0 || frac == 1.0) return Vector::Constant(x.rows(), frac);
      return (x * w).unaryExpr([](double v) { return logistic(v); });
    };
    if (frac > 0.0 && frac < 1.0) {
      for (int it = 0; it < kIterations; ++it) {
        const Vector p = (xtr * w).unaryExpr([](double v) { return logistic(v); });
        Vector grad = xtr.transpose() * (p - y) / m;
        grad.head(f) += kL2 * w.head(f);
        w -= kLearningRate * grad;
      }
    }
    const Vector ptr = predict(xtr);
    for (Eigen::Index i = 0; i < xtr.rows(); ++i) correct += (ptr(i) >= 0.5) == (y(i) > 0.5);
    const Vector pte = predict(xte);
    for (std::size_t i = 0; i < r.test_nodes.size(); ++i) {
      r.test_pred[i][static_cast<std::size_t>(c)] = pte(static_cast<Eigen::Index>(i)) >= 0.5;
    }
  }
  for (std::size_t node : r.test_nodes) r.test_truth.push_back(truth_row(node));
  r.train_accuracy = static_cast<double>(correct) / (m * num_classes);
  return r;
}

}  // namespace nmm
