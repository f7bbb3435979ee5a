#pragma once

// Link-prediction AUC and multi-label node classification metrics.

#include <cstdint>
#include <vector>

#include "nmm/manifold.hpp"

namespace nmm {

// Mann-Whitney AUC: probability that a random positive outscores a random
// negative, ties counted as 1/2. Throws ContractViolation on empty input.
double auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg);

using LabelMatrix = std::vector<std::vector<bool>>;  // node x class

struct MultilabelMetrics {
  double ji = 0;  // mean per-sample Jaccard index, empty/empty = 1
  double hl = 0;  // fraction of mismatched label slots
  double f1 = 0;  // micro-averaged F1
};

MultilabelMetrics multilabel_metrics(const LabelMatrix& pred, const LabelMatrix& truth);

struct ClassifyResult {
  std::vector<std::size_t> train_nodes;
  std::vector<std::size_t> test_nodes;
  LabelMatrix test_pred;
  LabelMatrix test_truth;
  double train_accuracy = 0;  // fraction of correct label slots on train nodes
};

// One-vs-rest logistic regression on the rows of `features`. Nodes without
// any label are ignored; the rest are split 80/20, stratified by their
// smallest class id. Predictions use threshold 0.5.
ClassifyResult classify(const Matrix& features, const std::vector<std::vector<int>>& labels,
                        int num_classes, std::uint64_t seed);

}  // namespace nmm
