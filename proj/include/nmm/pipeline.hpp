#pragma once

// End-to-end train / evaluate runs shared by the CLI, the Python module and
// the acceptance suite. A run directory holds:
//   embeddings.csv  params.json  train.json  trace.tsv  split.tsv
//   id_map.tsv      labels.tsv (when labels were given)  report.tsv (eval)

#include <filesystem>
#include <iosfwd>

#include "nmm/optimizer.hpp"

namespace nmm {

struct TrainOptions {
  ModelConfig model;
  LossConfig loss;
  OptimConfig optim;  // optim.seed also drives the split and initialization
  bool inductive = false;
  double node_frac = 0.5;

  void validate() const;
};

struct TrainOutput {
  Model model;
  Split split;
  TrainResult result;
};

// Splits `graph` (undirected), initializes and trains.
TrainOutput run_training(const Graph& graph, const TrainOptions& options);
TrainOutput run_training(const Graph& graph, const Split& split, const TrainOptions& options);

void save_run(const TrainOutput& run, const Graph& graph, const TrainOptions& options,
              const std::filesystem::path& dir);
TrainOptions load_train_options(const std::filesystem::path& dir);

struct Report {
  double auc = 0;
  // NaN when the graph carries no labels.
  double ji = 0, hl = 0, f1 = 0;
  double gamma = 0;
  LossValues losses;
};

// Test AUC on the split's held-out pairs, classification metrics on the
// tangent features when `graph` has labels, and the loss components on the
// training edges.
Report evaluate(const Model& model, const Graph& graph, const Split& split,
                const LossConfig& loss, std::uint64_t seed);

// `key<TAB>value` lines: auc ji hl f1 gamma l_recon l_kl_s l_kl_h l_unify.
void write_report(const Report& report, std::ostream& out);

}  // namespace nmm
