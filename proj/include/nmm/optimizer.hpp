#pragma once

// Riemannian SGD steps and the training loop.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "nmm/model.hpp"

namespace nmm {

// (1 + z.g / |g|) (I - z z^T / w^2) g, or the bare projection when
// `prefactor` is false. Zero gradient gives the zero vector.
Vector riemannian_direction_S(const SphericalPoint& z, const Vector& grad, bool prefactor = true);

// proj_S(z - eta * riemannian_direction_S(z, grad)).
SphericalPoint rsgd_step_S(const SphericalPoint& z, const Vector& grad, double eta,
                           bool prefactor = true);
// z - eta ((1 - |z|^2) / 2)^2 grad, clamped to |z| <= 1 - kBallMargin.
HyperbolicPoint rsgd_step_H(const HyperbolicPoint& z, const Vector& grad, double eta);
double sgd_step(double x, double grad, double eta);

struct OptimConfig {
  double eta = 0.05;
  int epochs = 200;
  // Training edges per step. 0 means one full-batch step per epoch, using
  // the dense reconstruction when the graph is small enough. A positive
  // value takes minibatch steps with sampled negatives at any graph size.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  // Epochs without validation-AUC improvement before stopping; 0 disables.
  int patience = 20;
  bool rsgd_prefactor = true;

  void validate() const;
};

struct TrainData {
  Graph train_graph;          // undirected, training edges only
  std::vector<bool> active;   // nodes visible during training (empty = all)
  std::vector<NodePair> val_pos;
  std::vector<NodePair> val_neg;
};

TrainData make_train_data(const Graph& graph, const Split& split);
// Training edges plus the inductive context edges, for evaluation.
Graph eval_graph(const Graph& graph, const Split& split);

struct LossValues {
  double recon = 0, kl_s = 0, kl_h = 0, unify = 0, l_s = 0, l_h = 0;
};

struct Gradients {
  Matrix zs, zh;                  // NMM mode
  std::vector<Matrix> ws, wh;     // NMM-GNN mode
  double raw_j = 0, raw_b = 0, raw_c = 0, raw_d = 0, raw_gamma = 0;
  Vector beta;
  double raw_lambda = 0, raw_amplitude = 0, raw_zeta = 0;
};

struct StepResult {
  LossValues losses;
  Gradients grads;
  Matrix zs, zh;  // embeddings the losses were evaluated at (before jitter)
};

// Forward pass plus the two backward passes: S-side parameters receive
// dL^S, H-side parameters dL^H, and gamma d(L^S + L^H).
StepResult loss_and_gradients(const Model& model,
                              const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                              const ReconTarget& target, const std::vector<bool>& active,
                              const LossConfig& config, std::uint64_t noise_seed);
// Loss values only.
LossValues loss_values(const Model& model,
                       const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                       const ReconTarget& target, const std::vector<bool>& active,
                       const LossConfig& config, std::uint64_t noise_seed);

// Applies one optimizer step with the given gradients.
void apply_gradients(Model& model, const Gradients& grads, const OptimConfig& config);

// Reconstruction target used for evaluation: dense below k_dense, otherwise
// all training edges with sampled negatives.
ReconTarget full_target(const TrainData& data, const LossConfig& config, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  LossValues losses;
  double val_auc = 0;  // NaN without validation pairs
};

struct TrainResult {
  std::vector<EpochRecord> trace;  // record 0 is the initial state
  int best_epoch = 0;
  bool stopped_early = false;
};

// Epoch loop. Record e holds the losses and validation AUC of the state
// after epoch e. With early stopping the best-validation state is restored.
TrainResult train(Model& model, const TrainData& data, const LossConfig& loss_config,
                  const OptimConfig& optim_config);

// Tab-separated `epoch l_s l_h l_unify val_auc` lines after a `#` header.
void write_trace(const std::vector<EpochRecord>& trace, const std::filesystem::path& path);

}  // namespace nmm
