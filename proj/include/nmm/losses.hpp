#pragma once

// Reconstruction, prior (KL) and space-unification losses. The plain
// functions evaluate the definitions directly; the `record_*` builders put
// the same quantities on a tape for training.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nmm/decoder.hpp"
#include "nmm/geometry.hpp"
#include "nmm/graph.hpp"
#include "nmm/priors.hpp"
#include "nmm/tape.hpp"

namespace nmm {

enum class KlMode { map, montecarlo };

struct LossConfig {
  double lambda_a = 8.0;
  double negative_sample_ratio = 1.0;
  KlMode kl_mode = KlMode::map;
  // Above this many active nodes the non-edge sum is estimated by sampling.
  std::size_t k_dense = 2000;
  double jitter = 1e-2;
  bool unify = true;

  void validate() const;
};

// Lower bound on the learned dispersion. With a deterministic encoder the
// hyperbolic prior term is unbounded below as zeta -> 0 (log Z ~ (d+1) log
// zeta), so the floor keeps the MAP objective proper.
inline constexpr double kZetaFloor = 0.1;

// Trainable prior parameters in unconstrained form. The hyperbolic prior is
// centred at the origin during training.
struct PriorParams {
  Vector beta;              // unit lobe axis, dimension d
  double raw_lambda = 0;    // lambda = softplus(raw_lambda)
  double raw_amplitude = 0; // a = softplus(raw_amplitude)
  double raw_zeta = 0;      // zeta = kZetaFloor + softplus(raw_zeta)

  double lambda() const { return softplus(raw_lambda); }
  double amplitude() const { return softplus(raw_amplitude); }
  double zeta() const { return kZetaFloor + softplus(raw_zeta); }
  SphericalPrior spherical() const;
  // Prior over R^(d + 1) ball points, d = beta.size().
  HyperbolicPrior hyperbolic() const;

  static PriorParams initial(int dim);
};

// Mean binary log-likelihood over ordered pairs a != b of the nodes marked
// active (all nodes when `active` is empty). `prob(a, b)` must lie in (0, 1);
// edges of `adjacency` with positive weight count as links.
double recon_loglik(const std::function<double(NodeId, NodeId)>& prob,
                    const Graph& adjacency, const std::vector<bool>& active = {});

// -lambda_a * loglik.
double recon_loss(double loglik, double lambda_a);

// Mean negative log prior density over the rows of `z`.
double kl_loss_S(const Matrix& zs, const SphericalPrior& prior, double radius);
double kl_loss_H(const Matrix& zh, const HyperbolicPrior& prior);

// Mean spherical geodesic angle between proj_S of the first d coordinates of
// each z^H row and the matching z^S row. Zero rows project to e1.
double unify_loss(const Matrix& zh, const Matrix& zs);

struct TotalLosses {
  double l_s = 0;
  double l_h = 0;
};
TotalLosses total_losses(double recon, double kl_s, double kl_h, double unify);

// ---------------------------------------------------------------------------
// Tape builders.

using IndexList = std::shared_ptr<const std::vector<Eigen::Index>>;

struct ParamVars {
  ad::Var raw_j, raw_b, raw_c, raw_d, raw_gamma;
  ad::Var beta;  // 1 x d
  ad::Var raw_lambda, raw_amplitude, raw_zeta;
};

// Records the scalars as tape variables; raw_gamma becomes a constant when
// `train_gamma` is false.
ParamVars record_params(ad::Tape& tape, const MixtureParams& mixture,
                        const PriorParams& prior, bool train_gamma);

// n x n link probabilities for every pair of rows.
ad::Var link_probability_dense(ad::Var zs, ad::Var zh, const ParamVars& p,
                               const Geometry& geometry);
// m x 1 link probabilities for the pairs (a[i], b[i]).
ad::Var link_probability_pairs(ad::Var zs, ad::Var zh, const IndexList& a,
                               const IndexList& b, const ParamVars& p,
                               const Geometry& geometry);

// What the reconstruction term compares against. Dense targets hold the
// full pair masks; sampled targets hold positive and negative pair lists with
// the weights that make their sums unbiased for the full sums.
struct ReconTarget {
  bool dense = true;
  Matrix positive_mask;
  Matrix negative_mask;
  IndexList pos_a, pos_b, neg_a, neg_b;
  double pos_weight = 1.0;
  double neg_weight = 1.0;
  double pairs = 1.0;  // k (k - 1)
};

ReconTarget dense_target(const Graph& train_graph, const std::vector<bool>& active);
// Both orientations of every edge in `batch` are positives; negatives are
// uniform ordered non-edges among active nodes, ratio * 2 * |batch| of them.
ReconTarget sampled_target(const Graph& train_graph, const std::vector<bool>& active,
                           const std::vector<Edge>& batch, double ratio, Rng& rng);

ad::Var record_recon_loglik(ad::Var zs, ad::Var zh, const ParamVars& p,
                            const Geometry& geometry, const ReconTarget& target);

// Masked means over active rows; `weights` is an n x 1 constant with 1/k on
// active rows and 0 elsewhere.
ad::Var record_kl_s(ad::Var zs, const ParamVars& p, const Geometry& geometry,
                    ad::Var weights);
ad::Var record_kl_h(ad::Var zh, const ParamVars& p, const Geometry& geometry,
                    ad::Var weights, int dim);
ad::Var record_unify(ad::Var zs, ad::Var zh, ad::Var weights);

// `unify` is always recorded so it can be monitored; it enters l_s and l_h
// only when LossConfig::unify is set.
struct LossVars {
  ad::Var recon, kl_s, kl_h, unify, l_s, l_h;
};

// Full per-space losses for embeddings already on the tape. In montecarlo
// mode the embeddings are jittered with noise drawn from `rng` first.
LossVars record_losses(ad::Tape& tape, ad::Var zs, ad::Var zh, const ParamVars& p,
                       const Geometry& geometry, const LossConfig& config,
                       const ReconTarget& target, const std::vector<bool>& active,
                       Rng& rng);

}  // namespace nmm
