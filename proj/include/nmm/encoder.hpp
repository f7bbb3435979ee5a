#pragma once

// Graph convolutional encoders for the two embedding spaces. One layer is
//
//   z_i <- exp_0( sigma( W * sum_{j in N(i) + i} e_ji / sqrt(m_j m_i) log_0(z_j) ) )
//
// with m_i = 1 + sum_j e_ji. The spherical exp map is followed by the sphere
// projection, the hyperbolic one by the ball clamp. A Euclidean geometry
// drops both maps.

#include <cstdint>
#include <memory>
#include <vector>

#include "nmm/geometry.hpp"
#include "nmm/graph.hpp"
#include "nmm/tape.hpp"

namespace nmm {

enum class Activation { identity, relu, softmax };

struct EncoderConfig {
  int dim = 16;     // spherical output width d; hyperbolic output is d + 1
  int hidden = 32;
  int layers = 2;
  bool softmax_last = true;
  // Featureless graphs: one-hot node inputs instead of the random draw.
  bool one_hot_inputs = false;

  void validate() const;
  // Layer widths [in, hidden..., out] for the given input and output sizes.
  std::vector<int> widths(int in, int out) const;
  Activation activation(int layer) const;
};

// Fixed encoder inputs: one row per node.
struct InitialEmbeddings {
  Matrix spherical;
  Matrix hyperbolic;
};

// Unif[0,1) draws of width d (spherical, then projected onto the w-sphere) and
// d + 1 (hyperbolic; rows with norm >= 1 are divided by sqrt(d + 1) * 1.01).
// Graph features, when present, replace both draws after the same treatment,
// except that oversized hyperbolic rows are scaled by the largest row norm.
// `one_hot` substitutes the N x N identity for missing graph features.
InitialEmbeddings init_features(const Graph& graph, int dim, double radius,
                                std::uint64_t seed, bool one_hot = false);

// Weight matrices, stored out x in, one per layer and space.
struct EncoderWeights {
  std::vector<Matrix> spherical;
  std::vector<Matrix> hyperbolic;
};

// Unif(-1/sqrt(in), 1/sqrt(in)) entries.
EncoderWeights init_weights(const EncoderConfig& config, int in_spherical,
                            int in_hyperbolic, std::uint64_t seed);

// Symmetric-normalized propagation matrix with self-loops: row i holds
// e_ji / sqrt(m_j m_i) for every j in N(i) and 1 / m_i on the diagonal.
std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const Graph& graph);
std::vector<double> gcn_degrees(const Graph& graph);

namespace ad_ops {

// Row-wise origin maps on the tape.
ad::Var log0(ad::Var z);
ad::Var exp0_hyperbolic(ad::Var v);
ad::Var exp0_spherical(ad::Var v, double radius);
ad::Var activate(ad::Var x, Activation act);

}  // namespace ad_ops

ad::Var gcn_layer_S(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act, double radius);
ad::Var gcn_layer_H(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act);
ad::Var gcn_layer_E(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act);

struct EncodedVars {
  ad::Var zs;
  ad::Var zh;
  std::vector<ad::Var> ws;
  std::vector<ad::Var> wh;
};

// Records both encoders on `tape`. Weights become tape variables when
// `trainable` is set, constants otherwise.
EncodedVars encode(ad::Tape& tape, const InitialEmbeddings& input,
                   const std::shared_ptr<const ad::SparseMatrix>& adj,
                   const EncoderWeights& weights, const EncoderConfig& config,
                   const Geometry& geometry, bool trainable);

// Inference-only convenience returning (z^S, z^H).
std::pair<Matrix, Matrix> encode(const Graph& graph,
                                 const InitialEmbeddings& input,
                                 const EncoderWeights& weights,
                                 const EncoderConfig& config,
                                 const Geometry& geometry);

}  // namespace nmm
