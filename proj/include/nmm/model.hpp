#pragma once

// Trainable NMM / NMM-GNN state and its on-disk form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "nmm/decoder.hpp"
#include "nmm/encoder.hpp"
#include "nmm/geometry.hpp"
#include "nmm/graph.hpp"
#include "nmm/losses.hpp"

namespace nmm {

enum class Mode { nmm, nmm_gnn };

const char* mode_name(Mode mode);
Mode parse_mode(const std::string& text);

struct ModelConfig {
  Mode mode = Mode::nmm;
  Geometry geometry;
  EncoderConfig encoder;  // encoder.dim is the embedding dimension d in both modes
  std::optional<double> gamma_fixed;

  int dim() const { return encoder.dim; }
  void validate() const;
};

struct Model {
  ModelConfig config;
  // Current embeddings: free parameters in NMM mode, the encoder output on
  // the training graph in NMM-GNN mode.
  Matrix zs;  // n x d
  Matrix zh;  // n x (d + 1)
  // NMM-GNN only.
  std::uint64_t feature_seed = 0;
  InitialEmbeddings features;
  EncoderWeights weights;

  MixtureParams mixture;
  PriorParams prior;
};

// Random initialization: embeddings / encoder inputs from init_features,
// encoder weights from init_weights, J = C = 1, B = 0.5, D = 0.1, gamma = 0.5
// (or the fixed value), and the prior defaults.
Model init_model(const Graph& graph, const ModelConfig& config, std::uint64_t seed);

// Embeddings of every node of `graph`: the stored ones for NMM, a fresh
// encoder pass over `graph` for NMM-GNN.
std::pair<Matrix, Matrix> embed(const Model& model, const Graph& graph);

// p_link for each pair under the model's decoder and geometry.
std::vector<double> score_pairs(const Model& model, const Matrix& zs, const Matrix& zh,
                                const std::vector<NodePair>& pairs);

// [log0(z^S) ; log0(z^H)] per node (raw coordinates for Euclidean spaces).
Matrix tangent_features(const Model& model, const Matrix& zs, const Matrix& zh);

// embeddings.csv (original id, d spherical and d + 1 hyperbolic coordinates)
// and params.json (configuration, scalars, encoder weights).
void save_model(const Model& model, const Graph& graph, const std::filesystem::path& dir);
// Re-creates the encoder inputs from the stored seed using `graph`.
Model load_model(const std::filesystem::path& dir, const Graph& graph);

}  // namespace nmm
