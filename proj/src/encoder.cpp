#include "nmm/encoder.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "nmm/error.hpp"
#include "nmm/priors.hpp"

namespace nmm {
namespace {

constexpr double kTinyNorm = 1e-15;

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = unif(rng);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim < 2) throw ContractViolation("encoder dim must be at least 2");
  if (layers < 0) throw ContractViolation("encoder layer count must be >= 0");
  if (hidden < 1) throw ContractViolation("encoder hidden width must be positive");
}

std::vector<int> EncoderConfig::widths(int in, int out) const {
  std::vector<int> w{in};
  for (int l = 1; l < layers; ++l) w.push_back(hidden);
  if (layers > 0) w.push_back(out);
  return w;
}

Activation EncoderConfig::activation(int layer) const {
  if (layer + 1 < layers) return Activation::relu;
  return softmax_last ? Activation::softmax : Activation::identity;
}

InitialEmbeddings init_features(const Graph& graph, int dim, double radius,
                                std::uint64_t seed, bool one_hot) {
  if (dim < 2) throw ContractViolation("embedding dim must be at least 2");
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  InitialEmbeddings out;
  if (graph.features() || one_hot) {
    const Matrix f = graph.features() ? *graph.features() : Matrix(Matrix::Identity(n, n));
    out.spherical = project_rows_to_sphere(f, radius);
    out.hyperbolic = f;
    double max_norm = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) max_norm = std::max(max_norm, f.row(i).norm());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      if (f.row(i).norm() >= 1.0) out.hyperbolic.row(i) /= max_norm * 1.01;
    }
    return out;
  }
  Rng rng(seed);
  out.spherical = project_rows_to_sphere(uniform_matrix(n, dim, rng), radius);
  out.hyperbolic = uniform_matrix(n, dim + 1, rng);
  const double shrink = std::sqrt(static_cast<double>(dim + 1)) * 1.01;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.hyperbolic.row(i).norm() >= 1.0) out.hyperbolic.row(i) /= shrink;
  }
  return out;
}

EncoderWeights init_weights(const EncoderConfig& config, int in_spherical,
                            int in_hyperbolic, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto draw = [&](const std::vector<int>& widths) {
    std::vector<Matrix> ws;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
      std::uniform_real_distribution<double> unif(-bound, bound);
      Matrix w(widths[l + 1], widths[l]);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = unif(rng);
      ws.push_back(std::move(w));
    }
    return ws;
  };
  EncoderWeights out;
  out.spherical = draw(config.widths(in_spherical, config.dim));
  out.hyperbolic = draw(config.widths(in_hyperbolic, config.dim + 1));
  return out;
}

std::vector<double> gcn_degrees(const Graph& graph) {
  const auto nbrs = graph.in_neighbors();
  std::vector<double> m(graph.num_nodes(), 1.0);
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    for (const auto& [j, w] : nbrs[i]) m[i] += w;
  }
  return m;
}

std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const Graph& graph) {
  const auto nbrs = graph.in_neighbors();
  const auto m = gcn_degrees(graph);
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    entries.emplace_back(i, i, 1.0 / m[ui]);
    for (const auto& [j, w] : nbrs[ui]) {
      entries.emplace_back(i, j, w / std::sqrt(m[static_cast<std::size_t>(j)] * m[ui]));
    }
  }
  auto adj = std::make_shared<ad::SparseMatrix>(n, n);
  adj->setFromTriplets(entries.begin(), entries.end());
  return adj;
}

namespace ad_ops {

ad::Var log0(ad::Var z) {
  const ad::Var n = ad::clamp(ad::row_norm(z), kTinyNorm, 1.0 - kArtanhEps);
  return z * (ad::artanh(n) / n);
}

ad::Var exp0_hyperbolic(ad::Var v) {
  const ad::Var n = ad::clamp(ad::row_norm(v), kTinyNorm,
                              std::numeric_limits<double>::infinity());
  return v * (ad::clamp(ad::tanh(n), 0.0, 1.0 - kBallMargin) / n);
}

ad::Var exp0_spherical(ad::Var v, double radius) {
  // tanh only rescales along v, so exp followed by the sphere projection is
  // the projection alone. Zero rows fall back to radius * e1.
  const Matrix& val = v.value();
  Matrix fallback = Matrix::Zero(val.rows(), val.cols());
  bool any_zero = false;
  for (Eigen::Index i = 0; i < val.rows(); ++i) {
    if (val.row(i).squaredNorm() == 0.0) {
      fallback(i, 0) = radius;
      any_zero = true;
    }
  }
  const ad::Var n = ad::clamp(ad::row_norm(v), kTinyNorm,
                              std::numeric_limits<double>::infinity());
  ad::Var out = v * (radius / n);
  if (any_zero) out = out + v.tape()->constant(std::move(fallback));
  return out;
}

ad::Var activate(ad::Var x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::softmax: return ad::softmax_rows(x);
  }
  return x;
}

}  // namespace ad_ops

namespace {

ad::Var propagate(ad::Var tangent, const std::shared_ptr<const ad::SparseMatrix>& adj,
                  ad::Var w, Activation act) {
  if (tangent.cols() != w.cols()) {
    throw ContractViolation("gcn layer: weight width does not match the input");
  }
  if (tangent.rows() != adj->rows()) {
    throw ContractViolation("gcn layer: adjacency does not match the node count");
  }
  return ad_ops::activate(ad::matmul(ad::spmm(adj, tangent), w, /*transpose_b=*/true), act);
}

}  // namespace

ad::Var gcn_layer_S(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act, double radius) {
  return ad_ops::exp0_spherical(propagate(ad_ops::log0(z), adj, w, act), radius);
}

ad::Var gcn_layer_H(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act) {
  return ad_ops::exp0_hyperbolic(propagate(ad_ops::log0(z), adj, w, act));
}

ad::Var gcn_layer_E(ad::Var z, const std::shared_ptr<const ad::SparseMatrix>& adj,
                    ad::Var w, Activation act) {
  return propagate(z, adj, w, act);
}

EncodedVars encode(ad::Tape& tape, const InitialEmbeddings& input,
                   const std::shared_ptr<const ad::SparseMatrix>& adj,
                   const EncoderWeights& weights, const EncoderConfig& config,
                   const Geometry& geometry, bool trainable) {
  config.validate();
  if (static_cast<int>(weights.spherical.size()) != config.layers ||
      static_cast<int>(weights.hyperbolic.size()) != config.layers) {
    throw ContractViolation("encoder weights do not match the layer count");
  }
  EncodedVars out;
  out.zs = tape.constant(input.spherical);
  out.zh = tape.constant(input.hyperbolic);
  for (int l = 0; l < config.layers; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const ad::Var ws = trainable ? tape.variable(weights.spherical[ul])
                                 : tape.constant(weights.spherical[ul]);
    const ad::Var wh = trainable ? tape.variable(weights.hyperbolic[ul])
                                 : tape.constant(weights.hyperbolic[ul]);
    out.ws.push_back(ws);
    out.wh.push_back(wh);
    const Activation act = config.activation(l);
    out.zs = geometry.spherical() ? gcn_layer_S(out.zs, adj, ws, act, geometry.radius)
                                  : gcn_layer_E(out.zs, adj, ws, act);
    out.zh = geometry.hyperbolic() ? gcn_layer_H(out.zh, adj, wh, act)
                                   : gcn_layer_E(out.zh, adj, wh, act);
  }
  return out;
}

std::pair<Matrix, Matrix> encode(const Graph& graph, const InitialEmbeddings& input,
                                 const EncoderWeights& weights,
                                 const EncoderConfig& config, const Geometry& geometry) {
  ad::Tape tape;
  const auto vars = encode(tape, input, normalized_adjacency(graph), weights, config,
                           geometry, /*trainable=*/false);
  return {vars.zs.value(), vars.zh.value()};
}

}  // namespace nmm
