#pragma once

// Planted-structure graph generators with known ground truth.

#include <cstdint>

#include "nmm/decoder.hpp"
#include "nmm/graph.hpp"
#include "nmm/priors.hpp"

namespace nmm {

// Planted partition: uniform cluster labels, edge probability p_in inside a
// cluster and p_out across. Labels are attached to the returned graph.
Graph gen_homophily(std::size_t n, int clusters, double p_in, double p_out, std::uint64_t seed);

// Preferential attachment: node t links to min(attach_m, t) distinct earlier
// nodes chosen proportionally to degree (uniformly while all degrees are 0).
Graph gen_influence(std::size_t n, int attach_m, std::uint64_t seed);

struct MixedParams {
  int clusters = 4;
  double p_in = 0.1;
  double p_out = 0.005;
  int attach_m = 3;
};

// Union of a homophily graph whose edges are each kept with probability `mix`
// and an influence graph whose edges are each kept with probability 1 - mix.
// Carries the homophily cluster labels.
Graph gen_mixed(std::size_t n, double mix, std::uint64_t seed, const MixedParams& params = {});

struct GenerativeParams {
  MixtureParams mixture;
  SphericalPrior spherical;
  HyperbolicPrior hyperbolic;  // center in R^(d + 1)
  double radius = 0.5;
  // Fraction of nodes whose hyperbolic point is rotated onto the direction
  // of their spherical point.
  double alignment_frac = 1.0;

  void validate() const;
};

struct GeneratedGraph {
  Graph graph;
  Matrix zs;    // n x d
  Matrix zh;    // n x (d + 1)
  Matrix prob;  // n x n p_link table, zero diagonal
};

GeneratedGraph gen_from_model(const GenerativeParams& params, std::size_t n, std::uint64_t seed);

}  // namespace nmm
