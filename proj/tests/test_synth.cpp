#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nmm/error.hpp"
#include "nmm/synth.hpp"
#include "support.hpp"

namespace nmm {
namespace {

std::set<std::pair<NodeId, NodeId>> edge_set(const Graph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const Edge& e : g.edges()) s.emplace(e.src, e.dst);
  return s;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

GenerativeParams model_params(double gamma, double lambda, int d = 4) {
  GenerativeParams p;
  p.mixture = MixtureParams::from_constrained(4.0, 2.0, 4.0, 0.0, gamma);
  Vector beta = Vector::Zero(d);
  beta(0) = 1.0;
  p.spherical = SphericalPrior{beta, lambda, 1.0};
  p.hyperbolic = HyperbolicPrior{Vector::Zero(d + 1), 0.5};
  return p;
}

TEST(GenHomophily, NoCrossEdgesWithoutPOut) {
  const Graph g = gen_homophily(120, 3, 0.3, 0.0, 1);
  ASSERT_TRUE(g.has_labels());
  EXPECT_EQ(g.num_classes(), 3);
  for (const Edge& e : g.edges()) {
    EXPECT_EQ(g.labels()[static_cast<std::size_t>(e.src)], g.labels()[static_cast<std::size_t>(e.dst)]);
  }
  EXPECT_GT(g.num_edges(), 0u);
}

TEST(GenHomophily, ErdosRenyiDegreeWhenProbabilitiesMatch) {
  const std::size_t n = 300;
  const double p = 0.05;
  const Graph g = gen_homophily(n, 4, p, p, 2);
  const double pairs = n * (n - 1) / 2.0;
  const double mean_degree = 2.0 * static_cast<double>(g.num_edges()) / n;
  const double sd = 2.0 * std::sqrt(pairs * p * (1 - p)) / n;
  EXPECT_LT(std::abs(mean_degree - (n - 1) * p), 3 * sd);
}

TEST(GenHomophily, EmptyAndDeterministic) {
  EXPECT_EQ(gen_homophily(0, 2, 0.5, 0.1, 1).num_nodes(), 0u);
  EXPECT_EQ(gen_homophily(50, 2, 0.2, 0.05, 7).edges(), gen_homophily(50, 2, 0.2, 0.05, 7).edges());
  EXPECT_THROW(gen_homophily(10, 2, 1.5, 0.1, 1), ContractViolation);
}

TEST(GenInfluence, SingleAttachmentIsATree) {
  const Graph g = gen_influence(200, 1, 3);
  EXPECT_EQ(g.num_edges(), 199u);
  UnionFind uf(200);
  for (const Edge& e : g.edges()) {
    EXPECT_TRUE(uf.unite(static_cast<std::size_t>(e.src), static_cast<std::size_t>(e.dst))) << "cycle";
  }
}

TEST(GenInfluence, TwoNodesAndEdgeCount) {
  const Graph two = gen_influence(2, 3, 4);
  EXPECT_EQ(two.num_edges(), 1u);
  // Node t adds min(m, t) edges.
  EXPECT_EQ(gen_influence(50, 3, 5).num_edges(), 0u + 1 + 2 + 3 * 47);
}

TEST(GenInfluence, HeavyTailedDegrees) {
  const Graph g = gen_influence(1000, 2, 6);
  std::vector<std::size_t> deg = g.degrees();
  std::sort(deg.begin(), deg.end());
  const double median = 0.5 * static_cast<double>(deg[499] + deg[500]);
  EXPECT_GT(static_cast<double>(deg.back()), 3 * median);
}

TEST(GenMixed, ExtremesAndUnion) {
  MixedParams mp;
  mp.p_out = 0.0;
  const Graph hom = gen_mixed(150, 1.0, 8, mp);
  const Graph inf = gen_mixed(150, 0.0, 8, mp);
  for (const Edge& e : hom.edges()) {
    EXPECT_EQ(hom.labels()[static_cast<std::size_t>(e.src)], hom.labels()[static_cast<std::size_t>(e.dst)]);
  }
  EXPECT_EQ(inf.num_edges(), 0u + 1 + 2 + 3 * 147u);

  const auto h = edge_set(hom), i = edge_set(inf), mixed = edge_set(gen_mixed(150, 0.5, 8, mp));
  std::set<std::pair<NodeId, NodeId>> both;
  std::set_union(h.begin(), h.end(), i.begin(), i.end(), std::inserter(both, both.begin()));
  std::size_t overlap = 0;
  for (const auto& e : h) overlap += i.count(e);
  EXPECT_EQ(both.size(), h.size() + i.size() - overlap);
  for (const auto& e : mixed) EXPECT_TRUE(both.count(e));
  // Each part keeps about half of its edges.
  std::size_t from_h = 0, from_i = 0;
  for (const auto& e : mixed) {
    from_h += h.count(e);
    from_i += i.count(e) && !h.count(e);
  }
  EXPECT_NEAR(static_cast<double>(from_h) / h.size(), 0.5, 0.15);
  EXPECT_NEAR(static_cast<double>(from_i) / (i.size() - overlap), 0.5, 0.15);
}

TEST(GenFromModel, ProbabilityTableMatchesDecoder) {
  const GenerativeParams p = model_params(0.6, 3.0);
  const GeneratedGraph g = gen_from_model(p, 40, 9);
  for (Eigen::Index a = 0; a < 40; ++a) {
    EXPECT_EQ(g.prob(a, a), 0.0);
    for (Eigen::Index b = a + 1; b < 40; ++b) {
      const double expected =
          p_link(p.mixture, SphericalPoint::from_coords(g.zs.row(a).transpose(), p.radius),
                 SphericalPoint::from_coords(g.zs.row(b).transpose(), p.radius),
                 HyperbolicPoint::from_coords(g.zh.row(a).transpose()),
                 HyperbolicPoint::from_coords(g.zh.row(b).transpose()));
      EXPECT_EQ(g.prob(a, b), expected);
      EXPECT_EQ(g.prob(b, a), expected);
    }
  }
}

TEST(GenFromModel, FullyAlignedEmbeddings) {
  const GeneratedGraph g = gen_from_model(model_params(0.5, 1.0), 30, 10);
  for (Eigen::Index i = 0; i < 30; ++i) {
    const Vector h = g.zh.row(i).head(4).transpose();
    if (h.norm() < 1e-9) continue;
    EXPECT_NEAR((h.normalized() - g.zs.row(i).transpose().normalized()).norm(), 0.0, 1e-12);
    EXPECT_EQ(g.zh(i, 4), 0.0);
  }
}

TEST(GenFromModel, EdgeCountsFollowTheProbabilityTable) {
  // Conditional on the embeddings each pair is an independent Bernoulli
  // draw, so the standardized edge-count excess over many graphs is ~N(0,1).
  double excess = 0.0, variance = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const GeneratedGraph g = gen_from_model(model_params(0.5, 2.0), 10, seed);
    double expected = 0.0, var = 0.0;
    for (Eigen::Index a = 0; a < 10; ++a)
      for (Eigen::Index b = a + 1; b < 10; ++b) {
        expected += g.prob(a, b);
        var += g.prob(a, b) * (1 - g.prob(a, b));
      }
    excess += static_cast<double>(g.graph.num_edges()) - expected;
    variance += var;
  }
  EXPECT_LT(std::abs(excess / std::sqrt(variance)), 3.0);
}

TEST(GenFromModel, SharpLobeConcentratesEdges) {
  // gamma = 1: links depend only on spherical proximity, and a sharp lobe
  // packs every node near the axis.
  const auto density = [](double lambda) {
    const GeneratedGraph g = gen_from_model(model_params(1.0, lambda), 150, 11);
    return 2.0 * static_cast<double>(g.graph.num_edges()) / (150.0 * 149.0);
  };
  EXPECT_GT(density(200.0), 2.0 * density(0.0));
}

TEST(GenFromModel, EmptyAndValidation) {
  EXPECT_EQ(gen_from_model(model_params(0.5, 1.0), 0, 1).graph.num_nodes(), 0u);
  GenerativeParams bad = model_params(0.5, 1.0);
  bad.hyperbolic.center = Vector::Zero(3);
  EXPECT_THROW(gen_from_model(bad, 5, 1), ContractViolation);
}

}  // namespace
}  // namespace nmm
