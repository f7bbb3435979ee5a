#include "nmm/synth.hpp"

#include <random>
#include <set>

#include "nmm/error.hpp"

namespace nmm {
namespace {

constexpr std::uint64_t kHomophilySalt = 0x68306d6f70686c79ULL;
constexpr std::uint64_t kInfluenceSalt = 0x696e666c75656e63ULL;
constexpr std::uint64_t kKeepSalt = 0x6b656570ULL;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractViolation(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

Graph gen_homophily(std::size_t n, int clusters, double p_in, double p_out, std::uint64_t seed) {
  if (clusters < 1) throw ContractViolation("need at least one cluster");
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, clusters - 1);
  std::vector<int> cluster(n);
  for (auto& c : cluster) c = pick(rng);
  std::bernoulli_distribution in_edge(p_in), out_edge(p_out);
  Graph g(n, /*directed=*/false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool link = cluster[i] == cluster[j] ? in_edge(rng) : out_edge(rng);
      if (link) g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  std::vector<std::vector<int>> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = {cluster[i]};
  g.set_labels(std::move(labels), clusters);
  return g;
}

Graph gen_influence(std::size_t n, int attach_m, std::uint64_t seed) {
  if (attach_m < 1) throw ContractViolation("attach_m must be at least 1");
  Rng rng(seed);
  Graph g(n, /*directed=*/false);
  // Every edge endpoint appears once here, so a uniform draw from the list
  // picks a node with probability proportional to its degree.
  std::vector<NodeId> endpoints;
  for (std::size_t t = 1; t < n; ++t) {
    const auto want = std::min<std::size_t>(static_cast<std::size_t>(attach_m), t);
    std::set<NodeId> targets;
    while (targets.size() < want) {
      NodeId v;
      if (endpoints.empty()) {
        v = std::uniform_int_distribution<NodeId>(0, static_cast<NodeId>(t) - 1)(rng);
      } else {
        v = endpoints[std::uniform_int_distribution<std::size_t>(0, endpoints.size() - 1)(rng)];
      }
      targets.insert(v);
    }
    for (NodeId v : targets) {
      g.add_edge(v, static_cast<NodeId>(t));
      endpoints.push_back(v);
      endpoints.push_back(static_cast<NodeId>(t));
    }
  }
  return g;
}

Graph gen_mixed(std::size_t n, double mix, std::uint64_t seed, const MixedParams& params) {
  check_probability(mix, "mix");
  const Graph hom = gen_homophily(n, params.clusters, params.p_in, params.p_out, seed ^ kHomophilySalt);
  const Graph inf = gen_influence(n, params.attach_m, seed ^ kInfluenceSalt);
  Rng rng(seed ^ kKeepSalt);
  std::bernoulli_distribution keep_hom(mix), keep_inf(1.0 - mix);
  Graph g(n, /*directed=*/false);
  for (const Edge& e : hom.edges()) {
    if (keep_hom(rng)) g.add_edge(e.src, e.dst);
  }
  for (const Edge& e : inf.edges()) {
    if (keep_inf(rng) && !g.has_edge(e.src, e.dst)) g.add_edge(e.src, e.dst);
  }
  if (n > 0) g.set_labels(hom.labels(), hom.num_classes());
  return g;
}

void GenerativeParams::validate() const {
  spherical.validate();
  hyperbolic.validate();
  if (!(radius > 0.0 && radius < 1.0)) throw ContractViolation("radius must lie in (0, 1)");
  if (hyperbolic.center.size() != spherical.beta.size() + 1) {
    throw ContractViolation("hyperbolic prior must live in one more dimension than the sphere");
  }
  check_probability(alignment_frac, "alignment_frac");
}

GeneratedGraph gen_from_model(const GenerativeParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const auto d = params.spherical.beta.size();
  const auto ni = static_cast<Eigen::Index>(n);
  GeneratedGraph out;
  out.graph = Graph(n, /*directed=*/false);
  out.zs.resize(ni, d);
  out.zh.resize(ni, d + 1);
  out.prob = Matrix::Zero(ni, ni);
  if (n == 0) return out;

  const auto sph = sample_spherical(params.spherical, params.radius, n, rng);
  const auto hyp = sample_hyperbolic(params.hyperbolic, n, rng);
  std::bernoulli_distribution aligned(params.alignment_frac);
  std::vector<SphericalPoint> zs;
  std::vector<HyperbolicPoint> zh;
  for (std::size_t i = 0; i < n; ++i) {
    zs.push_back(sph[i]);
    if (aligned(rng)) {
      Vector h = Vector::Zero(d + 1);
      h.head(d) = sph[i].coords() * (hyp[i].norm() / params.radius);
      zh.push_back(HyperbolicPoint::from_coords(h));
    } else {
      zh.push_back(hyp[i]);
    }
    out.zs.row(static_cast<Eigen::Index>(i)) = zs.back().coords().transpose();
    out.zh.row(static_cast<Eigen::Index>(i)) = zh.back().coords().transpose();
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = p_link(params.mixture, zs[i], zs[j], zh[i], zh[j]);
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      out.prob(a, b) = p;
      out.prob(b, a) = p;
      if (unif(rng) < p) out.graph.add_edge(a, b);
    }
  }
  return out;
}

}  // namespace nmm
