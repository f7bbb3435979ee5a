#include "nmm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "nmm/error.hpp"

namespace nmm {
namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kTinyNorm = 1e-15;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_active(const std::vector<bool>& active, std::size_t i) {
  return active.empty() || active[i];
}

std::size_t count_active(const std::vector<bool>& active, std::size_t n) {
  if (active.empty()) return n;
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

// Unit rows of x (zero rows -> e1), recorded on the tape.
ad::Var unit_rows(ad::Var x) {
  const Matrix& val = x.value();
  Matrix fallback = Matrix::Zero(val.rows(), val.cols());
  bool any_zero = false;
  for (Eigen::Index i = 0; i < val.rows(); ++i) {
    if (val.row(i).squaredNorm() == 0.0) {
      fallback(i, 0) = 1.0;
      any_zero = true;
    }
  }
  ad::Var out = x / ad::clamp(ad::row_norm(x), kTinyNorm, kInf);
  if (any_zero) out = out + x.tape()->constant(std::move(fallback));
  return out;
}

ad::Var safe_arccos(ad::Var cosine) {
  return ad::arccos(ad::clamp(cosine, -1.0 + kArccosEps, 1.0 - kArccosEps));
}

ad::Var mix(ad::Var dist_hom, ad::Var dist_rank, const ParamVars& p) {
  const ad::Var gamma = ad::logistic(p.raw_gamma);
  const ad::Var hom = ad::logistic(-(ad::softplus(p.raw_j) * dist_hom + ad::softplus(p.raw_b)));
  const ad::Var rank = ad::logistic(ad::softplus(p.raw_c) * dist_rank + ad::softplus(p.raw_d));
  return gamma * hom + (1.0 - gamma) * rank;
}

IndexList make_list(std::vector<Eigen::Index> v) {
  return std::make_shared<const std::vector<Eigen::Index>>(std::move(v));
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda_a >= 0.0)) throw ContractViolation("lambda_A must be >= 0");
  if (!(negative_sample_ratio > 0.0)) {
    throw ContractViolation("negative sample ratio must be positive");
  }
  if (!(jitter > 0.0)) throw ContractViolation("jitter must be positive");
}

SphericalPrior PriorParams::spherical() const {
  return SphericalPrior{beta, lambda(), amplitude()};
}

HyperbolicPrior PriorParams::hyperbolic() const {
  return HyperbolicPrior{Vector::Zero(beta.size() + 1), zeta()};
}

PriorParams PriorParams::initial(int dim) {
  if (dim < 2) throw ContractViolation("prior dimension must be at least 2");
  PriorParams p;
  p.beta = Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  p.raw_lambda = inverse_softplus(1.0);
  p.raw_amplitude = inverse_softplus(1.0);
  p.raw_zeta = inverse_softplus(1.0 - kZetaFloor);
  return p;
}

double recon_loglik(const std::function<double(NodeId, NodeId)>& prob,
                    const Graph& adjacency, const std::vector<bool>& active) {
  const std::size_t n = adjacency.num_nodes();
  if (!active.empty() && active.size() != n) {
    throw ContractViolation("active mask has the wrong length");
  }
  const std::size_t k = count_active(active, n);
  if (k < 2) throw ContractViolation("reconstruction needs at least two nodes");
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!is_active(active, a)) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || !is_active(active, b)) continue;
      const auto ia = static_cast<NodeId>(a), ib = static_cast<NodeId>(b);
      const double p = prob(ia, ib);
      if (!(p > 0.0 && p < 1.0)) {
        throw ContractViolation("edge probability outside (0, 1)");
      }
      total += adjacency.weight(ia, ib) > 0.0 ? std::log(p) : std::log1p(-p);
    }
  }
  return total / (static_cast<double>(k) * static_cast<double>(k - 1));
}

double recon_loss(double loglik, double lambda_a) {
  if (lambda_a < 0.0) throw ContractViolation("lambda_A must be >= 0");
  if (lambda_a == 0.0) return 0.0;
  return -lambda_a * loglik;
}

double kl_loss_S(const Matrix& zs, const SphericalPrior& prior, double radius) {
  prior.validate();
  if (zs.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < zs.rows(); ++i) {
    const auto z = SphericalPoint::from_coords(zs.row(i).transpose(), radius);
    total += std::log(prior.amplitude) + prior.lambda * (prior.beta.dot(z.coords()) / radius - 1.0);
  }
  return -total / static_cast<double>(zs.rows());
}

double kl_loss_H(const Matrix& zh, const HyperbolicPrior& prior) {
  prior.validate();
  if (zh.rows() == 0) return 0.0;
  const auto center = HyperbolicPoint::from_coords(prior.center);
  const double log_z = log_normalizer(prior.zeta, prior.dim());
  double total = 0.0;
  for (Eigen::Index i = 0; i < zh.rows(); ++i) {
    const double dist = hyperbolic_distance(HyperbolicPoint::from_coords(zh.row(i).transpose()), center);
    total += log_z + dist * dist / (2.0 * prior.zeta * prior.zeta);
  }
  return total / static_cast<double>(zh.rows());
}

double unify_loss(const Matrix& zh, const Matrix& zs) {
  if (zh.rows() != zs.rows() || zh.cols() < zs.cols()) {
    throw ContractViolation("unify_loss: embedding shapes do not match");
  }
  if (zs.rows() == 0) return 0.0;
  const Eigen::Index d = zs.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < zs.rows(); ++i) {
    const Vector h = project_to_sphere(zh.row(i).head(d).transpose(), 0.5).coords() / 0.5;
    const Vector s = project_to_sphere(zs.row(i).transpose(), 0.5).coords() / 0.5;
    total += std::acos(std::clamp(h.dot(s), -1.0, 1.0));
  }
  return total / static_cast<double>(zs.rows());
}

TotalLosses total_losses(double recon, double kl_s, double kl_h, double unify) {
  return {recon + kl_s + unify, recon + kl_h + unify};
}

ParamVars record_params(ad::Tape& tape, const MixtureParams& mixture,
                        const PriorParams& prior, bool train_gamma) {
  ParamVars p;
  p.raw_j = tape.variable(mixture.raw_j);
  p.raw_b = tape.variable(mixture.raw_b);
  p.raw_c = tape.variable(mixture.raw_c);
  p.raw_d = tape.variable(mixture.raw_d);
  p.raw_gamma = train_gamma ? tape.variable(mixture.raw_gamma) : tape.constant(mixture.raw_gamma);
  p.beta = tape.variable(Matrix(prior.beta.transpose()));
  p.raw_lambda = tape.variable(prior.raw_lambda);
  p.raw_amplitude = tape.variable(prior.raw_amplitude);
  p.raw_zeta = tape.variable(prior.raw_zeta);
  return p;
}

ad::Var link_probability_dense(ad::Var zs, ad::Var zh, const ParamVars& p,
                               const Geometry& geometry) {
  const ad::Var gram = ad::matmul(zs, zs, /*transpose_b=*/true);
  ad::Var dist_hom;
  if (geometry.spherical()) {
    dist_hom = safe_arccos(gram / (geometry.radius * geometry.radius));
  } else {
    const ad::Var sq = ad::row_sum(zs * zs);
    const ad::Var ones = zs.tape()->constant(Matrix::Ones(1, 1));
    const ad::Var sq_t = ad::matmul(ones, sq, /*transpose_b=*/true);
    dist_hom = ad::sqrt(ad::clamp(sq + sq_t - 2.0 * gram, kProbFloor, kInf));
  }
  const ad::Var r = ad::row_norm(zh);
  const ad::Var ones = zh.tape()->constant(Matrix::Ones(1, 1));
  const ad::Var dist_rank = ad::abs(r - ad::matmul(ones, r, /*transpose_b=*/true));
  return mix(dist_hom, dist_rank, p);
}

ad::Var link_probability_pairs(ad::Var zs, ad::Var zh, const IndexList& a,
                               const IndexList& b, const ParamVars& p,
                               const Geometry& geometry) {
  if (a->size() != b->size()) throw ContractViolation("pair lists differ in length");
  const ad::Var sa = ad::gather_rows(zs, a), sb = ad::gather_rows(zs, b);
  ad::Var dist_hom;
  if (geometry.spherical()) {
    dist_hom = safe_arccos(ad::row_sum(sa * sb) / (geometry.radius * geometry.radius));
  } else {
    const ad::Var diff = sa - sb;
    dist_hom = ad::sqrt(ad::clamp(ad::row_sum(diff * diff), kProbFloor, kInf));
  }
  const ad::Var dist_rank =
      ad::abs(ad::row_norm(ad::gather_rows(zh, a)) - ad::row_norm(ad::gather_rows(zh, b)));
  return mix(dist_hom, dist_rank, p);
}

ReconTarget dense_target(const Graph& train_graph, const std::vector<bool>& active) {
  const std::size_t n = train_graph.num_nodes();
  if (!active.empty() && active.size() != n) {
    throw ContractViolation("active mask has the wrong length");
  }
  const std::size_t k = count_active(active, n);
  if (k < 2) throw ContractViolation("reconstruction needs at least two active nodes");
  const auto ni = static_cast<Eigen::Index>(n);
  ReconTarget t;
  t.dense = true;
  t.positive_mask = Matrix::Zero(ni, ni);
  t.negative_mask = Matrix::Zero(ni, ni);
  for (std::size_t a = 0; a < n; ++a) {
    if (!is_active(active, a)) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && is_active(active, b)) t.negative_mask(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
    }
  }
  for (const Edge& e : train_graph.edges()) {
    if (!is_active(active, static_cast<std::size_t>(e.src)) ||
        !is_active(active, static_cast<std::size_t>(e.dst))) {
      continue;
    }
    t.positive_mask(e.src, e.dst) = 1.0;
    t.negative_mask(e.src, e.dst) = 0.0;
    if (!train_graph.directed()) {
      t.positive_mask(e.dst, e.src) = 1.0;
      t.negative_mask(e.dst, e.src) = 0.0;
    }
  }
  t.pairs = static_cast<double>(k) * static_cast<double>(k - 1);
  return t;
}

ReconTarget sampled_target(const Graph& train_graph, const std::vector<bool>& active,
                           const std::vector<Edge>& batch, double ratio, Rng& rng) {
  if (train_graph.directed()) {
    throw ContractViolation("sampled reconstruction expects an undirected graph");
  }
  const std::size_t n = train_graph.num_nodes();
  std::vector<Eigen::Index> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_active(active, i)) nodes.push_back(static_cast<Eigen::Index>(i));
  }
  const std::size_t k = nodes.size();
  if (k < 2) throw ContractViolation("reconstruction needs at least two active nodes");

  std::size_t num_edges = 0;
  for (const Edge& e : train_graph.edges()) {
    if (is_active(active, static_cast<std::size_t>(e.src)) &&
        is_active(active, static_cast<std::size_t>(e.dst))) {
      ++num_edges;
    }
  }
  ReconTarget t;
  t.dense = false;
  t.pairs = static_cast<double>(k) * static_cast<double>(k - 1);

  std::vector<Eigen::Index> pa, pb;
  for (const Edge& e : batch) {
    pa.push_back(e.src);
    pb.push_back(e.dst);
    pa.push_back(e.dst);
    pb.push_back(e.src);
  }
  t.pos_weight = batch.empty() ? 0.0
                               : static_cast<double>(num_edges) / static_cast<double>(batch.size());

  const double neg_total = t.pairs - 2.0 * static_cast<double>(num_edges);
  const auto want = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(std::max<std::size_t>(pa.size(), 1))));
  std::vector<Eigen::Index> na, nb;
  if (neg_total > 0.0) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::uint64_t tries = 0;
    while (na.size() < want) {
      if (++tries > kMaxRejections) throw NumericalError("negative sampler exhausted its budget");
      const Eigen::Index a = nodes[pick(rng)], b = nodes[pick(rng)];
      if (a == b || train_graph.has_edge(a, b)) continue;
      na.push_back(a);
      nb.push_back(b);
    }
    t.neg_weight = neg_total / static_cast<double>(na.size());
  } else {
    t.neg_weight = 0.0;
  }
  t.pos_a = make_list(std::move(pa));
  t.pos_b = make_list(std::move(pb));
  t.neg_a = make_list(std::move(na));
  t.neg_b = make_list(std::move(nb));
  return t;
}

ad::Var record_recon_loglik(ad::Var zs, ad::Var zh, const ParamVars& p,
                            const Geometry& geometry, const ReconTarget& target) {
  ad::Tape& tape = *zs.tape();
  if (target.dense) {
    const ad::Var prob = ad::clamp(link_probability_dense(zs, zh, p, geometry), kProbFloor,
                                   1.0 - kProbFloor);
    const ad::Var pos = tape.constant(target.positive_mask);
    const ad::Var neg = tape.constant(target.negative_mask);
    const ad::Var ll = ad::sum(pos * ad::log(prob)) + ad::sum(neg * ad::log(1.0 - prob));
    return ll / target.pairs;
  }
  ad::Var ll = tape.constant(0.0);
  if (!target.pos_a->empty()) {
    const ad::Var prob = ad::clamp(
        link_probability_pairs(zs, zh, target.pos_a, target.pos_b, p, geometry), kProbFloor,
        1.0 - kProbFloor);
    ll = ll + target.pos_weight * ad::sum(ad::log(prob));
  }
  if (!target.neg_a->empty()) {
    const ad::Var prob = ad::clamp(
        link_probability_pairs(zs, zh, target.neg_a, target.neg_b, p, geometry), kProbFloor,
        1.0 - kProbFloor);
    ll = ll + target.neg_weight * ad::sum(ad::log(1.0 - prob));
  }
  return ll / target.pairs;
}

ad::Var record_kl_s(ad::Var zs, const ParamVars& p, const Geometry& geometry,
                    ad::Var weights) {
  const ad::Var direction = geometry.spherical() ? zs / geometry.radius : unit_rows(zs);
  const ad::Var dot = ad::matmul(direction, p.beta, /*transpose_b=*/true);
  const ad::Var mean_dot = ad::sum(weights * dot);
  return -ad::log(ad::softplus(p.raw_amplitude)) - ad::softplus(p.raw_lambda) * (mean_dot - 1.0);
}

ad::Var record_kl_h(ad::Var zh, const ParamVars& p, const Geometry& geometry,
                    ad::Var weights, int dim) {
  const ad::Var zeta = kZetaFloor + ad::softplus(p.raw_zeta);
  const ad::Var two_zeta_sq = 2.0 * zeta * zeta;
  if (geometry.hyperbolic()) {
    const ad::Var dist = 2.0 * ad::artanh(ad::clamp(ad::row_norm(zh), 0.0, 1.0 - kBallMargin));
    return ad::log_partition(zeta, dim) + ad::sum(weights * dist * dist) / two_zeta_sq;
  }
  const ad::Var sq = ad::row_sum(zh * zh);
  return ad::sum(weights * sq) / two_zeta_sq + static_cast<double>(zh.cols()) * ad::log(zeta);
}

ad::Var record_unify(ad::Var zs, ad::Var zh, ad::Var weights) {
  const Eigen::Index d = zs.cols();
  if (zh.cols() < d) throw ContractViolation("unify: hyperbolic width below spherical width");
  Matrix select = Matrix::Zero(zh.cols(), d);
  for (Eigen::Index i = 0; i < d; ++i) select(i, i) = 1.0;
  const ad::Var head = ad::matmul(zh, zs.tape()->constant(std::move(select)));
  const ad::Var cosine = ad::row_sum(unit_rows(head) * unit_rows(zs));
  return ad::sum(weights * safe_arccos(cosine));
}

LossVars record_losses(ad::Tape& tape, ad::Var zs, ad::Var zh, const ParamVars& p,
                       const Geometry& geometry, const LossConfig& config,
                       const ReconTarget& target, const std::vector<bool>& active,
                       Rng& rng) {
  config.validate();
  const auto n = zs.rows();
  const std::size_t k = count_active(active, static_cast<std::size_t>(n));
  Matrix w(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, 0) = is_active(active, static_cast<std::size_t>(i)) ? 1.0 / static_cast<double>(k) : 0.0;
  }
  const ad::Var weights = tape.constant(std::move(w));
  const int dim = static_cast<int>(zs.cols());

  double log_q_s = 0.0, log_q_h = 0.0;
  if (config.kl_mode == KlMode::montecarlo) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto noise = [&](Eigen::Index cols, double& sq) {
      Matrix e(n, cols);
      for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = normal(rng);
      sq = (e.array().square().matrix() * Matrix::Ones(cols, 1)).col(0).dot(
          Eigen::Map<const Eigen::VectorXd>(weights.value().data(), n));
      return Matrix(config.jitter * e);
    };
    double sq_s = 0.0, sq_h = 0.0;
    const ad::Var js = zs + tape.constant(noise(zs.cols(), sq_s));
    const ad::Var jh = zh + tape.constant(noise(zh.cols(), sq_h));
    zs = geometry.spherical() ? unit_rows(js) * geometry.radius : js;
    if (geometry.hyperbolic()) {
      const ad::Var norm = ad::clamp(ad::row_norm(jh), kTinyNorm, kInf);
      zh = jh * (ad::clamp(norm, 0.0, 1.0 - kBallMargin) / norm);
    } else {
      zh = jh;
    }
    const double log2pi_s2 = std::log(2.0 * std::numbers::pi * config.jitter * config.jitter);
    log_q_s = -0.5 * sq_s - 0.5 * static_cast<double>(zs.cols()) * log2pi_s2;
    log_q_h = -0.5 * sq_h - 0.5 * static_cast<double>(zh.cols()) * log2pi_s2;
  }

  LossVars out;
  const ad::Var loglik = record_recon_loglik(zs, zh, p, geometry, target);
  out.recon = -config.lambda_a * loglik;
  out.kl_s = record_kl_s(zs, p, geometry, weights);
  out.kl_h = record_kl_h(zh, p, geometry, weights, dim);
  if (config.kl_mode == KlMode::montecarlo) {
    // log q of the jittered sample; constant in every parameter.
    out.kl_s = out.kl_s + log_q_s;
    out.kl_h = out.kl_h + log_q_h;
  }
  out.unify = record_unify(zs, zh, weights);
  if (config.unify) {
    out.l_s = out.recon + out.kl_s + out.unify;
    out.l_h = out.recon + out.kl_h + out.unify;
  } else {
    out.l_s = out.recon + out.kl_s;
    out.l_h = out.recon + out.kl_h;
  }
  return out;
}

}  // namespace nmm
