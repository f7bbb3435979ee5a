#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nmm/error.hpp"
#include "nmm/optimizer.hpp"
#include "nmm/synth.hpp"
#include "support.hpp"

namespace nmm {
namespace {

constexpr double kW = 0.5;

// Central-difference gradient of f at x (vector form).
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, m = x;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

TEST(RiemannianDirection, LiesInTangentSpace) {
  testing::Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    const auto z = SphericalPoint::from_coords(testing::sphere_coords(5, kW, rng), kW);
    const Vector g = testing::gaussian_vector(5, rng) * 3.0;
    for (bool pre : {true, false}) EXPECT_NEAR(z.coords().dot(riemannian_direction_S(z, g, pre)), 0.0, 1e-9);
    // Without the prefactor it is the orthogonal projector, so it is idempotent.
    const Vector once = riemannian_direction_S(z, g, false);
    EXPECT_LT((riemannian_direction_S(z, once, false) - once).norm(), 1e-12);
  }
  const auto z = SphericalPoint::from_coords(testing::sphere_coords(3, kW, rng), kW);
  EXPECT_EQ(riemannian_direction_S(z, Vector::Zero(3)).norm(), 0.0);
}

TEST(RsgdStepS, ZeroGradientAndNorm) {
  testing::Rng rng(2);
  const auto z = SphericalPoint::from_coords(testing::sphere_coords(4, kW, rng), kW);
  EXPECT_LT((rsgd_step_S(z, Vector::Zero(4), 0.3).coords() - z.coords()).norm(), 1e-15);
  for (int t = 0; t < 200; ++t) {
    const auto next = rsgd_step_S(z, testing::gaussian_vector(4, rng) * 10.0, 0.7);
    EXPECT_NEAR(next.coords().norm(), kW, 1e-12);
  }
}

TEST(RsgdStepS, DescendsSquaredDistance) {
  testing::Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vector target = testing::sphere_coords(4, kW, rng);
    const auto z = SphericalPoint::from_coords(testing::sphere_coords(4, kW, rng), kW);
    const auto loss = [&](const Vector& x) {
      const double c = std::clamp(x.dot(target) / (kW * kW), -1.0, 1.0);
      return std::pow(std::acos(c), 2);
    };
    if (loss(z.coords()) < 1e-6 || loss(z.coords()) > 9.0) continue;  // skip near-coincident / antipodal
    const Vector g = numeric_gradient(loss, z.coords());
    for (bool pre : {true, false}) {
      EXPECT_LT(loss(rsgd_step_S(z, g, 1e-3, pre).coords()), loss(z.coords())) << t;
    }
  }
}

TEST(RsgdStepH, ConformalFactorAtOrigin) {
  Vector g(3);
  g << 0.4, -0.8, 0.2;
  const auto next = rsgd_step_H(HyperbolicPoint::from_coords(Vector::Zero(3)), g, 0.1);
  EXPECT_LT((next.coords() - (-0.1 * 0.25 * g)).norm(), 1e-15);
  const auto z = HyperbolicPoint::from_coords(Vector::Constant(3, 0.2));
  EXPECT_EQ(rsgd_step_H(z, Vector::Zero(3), 0.5).coords(), z.coords());
}

TEST(RsgdStepH, StaysInBallAndDescends) {
  testing::Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto target = HyperbolicPoint::from_coords(testing::ball_coords(3, 0.9, rng));
    const auto z = HyperbolicPoint::from_coords(testing::ball_coords(3, 0.9, rng));
    const auto loss = [&](const Vector& x) {
      return std::pow(hyperbolic_distance(HyperbolicPoint::from_coords(x), target), 2);
    };
    const Vector g = numeric_gradient(loss, z.coords());
    EXPECT_LT(loss(rsgd_step_H(z, g, 1e-3).coords()), loss(z.coords()));
    EXPECT_LT(rsgd_step_H(z, g * 1e6, 1.0).coords().norm(), 1.0);
  }
}

TEST(SgdStep, Examples) {
  EXPECT_EQ(sgd_step(1.0, 0.0, 0.1), 1.0);
  EXPECT_NEAR(sgd_step(1.0, 2.0, 0.1), 0.8, 1e-15);
}

TEST(SgdStep, GammaStaysInUnitInterval) {
  double raw = 0.0;
  for (int t = 0; t < 10000; ++t) {
    raw = sgd_step(raw, t % 2 ? -50.0 : -10.0, 1.0);  // keep pushing gamma up
    ASSERT_GE(logistic(raw), 0.0);
    ASSERT_LE(logistic(raw), 1.0);
  }
  for (int t = 0; t < 10000; ++t) {
    raw = sgd_step(raw, 100.0, 1.0);
    ASSERT_GE(logistic(raw), 0.0);
  }
}

// Five-node fixture for gradient audits.
Graph five_nodes() {
  Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(3, 4);
  g.add_edge(0, 2);
  return g;
}

Model audit_model(Mode mode, const Geometry& geo) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.geometry = geo;
  cfg.encoder.dim = 3;
  cfg.encoder.hidden = 4;
  Model m = init_model(five_nodes(), cfg, 5);
  // Move scalars away from their defaults so no term is degenerate.
  m.mixture = MixtureParams::from_constrained(1.3, 0.4, 0.8, 0.3, 0.6);
  m.prior.raw_lambda = 0.4;
  m.prior.raw_amplitude = 0.2;
  m.prior.raw_zeta = 0.3;
  return m;
}

// Compares every gradient entry of one loss (S or H side) against central
// differences of the loss values.
void audit(Mode mode, const Geometry& geo) {
  const Graph g = five_nodes();
  const Model base = audit_model(mode, geo);
  const auto adj = mode == Mode::nmm_gnn ? normalized_adjacency(g) : nullptr;
  const ReconTarget target = dense_target(g, {});
  LossConfig cfg;
  cfg.lambda_a = 2.0;
  const StepResult step = loss_and_gradients(base, adj, target, {}, cfg, 1);
  const double h = 1e-6;

  auto check = [&](const char* what, double analytic, auto perturb, bool s_side, bool both = false) {
    Model up = base, down = base;
    perturb(up, h);
    perturb(down, -h);
    const LossValues a = loss_values(up, adj, target, {}, cfg, 1);
    const LossValues b = loss_values(down, adj, target, {}, cfg, 1);
    const double fd = both ? (a.l_s + a.l_h - b.l_s - b.l_h) / (2 * h)
                           : (s_side ? a.l_s - b.l_s : a.l_h - b.l_h) / (2 * h);
    EXPECT_NEAR(analytic, fd, 1e-4 * std::max(1.0, std::abs(fd))) << what;
  };

  check("raw_j", step.grads.raw_j, [](Model& m, double e) { m.mixture.raw_j += e; }, true);
  check("raw_b", step.grads.raw_b, [](Model& m, double e) { m.mixture.raw_b += e; }, true);
  check("raw_c", step.grads.raw_c, [](Model& m, double e) { m.mixture.raw_c += e; }, false);
  check("raw_d", step.grads.raw_d, [](Model& m, double e) { m.mixture.raw_d += e; }, false);
  check("raw_gamma", step.grads.raw_gamma, [](Model& m, double e) { m.mixture.raw_gamma += e; }, true, true);
  check("raw_lambda", step.grads.raw_lambda, [](Model& m, double e) { m.prior.raw_lambda += e; }, true);
  check("raw_amplitude", step.grads.raw_amplitude, [](Model& m, double e) { m.prior.raw_amplitude += e; }, true);
  check("raw_zeta", step.grads.raw_zeta, [](Model& m, double e) { m.prior.raw_zeta += e; }, false);
  for (Eigen::Index i = 0; i < base.prior.beta.size(); ++i) {
    check("beta", step.grads.beta(i), [i](Model& m, double e) { m.prior.beta(i) += e; }, true);
  }
  if (mode == Mode::nmm) {
    for (Eigen::Index i = 0; i < base.zs.size(); ++i) {
      check("zs", step.grads.zs.data()[i], [i](Model& m, double e) { m.zs.data()[i] += e; }, true);
    }
    for (Eigen::Index i = 0; i < base.zh.size(); ++i) {
      check("zh", step.grads.zh.data()[i], [i](Model& m, double e) { m.zh.data()[i] += e; }, false);
    }
  } else {
    for (std::size_t l = 0; l < base.weights.spherical.size(); ++l) {
      for (Eigen::Index i = 0; i < base.weights.spherical[l].size(); ++i) {
        check("ws", step.grads.ws[l].data()[i],
              [l, i](Model& m, double e) { m.weights.spherical[l].data()[i] += e; }, true);
      }
      for (Eigen::Index i = 0; i < base.weights.hyperbolic[l].size(); ++i) {
        check("wh", step.grads.wh[l].data()[i],
              [l, i](Model& m, double e) { m.weights.hyperbolic[l].data()[i] += e; }, false);
      }
    }
  }
}

TEST(LossGradients, NmmMatchesFiniteDifferences) { audit(Mode::nmm, Geometry{}); }
TEST(LossGradients, NmmEuclideanMatchesFiniteDifferences) {
  audit(Mode::nmm, Geometry{HomSpace::euclidean, RankSpace::euclidean, kW});
}
TEST(LossGradients, GnnMatchesFiniteDifferences) { audit(Mode::nmm_gnn, Geometry{}); }

TEST(LossGradients, SharedDecoderPathAcrossModes) {
  // An NMM model holding the GNN's encoder output scores the same losses.
  const Graph g = five_nodes();
  const Model gnn = audit_model(Mode::nmm_gnn, Geometry{});
  Model nmm = gnn;
  nmm.config.mode = Mode::nmm;
  std::tie(nmm.zs, nmm.zh) = embed(gnn, g);
  const auto target = dense_target(g, {});
  const LossValues a = loss_values(gnn, normalized_adjacency(g), target, {}, LossConfig{}, 1);
  const LossValues b = loss_values(nmm, nullptr, target, {}, LossConfig{}, 1);
  EXPECT_NEAR(a.l_s, b.l_s, 1e-12);
  EXPECT_NEAR(a.l_h, b.l_h, 1e-12);
}

// Two planted clusters of 15 nodes.
Graph two_clusters() { return symmetrize(gen_homophily(30, 2, 0.4, 0.02, 9)); }

TrainData all_edges(const Graph& g) {
  TrainData d;
  d.train_graph = g;
  return d;
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  const Graph g = two_clusters();
  ModelConfig cfg;
  cfg.encoder.dim = 4;
  Model m = init_model(g, cfg, 3);
  const Model before = m;
  OptimConfig o;
  o.epochs = 0;
  const TrainResult r = train(m, all_edges(g), LossConfig{}, o);
  EXPECT_EQ(m.zs, before.zs);
  EXPECT_EQ(m.zh, before.zh);
  EXPECT_EQ(m.mixture.raw_j, before.mixture.raw_j);
  ASSERT_EQ(r.trace.size(), 1u);
}

TEST(Train, ReducesReconstructionLossAndStaysOnManifold) {
  const Graph g = two_clusters();
  for (Mode mode : {Mode::nmm, Mode::nmm_gnn}) {
    ModelConfig cfg;
    cfg.mode = mode;
    cfg.encoder.dim = 4;
    cfg.encoder.hidden = 8;
    cfg.encoder.one_hot_inputs = mode == Mode::nmm_gnn;
    Model m = init_model(g, cfg, 4);
    OptimConfig o;
    o.epochs = 200;
    o.eta = 0.1;
    o.seed = 4;
    const TrainResult r = train(m, all_edges(g), LossConfig{}, o);
    ASSERT_EQ(r.trace.size(), 201u);
    for (const EpochRecord& e : r.trace) {
      EXPECT_TRUE(std::isfinite(e.losses.l_s) && std::isfinite(e.losses.l_h)) << e.epoch;
    }
    EXPECT_LT(r.trace.back().losses.recon, r.trace.front().losses.recon) << mode_name(mode);
    const auto [zs, zh] = embed(m, g);
    for (Eigen::Index i = 0; i < zs.rows(); ++i) {
      EXPECT_NEAR(zs.row(i).norm(), kW, 1e-9);
      EXPECT_LT(zh.row(i).norm(), 1.0);
    }
  }
}

TEST(Train, DeterministicTrace) {
  const Graph g = two_clusters();
  const Split split = make_split(g, 7);
  const TrainData data = make_train_data(g, split);
  auto run = [&] {
    ModelConfig cfg;
    cfg.encoder.dim = 4;
    Model m = init_model(data.train_graph, cfg, 7);
    OptimConfig o;
    o.epochs = 20;
    o.batch_size = 16;
    o.seed = 7;
    const TrainResult r = train(m, data, LossConfig{}, o);
    std::vector<double> v;
    for (const auto& e : r.trace) v.insert(v.end(), {e.losses.l_s, e.losses.l_h, e.val_auc});
    return std::make_pair(v, m.zs);
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, DivergenceIsReported) {
  const Graph g = two_clusters();
  ModelConfig cfg;
  cfg.encoder.dim = 4;
  Model m = init_model(g, cfg, 3);
  m.zh(0, 0) = std::numeric_limits<double>::quiet_NaN();
  OptimConfig o;
  o.epochs = 2;
  try {
    train(m, all_edges(g), LossConfig{}, o);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step size"), std::string::npos) << e.what();
  }
}

TEST(Train, TraceFileFormat) {
  std::vector<EpochRecord> trace(2);
  trace[1].epoch = 1;
  trace[1].losses.l_s = 1.5;
  trace[1].val_auc = std::numeric_limits<double>::quiet_NaN();
  const auto path = std::filesystem::temp_directory_path() / "nmm_trace_test.tsv";
  write_trace(trace, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.front(), '#');
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string f;
    int count = 0;
    while (std::getline(fields, f, '\t')) ++count;
    EXPECT_EQ(count, 5) << line;
  }
  EXPECT_EQ(rows, 2);
  std::filesystem::remove(path);
}

TEST(OptimConfig, Validation) {
  OptimConfig o;
  o.eta = 0.0;
  EXPECT_THROW(o.validate(), ContractViolation);
  o.eta = 0.1;
  o.epochs = -1;
  EXPECT_THROW(o.validate(), ContractViolation);
}

}  // namespace
}  // namespace nmm
