#include "nmm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "nmm/error.hpp"
#include "nmm/eval.hpp"

namespace nmm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Decoder and prior scalars take clipped steps: d log Z / d zeta grows like
// d^2 zeta, which makes an unclipped step on zeta overshoot for d >= 8.
constexpr double kScalarClip = 1.0;

double clip(double g) { return std::clamp(g, -kScalarClip, kScalarClip); }

double scalar_grad(const ad::Tape& tape, ad::Var v) { return tape.gradient(v)(0, 0); }

std::size_t count_active(const std::vector<bool>& active, std::size_t n) {
  if (active.empty()) return n;
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

bool finite(const LossValues& l) {
  return std::isfinite(l.recon) && std::isfinite(l.kl_s) && std::isfinite(l.kl_h) &&
         std::isfinite(l.unify) && std::isfinite(l.l_s) && std::isfinite(l.l_h);
}

}  // namespace

Vector riemannian_direction_S(const SphericalPoint& z, const Vector& grad, bool prefactor) {
  if (grad.size() != z.dim()) throw ContractViolation("rsgd: gradient dimension mismatch");
  if (!grad.allFinite()) throw NumericalError("rsgd: non-finite gradient");
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return Vector::Zero(grad.size());
  const Vector& x = z.coords();
  const double w2 = z.radius() * z.radius();
  const Vector tangent = grad - x * (x.dot(grad) / w2);
  const double scale = prefactor ? 1.0 + x.dot(grad) / gnorm : 1.0;
  return scale * tangent;
}

SphericalPoint rsgd_step_S(const SphericalPoint& z, const Vector& grad, double eta,
                           bool prefactor) {
  if (!(eta > 0.0)) throw ContractViolation("rsgd: eta must be positive");
  const Vector dir = riemannian_direction_S(z, grad, prefactor);
  if (dir.isZero(0.0)) return z;
  return SphericalPoint::project(z.coords() - eta * dir, z.radius());
}

HyperbolicPoint rsgd_step_H(const HyperbolicPoint& z, const Vector& grad, double eta) {
  if (!(eta > 0.0)) throw ContractViolation("rsgd: eta must be positive");
  if (grad.size() != z.dim()) throw ContractViolation("rsgd: gradient dimension mismatch");
  if (!grad.allFinite()) throw NumericalError("rsgd: non-finite gradient");
  if (grad.isZero(0.0)) return z;
  const double factor = 0.5 * (1.0 - z.coords().squaredNorm());
  return HyperbolicPoint::clamped(z.coords() - eta * factor * factor * grad);
}

double sgd_step(double x, double grad, double eta) {
  if (!std::isfinite(grad)) throw NumericalError("sgd: non-finite gradient");
  return x - eta * grad;
}

void OptimConfig::validate() const {
  if (!(eta > 0.0)) throw ContractViolation("eta must be positive");
  if (epochs < 0) throw ContractViolation("epochs must be >= 0");
  if (patience < 0) throw ContractViolation("patience must be >= 0");
}

TrainData make_train_data(const Graph& graph, const Split& split) {
  TrainData d;
  d.train_graph = with_edges(graph, split.train);
  if (split.inductive) d.active = split.train_nodes;
  d.val_pos = split.val_pos;
  d.val_neg = split.val_neg;
  return d;
}

Graph eval_graph(const Graph& graph, const Split& split) {
  std::vector<Edge> edges = split.train;
  edges.insert(edges.end(), split.context.begin(), split.context.end());
  return with_edges(graph, edges);
}

namespace {

struct Recorded {
  ad::Tape tape;
  ParamVars params;
  ad::Var zs, zh;
  EncodedVars encoded;
  LossVars losses;
};

void record(Recorded& r, const Model& model,
            const std::shared_ptr<const ad::SparseMatrix>& adjacency, const ReconTarget& target,
            const std::vector<bool>& active, const LossConfig& config, std::uint64_t noise_seed) {
  r.params = record_params(r.tape, model.mixture, model.prior, !model.config.gamma_fixed);
  if (model.config.mode == Mode::nmm) {
    r.zs = r.tape.variable(model.zs);
    r.zh = r.tape.variable(model.zh);
  } else {
    if (!adjacency) throw ContractViolation("NMM-GNN needs the propagation matrix");
    r.encoded = encode(r.tape, model.features, adjacency, model.weights, model.config.encoder,
                       model.config.geometry, /*trainable=*/true);
    r.zs = r.encoded.zs;
    r.zh = r.encoded.zh;
  }
  Rng rng(noise_seed);
  r.losses = record_losses(r.tape, r.zs, r.zh, r.params, model.config.geometry, config, target,
                           active, rng);
}

LossValues values_of(const LossVars& v) {
  return {v.recon.scalar(), v.kl_s.scalar(), v.kl_h.scalar(),
          v.unify.scalar(), v.l_s.scalar(),  v.l_h.scalar()};
}

}  // namespace

StepResult loss_and_gradients(const Model& model,
                              const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                              const ReconTarget& target, const std::vector<bool>& active,
                              const LossConfig& config, std::uint64_t noise_seed) {
  Recorded r;
  record(r, model, adjacency, target, active, config, noise_seed);
  StepResult out;
  out.losses = values_of(r.losses);
  if (!finite(out.losses)) throw NumericalError("non-finite loss value");
  out.zs = r.zs.value();
  out.zh = r.zh.value();

  ad::Tape& t = r.tape;
  Gradients& g = out.grads;
  t.backward(r.losses.l_s);
  if (model.config.mode == Mode::nmm) {
    g.zs = t.gradient(r.zs);
  } else {
    for (const ad::Var& w : r.encoded.ws) g.ws.push_back(t.gradient(w));
  }
  g.raw_j = scalar_grad(t, r.params.raw_j);
  g.raw_b = scalar_grad(t, r.params.raw_b);
  g.beta = t.gradient(r.params.beta).row(0).transpose();
  g.raw_lambda = scalar_grad(t, r.params.raw_lambda);
  g.raw_amplitude = scalar_grad(t, r.params.raw_amplitude);
  g.raw_gamma = scalar_grad(t, r.params.raw_gamma);

  t.backward(r.losses.l_h);
  if (model.config.mode == Mode::nmm) {
    g.zh = t.gradient(r.zh);
  } else {
    for (const ad::Var& w : r.encoded.wh) g.wh.push_back(t.gradient(w));
  }
  g.raw_c = scalar_grad(t, r.params.raw_c);
  g.raw_d = scalar_grad(t, r.params.raw_d);
  g.raw_zeta = scalar_grad(t, r.params.raw_zeta);
  g.raw_gamma += scalar_grad(t, r.params.raw_gamma);
  return out;
}

LossValues loss_values(const Model& model,
                       const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                       const ReconTarget& target, const std::vector<bool>& active,
                       const LossConfig& config, std::uint64_t noise_seed) {
  Recorded r;
  record(r, model, adjacency, target, active, config, noise_seed);
  return values_of(r.losses);
}

void apply_gradients(Model& model, const Gradients& g, const OptimConfig& config) {
  const double eta = config.eta;
  const Geometry& geo = model.config.geometry;
  if (model.config.mode == Mode::nmm) {
    for (Eigen::Index i = 0; i < model.zs.rows(); ++i) {
      const Vector grad = g.zs.row(i).transpose();
      if (geo.spherical()) {
        const auto z = SphericalPoint::project(model.zs.row(i).transpose(), geo.radius);
        model.zs.row(i) = rsgd_step_S(z, grad, eta, config.rsgd_prefactor).coords().transpose();
      } else {
        model.zs.row(i) -= eta * g.zs.row(i);
      }
    }
    for (Eigen::Index i = 0; i < model.zh.rows(); ++i) {
      const Vector grad = g.zh.row(i).transpose();
      if (geo.hyperbolic()) {
        const auto z = HyperbolicPoint::clamped(model.zh.row(i).transpose());
        model.zh.row(i) = rsgd_step_H(z, grad, eta).coords().transpose();
      } else {
        model.zh.row(i) -= eta * g.zh.row(i);
      }
    }
  } else {
    for (std::size_t l = 0; l < g.ws.size(); ++l) model.weights.spherical[l] -= eta * g.ws[l];
    for (std::size_t l = 0; l < g.wh.size(); ++l) model.weights.hyperbolic[l] -= eta * g.wh[l];
  }
  MixtureParams& m = model.mixture;
  m.raw_j = sgd_step(m.raw_j, clip(g.raw_j), eta);
  m.raw_b = sgd_step(m.raw_b, clip(g.raw_b), eta);
  m.raw_c = sgd_step(m.raw_c, clip(g.raw_c), eta);
  m.raw_d = sgd_step(m.raw_d, clip(g.raw_d), eta);
  if (!model.config.gamma_fixed) m.raw_gamma = sgd_step(m.raw_gamma, clip(g.raw_gamma), eta);

  PriorParams& p = model.prior;
  Vector beta_grad = g.beta;
  if (beta_grad.norm() > kScalarClip) beta_grad *= kScalarClip / beta_grad.norm();
  const Vector beta = p.beta - eta * beta_grad;
  if (beta.norm() > 0.0) p.beta = beta / beta.norm();
  p.raw_lambda = sgd_step(p.raw_lambda, clip(g.raw_lambda), eta);
  p.raw_amplitude = sgd_step(p.raw_amplitude, clip(g.raw_amplitude), eta);
  p.raw_zeta = sgd_step(p.raw_zeta, clip(g.raw_zeta), eta);
}

ReconTarget full_target(const TrainData& data, const LossConfig& config, Rng& rng) {
  const std::size_t k = count_active(data.active, data.train_graph.num_nodes());
  if (k <= config.k_dense) return dense_target(data.train_graph, data.active);
  std::vector<Edge> edges;
  for (const Edge& e : data.train_graph.edges()) {
    if (data.active.empty() ||
        (data.active[static_cast<std::size_t>(e.src)] && data.active[static_cast<std::size_t>(e.dst)])) {
      edges.push_back(e);
    }
  }
  return sampled_target(data.train_graph, data.active, edges, config.negative_sample_ratio, rng);
}

TrainResult train(Model& model, const TrainData& data, const LossConfig& loss_config,
                  const OptimConfig& optim_config) {
  loss_config.validate();
  optim_config.validate();
  const Graph& graph = data.train_graph;
  if (static_cast<std::size_t>(model.zs.rows()) != graph.num_nodes()) {
    throw ContractViolation("model and training graph disagree on the node count");
  }
  const auto adjacency = model.config.mode == Mode::nmm_gnn
                             ? normalized_adjacency(graph)
                             : std::shared_ptr<const ad::SparseMatrix>();
  Rng rng(optim_config.seed);
  const bool has_val = !data.val_pos.empty() && !data.val_neg.empty();
  const bool early_stop = has_val && optim_config.patience > 0;
  auto val_auc = [&](const Matrix& zs, const Matrix& zh) {
    if (!has_val) return kNaN;
    return auc(score_pairs(model, zs, zh, data.val_pos), score_pairs(model, zs, zh, data.val_neg));
  };

  TrainResult result;
  double best_auc = -std::numeric_limits<double>::infinity();
  Model best = model;
  // Returns true when training should stop.
  auto log_epoch = [&](int epoch, const LossValues& losses, const Matrix& zs, const Matrix& zh) {
    if (!finite(losses)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " (non-finite loss); try a smaller step size");
    }
    EpochRecord rec{epoch, losses, val_auc(zs, zh)};
    result.trace.push_back(rec);
    if (!early_stop) return false;
    // Ties go to the later state: tiny validation sets plateau quickly.
    if (rec.val_auc >= best_auc) {
      best_auc = rec.val_auc;
      result.best_epoch = epoch;
      best = model;
      best.zs = zs;
      best.zh = zh;
    }
    return epoch - result.best_epoch >= optim_config.patience;
  };
  auto guarded = [&](int epoch, auto&& fn) {
    try {
      return fn();
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " +
                           e.what() + "; try a smaller step size");
    }
  };

  const std::size_t k = count_active(data.active, graph.num_nodes());
  if (optim_config.batch_size == 0 && k <= loss_config.k_dense) {
    const ReconTarget target = dense_target(graph, data.active);
    for (int epoch = 0; epoch <= optim_config.epochs; ++epoch) {
      const std::uint64_t noise = rng();
      const StepResult step = guarded(epoch, [&] {
        return loss_and_gradients(model, adjacency, target, data.active, loss_config, noise);
      });
      if (log_epoch(epoch, step.losses, step.zs, step.zh)) {
        result.stopped_early = epoch < optim_config.epochs;
        break;
      }
      if (epoch == optim_config.epochs) break;
      guarded(epoch, [&] { apply_gradients(model, step.grads, optim_config); return 0; });
    }
  } else {
    std::vector<Edge> edges;
    for (const Edge& e : graph.edges()) {
      if (data.active.empty() ||
          (data.active[static_cast<std::size_t>(e.src)] && data.active[static_cast<std::size_t>(e.dst)])) {
        edges.push_back(e);
      }
    }
    auto current = [&] { return embed(model, graph); };
    {
      const ReconTarget target = full_target(data, loss_config, rng);
      const std::uint64_t noise = rng();
      const LossValues l = guarded(0, [&] {
        return loss_values(model, adjacency, target, data.active, loss_config, noise);
      });
      const auto [zs, zh] = current();
      log_epoch(0, l, zs, zh);
    }
    const std::size_t batch = optim_config.batch_size == 0
                                  ? std::max<std::size_t>(edges.size(), 1)
                                  : optim_config.batch_size;
    for (int epoch = 1; epoch <= optim_config.epochs; ++epoch) {
      std::shuffle(edges.begin(), edges.end(), rng);
      LossValues sum;
      int steps = 0;
      for (std::size_t start = 0; start < std::max<std::size_t>(edges.size(), 1); start += batch) {
        const std::size_t stop = std::min(edges.size(), start + batch);
        const std::vector<Edge> part(edges.begin() + static_cast<std::ptrdiff_t>(start),
                                     edges.begin() + static_cast<std::ptrdiff_t>(stop));
        const ReconTarget target =
            sampled_target(graph, data.active, part, loss_config.negative_sample_ratio, rng);
        const std::uint64_t noise = rng();
        const StepResult step = guarded(epoch, [&] {
          return loss_and_gradients(model, adjacency, target, data.active, loss_config, noise);
        });
        guarded(epoch, [&] { apply_gradients(model, step.grads, optim_config); return 0; });
        sum.recon += step.losses.recon;
        sum.kl_s += step.losses.kl_s;
        sum.kl_h += step.losses.kl_h;
        sum.unify += step.losses.unify;
        sum.l_s += step.losses.l_s;
        sum.l_h += step.losses.l_h;
        ++steps;
      }
      const double inv = 1.0 / steps;
      const LossValues mean{sum.recon * inv, sum.kl_s * inv, sum.kl_h * inv,
                            sum.unify * inv, sum.l_s * inv,  sum.l_h * inv};
      const auto [zs, zh] = current();
      if (model.config.mode == Mode::nmm_gnn) {
        model.zs = zs;
        model.zh = zh;
      }
      if (log_epoch(epoch, mean, zs, zh)) {
        result.stopped_early = epoch < optim_config.epochs;
        break;
      }
    }
  }

  if (early_stop) {
    model = std::move(best);
  } else if (model.config.mode == Mode::nmm_gnn) {
    std::tie(model.zs, model.zh) = embed(model, graph);
  }
  return result;
}

void write_trace(const std::vector<EpochRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# epoch\tl_s\tl_h\tl_unify\tval_auc\n";
  for (const EpochRecord& r : trace) {
    out << r.epoch << '\t' << r.losses.l_s << '\t' << r.losses.l_h << '\t' << r.losses.unify
        << '\t';
    if (std::isnan(r.val_auc)) {
      out << "nan";
    } else {
      out << r.val_auc;
    }
    out << '\n';
  }
}

}  // namespace nmm
