#include "nmm/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "nmm/error.hpp"
#include "nmm/eval.hpp"

namespace nmm {
namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kl_mode_name(KlMode m) { return m == KlMode::map ? "map" : "montecarlo"; }

KlMode parse_kl_mode(const std::string& s) {
  if (s == "map") return KlMode::map;
  if (s == "montecarlo") return KlMode::montecarlo;
  throw ContractViolation("unknown KL mode '" + s + "'");
}

}  // namespace

void TrainOptions::validate() const {
  model.validate();
  loss.validate();
  optim.validate();
  if (inductive && !(node_frac > 0.0 && node_frac < 1.0)) {
    throw ContractViolation("--node-frac must lie in (0, 1)");
  }
}

TrainOutput run_training(const Graph& graph, const TrainOptions& options) {
  options.validate();
  const Graph g = symmetrize(graph);
  const Split split = options.inductive
                          ? make_inductive_split(g, options.optim.seed, options.node_frac)
                          : make_split(g, options.optim.seed);
  return run_training(g, split, options);
}

TrainOutput run_training(const Graph& graph, const Split& split, const TrainOptions& options) {
  options.validate();
  const Graph g = symmetrize(graph);
  const TrainData data = make_train_data(g, split);
  TrainOutput out;
  out.split = split;
  out.model = init_model(data.train_graph, options.model, options.optim.seed);
  out.result = train(out.model, data, options.loss, options.optim);
  // Store embeddings for every node under the evaluation graph.
  std::tie(out.model.zs, out.model.zh) = embed(out.model, eval_graph(g, split));
  return out;
}

void save_run(const TrainOutput& run, const Graph& graph, const TrainOptions& options,
              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_model(run.model, graph, dir);
  write_trace(run.result.trace, dir / "trace.tsv");
  save_split(run.split, dir / "split.tsv");
  save_id_map(graph, dir / "id_map.tsv");
  if (graph.has_labels()) save_labels(graph, dir / "labels.tsv");

  const OptimConfig& o = options.optim;
  const LossConfig& l = options.loss;
  json j;
  j["seed"] = o.seed;
  j["eta"] = o.eta;
  j["epochs"] = o.epochs;
  j["batch_size"] = o.batch_size;
  j["patience"] = o.patience;
  j["rsgd_prefactor"] = o.rsgd_prefactor;
  j["lambda_a"] = l.lambda_a;
  j["negative_sample_ratio"] = l.negative_sample_ratio;
  j["kl_mode"] = kl_mode_name(l.kl_mode);
  j["k_dense"] = l.k_dense;
  j["jitter"] = l.jitter;
  j["unify"] = l.unify;
  j["inductive"] = options.inductive;
  j["node_frac"] = options.node_frac;
  j["best_epoch"] = run.result.best_epoch;
  j["stopped_early"] = run.result.stopped_early;
  std::ofstream out(dir / "train.json");
  if (!out) throw NumericalError("cannot write " + (dir / "train.json").string());
  out << j.dump(2) << '\n';
}

TrainOptions load_train_options(const std::filesystem::path& dir) {
  std::ifstream in(dir / "train.json");
  if (!in) throw NumericalError("cannot open " + (dir / "train.json").string());
  TrainOptions t;
  try {
    const json j = json::parse(in);
    t.optim.seed = j.at("seed").get<std::uint64_t>();
    t.optim.eta = j.at("eta").get<double>();
    t.optim.epochs = j.at("epochs").get<int>();
    t.optim.batch_size = j.at("batch_size").get<std::size_t>();
    t.optim.patience = j.at("patience").get<int>();
    t.optim.rsgd_prefactor = j.at("rsgd_prefactor").get<bool>();
    t.loss.lambda_a = j.at("lambda_a").get<double>();
    t.loss.negative_sample_ratio = j.at("negative_sample_ratio").get<double>();
    t.loss.kl_mode = parse_kl_mode(j.at("kl_mode").get<std::string>());
    t.loss.k_dense = j.at("k_dense").get<std::size_t>();
    t.loss.jitter = j.at("jitter").get<double>();
    t.loss.unify = j.at("unify").get<bool>();
    t.inductive = j.at("inductive").get<bool>();
    t.node_frac = j.at("node_frac").get<double>();
  } catch (const json::exception& e) {
    throw ContractViolation("train.json: " + std::string(e.what()));
  }
  return t;
}

Report evaluate(const Model& model, const Graph& graph, const Split& split,
                const LossConfig& loss, std::uint64_t seed) {
  const Graph g = symmetrize(graph);
  Report r;
  const auto [zs, zh] = embed(model, eval_graph(g, split));
  r.auc = auc(score_pairs(model, zs, zh, split.test_pos),
              score_pairs(model, zs, zh, split.test_neg));
  r.gamma = model.mixture.gamma();

  r.ji = r.hl = r.f1 = kNaN;
  if (g.has_labels()) {
    const ClassifyResult c = classify(tangent_features(model, zs, zh), g.labels(),
                                      g.num_classes(), seed);
    if (!c.test_nodes.empty()) {
      const MultilabelMetrics m = multilabel_metrics(c.test_pred, c.test_truth);
      r.ji = m.ji;
      r.hl = m.hl;
      r.f1 = m.f1;
    }
  }

  const TrainData data = make_train_data(g, split);
  Rng rng(seed);
  const ReconTarget target = full_target(data, loss, rng);
  const auto adjacency =
      model.config.mode == Mode::nmm_gnn ? normalized_adjacency(data.train_graph) : nullptr;
  Model at_train = model;
  if (model.config.mode == Mode::nmm) {
    at_train.zs = zs;
    at_train.zh = zh;
  }
  r.losses = loss_values(at_train, adjacency, target, data.active, loss, seed);
  return r;
}

void write_report(const Report& report, std::ostream& out) {
  const auto put = [&](const char* key, double v) {
    out << key << '\t';
    if (std::isnan(v)) {
      out << "nan";
    } else {
      out << v;
    }
    out << '\n';
  };
  const auto old = out.precision(10);
  put("auc", report.auc);
  put("ji", report.ji);
  put("hl", report.hl);
  put("f1", report.f1);
  put("gamma", report.gamma);
  put("l_recon", report.losses.recon);
  put("l_kl_s", report.losses.kl_s);
  put("l_kl_h", report.losses.kl_h);
  put("l_unify", report.losses.unify);
  out.precision(old);
}

}  // namespace nmm
