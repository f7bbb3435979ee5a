// nmm: train / eval / generate front-end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "nmm/error.hpp"
#include "nmm/pipeline.hpp"
#include "nmm/synth.hpp"

namespace {

using namespace nmm;
namespace fs = std::filesystem;

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "hom=S,rank=H" in any order; either key may be omitted.
Geometry parse_space(const std::string& text, double radius) {
  Geometry g;
  g.radius = radius;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--space: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "hom" && value == "S") {
      g.hom = HomSpace::spherical;
    } else if (key == "hom" && value == "E") {
      g.hom = HomSpace::euclidean;
    } else if (key == "rank" && value == "H") {
      g.rank = RankSpace::hyperbolic;
    } else if (key == "rank" && value == "E") {
      g.rank = RankSpace::euclidean;
    } else {
      throw UsageError("--space: unsupported entry '" + item + "'");
    }
  }
  return g;
}

Graph read_graph(const fs::path& path, const std::string& labels) {
  Graph g = symmetrize(load_edge_list(path));
  if (!labels.empty()) {
    const std::size_t skipped = load_labels(g, labels);
    if (skipped > 0) std::cerr << "warning: skipped " << skipped << " label lines for unknown nodes\n";
  }
  return g;
}

struct TrainFlags {
  std::string graph, labels, out, mode = "nmm", space = "hom=S,rank=H", kl_mode = "map";
  int dim = 16, hidden = 32, layers = 2, epochs = 200, patience = 20;
  double radius = 0.5, eta = 0.05, lambda_a = 8.0, neg_ratio = 1.0, node_frac = 0.5;
  std::optional<double> gamma_fixed;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  bool no_unify = false, no_softmax = false, one_hot = false, no_prefactor = false;
  bool inductive = false;

  TrainOptions options() const {
    TrainOptions t;
    t.model.mode = parse_mode(mode);
    t.model.geometry = parse_space(space, radius);
    t.model.encoder.dim = dim;
    t.model.encoder.hidden = hidden;
    t.model.encoder.layers = layers;
    t.model.encoder.softmax_last = !no_softmax;
    t.model.encoder.one_hot_inputs = one_hot;
    t.model.gamma_fixed = gamma_fixed;
    t.loss.lambda_a = lambda_a;
    t.loss.negative_sample_ratio = neg_ratio;
    if (kl_mode == "map") {
      t.loss.kl_mode = KlMode::map;
    } else if (kl_mode == "montecarlo") {
      t.loss.kl_mode = KlMode::montecarlo;
    } else {
      throw UsageError("--kl-mode must be map or montecarlo");
    }
    t.loss.unify = !no_unify;
    t.optim.eta = eta;
    t.optim.epochs = epochs;
    t.optim.batch_size = batch_size;
    t.optim.seed = seed;
    t.optim.patience = patience;
    t.optim.rsgd_prefactor = !no_prefactor;
    t.inductive = inductive;
    t.node_frac = node_frac;
    t.validate();
    return t;
  }
};

void add_train(CLI::App& app, TrainFlags& f) {
  app.add_option("--graph", f.graph, "Edge list (src dst [weight])")->required()->check(CLI::ExistingFile);
  app.add_option("--labels", f.labels, "Node labels (node class_id)")->check(CLI::ExistingFile);
  app.add_option("--mode", f.mode, "nmm or nmm-gnn")->capture_default_str();
  app.add_option("--dim", f.dim, "Embedding dimension d")->capture_default_str();
  app.add_option("--wS", f.radius, "Sphere radius w")->capture_default_str();
  app.add_option("--eta", f.eta, "Step size")->capture_default_str();
  app.add_option("--lambdaA", f.lambda_a, "Reconstruction weight")->capture_default_str();
  app.add_option("--epochs", f.epochs)->capture_default_str();
  app.add_option("--seed", f.seed)->capture_default_str();
  app.add_option("--space", f.space, "hom=<S|E>,rank=<H|E>")->capture_default_str();
  app.add_flag("--no-unify", f.no_unify, "Drop the space unification loss");
  app.add_option("--gamma-fixed", f.gamma_fixed, "Freeze the mixture weight");
  app.add_option("--batch-size", f.batch_size, "Training edges per step (0 = full batch)")
      ->capture_default_str();
  app.add_option("--patience", f.patience, "Early stopping patience (0 = off)")->capture_default_str();
  app.add_option("--neg-ratio", f.neg_ratio, "Sampled negatives per positive")->capture_default_str();
  app.add_option("--kl-mode", f.kl_mode, "map or montecarlo")->capture_default_str();
  app.add_option("--hidden", f.hidden, "Encoder hidden width")->capture_default_str();
  app.add_option("--layers", f.layers, "Encoder layers")->capture_default_str();
  app.add_flag("--no-softmax", f.no_softmax, "Identity activation on the last encoder layer");
  app.add_flag("--one-hot", f.one_hot, "One-hot encoder inputs for featureless graphs");
  app.add_flag("--no-prefactor", f.no_prefactor, "Plain tangent projection in spherical RSGD");
  app.add_flag("--inductive", f.inductive, "Hold out nodes instead of edges");
  app.add_option("--node-frac", f.node_frac, "Fraction of nodes seen in training")->capture_default_str();
  app.add_option("--out", f.out, "Run directory")->required();
}

int cmd_train(const TrainFlags& f) {
  TrainOptions options;
  try {
    options = f.options();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const Graph g = read_graph(f.graph, f.labels);
  const TrainOutput run = run_training(g, options);
  save_run(run, g, options, f.out);
  const EpochRecord& last = run.result.trace.back();
  std::cout << "trained " << run.result.trace.size() - 1 << " epochs, best " << run.result.best_epoch
            << ", l_s " << last.losses.l_s << ", l_h " << last.losses.l_h << ", gamma "
            << run.model.mixture.gamma() << '\n';
  return 0;
}

struct EvalFlags {
  std::string model, graph, labels;
  bool inductive = false;
  std::optional<double> node_frac;
};

int cmd_eval(const EvalFlags& f) {
  const fs::path dir = f.model;
  const TrainOptions options = load_train_options(dir);
  if (f.inductive != options.inductive) {
    throw UsageError(std::string("model was trained ") +
                     (options.inductive ? "inductively; pass --inductive" : "transductively"));
  }
  if (f.node_frac && std::abs(*f.node_frac - options.node_frac) > 1e-12) {
    throw UsageError("--node-frac differs from the training run");
  }
  std::string labels = f.labels;
  if (labels.empty() && fs::exists(dir / "labels.tsv")) labels = (dir / "labels.tsv").string();
  const Graph g = read_graph(f.graph, labels);
  const Model model = load_model(dir, g);
  const Split split = load_split(dir / "split.tsv", g.num_nodes());
  const Report r = evaluate(model, g, split, options.loss, options.optim.seed);
  write_report(r, std::cout);
  std::ofstream out(dir / "report.tsv");
  if (!out) throw NumericalError("cannot write report.tsv");
  write_report(r, out);
  return 0;
}

struct GenerateFlags {
  std::string kind, out;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  MixedParams mixed;
  double mix = 0.5;
  int dim = 8;
  double radius = 0.5, gamma = 0.5, j = 4.0, b = 2.0, c = 4.0, d = 0.0;
  double lambda = 2.0, zeta = 0.5, alignment = 1.0;
};

void write_model_truth(const GeneratedGraph& gen, const fs::path& dir) {
  std::ofstream emb(dir / "embeddings.csv");
  emb << std::setprecision(std::numeric_limits<double>::max_digits10) << "id";
  for (Eigen::Index k = 0; k < gen.zs.cols(); ++k) emb << ",s" << k;
  for (Eigen::Index k = 0; k < gen.zh.cols(); ++k) emb << ",h" << k;
  emb << '\n';
  for (Eigen::Index i = 0; i < gen.zs.rows(); ++i) {
    emb << i;
    for (Eigen::Index k = 0; k < gen.zs.cols(); ++k) emb << ',' << gen.zs(i, k);
    for (Eigen::Index k = 0; k < gen.zh.cols(); ++k) emb << ',' << gen.zh(i, k);
    emb << '\n';
  }
  std::ofstream prob(dir / "oracle.tsv");
  prob << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index a = 0; a < gen.prob.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < gen.prob.cols(); ++b) prob << a << '\t' << b << '\t' << gen.prob(a, b) << '\n';
  }
  if (!emb || !prob) throw NumericalError("cannot write generator truth files");
}

int cmd_generate(const GenerateFlags& f) {
  const fs::path dir = f.out;
  Graph g;
  std::optional<GeneratedGraph> gen;
  if (f.kind == "homophily") {
    g = gen_homophily(f.n, f.mixed.clusters, f.mixed.p_in, f.mixed.p_out, f.seed);
  } else if (f.kind == "influence") {
    g = gen_influence(f.n, f.mixed.attach_m, f.seed);
  } else if (f.kind == "mixed") {
    g = gen_mixed(f.n, f.mix, f.seed, f.mixed);
  } else {
    GenerativeParams p;
    p.mixture = MixtureParams::from_constrained(f.j, f.b, f.c, f.d, f.gamma);
    p.spherical = SphericalPrior{Vector::Constant(f.dim, 1.0 / std::sqrt(double(f.dim))), f.lambda, 1.0};
    p.hyperbolic = HyperbolicPrior{Vector::Zero(f.dim + 1), f.zeta};
    p.radius = f.radius;
    p.alignment_frac = f.alignment;
    gen = gen_from_model(p, f.n, f.seed);
    g = gen->graph;
  }
  fs::create_directories(dir);
  save_edge_list(g, dir / "graph.tsv");
  if (g.has_labels()) save_labels(g, dir / "labels.tsv");
  if (gen) write_model_truth(*gen, dir);
  std::cout << "generated " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Euclidean mixture model for link prediction"};
  app.require_subcommand(1);

  TrainFlags tf;
  add_train(*app.add_subcommand("train", "Train a model and write a run directory"), tf);

  EvalFlags ef;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a run directory");
  eval->add_option("--model", ef.model, "Run directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--graph", ef.graph, "Edge list used for training")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", ef.labels, "Node labels")->check(CLI::ExistingFile);
  eval->add_flag("--inductive", ef.inductive, "Evaluate an inductive run");
  eval->add_option("--node-frac", ef.node_frac, "Must match the training run");

  GenerateFlags gf;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic graph");
  gen->add_option("--kind", gf.kind, "homophily, influence, mixed or model")
      ->required()
      ->check(CLI::IsMember({"homophily", "influence", "mixed", "model"}));
  gen->add_option("--n", gf.n, "Node count")->capture_default_str();
  gen->add_option("--seed", gf.seed)->capture_default_str();
  gen->add_option("--clusters", gf.mixed.clusters)->capture_default_str();
  gen->add_option("--p-in", gf.mixed.p_in)->capture_default_str();
  gen->add_option("--p-out", gf.mixed.p_out)->capture_default_str();
  gen->add_option("--attach-m", gf.mixed.attach_m)->capture_default_str();
  gen->add_option("--mix", gf.mix, "Homophily share for --kind mixed")->capture_default_str();
  gen->add_option("--dim", gf.dim)->capture_default_str();
  gen->add_option("--wS", gf.radius)->capture_default_str();
  gen->add_option("--gamma", gf.gamma)->capture_default_str();
  gen->add_option("--J", gf.j)->capture_default_str();
  gen->add_option("--B", gf.b)->capture_default_str();
  gen->add_option("--C", gf.c)->capture_default_str();
  gen->add_option("--D", gf.d)->capture_default_str();
  gen->add_option("--lambda", gf.lambda, "Spherical prior sharpness")->capture_default_str();
  gen->add_option("--zeta", gf.zeta, "Hyperbolic prior dispersion")->capture_default_str();
  gen->add_option("--alignment", gf.alignment, "Fraction of radially aligned nodes")
      ->capture_default_str();
  gen->add_option("--out", gf.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (app.got_subcommand("train")) return cmd_train(tf);
    if (app.got_subcommand("eval")) return cmd_eval(ef);
    return cmd_generate(gf);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
