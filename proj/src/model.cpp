#include "nmm/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nmm/error.hpp"

namespace nmm {
namespace {

using nlohmann::json;

constexpr std::uint64_t kWeightSeedMix = 0x9E3779B97F4A7C15ULL;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) {
      throw ContractViolation("params.json: ragged weight matrix");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

const char* mode_name(Mode mode) { return mode == Mode::nmm ? "nmm" : "nmm-gnn"; }

Mode parse_mode(const std::string& text) {
  if (text == "nmm") return Mode::nmm;
  if (text == "nmm-gnn") return Mode::nmm_gnn;
  throw ContractViolation("unknown mode '" + text + "' (expected nmm or nmm-gnn)");
}

void ModelConfig::validate() const {
  encoder.validate();
  if (!(geometry.radius > 0.0 && geometry.radius < 1.0)) {
    throw ContractViolation("sphere radius w must lie in (0, 1)");
  }
  if (gamma_fixed && !(*gamma_fixed >= 0.0 && *gamma_fixed <= 1.0)) {
    throw ContractViolation("fixed gamma must lie in [0, 1]");
  }
}

Model init_model(const Graph& graph, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  const bool one_hot = config.mode == Mode::nmm_gnn && config.encoder.one_hot_inputs;
  const InitialEmbeddings init =
      init_features(graph, config.dim(), config.geometry.radius, seed, one_hot);
  if (config.mode == Mode::nmm) {
    m.zs = init.spherical;
    m.zh = init.hyperbolic;
  } else {
    m.feature_seed = seed;
    m.features = init;
    m.weights = init_weights(config.encoder, static_cast<int>(init.spherical.cols()),
                             static_cast<int>(init.hyperbolic.cols()), seed ^ kWeightSeedMix);
    std::tie(m.zs, m.zh) = encode(graph, m.features, m.weights, config.encoder, config.geometry);
  }
  m.mixture = MixtureParams::from_constrained(1.0, 0.5, 1.0, 0.1, config.gamma_fixed.value_or(0.5));
  m.prior = PriorParams::initial(config.dim());
  return m;
}

std::pair<Matrix, Matrix> embed(const Model& model, const Graph& graph) {
  if (model.config.mode == Mode::nmm) return {model.zs, model.zh};
  if (static_cast<std::size_t>(model.features.spherical.rows()) != graph.num_nodes()) {
    throw ContractViolation("encoder inputs do not match the graph's node count");
  }
  return encode(graph, model.features, model.weights, model.config.encoder,
                model.config.geometry);
}

std::vector<double> score_pairs(const Model& model, const Matrix& zs, const Matrix& zh,
                                const std::vector<NodePair>& pairs) {
  if (pairs.empty()) return {};
  std::vector<Eigen::Index> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const NodePair& p : pairs) {
    if (p.a < 0 || p.b < 0 || p.a >= zs.rows() || p.b >= zs.rows()) {
      throw ContractViolation("score_pairs: node id out of range");
    }
    a.push_back(p.a);
    b.push_back(p.b);
  }
  ad::Tape tape;
  const ParamVars params = record_params(tape, model.mixture, model.prior, false);
  const ad::Var prob = link_probability_pairs(
      tape.constant(zs), tape.constant(zh),
      std::make_shared<const std::vector<Eigen::Index>>(std::move(a)),
      std::make_shared<const std::vector<Eigen::Index>>(std::move(b)), params,
      model.config.geometry);
  const Matrix& v = prob.value();
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix tangent_features(const Model& model, const Matrix& zs, const Matrix& zh) {
  Matrix out(zs.rows(), zs.cols() + zh.cols());
  for (Eigen::Index i = 0; i < zs.rows(); ++i) {
    const Vector s = zs.row(i).transpose();
    const Vector h = zh.row(i).transpose();
    const Vector ts = model.config.geometry.spherical()
                          ? log_map_origin(SphericalPoint::project(s, model.config.geometry.radius)).coords
                          : s;
    const Vector th = model.config.geometry.hyperbolic()
                          ? log_map_origin(HyperbolicPoint::clamped(h)).coords
                          : h;
    out.row(i).head(zs.cols()) = ts.transpose();
    out.row(i).tail(zh.cols()) = th.transpose();
  }
  return out;
}

void save_model(const Model& model, const Graph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (static_cast<std::size_t>(model.zs.rows()) != graph.num_nodes()) {
    throw ContractViolation("save_model: embeddings do not match the graph");
  }
  {
    std::ofstream out(dir / "embeddings.csv");
    if (!out) throw NumericalError("cannot write " + (dir / "embeddings.csv").string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "id";
    for (Eigen::Index j = 0; j < model.zs.cols(); ++j) out << ",s" << j;
    for (Eigen::Index j = 0; j < model.zh.cols(); ++j) out << ",h" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < model.zs.rows(); ++i) {
      out << graph.original_id(i);
      for (Eigen::Index j = 0; j < model.zs.cols(); ++j) out << ',' << model.zs(i, j);
      for (Eigen::Index j = 0; j < model.zh.cols(); ++j) out << ',' << model.zh(i, j);
      out << '\n';
    }
  }

  const ModelConfig& c = model.config;
  json j;
  j["mode"] = mode_name(c.mode);
  j["dim"] = c.dim();
  j["radius"] = c.geometry.radius;
  j["space"] = {{"hom", c.geometry.spherical() ? "S" : "E"},
                {"rank", c.geometry.hyperbolic() ? "H" : "E"}};
  j["encoder"] = {{"hidden", c.encoder.hidden},
                  {"layers", c.encoder.layers},
                  {"softmax_last", c.encoder.softmax_last},
                  {"one_hot_inputs", c.encoder.one_hot_inputs}};
  j["gamma_fixed"] = c.gamma_fixed ? json(*c.gamma_fixed) : json(nullptr);
  j["num_nodes"] = graph.num_nodes();
  j["mixture"] = {{"raw_j", model.mixture.raw_j},     {"raw_b", model.mixture.raw_b},
                  {"raw_c", model.mixture.raw_c},     {"raw_d", model.mixture.raw_d},
                  {"raw_gamma", model.mixture.raw_gamma},
                  {"J", model.mixture.j()},           {"B", model.mixture.b()},
                  {"C", model.mixture.c()},           {"D", model.mixture.d()},
                  {"gamma", model.mixture.gamma()}};
  j["prior"] = {{"beta", std::vector<double>(model.prior.beta.data(),
                                             model.prior.beta.data() + model.prior.beta.size())},
                {"raw_lambda", model.prior.raw_lambda},
                {"raw_amplitude", model.prior.raw_amplitude},
                {"raw_zeta", model.prior.raw_zeta},
                {"lambda", model.prior.lambda()},
                {"amplitude", model.prior.amplitude()},
                {"zeta", model.prior.zeta()}};
  if (c.mode == Mode::nmm_gnn) {
    j["feature_seed"] = model.feature_seed;
    json ws = json::array(), wh = json::array();
    for (const Matrix& w : model.weights.spherical) ws.push_back(matrix_to_json(w));
    for (const Matrix& w : model.weights.hyperbolic) wh.push_back(matrix_to_json(w));
    j["weights"] = {{"spherical", ws}, {"hyperbolic", wh}};
  }
  std::ofstream out(dir / "params.json");
  if (!out) throw NumericalError("cannot write " + (dir / "params.json").string());
  out << j.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& dir, const Graph& graph) {
  std::ifstream in(dir / "params.json");
  if (!in) throw NumericalError("cannot open " + (dir / "params.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractViolation("params.json: " + std::string(e.what()));
  }
  Model m;
  try {
    ModelConfig& c = m.config;
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.encoder.dim = j.at("dim").get<int>();
    c.geometry.radius = j.at("radius").get<double>();
    c.geometry.hom = j.at("space").at("hom") == "S" ? HomSpace::spherical : HomSpace::euclidean;
    c.geometry.rank = j.at("space").at("rank") == "H" ? RankSpace::hyperbolic : RankSpace::euclidean;
    c.encoder.hidden = j.at("encoder").at("hidden").get<int>();
    c.encoder.layers = j.at("encoder").at("layers").get<int>();
    c.encoder.softmax_last = j.at("encoder").at("softmax_last").get<bool>();
    c.encoder.one_hot_inputs = j.at("encoder").value("one_hot_inputs", false);
    if (!j.at("gamma_fixed").is_null()) c.gamma_fixed = j.at("gamma_fixed").get<double>();
    c.validate();
    if (j.at("num_nodes").get<std::size_t>() != graph.num_nodes()) {
      throw ContractViolation("model was trained on a graph with a different node count");
    }
    const json& mx = j.at("mixture");
    m.mixture.raw_j = mx.at("raw_j").get<double>();
    m.mixture.raw_b = mx.at("raw_b").get<double>();
    m.mixture.raw_c = mx.at("raw_c").get<double>();
    m.mixture.raw_d = mx.at("raw_d").get<double>();
    m.mixture.raw_gamma = mx.at("raw_gamma").get<double>();
    const json& pr = j.at("prior");
    const auto beta = pr.at("beta").get<std::vector<double>>();
    m.prior.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    m.prior.raw_lambda = pr.at("raw_lambda").get<double>();
    m.prior.raw_amplitude = pr.at("raw_amplitude").get<double>();
    m.prior.raw_zeta = pr.at("raw_zeta").get<double>();
    if (c.mode == Mode::nmm_gnn) {
      m.feature_seed = j.at("feature_seed").get<std::uint64_t>();
      m.features = init_features(graph, c.dim(), c.geometry.radius, m.feature_seed,
                                 c.encoder.one_hot_inputs);
      for (const json& w : j.at("weights").at("spherical")) m.weights.spherical.push_back(matrix_from_json(w));
      for (const json& w : j.at("weights").at("hyperbolic")) m.weights.hyperbolic.push_back(matrix_from_json(w));
    }
  } catch (const json::exception& e) {
    throw ContractViolation("params.json: " + std::string(e.what()));
  }

  std::ifstream csv(dir / "embeddings.csv");
  if (!csv) throw NumericalError("cannot open " + (dir / "embeddings.csv").string());
  const Eigen::Index d = m.config.dim();
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  m.zs.resize(n, d);
  m.zh.resize(n, d + 1);
  std::string line;
  std::getline(csv, line);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(csv, line)) throw ContractViolation("embeddings.csv: too few rows");
    const auto f = split_csv(line);
    if (static_cast<Eigen::Index>(f.size()) != 2 * d + 2) {
      throw ContractViolation("embeddings.csv: wrong column count on row " + std::to_string(i + 1));
    }
    if (f[0] != graph.original_id(i)) {
      throw ContractViolation("embeddings.csv: node order does not match the graph");
    }
    for (Eigen::Index k = 0; k < d; ++k) m.zs(i, k) = std::stod(f[static_cast<std::size_t>(1 + k)]);
    for (Eigen::Index k = 0; k <= d; ++k) m.zh(i, k) = std::stod(f[static_cast<std::size_t>(1 + d + k)]);
  }
  return m;
}

}  // namespace nmm
