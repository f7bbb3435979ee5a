#include "nmm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "nmm/error.hpp"

namespace nmm {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::size_t rounded(double x) { return static_cast<std::size_t>(std::llround(x)); }

// Draws `count` distinct non-edges of `graph` with both endpoints accepted by
// `allowed`, avoiding anything already in `taken`.
std::vector<NodePair> sample_non_edges(
    const Graph& graph, std::size_t count, std::mt19937_64& rng,
    const std::vector<NodeId>& pool_a, const std::vector<NodeId>& pool_b,
    std::set<std::pair<NodeId, NodeId>>& taken) {
  std::vector<NodePair> out;
  if (count == 0) return out;
  if (pool_a.empty() || pool_b.empty()) {
    throw ContractViolation("graph too small to sample negative pairs");
  }
  std::uniform_int_distribution<std::size_t> pick_a(0, pool_a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, pool_b.size() - 1);
  const std::uint64_t budget = 1000 * (count + 100);
  std::uint64_t tries = 0;
  while (out.size() < count) {
    if (++tries > budget) {
      throw ContractViolation("graph too small: not enough non-edges for the split");
    }
    NodeId a = pool_a[pick_a(rng)];
    NodeId b = pool_b[pick_b(rng)];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (graph.has_edge(a, b) || graph.has_edge(b, a)) continue;
    if (!taken.insert({a, b}).second) continue;
    out.push_back({a, b});
  }
  return out;
}

std::vector<NodePair> as_pairs(const std::vector<Edge>& edges) {
  std::vector<NodePair> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.push_back({e.src, e.dst});
  return out;
}

}  // namespace

Graph::Graph(std::size_t num_nodes, bool directed)
    : num_nodes_(num_nodes), directed_(directed) {}

void Graph::check_node(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= num_nodes_) {
    throw ContractViolation("node id " + std::to_string(id) + " out of range");
  }
}

std::pair<NodeId, NodeId> Graph::key(NodeId src, NodeId dst) const {
  if (!directed_ && src > dst) return {dst, src};
  return {src, dst};
}

void Graph::add_edge(NodeId src, NodeId dst, double weight) {
  check_node(src);
  check_node(dst);
  if (src == dst) throw ContractViolation("self-loops are not stored");
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ContractViolation("edge weights must be positive and finite");
  }
  weights_[key(src, dst)] += weight;
}

bool Graph::has_edge(NodeId src, NodeId dst) const {
  return weights_.count(key(src, dst)) > 0;
}

double Graph::weight(NodeId src, NodeId dst) const {
  const auto it = weights_.find(key(src, dst));
  return it == weights_.end() ? 0.0 : it->second;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(weights_.size());
  for (const auto& [k, w] : weights_) out.push_back({k.first, k.second, w});
  return out;
}

std::vector<std::vector<std::pair<NodeId, double>>> Graph::in_neighbors() const {
  std::vector<std::vector<std::pair<NodeId, double>>> nbrs(num_nodes_);
  for (const auto& [k, w] : weights_) {
    nbrs[static_cast<std::size_t>(k.second)].push_back({k.first, w});
    if (!directed_) nbrs[static_cast<std::size_t>(k.first)].push_back({k.second, w});
  }
  for (auto& list : nbrs) std::sort(list.begin(), list.end());
  return nbrs;
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(num_nodes_, 0);
  for (const auto& [k, w] : weights_) {
    ++deg[static_cast<std::size_t>(k.first)];
    ++deg[static_cast<std::size_t>(k.second)];
  }
  return deg;
}

void Graph::set_original_ids(std::vector<std::string> ids) {
  if (!ids.empty() && ids.size() != num_nodes_) {
    throw ContractViolation("original id list has the wrong length");
  }
  original_ids_ = std::move(ids);
}

std::string Graph::original_id(NodeId id) const {
  check_node(id);
  if (original_ids_.empty()) return std::to_string(id);
  return original_ids_[static_cast<std::size_t>(id)];
}

void Graph::set_labels(std::vector<std::vector<int>> labels, int num_classes) {
  if (labels.size() != num_nodes_) {
    throw ContractViolation("label list has the wrong length");
  }
  for (const auto& row : labels) {
    for (int c : row) {
      if (c < 0 || c >= num_classes) throw ContractViolation("class id out of range");
    }
  }
  labels_ = std::move(labels);
  num_classes_ = num_classes;
}

void Graph::set_features(Matrix features) {
  if (static_cast<std::size_t>(features.rows()) != num_nodes_) {
    throw ContractViolation("feature matrix needs one row per node");
  }
  features_ = std::move(features);
}

Graph parse_edge_list(std::istream& in, const std::string& source_name) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> names;
  struct Raw {
    NodeId src, dst;
    double weight;
  };
  std::vector<Raw> raw;
  auto intern = [&](const std::string& s) {
    const auto [it, inserted] = ids.emplace(s, static_cast<NodeId>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    auto fail = [&](const std::string& why) {
      throw ContractViolation(source_name + ":" + std::to_string(line_no) +
                              ": " + why);
    };
    if (fields.size() < 2 || fields.size() > 3) fail("expected 'src dst [weight]'");
    double w = 1.0;
    if (fields.size() == 3) {
      std::size_t used = 0;
      try {
        w = std::stod(fields[2], &used);
      } catch (const std::exception&) {
        fail("weight is not a number");
      }
      if (used != fields[2].size()) fail("weight is not a number");
      if (!(w > 0.0) || !std::isfinite(w)) fail("weight must be positive");
    }
    const NodeId s = intern(fields[0]);
    const NodeId d = intern(fields[1]);
    raw.push_back({s, d, w});
  }
  if (names.empty()) throw ContractViolation(source_name + ": empty graph");

  Graph g(names.size(), /*directed=*/true);
  for (const Raw& r : raw) {
    if (r.src != r.dst) g.add_edge(r.src, r.dst, r.weight);
  }
  g.set_original_ids(std::move(names));
  return g;
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open edge list " + path.string());
  return parse_edge_list(in, path.string());
}

void save_edge_list(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  out.precision(17);
  for (const Edge& e : graph.edges()) {
    out << graph.original_id(e.src) << '\t' << graph.original_id(e.dst);
    if (e.weight != 1.0) out << '\t' << e.weight;
    out << '\n';
  }
}

void save_id_map(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    out << graph.original_id(static_cast<NodeId>(i)) << '\t' << i << '\n';
  }
}

std::size_t load_labels(Graph& graph, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open label file " + path.string());
  std::unordered_map<std::string, NodeId> node_of;
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    node_of.emplace(graph.original_id(static_cast<NodeId>(i)), static_cast<NodeId>(i));
  }
  std::unordered_map<std::string, int> class_of;
  std::vector<std::vector<int>> labels(graph.num_nodes());
  std::string line;
  std::size_t line_no = 0, skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw ContractViolation(where + ": expected 'node class'");
    const auto node = node_of.find(fields[0]);
    if (node == node_of.end()) {
      ++skipped;
      continue;
    }
    const auto [it, inserted] =
        class_of.emplace(fields[1], static_cast<int>(class_of.size()));
    auto& row = labels[static_cast<std::size_t>(node->second)];
    if (std::find(row.begin(), row.end(), it->second) == row.end()) {
      row.push_back(it->second);
    }
  }
  for (auto& row : labels) std::sort(row.begin(), row.end());
  graph.set_labels(std::move(labels), static_cast<int>(class_of.size()));
  return skipped;
}

void save_labels(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  for (std::size_t i = 0; i < graph.labels().size(); ++i) {
    for (int c : graph.labels()[i]) {
      out << graph.original_id(static_cast<NodeId>(i)) << '\t' << c << '\n';
    }
  }
}

Graph symmetrize(const Graph& graph) {
  if (!graph.directed()) return graph;
  Graph out(graph.num_nodes(), /*directed=*/false);
  for (const Edge& e : graph.edges()) {
    const double existing = out.weight(e.src, e.dst);
    if (e.weight > existing) out.add_edge(e.src, e.dst, e.weight - existing);
  }
  out.set_original_ids(graph.original_ids());
  if (graph.has_labels()) out.set_labels(graph.labels(), graph.num_classes());
  if (graph.features()) out.set_features(*graph.features());
  return out;
}

Graph with_edges(const Graph& like, const std::vector<Edge>& edges) {
  Graph out(like.num_nodes(), like.directed());
  for (const Edge& e : edges) out.add_edge(e.src, e.dst, e.weight);
  out.set_original_ids(like.original_ids());
  if (like.has_labels()) out.set_labels(like.labels(), like.num_classes());
  if (like.features()) out.set_features(*like.features());
  return out;
}

Split make_split(const Graph& graph, std::uint64_t seed, double train_frac,
                 double val_frac) {
  if (graph.directed()) {
    throw ContractViolation("make_split expects an undirected graph; symmetrize first");
  }
  if (!(train_frac > 0.0 && train_frac < 1.0) || !(val_frac >= 0.0 && val_frac < 1.0)) {
    throw ContractViolation("split fractions must lie in (0, 1)");
  }
  std::vector<Edge> edges = graph.edges();
  const std::size_t n_train = rounded(train_frac * static_cast<double>(edges.size()));
  const std::size_t pool = edges.size() - n_train;
  if (n_train == 0 || pool == 0) {
    throw ContractViolation("graph too small to satisfy the split fractions");
  }
  const std::size_t n_val = rounded(val_frac * static_cast<double>(pool));

  std::mt19937_64 rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);

  Split s;
  s.train.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(s.train.begin(), s.train.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  const std::vector<Edge> held(edges.begin() + static_cast<std::ptrdiff_t>(n_train), edges.end());
  const auto held_pairs = as_pairs(held);
  s.val_pos.assign(held_pairs.begin(), held_pairs.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test_pos.assign(held_pairs.begin() + static_cast<std::ptrdiff_t>(n_val), held_pairs.end());

  std::vector<NodeId> all(graph.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  std::set<std::pair<NodeId, NodeId>> taken;
  auto negatives = sample_non_edges(graph, pool, rng, all, all, taken);
  s.val_neg.assign(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test_neg.assign(negatives.begin() + static_cast<std::ptrdiff_t>(n_val), negatives.end());
  return s;
}

Split make_inductive_split(const Graph& graph, std::uint64_t seed,
                           double node_frac, double val_frac) {
  if (graph.directed()) {
    throw ContractViolation("make_inductive_split expects an undirected graph");
  }
  if (!(node_frac > 0.0 && node_frac < 1.0)) {
    throw ContractViolation("node fraction must lie in (0, 1)");
  }
  const std::size_t n = graph.num_nodes();
  const std::size_t n_seen = rounded(node_frac * static_cast<double>(n));
  if (n_seen < 2 || n - n_seen < 2) {
    throw ContractViolation("graph too small for the requested node fraction");
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);

  Split s;
  s.inductive = true;
  s.node_frac = node_frac;
  s.train_nodes.assign(n, false);
  for (std::size_t i = 0; i < n_seen; ++i) {
    s.train_nodes[static_cast<std::size_t>(order[i])] = true;
  }
  std::vector<NodeId> seen, unseen;
  for (std::size_t i = 0; i < n; ++i) {
    (s.train_nodes[i] ? seen : unseen).push_back(static_cast<NodeId>(i));
  }

  std::vector<Edge> inner, outer;
  for (const Edge& e : graph.edges()) {
    const bool a = s.train_nodes[static_cast<std::size_t>(e.src)];
    const bool b = s.train_nodes[static_cast<std::size_t>(e.dst)];
    if (a && b) {
      inner.push_back(e);
    } else if (!a && !b) {
      s.test_pos.push_back({e.src, e.dst});
    } else {
      s.context.push_back(e);
    }
  }
  if (inner.empty() || s.test_pos.empty()) {
    throw ContractViolation("inductive split left no training or test edges");
  }
  std::shuffle(inner.begin(), inner.end(), rng);
  const std::size_t n_val = rounded(val_frac * static_cast<double>(inner.size()));
  const auto inner_pairs = as_pairs(inner);
  s.val_pos.assign(inner_pairs.begin(), inner_pairs.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(inner.begin() + static_cast<std::ptrdiff_t>(n_val), inner.end());
  std::sort(s.train.begin(), s.train.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });

  std::set<std::pair<NodeId, NodeId>> taken;
  s.val_neg = sample_non_edges(graph, s.val_pos.size(), rng, seen, seen, taken);
  s.test_neg = sample_non_edges(graph, s.test_pos.size(), rng, unseen, unseen, taken);
  return s;
}

void save_split(const Split& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  out.precision(17);
  out << "#inductive\t" << (split.inductive ? 1 : 0) << '\t' << split.node_frac << '\n';
  for (std::size_t i = 0; i < split.train_nodes.size(); ++i) {
    if (split.train_nodes[i]) out << "train_node\t" << i << '\n';
  }
  for (const Edge& e : split.train) {
    out << "train\t" << e.src << '\t' << e.dst << '\t' << e.weight << '\n';
  }
  for (const Edge& e : split.context) {
    out << "context\t" << e.src << '\t' << e.dst << '\t' << e.weight << '\n';
  }
  auto pairs = [&](const char* tag, const std::vector<NodePair>& v) {
    for (const NodePair& p : v) out << tag << '\t' << p.a << '\t' << p.b << '\n';
  };
  pairs("val_pos", split.val_pos);
  pairs("val_neg", split.val_neg);
  pairs("test_pos", split.test_pos);
  pairs("test_neg", split.test_neg);
}

Split load_split(const std::filesystem::path& path, std::size_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open split file " + path.string());
  Split s;
  std::string line;
  std::size_t line_no = 0;
  auto node = [&](const std::string& tok) {
    const NodeId id = std::stoll(tok);
    if (id < 0 || static_cast<std::size_t>(id) >= num_nodes) {
      throw ContractViolation(path.string() + ":" + std::to_string(line_no) +
                              ": node id out of range");
    }
    return id;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_fields(line);
    if (f.empty()) continue;
    if (f[0] == "#inductive") {
      s.inductive = f.at(1) == "1";
      s.node_frac = std::stod(f.at(2));
      if (s.inductive) s.train_nodes.assign(num_nodes, false);
    } else if (f[0] == "train_node") {
      s.train_nodes.at(static_cast<std::size_t>(node(f.at(1)))) = true;
    } else if (f[0] == "train" || f[0] == "context") {
      Edge e{node(f.at(1)), node(f.at(2)), std::stod(f.at(3))};
      (f[0] == "train" ? s.train : s.context).push_back(e);
    } else {
      NodePair p{node(f.at(1)), node(f.at(2))};
      if (f[0] == "val_pos") s.val_pos.push_back(p);
      else if (f[0] == "val_neg") s.val_neg.push_back(p);
      else if (f[0] == "test_pos") s.test_pos.push_back(p);
      else if (f[0] == "test_neg") s.test_neg.push_back(p);
      else throw ContractViolation(path.string() + ": unknown record '" + f[0] + "'");
    }
  }
  return s;
}

}  // namespace nmm
