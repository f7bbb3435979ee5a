#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nmm/manifold.hpp"

namespace nmm {

using NodeId = std::int64_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct NodePair {
  NodeId a = 0;
  NodeId b = 0;

  friend bool operator==(const NodePair&, const NodePair&) = default;
};

// Weighted graph over dense node ids [0, N). Undirected graphs store each
// edge once with src < dst. Self-loops are never stored and duplicate edges
// are merged by summing their weights.
class Graph {
 public:
  explicit Graph(std::size_t num_nodes = 0, bool directed = false);

  std::size_t num_nodes() const { return num_nodes_; }
  bool directed() const { return directed_; }
  std::size_t num_edges() const { return weights_.size(); }

  // Adds weight to (src, dst), creating the edge if needed. Self-loops are
  // rejected with ContractViolation.
  void add_edge(NodeId src, NodeId dst, double weight = 1.0);
  bool has_edge(NodeId src, NodeId dst) const;
  double weight(NodeId src, NodeId dst) const;
  // Sorted by (src, dst).
  std::vector<Edge> edges() const;
  // Neighbors j with an edge j -> i (undirected: any incident edge), sorted.
  std::vector<std::vector<std::pair<NodeId, double>>> in_neighbors() const;
  std::vector<std::size_t> degrees() const;

  // Original identifiers (from the loaded file) for each dense id. Empty
  // when the graph was built in memory; then the dense id is the identifier.
  const std::vector<std::string>& original_ids() const { return original_ids_; }
  void set_original_ids(std::vector<std::string> ids);
  std::string original_id(NodeId id) const;

  // Multi-label class membership per node; empty when unlabeled.
  const std::vector<std::vector<int>>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  void set_labels(std::vector<std::vector<int>> labels, int num_classes);
  bool has_labels() const { return num_classes_ > 0; }

  const std::optional<Matrix>& features() const { return features_; }
  void set_features(Matrix features);

 private:
  std::pair<NodeId, NodeId> key(NodeId src, NodeId dst) const;
  void check_node(NodeId id) const;

  std::size_t num_nodes_;
  bool directed_;
  std::map<std::pair<NodeId, NodeId>, double> weights_;
  std::vector<std::string> original_ids_;
  std::vector<std::vector<int>> labels_;
  int num_classes_ = 0;
  std::optional<Matrix> features_;
};

// Edge list reader: one `src<TAB>dst[<TAB>weight]` per line (any run of
// blanks is accepted as a separator), `#` comments, blank lines skipped.
// Identifiers are remapped to dense ids in order of first appearance.
// The loaded graph is directed; apply `symmetrize` for the undirected
// protocol. Self-loops are dropped.
Graph load_edge_list(const std::filesystem::path& path);
Graph parse_edge_list(std::istream& in, const std::string& source_name);
void save_edge_list(const Graph& graph, const std::filesystem::path& path);

// `original<TAB>dense` lines.
void save_id_map(const Graph& graph, const std::filesystem::path& path);

// `node<TAB>class_id` lines; a node may appear on several lines. Node
// identifiers are resolved through the graph's original ids; class names map
// to dense ids in order of first appearance. Lines naming
// nodes absent from the graph (isolated nodes never appear in an edge list)
// are skipped; returns how many were.
std::size_t load_labels(Graph& graph, const std::filesystem::path& path);
void save_labels(const Graph& graph, const std::filesystem::path& path);

// Undirected copy of `graph`; antiparallel edges merge to the larger weight.
// Undirected input is returned unchanged.
Graph symmetrize(const Graph& graph);

// Graph with the same node set (and ids / labels / features) but only the
// listed edges.
Graph with_edges(const Graph& like, const std::vector<Edge>& edges);

struct Split {
  std::vector<Edge> train;
  std::vector<NodePair> test_pos;
  std::vector<NodePair> test_neg;
  std::vector<NodePair> val_pos;
  std::vector<NodePair> val_neg;

  // Inductive splits only: nodes visible during training, and the edges
  // between seen and unseen nodes that are revealed for message passing at
  // evaluation time.
  bool inductive = false;
  double node_frac = 1.0;
  std::vector<bool> train_nodes;
  std::vector<Edge> context;
};

// Transductive edge holdout on an undirected graph: round(train_frac * E)
// edges are kept for training, the rest form the held-out pool of which
// round(val_frac * pool) become validation positives and the remainder test
// positives. Each positive set is paired with as many uniformly drawn
// non-edges of the original graph.
Split make_split(const Graph& graph, std::uint64_t seed,
                 double train_frac = 0.9, double val_frac = 0.1);

// Node holdout: round(node_frac * N) nodes are visible during training.
// Edges among visible nodes are split into train / validation by val_frac;
// edges among unseen nodes are the test positives; edges between the two
// sets become context.
Split make_inductive_split(const Graph& graph, std::uint64_t seed,
                           double node_frac, double val_frac = 0.1);

void save_split(const Split& split, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path, std::size_t num_nodes);

}  // namespace nmm
