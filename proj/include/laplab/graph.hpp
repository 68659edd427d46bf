#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace laplab {

using NodeId = int;

/// Sorted, duplicate-free list of node ids.
using NodeSet = std::vector<NodeId>;

/// Sorts and deduplicates.
NodeSet make_node_set(std::vector<NodeId> nodes);
bool contains(const NodeSet& set, NodeId node);
bool is_subset(const NodeSet& sub, const NodeSet& super);
NodeSet set_union(const NodeSet& a, const NodeSet& b);
NodeSet set_difference(const NodeSet& a, const NodeSet& b);
bool intersects(const NodeSet& a, const NodeSet& b);

/// Nonempty set of nodes in canonical ascending order.
class Clique {
 public:
  Clique() = default;
  /// Throws std::invalid_argument on an empty list or a repeated node.
  explicit Clique(std::vector<NodeId> nodes);

  const NodeSet& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  NodeId operator[](std::size_t k) const { return nodes_[k]; }
  bool contains(NodeId node) const;
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }

  /// "3-4-7"; used as the clique column of result files.
  std::string label(char sep = '-') const;

  auto operator<=>(const Clique&) const = default;

 private:
  NodeSet nodes_;
};

/// Ordered list of distinct cliques. Insertion order is preserved; it fixes
/// the parameter packing order of any model built on the system.
class CliqueSystem {
 public:
  CliqueSystem() = default;
  /// Throws std::invalid_argument if a clique is listed twice.
  explicit CliqueSystem(std::vector<Clique> cliques);

  /// Returns false (and leaves the system unchanged) if already present.
  bool insert(Clique clique);

  std::size_t size() const { return cliques_.size(); }
  bool empty() const { return cliques_.empty(); }
  const Clique& operator[](std::size_t k) const { return cliques_[k]; }
  auto begin() const { return cliques_.begin(); }
  auto end() const { return cliques_.end(); }
  const std::vector<Clique>& cliques() const { return cliques_; }

  std::optional<std::size_t> index_of(const Clique& clique) const;
  bool contains(const Clique& clique) const { return index_of(clique).has_value(); }
  /// True if `nodes` is a subset of at least one listed clique.
  bool covers(const NodeSet& nodes) const;

  /// Copy sorted lexicographically by node list.
  CliqueSystem sorted() const;

  bool operator==(const CliqueSystem& other) const { return cliques_ == other.cliques_; }

 private:
  std::vector<Clique> cliques_;
};

/// Simple undirected graph on nodes 0..M-1. Immutable once built.
class UndirectedGraph {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  UndirectedGraph() = default;
  /// Duplicate edges are merged. Throws std::invalid_argument on self-loops
  /// or endpoints >= num_nodes.
  explicit UndirectedGraph(std::size_t num_nodes, const std::vector<Edge>& edges = {});

  std::size_t num_nodes() const { return adjacency_.size(); }
  std::size_t num_edges() const { return num_edges_; }
  bool has_edge(NodeId a, NodeId b) const;
  /// Adjacency list of `node`, ascending. Throws std::out_of_range.
  const NodeSet& adjacent(NodeId node) const;
  /// Canonical edge list: first < second, lexicographic.
  std::vector<Edge> edges() const;

  void check_node(NodeId node) const;

  bool operator==(const UndirectedGraph& other) const { return adjacency_ == other.adjacency_; }

 private:
  std::vector<NodeSet> adjacency_;
  std::size_t num_edges_ = 0;
};

/// Graph over a subset of nodes of a parent graph. Local node k corresponds
/// to parent node `nodes[k]`.
struct SubGraph {
  NodeSet nodes;
  UndirectedGraph graph;

  NodeId to_parent(NodeId local) const { return nodes.at(static_cast<std::size_t>(local)); }
  /// Edges mapped back to parent ids.
  std::vector<UndirectedGraph::Edge> parent_edges() const;
};

inline constexpr std::size_t kDefaultCliqueCap = 1'000'000;

NodeSet neighbors(const UndirectedGraph& g, NodeId j);

/// All maximal cliques, ascending lexicographic order. Bron-Kerbosch with
/// Tomita pivoting; throws CapExceeded once more than `cap` are found.
CliqueSystem maximal_cliques(const UndirectedGraph& g, std::size_t cap = kDefaultCliqueCap);

/// A_q: union of all cliques of the system that intersect q.
/// Throws std::invalid_argument if q is not covered by the system.
NodeSet one_neighbourhood(const CliqueSystem& cliques, const Clique& q);

/// q together with the neighbours of j. Throws std::invalid_argument if j is not in q.
NodeSet one_node_neighbourhood(const UndirectedGraph& g, const Clique& q, NodeId j);

/// True when some path i, s_1, ..., s_n, j with n >= 1 has every s_k outside A.
/// The bare edge (i, j) does not count.
bool relative_path_connected(const UndirectedGraph& g, const NodeSet& A, NodeId i, NodeId j);

/// Graph on A whose edges are the pairs path connected with respect to V \ A.
SubGraph induced_graph(const UndirectedGraph& g, const NodeSet& A);

/// Subgraph of g spanned by A (edges internal to A only).
SubGraph internal_subgraph(const UndirectedGraph& g, const NodeSet& A);

/// Maximal cliques (parent ids) of the marginal graph on A: internal edges of
/// A plus the induced edges.
CliqueSystem marginal_clique_system(const UndirectedGraph& g, const NodeSet& A);

/// Strong LAP condition for clique q inside domain A (q must be a subset of A).
/// For |q| >= 2: some pair of q is path disconnected with respect to V \ A.
/// For a single node: the node has no neighbour outside A.
bool strong_lap_satisfied(const UndirectedGraph& g, const NodeSet& A, const Clique& q);

/// Every nonempty subset of every clique, ordered by size then lexicographically.
CliqueSystem downward_closure(const CliqueSystem& cliques);

/// Pairs of A that are path connected with respect to V \ A, in parent ids.
std::vector<UndirectedGraph::Edge> induced_edges(const UndirectedGraph& g, const NodeSet& A);

}  // namespace laplab
