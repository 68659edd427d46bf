#include "laplab/graph.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <iterator>
#include <stdexcept>

#include "laplab/error.hpp"

namespace laplab {

NodeSet make_node_set(std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

bool contains(const NodeSet& set, NodeId node) {
  return std::binary_search(set.begin(), set.end(), node);
}

bool is_subset(const NodeSet& sub, const NodeSet& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

NodeSet set_difference(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool intersects(const NodeSet& a, const NodeSet& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return false;
}

// ---------------------------------------------------------------- Clique

Clique::Clique(std::vector<NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("clique must be nonempty");
  std::sort(nodes.begin(), nodes.end());
  if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
    throw std::invalid_argument("clique lists a node twice");
  }
  if (nodes.front() < 0) throw std::invalid_argument("negative node id in clique");
  nodes_ = std::move(nodes);
}

bool Clique::contains(NodeId node) const { return laplab::contains(nodes_, node); }

std::string Clique::label(char sep) const {
  std::string out;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (k) out += sep;
    out += std::to_string(nodes_[k]);
  }
  return out;
}

// ---------------------------------------------------------- CliqueSystem

CliqueSystem::CliqueSystem(std::vector<Clique> cliques) {
  for (auto& c : cliques) {
    if (!insert(std::move(c))) throw std::invalid_argument("clique listed twice in clique system");
  }
}

bool CliqueSystem::insert(Clique clique) {
  if (contains(clique)) return false;
  cliques_.push_back(std::move(clique));
  return true;
}

std::optional<std::size_t> CliqueSystem::index_of(const Clique& clique) const {
  auto it = std::find(cliques_.begin(), cliques_.end(), clique);
  if (it == cliques_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cliques_.begin());
}

bool CliqueSystem::covers(const NodeSet& nodes) const {
  return std::any_of(cliques_.begin(), cliques_.end(),
                     [&](const Clique& c) { return is_subset(nodes, c.nodes()); });
}

CliqueSystem CliqueSystem::sorted() const {
  auto copy = cliques_;
  std::sort(copy.begin(), copy.end());
  CliqueSystem out;
  out.cliques_ = std::move(copy);
  return out;
}

// ------------------------------------------------------- UndirectedGraph

UndirectedGraph::UndirectedGraph(std::size_t num_nodes, const std::vector<Edge>& edges)
    : adjacency_(num_nodes) {
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes ||
        static_cast<std::size_t>(b) >= num_nodes) {
      throw std::invalid_argument("edge endpoint out of range: " + std::to_string(a) + " " +
                                  std::to_string(b));
    }
    if (a == b) throw std::invalid_argument("self-loop on node " + std::to_string(a));
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& adj : adjacency_) {
    adj = make_node_set(std::move(adj));
    num_edges_ += adj.size();
  }
  num_edges_ /= 2;
}

void UndirectedGraph::check_node(NodeId node) const {
  if (node < 0 || static_cast<std::size_t>(node) >= adjacency_.size()) {
    throw std::out_of_range("node id " + std::to_string(node) + " out of range (graph has " +
                            std::to_string(adjacency_.size()) + " nodes)");
  }
}

bool UndirectedGraph::has_edge(NodeId a, NodeId b) const {
  check_node(a);
  check_node(b);
  return laplab::contains(adjacency_[a], b);
}

const NodeSet& UndirectedGraph::adjacent(NodeId node) const {
  check_node(node);
  return adjacency_[node];
}

std::vector<UndirectedGraph::Edge> UndirectedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges_);
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    for (NodeId b : adjacency_[a]) {
      if (static_cast<std::size_t>(b) > a) out.emplace_back(static_cast<NodeId>(a), b);
    }
  }
  return out;
}

std::vector<UndirectedGraph::Edge> SubGraph::parent_edges() const {
  std::vector<UndirectedGraph::Edge> out;
  for (auto [a, b] : graph.edges()) out.emplace_back(to_parent(a), to_parent(b));
  return out;
}

// ------------------------------------------------------------ operations

NodeSet neighbors(const UndirectedGraph& g, NodeId j) { return g.adjacent(j); }

namespace {

struct CliqueSearch {
  const UndirectedGraph& g;
  std::size_t cap;
  std::vector<Clique> found;

  NodeSet intersect_adj(const NodeSet& set, NodeId v) const {
    NodeSet out;
    const auto& adj = g.adjacent(v);
    std::set_intersection(set.begin(), set.end(), adj.begin(), adj.end(), std::back_inserter(out));
    return out;
  }

  void expand(NodeSet& r, NodeSet p, NodeSet x) {
    if (p.empty() && x.empty()) {
      if (found.size() >= cap) {
        throw CapExceeded("maximal clique enumeration exceeded cap of " + std::to_string(cap));
      }
      found.emplace_back(r);
      return;
    }
    // Tomita pivot: vertex of P u X with most neighbours in P.
    NodeId pivot = -1;
    std::size_t best = 0;
    for (const NodeSet* s : {&p, &x}) {
      for (NodeId u : *s) {
        auto n = intersect_adj(p, u).size();
        if (pivot < 0 || n > best) {
          pivot = u;
          best = n;
        }
      }
    }
    NodeSet candidates = set_difference(p, g.adjacent(pivot));
    for (NodeId v : candidates) {
      r.push_back(v);
      expand(r, intersect_adj(p, v), intersect_adj(x, v));
      r.pop_back();
      p.erase(std::lower_bound(p.begin(), p.end(), v));
      x.insert(std::lower_bound(x.begin(), x.end(), v), v);
    }
  }
};

// Nodes of A reachable from `source` through paths whose interior avoids A.
NodeSet externally_reachable(const UndirectedGraph& g, const NodeSet& A, NodeId source) {
  const auto n = g.num_nodes();
  std::vector<char> seen(n, 0);
  std::deque<NodeId> queue;
  for (NodeId s : g.adjacent(source)) {
    if (!contains(A, s) && !seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  NodeSet hit;
  while (!queue.empty()) {
    NodeId s = queue.front();
    queue.pop_front();
    for (NodeId t : g.adjacent(s)) {
      if (contains(A, t)) {
        if (t != source) hit.push_back(t);
      } else if (!seen[t]) {
        seen[t] = 1;
        queue.push_back(t);
      }
    }
  }
  return make_node_set(std::move(hit));
}

void check_domain(const UndirectedGraph& g, const NodeSet& A) {
  if (A.empty()) throw std::invalid_argument("node set must be nonempty");
  for (NodeId v : A) g.check_node(v);
}

}  // namespace

CliqueSystem maximal_cliques(const UndirectedGraph& g, std::size_t cap) {
  CliqueSearch search{g, cap, {}};
  NodeSet all(g.num_nodes());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<NodeId>(v);
  NodeSet r;
  if (!all.empty()) search.expand(r, all, {});
  std::sort(search.found.begin(), search.found.end());
  return CliqueSystem(std::move(search.found));
}

NodeSet one_neighbourhood(const CliqueSystem& cliques, const Clique& q) {
  if (!cliques.covers(q.nodes())) {
    throw std::invalid_argument("clique " + q.label() + " is not covered by the clique system");
  }
  NodeSet out = q.nodes();
  for (const auto& c : cliques) {
    if (intersects(c.nodes(), q.nodes())) out = set_union(out, c.nodes());
  }
  return out;
}

NodeSet one_node_neighbourhood(const UndirectedGraph& g, const Clique& q, NodeId j) {
  if (!q.contains(j)) {
    throw std::invalid_argument("node " + std::to_string(j) + " is not in clique " + q.label());
  }
  return set_union(q.nodes(), g.adjacent(j));
}

bool relative_path_connected(const UndirectedGraph& g, const NodeSet& A, NodeId i, NodeId j) {
  check_domain(g, A);
  if (i == j) throw std::invalid_argument("relative path connectivity needs two distinct nodes");
  if (!contains(A, i) || !contains(A, j)) {
    throw std::invalid_argument("both endpoints must belong to the node set");
  }
  return contains(externally_reachable(g, A, i), j);
}

SubGraph induced_graph(const UndirectedGraph& g, const NodeSet& A) {
  check_domain(g, A);
  std::vector<UndirectedGraph::Edge> edges;
  for (std::size_t a = 0; a < A.size(); ++a) {
    for (NodeId t : externally_reachable(g, A, A[a])) {
      auto b = static_cast<std::size_t>(std::lower_bound(A.begin(), A.end(), t) - A.begin());
      if (b > a) edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
  }
  return SubGraph{A, UndirectedGraph(A.size(), edges)};
}

SubGraph internal_subgraph(const UndirectedGraph& g, const NodeSet& A) {
  check_domain(g, A);
  std::vector<UndirectedGraph::Edge> edges;
  for (std::size_t a = 0; a < A.size(); ++a) {
    for (std::size_t b = a + 1; b < A.size(); ++b) {
      if (g.has_edge(A[a], A[b])) edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
  }
  return SubGraph{A, UndirectedGraph(A.size(), edges)};
}

std::vector<UndirectedGraph::Edge> induced_edges(const UndirectedGraph& g, const NodeSet& A) {
  return induced_graph(g, A).parent_edges();
}

CliqueSystem marginal_clique_system(const UndirectedGraph& g, const NodeSet& A) {
  auto internal = internal_subgraph(g, A);
  auto induced = induced_graph(g, A);
  auto edges = internal.graph.edges();
  auto extra = induced.graph.edges();
  edges.insert(edges.end(), extra.begin(), extra.end());
  UndirectedGraph marginal(A.size(), edges);
  std::vector<Clique> out;
  for (const auto& c : maximal_cliques(marginal)) {
    std::vector<NodeId> nodes;
    for (NodeId v : c) nodes.push_back(A[static_cast<std::size_t>(v)]);
    out.emplace_back(std::move(nodes));
  }
  std::sort(out.begin(), out.end());
  return CliqueSystem(std::move(out));
}

bool strong_lap_satisfied(const UndirectedGraph& g, const NodeSet& A, const Clique& q) {
  check_domain(g, A);
  if (!is_subset(q.nodes(), A)) {
    throw std::invalid_argument("clique " + q.label() + " is not contained in the domain");
  }
  if (q.size() == 1) {
    const auto& adj = g.adjacent(q[0]);
    return std::all_of(adj.begin(), adj.end(), [&](NodeId v) { return contains(A, v); });
  }
  for (std::size_t a = 0; a < q.size(); ++a) {
    auto reach = externally_reachable(g, A, q[a]);
    for (std::size_t b = a + 1; b < q.size(); ++b) {
      if (!contains(reach, q[b])) return true;
    }
  }
  return false;
}

CliqueSystem downward_closure(const CliqueSystem& cliques) {
  std::vector<Clique> all;
  for (const auto& c : cliques) {
    if (c.size() > 24) throw CapExceeded("downward closure of a clique with more than 24 nodes");
    const std::uint32_t n = static_cast<std::uint32_t>(c.size());
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      std::vector<NodeId> nodes;
      for (std::uint32_t k = 0; k < n; ++k) {
        if (mask & (1u << k)) nodes.push_back(c[k]);
      }
      all.emplace_back(std::move(nodes));
    }
  }
  std::sort(all.begin(), all.end(), [](const Clique& a, const Clique& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return CliqueSystem(std::move(all));
}

}  // namespace laplab
