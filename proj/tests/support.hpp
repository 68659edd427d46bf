#pragma once

// Shared fixtures for the unit and acceptance tests. Kept independent of the
// harness generators so that test oracles do not reuse the code under test.

#include <cstdint>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/model.hpp"
#include "laplab/rng.hpp"

namespace laplab::testing {

/// 3x3 grid labels run 1..9 row-major; ids are 0-based.
inline NodeId grid_id(int label) { return label - 1; }
inline NodeSet grid_set(std::initializer_list<int> labels) {
  std::vector<NodeId> ids;
  for (int l : labels) ids.push_back(grid_id(l));
  return make_node_set(ids);
}
inline Clique grid_clique(std::initializer_list<int> labels) { return Clique(grid_set(labels)); }

inline UndirectedGraph grid_graph(int rows, int cols) {
  std::vector<UndirectedGraph::Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  }
  return UndirectedGraph(static_cast<std::size_t>(rows * cols), edges);
}

inline UndirectedGraph complete_graph(int m) {
  std::vector<UndirectedGraph::Edge> edges;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) edges.emplace_back(a, b);
  }
  return UndirectedGraph(static_cast<std::size_t>(m), edges);
}

// Relative path connectivity fixture: i=0, j=1, k=2 and outer nodes 1..6 at ids 3..8.
inline constexpr NodeId kPathI = 0, kPathJ = 1, kPathK = 2;
inline UndirectedGraph relative_path_graph() {
  auto o = [](int label) { return label + 2; };
  return UndirectedGraph(9, {{kPathI, kPathJ}, {kPathI, kPathK}, {kPathJ, kPathK}, {kPathJ, o(6)}, {kPathJ, o(4)},
                             {o(6), o(4)}, {kPathI, o(5)}, {o(5), o(1)}, {o(2), o(1)}, {o(2), kPathK},
                             {kPathK, o(3)}, {o(3), o(4)}});
}

inline UndirectedGraph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<UndirectedGraph::Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < p) edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
  }
  return UndirectedGraph(n, edges);
}

/// Unary plus pairwise structure of a graph, unaries first then edges.
inline ModelStructure pairwise_structure(const UndirectedGraph& g, int card = 2) {
  CliqueSystem cs;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) cs.insert(Clique({static_cast<NodeId>(v)}));
  for (auto [a, b] : g.edges()) cs.insert(Clique({a, b}));
  return ModelStructure(g, cs, Cardinalities(g.num_nodes(), card));
}

inline std::vector<double> uniform_params(std::size_t d, double w, Rng& rng) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.uniform(-w, w);
  return v;
}

/// Random model whose pairwise couplings are bounded away from zero.
inline MrfModel generic_pairwise_model(const UndirectedGraph& g, Rng& rng, int card = 2) {
  auto s = pairwise_structure(g, card);
  std::vector<double> params(s.dimension());
  const auto& layout = s.layout();
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    for (std::size_t k = 0; k < layout.dim(c); ++k) {
      double v = rng.uniform(-1, 1);
      if (layout.clique(c).size() > 1) v = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.5, 1.5);
      params[layout.offset(c) + k] = v;
    }
  }
  return MrfModel(s, params);
}

}  // namespace laplab::testing
