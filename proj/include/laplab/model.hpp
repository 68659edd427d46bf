#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/potentials.hpp"
#include "laplab/rng.hpp"

namespace laplab {

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// Graph, parameter cliques and cardinalities of a discrete MRF, without
/// parameter values.
class ModelStructure {
 public:
  ModelStructure() = default;
  /// Every pair inside a clique must be an edge of `graph`; cards must have
  /// one entry >= 2 per node.
  ModelStructure(UndirectedGraph graph, CliqueSystem cliques, Cardinalities cards);

  /// Graph made of the clique pairs plus `extra_edges`.
  static ModelStructure from_cliques(std::size_t num_nodes, CliqueSystem cliques, Cardinalities cards,
                                     const std::vector<UndirectedGraph::Edge>& extra_edges = {});

  const UndirectedGraph& graph() const { return graph_; }
  const CliqueSystem& cliques() const { return layout_->cliques(); }
  const Cardinalities& cards() const { return cards_; }
  const ParamLayout& layout() const { return *layout_; }
  std::shared_ptr<const ParamLayout> layout_ptr() const { return layout_; }
  std::size_t num_nodes() const { return cards_.size(); }
  std::size_t dimension() const { return layout_->dimension(); }
  /// Indices of the cliques containing node j.
  const std::vector<std::size_t>& cliques_of(NodeId j) const { return cliques_of_.at(j); }

 private:
  UndirectedGraph graph_;
  Cardinalities cards_;
  std::shared_ptr<const ParamLayout> layout_ = std::make_shared<const ParamLayout>();
  std::vector<std::vector<std::size_t>> cliques_of_;
};

/// p(x_target | x_{scope \ target}) stored over the whole scope; for every
/// assignment of the other nodes the entries over the target state sum to 1.
struct ConditionalTable {
  NodeId target = -1;
  ProbabilityTable table;
};

/// Gibbs density p(x) = exp(-sum_c E_c(x_c)) / Z with one zero-normalized
/// table per clique of the structure.
class MrfModel {
 public:
  MrfModel() = default;
  /// Parameters packed in the structure's layout order.
  MrfModel(ModelStructure structure, std::vector<double> parameters);

  const ModelStructure& structure() const { return structure_; }
  const std::vector<double>& parameters() const { return parameters_; }
  const std::vector<PotentialTable>& tables() const { return tables_; }
  ParamVector param_vector() const { return ParamVector{structure_.layout_ptr(), parameters_}; }

  /// -sum_c E_c(x_c). Throws std::out_of_range on an invalid state.
  double log_unnormalized(std::span<const int> x) const;
  /// Energy of the cliques containing node j when x_j takes `state`.
  double local_energy(NodeId j, std::span<const int> x, int state) const;

  /// log Z, by enumeration with a max shift. Throws CapExceeded.
  double log_partition_function(std::uint64_t cap = kDefaultEnumerationCap) const;
  ProbabilityTable joint(std::uint64_t cap = kDefaultEnumerationCap) const;
  ProbabilityTable exact_marginal(const NodeSet& A, std::uint64_t cap = kDefaultEnumerationCap) const;
  ConditionalTable exact_conditional(NodeId j, const NodeSet& A,
                                     std::uint64_t cap = kDefaultEnumerationCap) const;

 private:
  ModelStructure structure_;
  std::vector<double> parameters_;
  std::vector<PotentialTable> tables_;
};

/// N complete observations of M variables, row-major.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t num_vars, std::vector<int> values);

  std::size_t num_samples() const { return num_vars_ ? values_.size() / num_vars_ : 0; }
  std::size_t num_vars() const { return num_vars_; }
  std::span<const int> row(std::size_t n) const {
    return std::span<const int>(values_).subspan(n * num_vars_, num_vars_);
  }
  const std::vector<int>& values() const { return values_; }
  /// First n rows.
  Dataset head(std::size_t n) const;

  /// Throws std::invalid_argument when a value is outside its cardinality.
  void validate(const Cardinalities& cards) const;

  bool operator==(const Dataset& other) const = default;

 private:
  std::size_t num_vars_ = 0;
  std::vector<int> values_;
};

/// Per clique, counts of each full-table configuration (row-major, first
/// scope node most significant). Each clique's counts sum to N.
std::vector<std::vector<std::size_t>> sufficient_statistics(const Dataset& data, const ModelStructure& s);

/// I.i.d. draws from the exact joint by cumulative table inversion.
Dataset sample_exact(const MrfModel& m, std::size_t n, Rng& rng, std::uint64_t cap = kDefaultEnumerationCap);

struct GibbsConfig {
  std::size_t burn_in = 1000;  // sweeps
  std::size_t thinning = 10;   // sweeps between recorded samples; 0 records every sweep
};

/// Systematic-scan single-site Gibbs chain started from a uniform random state.
Dataset sample_gibbs(const MrfModel& m, std::size_t n, const GibbsConfig& cfg, Rng& rng);

}  // namespace laplab
