#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "laplab/graph.hpp"

namespace laplab {

/// Per-node state counts K_i >= 2, indexed by node id.
using Cardinalities = std::vector<int>;

/// Product of cardinalities; throws CapExceeded above `cap`.
std::uint64_t state_space_size(std::span<const int> cards, std::uint64_t cap);

/// Energy table over a clique, normalized with respect to zero: every entry
/// whose configuration has some coordinate in state 0 is exactly 0.
///
/// Full tables are row-major with the first scope node most significant.
/// Free entries (all coordinates >= 1) use the same ordering over states 1..K-1.
class PotentialTable {
 public:
  PotentialTable() = default;
  PotentialTable(Clique scope, std::vector<int> scope_cards);
  /// Throws std::invalid_argument on a size mismatch or a non-finite value.
  PotentialTable(Clique scope, std::vector<int> scope_cards, std::span<const double> free_values);

  const Clique& scope() const { return scope_; }
  const std::vector<int>& cards() const { return cards_; }
  std::size_t table_size() const { return energies_.size(); }
  std::size_t free_size() const { return free_size_; }

  /// Throws std::out_of_range on a state outside its cardinality.
  double energy(std::span<const int> scope_config) const;
  double energy_at(std::size_t flat_index) const { return energies_[flat_index]; }
  const std::vector<double>& energies() const { return energies_; }

  std::vector<double> free_values() const;
  double max_abs() const;

 private:
  Clique scope_;
  std::vector<int> cards_;
  std::vector<double> energies_;
  std::size_t free_size_ = 0;
};

/// Number of free entries of a table: prod (K_i - 1).
std::size_t free_size(std::span<const int> scope_cards);

/// Flat row-major index of a scope configuration; -1 if any state is 0.
/// Assumes states are in range.
long free_index(std::span<const int> scope_cards, std::span<const int> scope_config);

/// Index map from (clique, configuration with all coordinates >= 1) to a
/// position in the packed parameter vector. Cliques keep system order.
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(CliqueSystem cliques, const Cardinalities& cards);

  std::size_t dimension() const { return dimension_; }
  std::size_t num_cliques() const { return cliques_.size(); }
  const CliqueSystem& cliques() const { return cliques_; }
  const Clique& clique(std::size_t c) const { return cliques_[c]; }
  std::size_t offset(std::size_t c) const { return offsets_[c]; }
  std::size_t dim(std::size_t c) const { return offsets_[c + 1] - offsets_[c]; }
  const std::vector<int>& scope_cards(std::size_t c) const { return scope_cards_[c]; }
  std::optional<std::size_t> find(const Clique& clique) const { return cliques_.index_of(clique); }

  /// Throws std::out_of_range unless every state is in 1..K-1.
  std::size_t position(std::size_t c, std::span<const int> free_config) const;

  bool operator==(const ParamLayout& other) const {
    return cliques_ == other.cliques_ && scope_cards_ == other.scope_cards_;
  }

 private:
  CliqueSystem cliques_;
  std::vector<std::vector<int>> scope_cards_;
  std::vector<std::size_t> offsets_{0};
  std::size_t dimension_ = 0;
};

/// Packed free entries of a list of normalized tables.
struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  std::vector<double> values;

  std::span<const double> clique_values(std::size_t c) const {
    return std::span<const double>(values).subspan(layout->offset(c), layout->dim(c));
  }
};

ParamVector pack(const std::vector<PotentialTable>& tables);
/// Throws std::invalid_argument if values.size() != layout dimension.
std::vector<PotentialTable> unpack(const ParamLayout& layout, std::span<const double> values);
inline std::vector<PotentialTable> unpack(const ParamVector& v) { return unpack(*v.layout, v.values); }

/// Table of (conditional) probabilities over a set of nodes, row-major with
/// the first node of `scope` most significant.
struct ProbabilityTable {
  NodeSet scope;
  std::vector<int> cards;
  std::vector<double> values;

  std::size_t flat_index(std::span<const int> config) const;
  void decode(std::size_t flat, std::span<int> config) const;
  double sum() const;
};

inline constexpr double kMinProbability = 1e-300;
inline constexpr std::size_t kMaxExtractionScope = 16;

/// Unique zero-normalized Gibbs potentials reproducing a strictly positive
/// joint, by Moebius inversion of log p(x_b, 0 elsewhere) over subsets b.
/// Every nonempty subset of the scope is considered; tables whose largest
/// magnitude is <= `zero_tol` are dropped. Result sorted by clique.
/// Throws std::invalid_argument on entries below kMinProbability and
/// CapExceeded on scopes larger than kMaxExtractionScope.
std::vector<PotentialTable> extract_canonical_potentials(const ProbabilityTable& joint,
                                                         double zero_tol = 0.0);

}  // namespace laplab
