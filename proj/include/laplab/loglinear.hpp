#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/model.hpp"
#include "laplab/optimize.hpp"
#include "laplab/potentials.hpp"

namespace laplab {

/// Tabular log-linear family over a small set of variables. Parameters are
/// the free entries of zero-normalized tables on `scopes`, packed in scope
/// order exactly like ParamLayout; E(x) = sum of the active entries.
///
/// Domain states are encoded mixed-radix with the first domain node most
/// significant (the ProbabilityTable convention).
class LogLinearFamily {
 public:
  LogLinearFamily(NodeSet domain, CliqueSystem scopes, const Cardinalities& global_cards);

  const NodeSet& domain() const { return domain_; }
  const CliqueSystem& scopes() const { return layout_.cliques(); }
  const ParamLayout& layout() const { return layout_; }
  const std::vector<int>& local_cards() const { return local_cards_; }
  std::size_t dimension() const { return layout_.dimension(); }
  /// Throws CapExceeded above `cap`.
  std::uint64_t num_states(std::uint64_t cap) const { return state_space_size(local_cards_, cap); }

  /// Position of a domain node in the local configuration.
  std::size_t position(NodeId node) const;
  std::uint64_t encode(std::span<const int> local_config) const;
  void decode(std::uint64_t state, std::span<int> local_config) const;
  /// Parameter index of scope s at this configuration, or -1 if some scope node is in state 0.
  long feature(std::size_t s, std::span<const int> local_config) const;
  /// Appends the parameter indices active at the configuration.
  void active_features(std::span<const int> local_config, std::vector<std::size_t>& out) const;

 private:
  NodeSet domain_;
  ParamLayout layout_;
  std::vector<int> local_cards_;
  std::vector<std::vector<std::size_t>> scope_positions_;
};

/// Normalized weights over encoded domain states, ascending by state.
struct WeightedPatterns {
  std::vector<std::uint64_t> states;
  std::vector<double> weights;
};

/// Empirical distribution of the data restricted to `domain`.
WeightedPatterns patterns_from_data(const Dataset& data, const LogLinearFamily& family);
/// A probability table over exactly the family's domain (zero entries dropped).
WeightedPatterns patterns_from_table(const ProbabilityTable& table, const LogLinearFamily& family);

/// Average log-likelihood of the target under the family:
///   value = -alpha . t - log Z(alpha),   gradient = E_alpha[phi] - t.
/// Enumerates the domain; throws CapExceeded beyond `cap` states.
Objective marginal_objective(std::shared_ptr<const LogLinearFamily> family, const WeightedPatterns& target,
                             std::uint64_t cap = kDefaultEnumerationCap);

/// Average conditional log-likelihood of x_j given the rest of the domain.
/// Every scope of the family must contain j.
Objective conditional_objective(std::shared_ptr<const LogLinearFamily> family, NodeId j,
                                const WeightedPatterns& target);

/// Sum of block objectives over a shared vector: block b reads coordinate
/// maps[b][k] of the shared vector as its parameter k.
Objective sum_objectives(std::vector<Objective> blocks, std::vector<std::vector<std::size_t>> maps,
                         std::size_t dimension, std::string tag);

}  // namespace laplab
