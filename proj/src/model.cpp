#include "laplab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "laplab/error.hpp"

namespace laplab {

// -------------------------------------------------------- ModelStructure

ModelStructure::ModelStructure(UndirectedGraph graph, CliqueSystem cliques, Cardinalities cards)
    : graph_(std::move(graph)), cards_(std::move(cards)) {
  if (cards_.size() != graph_.num_nodes()) {
    throw std::invalid_argument("need one cardinality per node: got " + std::to_string(cards_.size()) +
                                " for " + std::to_string(graph_.num_nodes()) + " nodes");
  }
  for (int k : cards_) {
    if (k < 2) throw std::invalid_argument("cardinalities must be at least 2");
  }
  cliques_of_.resize(cards_.size());
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    const auto& q = cliques[c];
    for (std::size_t a = 0; a < q.size(); ++a) {
      graph_.check_node(q[a]);
      cliques_of_[q[a]].push_back(c);
      for (std::size_t b = a + 1; b < q.size(); ++b) {
        if (!graph_.has_edge(q[a], q[b])) {
          throw std::invalid_argument("clique " + q.label() + " is not complete in the graph");
        }
      }
    }
  }
  layout_ = std::make_shared<const ParamLayout>(std::move(cliques), cards_);
}

ModelStructure ModelStructure::from_cliques(std::size_t num_nodes, CliqueSystem cliques, Cardinalities cards,
                                            const std::vector<UndirectedGraph::Edge>& extra_edges) {
  auto edges = extra_edges;
  for (const auto& q : cliques) {
    for (std::size_t a = 0; a < q.size(); ++a) {
      for (std::size_t b = a + 1; b < q.size(); ++b) edges.emplace_back(q[a], q[b]);
    }
  }
  return ModelStructure(UndirectedGraph(num_nodes, edges), std::move(cliques), std::move(cards));
}

// --------------------------------------------------------------- MrfModel

MrfModel::MrfModel(ModelStructure structure, std::vector<double> parameters)
    : structure_(std::move(structure)), parameters_(std::move(parameters)) {
  tables_ = unpack(structure_.layout(), parameters_);
}

namespace {

std::size_t clique_flat(const PotentialTable& t, std::span<const int> x) {
  std::size_t flat = 0;
  const auto& scope = t.scope();
  const auto& cards = t.cards();
  for (std::size_t k = 0; k < cards.size(); ++k) flat = flat * cards[k] + static_cast<std::size_t>(x[scope[k]]);
  return flat;
}

// Odometer over all joint configurations, last node fastest.
bool advance(std::vector<int>& x, const Cardinalities& cards) {
  for (std::size_t k = x.size(); k-- > 0;) {
    if (++x[k] < cards[k]) return true;
    x[k] = 0;
  }
  return false;
}

}  // namespace

double MrfModel::log_unnormalized(std::span<const int> x) const {
  const auto& cards = structure_.cards();
  if (x.size() != cards.size()) throw std::invalid_argument("configuration has the wrong number of variables");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < 0 || x[k] >= cards[k]) {
      throw std::out_of_range("state " + std::to_string(x[k]) + " out of range for node " + std::to_string(k));
    }
  }
  double e = 0.0;
  for (const auto& t : tables_) e += t.energy_at(clique_flat(t, x));
  return -e;
}

double MrfModel::local_energy(NodeId j, std::span<const int> x, int state) const {
  double e = 0.0;
  for (std::size_t c : structure_.cliques_of(j)) {
    const auto& t = tables_[c];
    std::size_t flat = 0;
    for (std::size_t k = 0; k < t.cards().size(); ++k) {
      const NodeId v = t.scope()[k];
      flat = flat * t.cards()[k] + static_cast<std::size_t>(v == j ? state : x[v]);
    }
    e += t.energy_at(flat);
  }
  return e;
}

double MrfModel::log_partition_function(std::uint64_t cap) const {
  const auto& cards = structure_.cards();
  state_space_size(cards, cap);
  std::vector<int> x(cards.size(), 0);
  double mx = -std::numeric_limits<double>::infinity();
  do {
    mx = std::max(mx, log_unnormalized(x));
  } while (advance(x, cards));
  double total = 0.0;
  do {
    total += std::exp(log_unnormalized(x) - mx);
  } while (advance(x, cards));
  return mx + std::log(total);
}

ProbabilityTable MrfModel::joint(std::uint64_t cap) const {
  NodeSet all(structure_.num_nodes());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<NodeId>(v);
  return exact_marginal(all, cap);
}

ProbabilityTable MrfModel::exact_marginal(const NodeSet& A, std::uint64_t cap) const {
  const auto& cards = structure_.cards();
  state_space_size(cards, cap);
  if (A.empty()) throw std::invalid_argument("marginal needs a nonempty node set");
  ProbabilityTable out;
  out.scope = A;
  for (NodeId v : A) {
    structure_.graph().check_node(v);
    out.cards.push_back(cards[v]);
  }
  if (make_node_set(A) != A) throw std::invalid_argument("node set must be sorted and duplicate-free");
  std::size_t size = 1;
  for (int k : out.cards) size *= static_cast<std::size_t>(k);
  out.values.assign(size, 0.0);

  std::vector<int> x(cards.size(), 0);
  double mx = -std::numeric_limits<double>::infinity();
  do {
    mx = std::max(mx, log_unnormalized(x));
  } while (advance(x, cards));
  double total = 0.0;
  do {
    const double w = std::exp(log_unnormalized(x) - mx);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < A.size(); ++k) flat = flat * out.cards[k] + static_cast<std::size_t>(x[A[k]]);
    out.values[flat] += w;
    total += w;
  } while (advance(x, cards));
  for (double& p : out.values) p /= total;
  return out;
}

ConditionalTable MrfModel::exact_conditional(NodeId j, const NodeSet& A, std::uint64_t cap) const {
  if (!contains(A, j)) throw std::invalid_argument("conditioned node must belong to the domain");
  ConditionalTable out{j, exact_marginal(A, cap)};
  auto& t = out.table;
  const auto pos = static_cast<std::size_t>(std::lower_bound(A.begin(), A.end(), j) - A.begin());
  std::size_t stride = 1;
  for (std::size_t k = A.size(); k-- > pos + 1;) stride *= static_cast<std::size_t>(t.cards[k]);
  const auto kj = static_cast<std::size_t>(t.cards[pos]);
  for (std::size_t flat = 0; flat < t.values.size(); ++flat) {
    if ((flat / stride) % kj != 0) continue;  // visit each column once, at x_j = 0
    double s = 0.0;
    for (std::size_t v = 0; v < kj; ++v) s += t.values[flat + v * stride];
    for (std::size_t v = 0; v < kj; ++v) t.values[flat + v * stride] /= s;
  }
  return out;
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(std::size_t num_vars, std::vector<int> values) : num_vars_(num_vars), values_(std::move(values)) {
  if (num_vars_ == 0 && !values_.empty()) throw std::invalid_argument("dataset with values but no variables");
  if (num_vars_ && values_.size() % num_vars_) {
    throw std::invalid_argument("dataset values are not a whole number of rows");
  }
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, num_samples());
  return Dataset(num_vars_, std::vector<int>(values_.begin(), values_.begin() + static_cast<long>(n * num_vars_)));
}

void Dataset::validate(const Cardinalities& cards) const {
  if (cards.size() != num_vars_) {
    throw std::invalid_argument("dataset has " + std::to_string(num_vars_) + " variables, model has " +
                                std::to_string(cards.size()));
  }
  for (std::size_t n = 0; n < num_samples(); ++n) {
    auto r = row(n);
    for (std::size_t k = 0; k < num_vars_; ++k) {
      if (r[k] < 0 || r[k] >= cards[k]) {
        throw std::invalid_argument("sample " + std::to_string(n) + " has state " + std::to_string(r[k]) +
                                    " for node " + std::to_string(k));
      }
    }
  }
}

std::vector<std::vector<std::size_t>> sufficient_statistics(const Dataset& data, const ModelStructure& s) {
  data.validate(s.cards());
  const auto& layout = s.layout();
  std::vector<std::vector<std::size_t>> counts(layout.num_cliques());
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    std::size_t size = 1;
    for (int k : layout.scope_cards(c)) size *= static_cast<std::size_t>(k);
    counts[c].assign(size, 0);
  }
  for (std::size_t n = 0; n < data.num_samples(); ++n) {
    auto x = data.row(n);
    for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
      const auto& q = layout.clique(c);
      const auto& sc = layout.scope_cards(c);
      std::size_t flat = 0;
      for (std::size_t k = 0; k < sc.size(); ++k) flat = flat * sc[k] + static_cast<std::size_t>(x[q[k]]);
      ++counts[c][flat];
    }
  }
  return counts;
}

Dataset sample_exact(const MrfModel& m, std::size_t n, Rng& rng, std::uint64_t cap) {
  const auto table = m.joint(cap);
  std::vector<double> cdf(table.values.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < cdf.size(); ++s) {
    acc += table.values[s];
    cdf[s] = acc;
  }
  const std::size_t nv = table.scope.size();
  std::vector<int> values(n * nv);
  for (std::size_t r = 0; r < n; ++r) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto s = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                               static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    table.decode(s, std::span<int>(values).subspan(r * nv, nv));
  }
  return Dataset(nv, std::move(values));
}

Dataset sample_gibbs(const MrfModel& m, std::size_t n, const GibbsConfig& cfg, Rng& rng) {
  const auto& cards = m.structure().cards();
  const std::size_t nv = cards.size();
  std::vector<int> x(nv);
  for (std::size_t k = 0; k < nv; ++k) x[k] = static_cast<int>(rng.below(static_cast<std::uint64_t>(cards[k])));
  std::vector<double> logits;
  auto sweep = [&] {
    for (std::size_t j = 0; j < nv; ++j) {
      const int kj = cards[j];
      logits.resize(static_cast<std::size_t>(kj));
      double mx = -std::numeric_limits<double>::infinity();
      for (int v = 0; v < kj; ++v) {
        logits[v] = -m.local_energy(static_cast<NodeId>(j), x, v);
        mx = std::max(mx, logits[v]);
      }
      double total = 0.0;
      for (double& l : logits) total += (l = std::exp(l - mx));
      double u = rng.uniform() * total;
      int pick = kj - 1;
      for (int v = 0; v < kj; ++v) {
        u -= logits[v];
        if (u < 0) {
          pick = v;
          break;
        }
      }
      x[j] = pick;
    }
  };
  for (std::size_t b = 0; b < cfg.burn_in; ++b) sweep();
  const std::size_t gap = std::max<std::size_t>(cfg.thinning, 1);
  std::vector<int> values;
  values.reserve(n * nv);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t t = 0; t < gap; ++t) sweep();
    values.insert(values.end(), x.begin(), x.end());
  }
  return Dataset(nv, std::move(values));
}

}  // namespace laplab
