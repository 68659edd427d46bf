#include "laplab/potentials.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "laplab/error.hpp"

namespace laplab {

std::uint64_t state_space_size(std::span<const int> cards, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (int k : cards) {
    if (k < 1) throw std::invalid_argument("cardinality must be positive");
    if (total > cap / static_cast<std::uint64_t>(k)) {
      throw CapExceeded("state space exceeds enumeration cap of " + std::to_string(cap));
    }
    total *= static_cast<std::uint64_t>(k);
  }
  if (total > cap) throw CapExceeded("state space exceeds enumeration cap of " + std::to_string(cap));
  return total;
}

std::size_t free_size(std::span<const int> scope_cards) {
  std::size_t n = 1;
  for (int k : scope_cards) n *= static_cast<std::size_t>(k - 1);
  return n;
}

long free_index(std::span<const int> scope_cards, std::span<const int> scope_config) {
  long idx = 0;
  for (std::size_t k = 0; k < scope_cards.size(); ++k) {
    if (scope_config[k] == 0) return -1;
    idx = idx * (scope_cards[k] - 1) + (scope_config[k] - 1);
  }
  return idx;
}

// -------------------------------------------------------- PotentialTable

PotentialTable::PotentialTable(Clique scope, std::vector<int> scope_cards)
    : scope_(std::move(scope)), cards_(std::move(scope_cards)) {
  if (cards_.size() != scope_.size()) {
    throw std::invalid_argument("potential table needs one cardinality per scope node");
  }
  std::size_t n = 1;
  for (int k : cards_) {
    if (k < 2) throw std::invalid_argument("cardinalities must be at least 2");
    n *= static_cast<std::size_t>(k);
  }
  energies_.assign(n, 0.0);
  free_size_ = laplab::free_size(cards_);
}

PotentialTable::PotentialTable(Clique scope, std::vector<int> scope_cards,
                               std::span<const double> free_values)
    : PotentialTable(std::move(scope), std::move(scope_cards)) {
  if (free_values.size() != free_size_) {
    throw std::invalid_argument("expected " + std::to_string(free_size_) + " free values for clique " +
                                scope_.label() + ", got " + std::to_string(free_values.size()));
  }
  // Walk the free configurations in row-major order and scatter them.
  std::vector<int> config(cards_.size(), 1);
  for (std::size_t f = 0; f < free_size_; ++f) {
    if (!std::isfinite(free_values[f])) throw std::invalid_argument("non-finite potential value");
    std::size_t flat = 0;
    for (std::size_t k = 0; k < cards_.size(); ++k) flat = flat * cards_[k] + config[k];
    energies_[flat] = free_values[f];
    for (std::size_t k = cards_.size(); k-- > 0;) {
      if (++config[k] < cards_[k]) break;
      config[k] = 1;
    }
  }
}

double PotentialTable::energy(std::span<const int> scope_config) const {
  if (scope_config.size() != cards_.size()) {
    throw std::invalid_argument("configuration size does not match the table scope");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < cards_.size(); ++k) {
    if (scope_config[k] < 0 || scope_config[k] >= cards_[k]) {
      throw std::out_of_range("state " + std::to_string(scope_config[k]) + " out of range for node " +
                              std::to_string(scope_[k]));
    }
    flat = flat * cards_[k] + static_cast<std::size_t>(scope_config[k]);
  }
  return energies_[flat];
}

std::vector<double> PotentialTable::free_values() const {
  std::vector<double> out;
  out.reserve(free_size_);
  std::vector<int> config(cards_.size(), 1);
  for (std::size_t f = 0; f < free_size_; ++f) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < cards_.size(); ++k) flat = flat * cards_[k] + config[k];
    out.push_back(energies_[flat]);
    for (std::size_t k = cards_.size(); k-- > 0;) {
      if (++config[k] < cards_[k]) break;
      config[k] = 1;
    }
  }
  return out;
}

double PotentialTable::max_abs() const {
  double m = 0.0;
  for (double e : energies_) m = std::max(m, std::abs(e));
  return m;
}

// ----------------------------------------------------------- ParamLayout

ParamLayout::ParamLayout(CliqueSystem cliques, const Cardinalities& cards) : cliques_(std::move(cliques)) {
  for (const auto& c : cliques_) {
    std::vector<int> sc;
    for (NodeId v : c) {
      if (static_cast<std::size_t>(v) >= cards.size()) {
        throw std::invalid_argument("clique " + c.label() + " references a node without a cardinality");
      }
      sc.push_back(cards[v]);
    }
    dimension_ += laplab::free_size(sc);
    offsets_.push_back(dimension_);
    scope_cards_.push_back(std::move(sc));
  }
}

std::size_t ParamLayout::position(std::size_t c, std::span<const int> free_config) const {
  const auto& sc = scope_cards_.at(c);
  if (free_config.size() != sc.size()) throw std::invalid_argument("configuration size mismatch");
  for (std::size_t k = 0; k < sc.size(); ++k) {
    if (free_config[k] < 1 || free_config[k] >= sc[k]) {
      throw std::out_of_range("free configurations use states 1..K-1");
    }
  }
  return offsets_[c] + static_cast<std::size_t>(free_index(sc, free_config));
}

ParamVector pack(const std::vector<PotentialTable>& tables) {
  std::vector<Clique> scopes;
  Cardinalities cards;
  for (const auto& t : tables) {
    scopes.push_back(t.scope());
    for (std::size_t k = 0; k < t.scope().size(); ++k) {
      auto v = static_cast<std::size_t>(t.scope()[k]);
      if (cards.size() <= v) cards.resize(v + 1, 0);
      if (cards[v] != 0 && cards[v] != t.cards()[k]) {
        throw std::invalid_argument("inconsistent cardinality for node " + std::to_string(v));
      }
      cards[v] = t.cards()[k];
    }
  }
  auto layout = std::make_shared<const ParamLayout>(CliqueSystem(std::move(scopes)), cards);
  ParamVector out{layout, {}};
  out.values.reserve(layout->dimension());
  for (const auto& t : tables) {
    auto fv = t.free_values();
    out.values.insert(out.values.end(), fv.begin(), fv.end());
  }
  return out;
}

std::vector<PotentialTable> unpack(const ParamLayout& layout, std::span<const double> values) {
  if (values.size() != layout.dimension()) {
    throw std::invalid_argument("parameter vector has dimension " + std::to_string(values.size()) +
                                ", layout expects " + std::to_string(layout.dimension()));
  }
  std::vector<PotentialTable> out;
  out.reserve(layout.num_cliques());
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    out.emplace_back(layout.clique(c), layout.scope_cards(c), values.subspan(layout.offset(c), layout.dim(c)));
  }
  return out;
}

// ------------------------------------------------------ ProbabilityTable

std::size_t ProbabilityTable::flat_index(std::span<const int> config) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < cards.size(); ++k) flat = flat * cards[k] + static_cast<std::size_t>(config[k]);
  return flat;
}

void ProbabilityTable::decode(std::size_t flat, std::span<int> config) const {
  for (std::size_t k = cards.size(); k-- > 0;) {
    config[k] = static_cast<int>(flat % cards[k]);
    flat /= cards[k];
  }
}

double ProbabilityTable::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

// ------------------------------------------------------------ extraction

std::vector<PotentialTable> extract_canonical_potentials(const ProbabilityTable& joint, double zero_tol) {
  const std::size_t n = joint.scope.size();
  if (n > kMaxExtractionScope) {
    throw CapExceeded("canonical extraction is limited to " + std::to_string(kMaxExtractionScope) + " nodes");
  }
  if (joint.cards.size() != n) throw std::invalid_argument("probability table cardinality mismatch");
  std::vector<double> logp(joint.values.size());
  for (std::size_t s = 0; s < logp.size(); ++s) {
    if (!(joint.values[s] >= kMinProbability)) {
      throw std::invalid_argument("canonical extraction needs strictly positive probabilities");
    }
    logp[s] = std::log(joint.values[s]);
  }
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t k = n; k-- > 1;) stride[k - 1] = stride[k] * joint.cards[k];

  std::vector<PotentialTable> out;
  std::vector<int> config;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> pos;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) pos.push_back(k);
    }
    const std::size_t m = pos.size();
    std::vector<int> sc;
    std::vector<NodeId> nodes;
    for (auto k : pos) {
      sc.push_back(joint.cards[k]);
      nodes.push_back(joint.scope[k]);
    }
    std::vector<double> free_values;
    free_values.reserve(free_size(sc));
    config.assign(m, 1);
    for (bool more = true; more;) {
      // E_c(x_c) = -sum_{b subset c} (-1)^{|c \ b|} log p(x_b, 0 elsewhere)
      double e = 0.0;
      for (std::uint32_t sub = 0; sub < (1u << m); ++sub) {
        std::size_t flat = 0;
        for (std::size_t k = 0; k < m; ++k) {
          if (sub & (1u << k)) flat += stride[pos[k]] * static_cast<std::size_t>(config[k]);
        }
        const int missing = static_cast<int>(m) - static_cast<int>(std::popcount(sub));
        e += (missing % 2 ? 1.0 : -1.0) * logp[flat];
      }
      free_values.push_back(e);
      more = false;
      for (std::size_t k = m; k-- > 0;) {
        if (++config[k] < sc[k]) {
          more = true;
          break;
        }
        config[k] = 1;
      }
    }
    double mx = 0.0;
    for (double v : free_values) mx = std::max(mx, std::abs(v));
    if (mx > zero_tol) out.emplace_back(Clique(nodes), sc, free_values);
  }
  std::sort(out.begin(), out.end(), [](const PotentialTable& a, const PotentialTable& b) {
    return a.scope() < b.scope();
  });
  return out;
}

}  // namespace laplab
