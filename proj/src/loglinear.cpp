#include "laplab/loglinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "laplab/error.hpp"

namespace laplab {

namespace {

constexpr std::uint64_t kEncodeLimit = std::uint64_t{1} << 62;
constexpr std::uint64_t kPrecomputeLimit = std::uint64_t{1} << 20;

// Compressed rows of active feature indices.
struct FeatureRows {
  std::vector<std::size_t> start{0};
  std::vector<std::size_t> index;

  std::span<const std::size_t> row(std::size_t r) const {
    return std::span<const std::size_t>(index).subspan(start[r], start[r + 1] - start[r]);
  }
  void close_row() { start.push_back(index.size()); }
  std::size_t rows() const { return start.size() - 1; }
};

double energy_of(std::span<const std::size_t> active, std::span<const double> alpha) {
  double e = 0.0;
  for (auto k : active) e += alpha[k];
  return e;
}

}  // namespace

LogLinearFamily::LogLinearFamily(NodeSet domain, CliqueSystem scopes, const Cardinalities& global_cards)
    : domain_(std::move(domain)) {
  if (domain_.empty()) throw std::invalid_argument("log-linear family needs a nonempty domain");
  if (make_node_set(domain_) != domain_) throw std::invalid_argument("domain must be sorted and duplicate-free");
  for (NodeId v : domain_) {
    if (v < 0 || static_cast<std::size_t>(v) >= global_cards.size()) {
      throw std::invalid_argument("domain node " + std::to_string(v) + " has no cardinality");
    }
    local_cards_.push_back(global_cards[v]);
  }
  for (const auto& c : scopes) {
    if (!is_subset(c.nodes(), domain_)) {
      throw std::invalid_argument("scope " + c.label() + " is not inside the family domain");
    }
    std::vector<std::size_t> pos;
    for (NodeId v : c) pos.push_back(position(v));
    scope_positions_.push_back(std::move(pos));
  }
  layout_ = ParamLayout(std::move(scopes), global_cards);
  state_space_size(local_cards_, kEncodeLimit);
}

std::size_t LogLinearFamily::position(NodeId node) const {
  auto it = std::lower_bound(domain_.begin(), domain_.end(), node);
  if (it == domain_.end() || *it != node) {
    throw std::invalid_argument("node " + std::to_string(node) + " is not in the family domain");
  }
  return static_cast<std::size_t>(it - domain_.begin());
}

std::uint64_t LogLinearFamily::encode(std::span<const int> local_config) const {
  std::uint64_t s = 0;
  for (std::size_t k = 0; k < local_cards_.size(); ++k) {
    s = s * static_cast<std::uint64_t>(local_cards_[k]) + static_cast<std::uint64_t>(local_config[k]);
  }
  return s;
}

void LogLinearFamily::decode(std::uint64_t state, std::span<int> local_config) const {
  for (std::size_t k = local_cards_.size(); k-- > 0;) {
    const auto kk = static_cast<std::uint64_t>(local_cards_[k]);
    local_config[k] = static_cast<int>(state % kk);
    state /= kk;
  }
}

long LogLinearFamily::feature(std::size_t s, std::span<const int> local_config) const {
  const auto& pos = scope_positions_[s];
  long idx = 0;
  for (auto p : pos) {
    const int x = local_config[p];
    if (x == 0) return -1;
    idx = idx * (local_cards_[p] - 1) + (x - 1);
  }
  return static_cast<long>(layout_.offset(s)) + idx;
}

void LogLinearFamily::active_features(std::span<const int> local_config, std::vector<std::size_t>& out) const {
  for (std::size_t s = 0; s < scope_positions_.size(); ++s) {
    const long f = feature(s, local_config);
    if (f >= 0) out.push_back(static_cast<std::size_t>(f));
  }
}

WeightedPatterns patterns_from_data(const Dataset& data, const LogLinearFamily& family) {
  const auto& domain = family.domain();
  if (data.num_samples() == 0) throw std::invalid_argument("cannot fit to an empty dataset");
  std::map<std::uint64_t, std::size_t> counts;
  std::vector<int> local(domain.size());
  for (std::size_t n = 0; n < data.num_samples(); ++n) {
    auto row = data.row(n);
    for (std::size_t k = 0; k < domain.size(); ++k) {
      const int v = row[static_cast<std::size_t>(domain[k])];
      if (v < 0 || v >= family.local_cards()[k]) throw std::invalid_argument("data value out of range");
      local[k] = v;
    }
    ++counts[family.encode(local)];
  }
  WeightedPatterns out;
  const double total = static_cast<double>(data.num_samples());
  for (auto [s, c] : counts) {
    out.states.push_back(s);
    out.weights.push_back(static_cast<double>(c) / total);
  }
  return out;
}

WeightedPatterns patterns_from_table(const ProbabilityTable& table, const LogLinearFamily& family) {
  if (table.scope != family.domain()) throw std::invalid_argument("target table scope differs from the domain");
  WeightedPatterns out;
  const double total = table.sum();
  for (std::size_t s = 0; s < table.values.size(); ++s) {
    if (table.values[s] < 0) throw std::invalid_argument("negative probability in target table");
    if (table.values[s] > 0) {
      out.states.push_back(s);
      out.weights.push_back(table.values[s] / total);
    }
  }
  return out;
}

Objective marginal_objective(std::shared_ptr<const LogLinearFamily> family, const WeightedPatterns& target,
                             std::uint64_t cap) {
  const std::uint64_t num_states = family->num_states(cap);
  const std::size_t dim = family->dimension();
  const std::size_t nd = family->domain().size();

  // Target sufficient statistics t_k = E_target[phi_k].
  auto stats = std::make_shared<std::vector<double>>(dim, 0.0);
  {
    std::vector<int> local(nd);
    std::vector<std::size_t> active;
    for (std::size_t p = 0; p < target.states.size(); ++p) {
      family->decode(target.states[p], local);
      active.clear();
      family->active_features(local, active);
      for (auto k : active) (*stats)[k] += target.weights[p];
    }
  }

  std::shared_ptr<FeatureRows> rows;
  if (num_states <= kPrecomputeLimit) {
    rows = std::make_shared<FeatureRows>();
    std::vector<int> local(nd);
    for (std::uint64_t s = 0; s < num_states; ++s) {
      family->decode(s, local);
      family->active_features(local, rows->index);
      rows->close_row();
    }
  }

  // Calls visit(active features, log weight) for every domain state.
  auto for_each_state = [family, rows, num_states, nd](auto&& visit) {
    if (rows) {
      for (std::size_t s = 0; s < rows->rows(); ++s) visit(rows->row(s));
      return;
    }
    std::vector<int> local(nd, 0);
    std::vector<std::size_t> active;
    for (std::uint64_t s = 0; s < num_states; ++s) {
      active.clear();
      family->active_features(local, active);
      visit(std::span<const std::size_t>(active));
      for (std::size_t k = nd; k-- > 0;) {
        if (++local[k] < family->local_cards()[k]) break;
        local[k] = 0;
      }
    }
  };

  Objective obj;
  obj.dimension = dim;
  obj.tag = "marginal-ml";
  obj.evaluate = [stats, for_each_state, dim](std::span<const double> alpha, std::span<double> grad) {
    double mx = -std::numeric_limits<double>::infinity();
    for_each_state([&](std::span<const std::size_t> active) { mx = std::max(mx, -energy_of(active, alpha)); });
    std::fill(grad.begin(), grad.end(), 0.0);
    double z = 0.0;
    for_each_state([&](std::span<const std::size_t> active) {
      const double w = std::exp(-energy_of(active, alpha) - mx);
      z += w;
      for (auto k : active) grad[k] += w;
    });
    const double log_z = mx + std::log(z);
    double value = -log_z;
    for (std::size_t k = 0; k < dim; ++k) {
      grad[k] = grad[k] / z - (*stats)[k];
      value -= alpha[k] * (*stats)[k];
    }
    return value;
  };
  obj.information = [for_each_state, dim](std::span<const double> alpha) {
    double mx = -std::numeric_limits<double>::infinity();
    for_each_state([&](std::span<const std::size_t> active) { mx = std::max(mx, -energy_of(active, alpha)); });
    std::vector<double> mean(dim, 0.0), second(dim * dim, 0.0);
    double z = 0.0;
    for_each_state([&](std::span<const std::size_t> active) {
      const double w = std::exp(-energy_of(active, alpha) - mx);
      z += w;
      for (auto a : active) {
        mean[a] += w;
        for (auto b : active) second[a * dim + b] += w;
      }
    });
    for (std::size_t a = 0; a < dim; ++a) mean[a] /= z;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) second[a * dim + b] = second[a * dim + b] / z - mean[a] * mean[b];
    }
    return second;
  };
  return obj;
}

Objective conditional_objective(std::shared_ptr<const LogLinearFamily> family, NodeId j,
                                const WeightedPatterns& target) {
  const std::size_t pj = family->position(j);
  for (const auto& c : family->scopes()) {
    if (!c.contains(j)) {
      throw std::invalid_argument("conditional family scope " + c.label() + " does not contain node " +
                                  std::to_string(j));
    }
  }
  const int kj = family->local_cards()[pj];
  const std::size_t nd = family->domain().size();

  // Per pattern: the observed state of j and the active features for each
  // candidate state of j (row p * kj + v).
  struct Data {
    FeatureRows rows;
    std::vector<int> observed;
    std::vector<double> weights;
  };
  auto data = std::make_shared<Data>();
  std::vector<int> local(nd);
  for (std::size_t p = 0; p < target.states.size(); ++p) {
    family->decode(target.states[p], local);
    data->observed.push_back(local[pj]);
    data->weights.push_back(target.weights[p]);
    const int keep = local[pj];
    for (int v = 0; v < kj; ++v) {
      local[pj] = v;
      family->active_features(local, data->rows.index);
      data->rows.close_row();
    }
    local[pj] = keep;
  }

  Objective obj;
  obj.dimension = family->dimension();
  obj.tag = "conditional-ml";
  obj.evaluate = [data, kj](std::span<const double> alpha, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> logit(static_cast<std::size_t>(kj));
    double value = 0.0;
    for (std::size_t p = 0; p < data->weights.size(); ++p) {
      const double w = data->weights[p];
      double mx = -std::numeric_limits<double>::infinity();
      for (int v = 0; v < kj; ++v) {
        logit[v] = -energy_of(data->rows.row(p * kj + v), alpha);
        mx = std::max(mx, logit[v]);
      }
      double z = 0.0;
      for (int v = 0; v < kj; ++v) z += std::exp(logit[v] - mx);
      const double lse = mx + std::log(z);
      const int obs = data->observed[p];
      value += w * (logit[obs] - lse);
      for (auto k : data->rows.row(p * kj + obs)) grad[k] -= w;
      for (int v = 0; v < kj; ++v) {
        const double pv = std::exp(logit[v] - lse);
        for (auto k : data->rows.row(p * kj + v)) grad[k] += w * pv;
      }
    }
    return value;
  };
  const std::size_t dim = family->dimension();
  obj.information = [data, kj, dim](std::span<const double> alpha) {
    std::vector<double> info(dim * dim, 0.0), mean(dim);
    std::vector<double> logit(static_cast<std::size_t>(kj)), prob(static_cast<std::size_t>(kj));
    for (std::size_t p = 0; p < data->weights.size(); ++p) {
      const double w = data->weights[p];
      double mx = -std::numeric_limits<double>::infinity();
      for (int v = 0; v < kj; ++v) {
        logit[v] = -energy_of(data->rows.row(p * kj + v), alpha);
        mx = std::max(mx, logit[v]);
      }
      double z = 0.0;
      for (int v = 0; v < kj; ++v) z += (prob[v] = std::exp(logit[v] - mx));
      std::fill(mean.begin(), mean.end(), 0.0);
      for (int v = 0; v < kj; ++v) {
        prob[v] /= z;
        for (auto k : data->rows.row(p * kj + v)) mean[k] += prob[v];
      }
      for (int v = 0; v < kj; ++v) {
        auto row = data->rows.row(p * kj + v);
        for (auto a : row) {
          for (auto b : row) info[a * dim + b] += w * prob[v];
        }
      }
      for (std::size_t a = 0; a < dim; ++a) {
        if (mean[a] == 0) continue;
        for (std::size_t b = 0; b < dim; ++b) info[a * dim + b] -= w * mean[a] * mean[b];
      }
    }
    return info;
  };
  return obj;
}

Objective sum_objectives(std::vector<Objective> blocks, std::vector<std::vector<std::size_t>> maps,
                         std::size_t dimension, std::string tag) {
  if (blocks.size() != maps.size()) throw std::invalid_argument("one index map per block objective");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (maps[b].size() != blocks[b].dimension) throw std::invalid_argument("index map size mismatch");
    for (auto k : maps[b]) {
      if (k >= dimension) throw std::invalid_argument("index map points outside the shared vector");
    }
  }
  auto shared_blocks = std::make_shared<std::vector<Objective>>(std::move(blocks));
  auto shared_maps = std::make_shared<std::vector<std::vector<std::size_t>>>(std::move(maps));
  Objective obj;
  obj.dimension = dimension;
  obj.tag = std::move(tag);
  obj.evaluate = [shared_blocks, shared_maps](std::span<const double> x, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double value = 0.0;
    std::vector<double> local, local_grad;
    for (std::size_t b = 0; b < shared_blocks->size(); ++b) {
      const auto& map = (*shared_maps)[b];
      local.resize(map.size());
      local_grad.resize(map.size());
      for (std::size_t k = 0; k < map.size(); ++k) local[k] = x[map[k]];
      value += (*shared_blocks)[b].evaluate(local, local_grad);
      for (std::size_t k = 0; k < map.size(); ++k) grad[map[k]] += local_grad[k];
    }
    return value;
  };
  return obj;
}

}  // namespace laplab
