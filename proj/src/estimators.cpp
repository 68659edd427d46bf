#include "laplab/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>

#include "laplab/error.hpp"
#include "laplab/loglinear.hpp"
#include "laplab/parallel.hpp"

namespace laplab {

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::marginal: return "marginal-ML";
    case ObjectiveKind::conditional: return "conditional";
    case ObjectiveKind::full: return "full-ML";
  }
  return "unknown";
}

namespace {

std::size_t clique_dim(const Clique& c, const Cardinalities& cards) {
  std::size_t d = 1;
  for (NodeId v : c) d *= static_cast<std::size_t>(cards[v] - 1);
  return d;
}

std::size_t system_dim(const CliqueSystem& cs, const Cardinalities& cards) {
  std::size_t d = 0;
  for (const auto& c : cs) d += clique_dim(c, cards);
  return d;
}

// Index of the first maximal clique containing each model clique.
std::vector<std::size_t> owners(const CliqueSystem& maximal, const CliqueSystem& model) {
  std::vector<std::size_t> owner(model.size());
  for (std::size_t c = 0; c < model.size(); ++c) {
    std::size_t q = 0;
    while (q < maximal.size() && !is_subset(model[c].nodes(), maximal[q].nodes())) ++q;
    if (q == maximal.size()) {
      throw std::invalid_argument("model clique " + model[c].label() + " is not complete in the graph");
    }
    owner[c] = q;
  }
  return owner;
}

CliqueSystem internal_structure(const UndirectedGraph& g, const NodeSet& A) {
  const auto sub = internal_subgraph(g, A);
  CliqueSystem parent;
  for (const auto& local : maximal_cliques(sub.graph)) {
    std::vector<NodeId> ids;
    for (NodeId v : local) ids.push_back(sub.to_parent(v));
    parent.insert(Clique(ids));
  }
  return downward_closure(parent);
}

// Blocks keyed by (maximal clique, pivot) with the cliques each one owns.
struct PivotBlock {
  std::size_t anchor;
  NodeId pivot;
  CliqueSystem owned;
};

std::vector<PivotBlock> pivot_blocks(const ModelStructure& s, const CliqueSystem& maximal) {
  const auto& model = s.cliques();
  const auto owner = owners(maximal, model);
  std::map<std::pair<std::size_t, NodeId>, CliqueSystem> blocks;
  for (std::size_t c = 0; c < model.size(); ++c) {
    if (model[c].size() > 1) blocks[{owner[c], model[c][0]}].insert(model[c]);
  }
  for (std::size_t c = 0; c < model.size(); ++c) {
    if (model[c].size() != 1) continue;
    const NodeId k = model[c][0];
    auto it = std::find_if(blocks.begin(), blocks.end(), [k](const auto& kv) { return kv.first.second == k; });
    if (it == blocks.end()) it = blocks.emplace(std::make_pair(owner[c], k), CliqueSystem{}).first;
    it->second.insert(model[c]);
  }
  std::vector<PivotBlock> out;
  for (auto& [key, owned] : blocks) out.push_back({key.first, key.second, std::move(owned)});
  return out;
}

void set_authoritative(EstimatorTask& task, const CliqueSystem& owned) {
  for (const auto& c : owned) {
    if (!task.targets.contains(c)) {
      throw std::logic_error("owned clique " + c.label() + " is not a certified target of its block");
    }
  }
  task.authoritative = owned;
}

std::vector<double> precision_of(const Objective& obj, std::span<const double> x,
                                 const std::vector<std::size_t>& coords) {
  const auto n = static_cast<Eigen::Index>(obj.dimension);
  const auto flat = obj.information(x);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> info(flat.data(), n,
                                                                                                         n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 1e-14).all();
  std::vector<double> out;
  for (auto k : coords) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (ok) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(kk) = 1.0;
      out.push_back(1.0 / ldlt.solve(e)(kk));
    } else {
      out.push_back(info(kk, kk));
    }
  }
  return out;
}

std::shared_ptr<const LogLinearFamily> family_for(const EstimatorTask& task, const ModelStructure& s) {
  return std::make_shared<const LogLinearFamily>(task.domain, task.aux_structure, s.cards());
}

Objective task_objective(const EstimatorTask& task, std::shared_ptr<const LogLinearFamily> fam,
                         const WeightedPatterns& target, std::uint64_t cap) {
  if (task.kind == ObjectiveKind::conditional) return conditional_objective(std::move(fam), task.pivot, target);
  return marginal_objective(std::move(fam), target, cap);
}

LocalEstimate fit_task(const EstimatorTask& task, const LogLinearFamily& fam, const Objective& raw,
                       const FitOptions& fo) {
  const auto obj = with_ridge(raw, fo.ridge);
  const auto res = maximize(obj, std::vector<double>(obj.dimension, 0.0), fo.opt);
  LocalEstimate out;
  out.block_id = task.block_id;
  out.report = res.report;
  out.certified = task.certified;
  const auto& layout = fam.layout();
  std::vector<std::size_t> coords;
  for (const auto& c : task.targets) {
    const auto idx = layout.find(c);
    if (!idx) throw std::logic_error("target " + c.label() + " is missing from the auxiliary structure");
    CliqueEstimate ce;
    ce.clique = c;
    ce.values.assign(res.x.begin() + static_cast<long>(layout.offset(*idx)),
                     res.x.begin() + static_cast<long>(layout.offset(*idx) + layout.dim(*idx)));
    ce.authoritative = task.authoritative.contains(c);
    for (std::size_t k = 0; k < layout.dim(*idx); ++k) coords.push_back(layout.offset(*idx) + k);
    out.cliques.push_back(std::move(ce));
  }
  if (fo.with_precision && obj.information) {
    const auto prec = precision_of(obj, res.x, coords);
    std::size_t k = 0;
    for (auto& ce : out.cliques) {
      ce.precision.assign(prec.begin() + static_cast<long>(k), prec.begin() + static_cast<long>(k + ce.values.size()));
      k += ce.values.size();
    }
  }
  return out;
}

}  // namespace

std::size_t aux_dimension(const EstimatorTask& task, const Cardinalities& cards) {
  return system_dim(task.aux_structure, cards);
}

std::size_t target_dimension(const EstimatorTask& task, const Cardinalities& cards) {
  return system_dim(task.targets, cards);
}

// ------------------------------------------------------------- tasks

EstimatorTask make_marginal_task(const ModelStructure& s, const NodeSet& domain, bool with_induced_edges,
                                 std::size_t block_id) {
  const auto& g = s.graph();
  EstimatorTask t;
  t.block_id = block_id;
  t.domain = make_node_set(domain);
  if (t.domain.empty()) throw std::invalid_argument("task domain must be nonempty");
  for (NodeId v : t.domain) g.check_node(v);
  t.kind = ObjectiveKind::marginal;
  t.with_induced_edges = with_induced_edges;
  t.aux_structure = with_induced_edges ? downward_closure(marginal_clique_system(g, t.domain))
                                       : internal_structure(g, t.domain);
  for (const auto& c : s.cliques()) {
    if (is_subset(c.nodes(), t.domain) && strong_lap_satisfied(g, t.domain, c)) t.targets.insert(c);
  }
  t.certified = with_induced_edges;
  return t;
}

EstimatorTask make_conditional_task(const ModelStructure& s, NodeId j, const NodeSet& domain,
                                    std::size_t block_id) {
  const auto& g = s.graph();
  EstimatorTask t;
  t.block_id = block_id;
  t.domain = make_node_set(domain);
  for (NodeId v : t.domain) g.check_node(v);
  if (!contains(t.domain, j)) throw std::invalid_argument("conditioned node must belong to the task domain");
  t.kind = ObjectiveKind::conditional;
  t.pivot = j;
  if (is_subset(neighbors(g, j), t.domain)) {
    for (const auto& c : s.cliques()) {
      if (c.contains(j)) t.aux_structure.insert(c);
    }
  } else {
    for (const auto& c : downward_closure(marginal_clique_system(g, t.domain))) {
      if (c.contains(j)) t.aux_structure.insert(c);
    }
  }
  for (const auto& c : s.cliques()) {
    if (c.contains(j) && is_subset(c.nodes(), t.domain) && strong_lap_satisfied(g, t.domain, c)) t.targets.insert(c);
  }
  return t;
}

std::vector<EstimatorTask> build_lap_tasks(const ModelStructure& s, Neighbourhood nbhd, bool with_induced_edges) {
  const auto& g = s.graph();
  const auto maximal = maximal_cliques(g);
  std::vector<EstimatorTask> tasks;
  if (nbhd == Neighbourhood::full) {
    const auto owner = owners(maximal, s.cliques());
    for (std::size_t q = 0; q < maximal.size(); ++q) {
      auto t = make_marginal_task(s, one_neighbourhood(maximal, maximal[q]), with_induced_edges, q);
      t.anchor = maximal[q];
      CliqueSystem owned;
      for (std::size_t c = 0; c < owner.size(); ++c) {
        if (owner[c] == q) owned.insert(s.cliques()[c]);
      }
      set_authoritative(t, owned);
      tasks.push_back(std::move(t));
    }
    return tasks;
  }
  for (auto& b : pivot_blocks(s, maximal)) {
    auto t = make_marginal_task(s, one_node_neighbourhood(g, maximal[b.anchor], b.pivot), with_induced_edges,
                                tasks.size());
    t.anchor = maximal[b.anchor];
    t.pivot = b.pivot;
    set_authoritative(t, b.owned);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<EstimatorTask> build_clap_tasks(const ModelStructure& s) {
  const auto maximal = maximal_cliques(s.graph());
  std::vector<EstimatorTask> tasks;
  for (auto& b : pivot_blocks(s, maximal)) {
    auto t = make_conditional_task(s, b.pivot, one_neighbourhood(maximal, maximal[b.anchor]), tasks.size());
    t.anchor = maximal[b.anchor];
    set_authoritative(t, b.owned);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<EstimatorTask> build_pl_tasks(const ModelStructure& s) {
  const auto& g = s.graph();
  std::vector<EstimatorTask> tasks;
  for (std::size_t m = 0; m < s.num_nodes(); ++m) {
    const auto j = static_cast<NodeId>(m);
    auto domain = neighbors(g, j);
    domain.push_back(j);
    auto t = make_conditional_task(s, j, domain, m);
    CliqueSystem owned;
    for (const auto& c : t.targets) {
      if (c[0] == j) owned.insert(c);
    }
    set_authoritative(t, owned);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// --------------------------------------------------------- local fits

const CliqueEstimate* LocalEstimate::find(const Clique& c) const {
  for (const auto& ce : cliques) {
    if (ce.clique == c) return &ce;
  }
  return nullptr;
}

LocalEstimate lap_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                           const FitOptions& fo) {
  if (task.kind == ObjectiveKind::conditional) throw std::invalid_argument("lap_estimate needs a marginal task");
  data.validate(s.cards());
  const auto fam = family_for(task, s);
  auto out = fit_task(task, *fam, marginal_objective(fam, patterns_from_data(data, *fam), fo.enumeration_cap), fo);
  out.num_samples = data.num_samples();
  return out;
}

LocalEstimate clap_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                            const FitOptions& fo) {
  if (task.kind != ObjectiveKind::conditional) throw std::invalid_argument("clap_estimate needs a conditional task");
  data.validate(s.cards());
  const auto fam = family_for(task, s);
  auto out = fit_task(task, *fam, conditional_objective(fam, task.pivot, patterns_from_data(data, *fam)), fo);
  out.num_samples = data.num_samples();
  return out;
}

LocalEstimate local_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                             const FitOptions& fo) {
  return task.kind == ObjectiveKind::conditional ? clap_estimate(task, s, data, fo) : lap_estimate(task, s, data, fo);
}

LocalEstimate fit_to_distribution(const EstimatorTask& task, const ModelStructure& s, const ProbabilityTable& target,
                                  const FitOptions& fo) {
  const auto fam = family_for(task, s);
  return fit_task(task, *fam, task_objective(task, fam, patterns_from_table(target, *fam), fo.enumeration_cap), fo);
}

// ------------------------------------------------------ centralized

GlobalEstimate centralized_ml(const ModelStructure& s, const Dataset& data, const FitOptions& fo) {
  data.validate(s.cards());
  NodeSet all(s.num_nodes());
  std::iota(all.begin(), all.end(), 0);
  state_space_size(s.cards(), fo.enumeration_cap);
  GlobalEstimate out;
  out.params.layout = s.layout_ptr();
  out.provenance.assign(s.cliques().size(), {{0, 1.0}});
  if (s.dimension() == 0) {
    return out;
  }
  const auto fam = std::make_shared<const LogLinearFamily>(all, s.cliques(), s.cards());
  const auto obj = with_ridge(marginal_objective(fam, patterns_from_data(data, *fam), fo.enumeration_cap), fo.ridge);
  auto res = maximize(obj, std::vector<double>(obj.dimension, 0.0), fo.opt);
  out.params.values = std::move(res.x);
  out.converged = res.report.converged;
  out.iterations = res.report.iterations;
  return out;
}

GlobalEstimate centralized_composite(const std::vector<EstimatorTask>& tasks, const ModelStructure& s,
                                     const Dataset& data, ObjectiveKind kind, const FitOptions& fo) {
  data.validate(s.cards());
  const auto& layout = s.layout();
  std::size_t shared_dim = s.dimension();
  std::vector<Objective> blocks;
  std::vector<std::vector<std::size_t>> maps;
  std::vector<std::vector<Contribution>> provenance(layout.num_cliques());
  for (const auto& task : tasks) {
    const bool conditional = task.kind == ObjectiveKind::conditional;
    if (conditional != (kind == ObjectiveKind::conditional)) {
      throw std::invalid_argument("task " + std::to_string(task.block_id) + " has kind " + to_string(task.kind) +
                                  ", composite kind is " + to_string(kind));
    }
    const auto fam = family_for(task, s);
    blocks.push_back(task_objective(task, fam, patterns_from_data(data, *fam), fo.enumeration_cap));
    std::vector<std::size_t> map;
    for (const auto& c : task.aux_structure) {
      const auto model_idx = layout.find(c);
      const bool shared = model_idx && task.targets.contains(c);
      const std::size_t d = clique_dim(c, s.cards());
      for (std::size_t k = 0; k < d; ++k) map.push_back(shared ? layout.offset(*model_idx) + k : shared_dim++);
      if (shared) provenance[*model_idx].push_back({task.block_id, 1.0});
    }
    maps.push_back(std::move(map));
  }
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    if (provenance[c].empty()) {
      throw std::invalid_argument("no block estimates clique " + layout.clique(c).label());
    }
    for (auto& p : provenance[c]) p.weight = 1.0 / static_cast<double>(provenance[c].size());
  }
  const auto obj = with_ridge(sum_objectives(std::move(blocks), std::move(maps), shared_dim,
                                             kind == ObjectiveKind::conditional ? "ccl-cond" : "ccl-marg"),
                              fo.ridge);
  auto res = maximize(obj, std::vector<double>(shared_dim, 0.0), fo.opt);
  GlobalEstimate out;
  out.params.layout = s.layout_ptr();
  out.params.values.assign(res.x.begin(), res.x.begin() + static_cast<long>(s.dimension()));
  out.provenance = std::move(provenance);
  out.converged = res.report.converged;
  out.iterations = res.report.iterations;
  return out;
}

// --------------------------------------------------------- consensus

std::vector<double> embed(const LocalEstimate& est, const ModelStructure& s) {
  const auto& layout = s.layout();
  std::vector<double> out(s.dimension(), 0.0);
  for (const auto& ce : est.cliques) {
    const auto idx = layout.find(ce.clique);
    if (!idx) throw std::invalid_argument("estimated clique " + ce.clique.label() + " is not a model clique");
    if (ce.values.size() != layout.dim(*idx)) throw std::invalid_argument("clique estimate has the wrong size");
    std::copy(ce.values.begin(), ce.values.end(), out.begin() + static_cast<long>(layout.offset(*idx)));
  }
  return out;
}

namespace {

double mean_precision(const CliqueEstimate& ce) {
  if (ce.precision.empty()) throw std::invalid_argument("curvature scores need local precision estimates");
  double s = 0;
  for (double p : ce.precision) s += p;
  return s / static_cast<double>(ce.precision.size());
}

}  // namespace

GlobalEstimate consensus_combine(const std::vector<LocalEstimate>& estimates, const ConsensusOperator& op,
                                 const ModelStructure& s) {
  using Kind = ConsensusOperator::Kind;
  using Weights = ConsensusOperator::Weights;
  const auto& layout = s.layout();
  std::vector<const LocalEstimate*> order;
  for (const auto& e : estimates) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const LocalEstimate* a, const LocalEstimate* b) { return a->block_id < b->block_id; });

  GlobalEstimate out;
  out.params.layout = s.layout_ptr();
  out.params.values.assign(s.dimension(), 0.0);
  out.provenance.resize(layout.num_cliques());
  std::set<std::size_t> used;
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    const auto& clique = layout.clique(c);
    std::vector<std::pair<const LocalEstimate*, const CliqueEstimate*>> contrib;
    for (const auto* e : order) {
      if (const auto* ce = e->find(clique)) contrib.emplace_back(e, ce);
    }
    if (op.kind == Kind::authoritative) {
      std::erase_if(contrib, [](const auto& p) { return !p.second->authoritative; });
      if (contrib.size() > 1) throw std::invalid_argument("clique " + clique.label() + " has several authoritative blocks");
    }
    if (contrib.empty()) throw std::invalid_argument("no block estimates clique " + clique.label());

    std::vector<double> w(contrib.size(), 0.0);
    if (op.kind == Kind::linear) {
      for (std::size_t k = 0; k < contrib.size(); ++k) {
        switch (op.weights) {
          case Weights::uniform: w[k] = 1.0; break;
          case Weights::samples: w[k] = static_cast<double>(std::max<std::size_t>(contrib[k].first->num_samples, 1)); break;
          case Weights::curvature: w[k] = mean_precision(*contrib[k].second); break;
        }
      }
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      if (!(total > 0)) throw std::invalid_argument("consensus weights for clique " + clique.label() + " sum to zero");
      for (double& x : w) x /= total;
    } else if (op.kind == Kind::max_select) {
      std::size_t best = 0;
      double best_score = mean_precision(*contrib[0].second);
      for (std::size_t k = 1; k < contrib.size(); ++k) {
        const double score = mean_precision(*contrib[k].second);
        if (score > best_score) {
          best = k;
          best_score = score;
        }
      }
      w[best] = 1.0;
    } else {
      w[0] = 1.0;
    }

    const std::size_t off = layout.offset(c);
    for (std::size_t k = 0; k < contrib.size(); ++k) {
      if (w[k] == 0.0) continue;
      const auto& vals = contrib[k].second->values;
      if (vals.size() != layout.dim(c)) throw std::invalid_argument("clique estimate has the wrong size");
      for (std::size_t i = 0; i < vals.size(); ++i) out.params.values[off + i] += w[k] * vals[i];
      out.provenance[c].push_back({contrib[k].first->block_id, w[k]});
      used.insert(contrib[k].first->block_id);
    }
  }
  for (const auto* e : order) {
    if (!used.count(e->block_id)) continue;
    out.converged = out.converged && e->report.converged;
    out.certified = out.certified && e->certified;
    out.iterations = std::max(out.iterations, e->report.iterations);
  }
  return out;
}

// ----------------------------------------------------------- registry

namespace {

const std::vector<std::pair<std::string, BaseMethod>>& base_table() {
  static const std::vector<std::pair<std::string, BaseMethod>> table{
      {"ml", BaseMethod::ml},
      {"lap-full", BaseMethod::lap_full},
      {"lap-full-noedges", BaseMethod::lap_full_noedges},
      {"lap-1node", BaseMethod::lap_1node},
      {"clap", BaseMethod::clap},
      {"pl", BaseMethod::pl},
      {"ccl-cond", BaseMethod::ccl_cond},
      {"ccl-marg", BaseMethod::ccl_marg},
  };
  return table;
}

std::optional<BaseMethod> lookup_base(const std::string& name) {
  for (const auto& [n, b] : base_table()) {
    if (n == name) return b;
  }
  return std::nullopt;
}

bool needs_precision(const ConsensusOperator& op) {
  return op.kind == ConsensusOperator::Kind::max_select ||
         (op.kind == ConsensusOperator::Kind::linear && op.weights == ConsensusOperator::Weights::curvature);
}

}  // namespace

std::string base_name(BaseMethod base) {
  for (const auto& [n, b] : base_table()) {
    if (b == base) return n;
  }
  return "unknown";
}

bool is_block_method(BaseMethod base) {
  return base != BaseMethod::ml && base != BaseMethod::ccl_cond && base != BaseMethod::ccl_marg;
}

EstimatorSpec parse_estimator(const std::string& name) {
  using Kind = ConsensusOperator::Kind;
  EstimatorSpec spec;
  if (auto b = lookup_base(name)) {
    spec.name = name;
    spec.base = *b;
    if (*b == BaseMethod::pl) {
      spec.consensus = ConsensusOperator{Kind::linear, ConsensusOperator::Weights::uniform};
    } else if (is_block_method(*b)) {
      spec.consensus = ConsensusOperator{Kind::authoritative, ConsensusOperator::Weights::uniform};
    }
    return spec;
  }
  const auto colon = name.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("unknown estimator '" + name + "'");
  const std::string head = name.substr(0, colon);
  std::string rest = name.substr(colon + 1);
  std::string suffix;
  if (const auto c2 = rest.find(':'); c2 != std::string::npos) {
    suffix = rest.substr(c2 + 1);
    rest = rest.substr(0, c2);
  }
  ConsensusOperator op;
  if (head == "consensus-linear") {
    op.kind = Kind::linear;
  } else if (head == "consensus-max") {
    op.kind = Kind::max_select;
  } else if (head == "consensus-auth") {
    op.kind = Kind::authoritative;
  } else {
    throw std::invalid_argument("unknown estimator '" + name + "'");
  }
  const auto b = lookup_base(rest);
  if (!b || !is_block_method(*b)) {
    throw std::invalid_argument("consensus needs a block estimator base, got '" + rest + "' in '" + name + "'");
  }
  if (!suffix.empty()) {
    if (op.kind != Kind::linear) throw std::invalid_argument("only linear consensus takes weights: '" + name + "'");
    if (suffix == "uniform") {
      op.weights = ConsensusOperator::Weights::uniform;
    } else if (suffix == "samples") {
      op.weights = ConsensusOperator::Weights::samples;
    } else if (suffix == "curvature") {
      op.weights = ConsensusOperator::Weights::curvature;
    } else {
      throw std::invalid_argument("unknown consensus weights '" + suffix + "' in '" + name + "'");
    }
  }
  spec.base = *b;
  spec.consensus = op;
  spec.name = head + ":" + rest + (suffix.empty() || suffix == "uniform" ? "" : ":" + suffix);
  return spec;
}

std::vector<EstimatorTask> build_tasks(BaseMethod base, const ModelStructure& s) {
  switch (base) {
    case BaseMethod::lap_full: return build_lap_tasks(s, Neighbourhood::full, true);
    case BaseMethod::lap_full_noedges: return build_lap_tasks(s, Neighbourhood::full, false);
    case BaseMethod::lap_1node: return build_lap_tasks(s, Neighbourhood::one_node, true);
    case BaseMethod::clap: return build_clap_tasks(s);
    case BaseMethod::pl:
    case BaseMethod::ccl_cond: return build_pl_tasks(s);
    case BaseMethod::ccl_marg: return build_lap_tasks(s, Neighbourhood::full, true);
    case BaseMethod::ml: return {};
  }
  return {};
}

std::uint64_t communication_cost(const EstimatorSpec& spec, const std::vector<EstimatorTask>& tasks,
                                 const ModelStructure& s, int iterations) {
  if (!is_block_method(spec.base)) {
    return static_cast<std::uint64_t>(std::max(iterations, 1)) * s.dimension();
  }
  std::uint64_t units = 0;
  const bool assembly = spec.consensus && spec.consensus->kind == ConsensusOperator::Kind::authoritative;
  for (const auto& t : tasks) units += assembly ? system_dim(t.authoritative, s.cards()) : target_dimension(t, s.cards());
  return units;
}

namespace {

std::string status_of(const GlobalEstimate& g) {
  if (!g.converged) return "nonconverged";
  if (!g.certified) return "uncertified";
  return "ok";
}

}  // namespace

std::vector<EstimatorRun> run_estimators(const std::vector<EstimatorSpec>& specs, const ModelStructure& s,
                                         const Dataset& data, const RunOptions& ro,
                                         std::map<std::string, std::exception_ptr>* errors) {
  data.validate(s.cards());
  std::vector<EstimatorRun> runs;
  auto fail = [&](const std::string& name, std::exception_ptr e) {
    if (!errors) std::rethrow_exception(e);
    (*errors)[name] = e;
  };

  // Fit every block base once, with precision when any consumer needs it.
  std::map<BaseMethod, bool> want_precision;
  for (const auto& sp : specs) {
    if (is_block_method(sp.base)) want_precision[sp.base] |= sp.consensus && needs_precision(*sp.consensus);
  }
  struct BaseFit {
    std::vector<EstimatorTask> tasks;
    std::vector<LocalEstimate> fits;
    std::exception_ptr error;
  };
  std::map<BaseMethod, BaseFit> fits;
  for (const auto& [base, precision] : want_precision) {
    BaseFit bf;
    try {
      bf.tasks = build_tasks(base, s);
      FitOptions fo = ro.fit;
      fo.with_precision = precision;
      bf.fits = parallel_map(bf.tasks.size(), ro.threads,
                             [&](std::size_t i) { return local_estimate(bf.tasks[i], s, data, fo); });
    } catch (...) {
      bf.error = std::current_exception();
    }
    fits.emplace(base, std::move(bf));
  }

  for (const auto& sp : specs) {
    try {
      EstimatorRun run;
      run.name = sp.name;
      if (is_block_method(sp.base)) {
        const auto& bf = fits.at(sp.base);
        if (bf.error) std::rethrow_exception(bf.error);
        run.estimate = consensus_combine(bf.fits, *sp.consensus, s);
        run.blocks = bf.tasks.size();
        run.comm_units = communication_cost(sp, bf.tasks, s);
      } else if (sp.base == BaseMethod::ml) {
        run.estimate = centralized_ml(s, data, ro.fit);
        run.blocks = 1;
        run.comm_units = communication_cost(sp, {}, s, run.estimate.iterations);
      } else {
        const auto tasks = build_tasks(sp.base, s);
        const auto kind = sp.base == BaseMethod::ccl_cond ? ObjectiveKind::conditional : ObjectiveKind::marginal;
        run.estimate = centralized_composite(tasks, s, data, kind, ro.fit);
        run.blocks = tasks.size();
        run.comm_units = communication_cost(sp, tasks, s, run.estimate.iterations);
      }
      run.status = status_of(run.estimate);
      runs.push_back(std::move(run));
    } catch (...) {
      fail(sp.name, std::current_exception());
    }
  }
  return runs;
}

EstimatorRun run_estimator(const EstimatorSpec& spec, const ModelStructure& s, const Dataset& data,
                           const RunOptions& ro) {
  auto runs = run_estimators({spec}, s, data, ro);
  return std::move(runs.front());
}

}  // namespace laplab
