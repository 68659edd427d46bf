// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "laplab/estimators.hpp"
#include "laplab/harness.hpp"
#include "laplab/loglinear.hpp"
#include "support.hpp"

using namespace laplab;
using namespace laplab::testing;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double param_of(const MrfModel& m, const Clique& c) {
  const auto& layout = m.structure().layout();
  return m.parameters()[layout.offset(*layout.find(c))];
}

FitOptions tight_fit() {
  FitOptions fo;
  fo.opt.grad_tol = 1e-10;
  return fo;
}

MrfModel random_grid(std::uint64_t seed) {
  Rng rng(seed);
  const auto s = pairwise_structure(grid_graph(3, 3));
  return MrfModel(s, uniform_params(s.dimension(), 1.0, rng));
}

// Largest |alpha_q - theta_q| over the anchor cliques of a set of infinite-data fits.
Outcome marginal_oracle() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_grid(seed);
    const auto& s = m.structure();
    for (const auto& t : build_lap_tasks(s, Neighbourhood::full, true)) {
      const auto est = fit_to_distribution(t, s, m.exact_marginal(t.domain), tight_fit());
      worst = std::max(worst, std::abs(est.find(t.anchor)->values[0] - param_of(m, t.anchor)));
    }
  }
  return {worst < 1e-6, "max error " + fmt(worst) + " over 10 seeds x 12 cliques"};
}

Outcome conditional_oracle() {
  double worst = 0;
  std::size_t fits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_grid(seed);
    const auto& s = m.structure();
    for (const auto& q : maximal_cliques(s.graph())) {
      const auto a_q = one_neighbourhood(s.cliques(), q);
      for (NodeId j : q) {
        for (const auto& domain : {a_q, one_node_neighbourhood(s.graph(), q, j)}) {
          const auto t = make_conditional_task(s, j, domain);
          const auto est = fit_to_distribution(t, s, m.exact_conditional(j, domain).table, tight_fit());
          worst = std::max(worst, std::abs(est.find(q)->values[0] - param_of(m, q)));
          ++fits;
        }
      }
    }
  }
  return {worst < 1e-6, "max error " + fmt(worst) + " over " + std::to_string(fits) + " conditional fits"};
}

const PotentialTable* table_for(const std::vector<PotentialTable>& tables, const Clique& c) {
  for (const auto& t : tables) {
    if (t.scope() == c) return &t;
  }
  return nullptr;
}

Outcome negative_control() {
  const auto q = grid_clique({7, 8});
  const auto A = grid_set({5, 7, 8});
  int biased = 0;
  double smallest = INFINITY, largest = 0, canon_gap = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_grid(seed);
    const auto& s = m.structure();
    auto t = make_marginal_task(s, A, true);
    t.targets.insert(q);  // not certified here; fit it anyway
    const auto est = fit_to_distribution(t, s, m.exact_marginal(A), tight_fit());
    const double err = std::abs(est.find(q)->values[0] - param_of(m, q));
    smallest = std::min(smallest, err);
    largest = std::max(largest, err);
    biased += err > 1e-3;
    // Independent oracle: the exact canonical potential of the marginal on q.
    const auto tables = extract_canonical_potentials(m.exact_marginal(A));
    const double exact = std::abs(table_for(tables, q)->free_values()[0] - param_of(m, q));
    canon_gap = std::max(canon_gap, std::abs(exact - err));
  }
  return {biased >= 9, std::to_string(biased) + "/10 seeds biased by more than 1e-3 (error range " + fmt(smallest) +
                           " to " + fmt(largest) + "; fit matches the exact marginal potential to " + fmt(canon_gap) +
                           ")"};
}

Outcome canonical_roundtrip() {
  Rng rng(404);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial) % 9;
    const auto g = random_graph(n, 0.35, rng);
    const ModelStructure s(g, downward_closure(maximal_cliques(g)), Cardinalities(n, 2));
    const MrfModel m(s, uniform_params(s.dimension(), 1.0, rng));
    const auto tables = extract_canonical_potentials(m.joint());
    for (const auto& t : m.tables()) {
      const auto* got = table_for(tables, t.scope());
      for (std::size_t k = 0; k < t.table_size(); ++k) {
        worst = std::max(worst, std::abs((got ? got->energy_at(k) : 0.0) - t.energy_at(k)));
      }
    }
    for (const auto& t : tables) {
      if (!s.cliques().contains(t.scope())) worst = std::max(worst, t.max_abs());
    }
  }

  // The marginal over the 1-neighbourhood of {7,8} on the grid.
  const auto m = random_grid(7);
  const auto A = grid_set({4, 5, 7, 8, 9});
  const auto marg = extract_canonical_potentials(m.exact_marginal(A), 1e-7);
  const auto q = grid_clique({7, 8});
  const double q_err = std::abs(table_for(marg, q)->free_values()[0] - param_of(m, q));
  std::vector<Clique> pairs;
  for (const auto& t : marg) {
    if (t.scope().size() == 2) pairs.push_back(t.scope());
  }
  std::vector<Clique> expected;
  for (auto [a, b] : std::initializer_list<std::pair<int, int>>{{4, 5}, {4, 7}, {4, 9}, {5, 8}, {5, 9}, {7, 8}, {8, 9}}) {
    expected.push_back(grid_clique({a, b}));
  }
  const bool support = pairs == expected;
  return {worst < 1e-9 && q_err < 1e-9 && support,
          "joint " + fmt(worst) + ", q-table " + fmt(q_err) + ", pairwise support " +
              (support ? "internal edges + (4,9),(5,9)" : "wrong")};
}

Outcome induced_graph_equivalence() {
  Rng rng(505);
  int agree = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(6);
    const auto g = random_graph(n, 0.4, rng);
    const auto m = generic_pairwise_model(g, rng);
    NodeSet A;
    for (std::size_t v = 0; v < n; ++v) {
      if (rng.uniform() < 0.5) A.push_back(static_cast<NodeId>(v));
    }
    if (A.size() < 2) A = {0, 1};
    // Marginal graph: edges inside A plus pairs joined through V \ A.
    std::vector<UndirectedGraph::Edge> from_paths = induced_edges(g, A), from_tables;
    for (const auto& e : internal_subgraph(g, A).parent_edges()) from_paths.push_back(e);
    for (const auto& t : extract_canonical_potentials(m.exact_marginal(A), 1e-7)) {
      if (t.scope().size() == 2) from_tables.emplace_back(t.scope()[0], t.scope()[1]);
    }
    std::sort(from_paths.begin(), from_paths.end());
    from_paths.erase(std::unique(from_paths.begin(), from_paths.end()), from_paths.end());
    std::sort(from_tables.begin(), from_tables.end());
    agree += from_paths == from_tables;
  }
  return {agree == 50, std::to_string(agree) + "/50 graphs agree"};
}

// ------------------------------------------------------------ experiment

struct Stats {
  double mean = 0, se = 0;
  std::size_t count = 0, failed = 0;
};

Stats stats_of(const std::vector<double>& v, std::size_t failed) {
  Stats s;
  s.count = v.size();
  s.failed = failed;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

struct Grouped {
  // (estimator, N, clique) -> errors over replicates
  std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<double>> values;
  std::map<std::pair<std::string, std::size_t>, std::size_t> failures;

  Stats get(const std::string& e, std::size_t n, const std::string& clique) const {
    const auto it = values.find({e, n, clique});
    const auto f = failures.find({e, n});
    return stats_of(it == values.end() ? std::vector<double>{} : it->second, f == failures.end() ? 0 : f->second);
  }
};

Grouped group(const std::vector<ResultRow>& rows) {
  Grouped g;
  for (const auto& r : rows) {
    if (!r.rmse) {
      ++g.failures[{r.estimator, r.n}];
      continue;
    }
    // RMSE for the aggregate, |error| for single cliques.
    g.values[{r.estimator, r.n, r.clique}].push_back(r.clique == kAggregateLabel ? *r.rmse : *r.abs_error);
  }
  return g;
}

std::vector<std::string> experiment_estimators() {
  std::vector<std::string> out{"ml", "lap-full", "lap-full-noedges", "lap-1node", "clap", "pl", "ccl-cond", "ccl-marg"};
  for (const char* base : {"lap-full", "lap-1node", "clap", "pl"}) {
    for (const char* w : {"", ":samples", ":curvature"}) out.push_back(std::string("consensus-linear:") + base + w);
    out.push_back(std::string("consensus-max:") + base);
    out.push_back(std::string("consensus-auth:") + base);
  }
  return out;
}

Outcome consistency(const ExperimentConfig& cfg, const Grouped& g) {
  std::string bad;
  double worst_final = 0;
  for (const auto& e : cfg.estimators) {
    bool decreasing = true;
    std::size_t failed = 0;
    for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
      const auto s = g.get(e, cfg.sizes[k], kAggregateLabel);
      failed += s.failed;
      if (k > 0 && !(s.mean < g.get(e, cfg.sizes[k - 1], kAggregateLabel).mean)) decreasing = false;
    }
    if (e == "lap-full-noedges") continue;  // mis-specified on purpose; see the bias criterion
    const double final_rmse = g.get(e, cfg.sizes.back(), kAggregateLabel).mean;
    worst_final = std::max(worst_final, final_rmse);
    if (!decreasing || failed > 0 || !(final_rmse < 0.05)) {
      bad += " " + e + (decreasing ? "" : "[not decreasing]") + (failed ? "[failures]" : "") +
             (final_rmse < 0.05 ? "" : "[rmse " + fmt(final_rmse) + "]");
    }
  }
  return {bad.empty(), bad.empty() ? std::to_string(cfg.estimators.size() - 1) +
                                         " certified estimators decreasing; worst RMSE at N=1e5 " + fmt(worst_final)
                                   : "offenders:" + bad};
}

Outcome neighbourhood_trend(const ExperimentConfig& cfg, const Grouped& g) {
  const auto n = cfg.sizes.back();
  int ok = 0, total = 0;
  double worst_margin = -INFINITY;
  const auto structure = make_structure(cfg.model, cfg.cards);
  for (const auto& c : structure.cliques()) {
    const auto f = g.get("lap-full", n, c.label('-'));
    const auto o = g.get("lap-1node", n, c.label('-'));
    const double se = std::sqrt(f.se * f.se + o.se * o.se);
    ++total;
    ok += f.mean <= o.mean + 2 * se;
    worst_margin = std::max(worst_margin, (f.mean - o.mean) / std::max(se, 1e-300));
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " cliques within 2 SE; largest (full - 1node)/SE = " + fmt(worst_margin)};
}

// RMSE of the assembled infinite-data fit against the experiment's true model.
double exact_assembly_rmse(const ExperimentConfig& cfg, bool with_edges) {
  const auto truth = generate_model(cfg.model, cfg.cards, cfg.weight, cfg.seed);
  const auto& s = truth.structure();
  std::vector<LocalEstimate> fits;
  for (const auto& t : build_lap_tasks(s, Neighbourhood::full, with_edges)) {
    fits.push_back(fit_to_distribution(t, s, truth.exact_marginal(t.domain), tight_fit()));
  }
  const auto g = consensus_combine(fits, {ConsensusOperator::Kind::authoritative, {}}, s);
  double sq = 0;
  for (std::size_t k = 0; k < s.dimension(); ++k) sq += std::pow(g.params.values[k] - truth.parameters()[k], 2);
  return std::sqrt(sq / static_cast<double>(s.dimension()));
}

Outcome misspecification_bias(const ExperimentConfig& cfg, const Grouped& g) {
  const auto n = cfg.sizes.back();
  const double full = g.get("lap-full", n, kAggregateLabel).mean;
  const double noedges = g.get("lap-full-noedges", n, kAggregateLabel).mean;
  std::string curve;
  for (auto size : cfg.sizes) curve += " " + fmt(g.get("lap-full-noedges", size, kAggregateLabel).mean);
  return {noedges >= 3 * full, "ratio " + fmt(noedges / full) + " (noedges RMSE by N:" + curve +
                                   "; infinite-data RMSE noedges " + fmt(exact_assembly_rmse(cfg, false)) +
                                   " vs full " + fmt(exact_assembly_rmse(cfg, true)) + ")"};
}

// ------------------------------------------------------------ objectives

Outcome gradient_checks() {
  Rng rng(909);
  const auto m = random_grid(3);
  const auto& s = m.structure();
  const auto data = sample_exact(m, 500, rng);
  std::vector<std::pair<std::string, Objective>> objs;

  const auto lap = build_lap_tasks(s, Neighbourhood::full, true)[4];
  auto lap_fam = std::make_shared<const LogLinearFamily>(lap.domain, lap.aux_structure, s.cards());
  objs.emplace_back("marginal", marginal_objective(lap_fam, patterns_from_data(data, *lap_fam)));

  const auto cl = build_clap_tasks(s)[4];
  auto cl_fam = std::make_shared<const LogLinearFamily>(cl.domain, cl.aux_structure, s.cards());
  objs.emplace_back("conditional", conditional_objective(cl_fam, cl.pivot, patterns_from_data(data, *cl_fam)));

  NodeSet all;
  for (std::size_t v = 0; v < s.num_nodes(); ++v) all.push_back(static_cast<NodeId>(v));
  auto full_fam = std::make_shared<const LogLinearFamily>(all, s.cliques(), s.cards());
  objs.emplace_back("full", marginal_objective(full_fam, patterns_from_data(data, *full_fam)));
  objs.emplace_back("ridge", with_ridge(objs.back().second, 0.3));

  // Two overlapping conditional blocks sharing a global vector.
  std::vector<Objective> blocks;
  std::vector<std::vector<std::size_t>> maps;
  for (NodeId j : {grid_id(7), grid_id(8)}) {
    const auto t = build_pl_tasks(s)[static_cast<std::size_t>(j)];
    auto fam = std::make_shared<const LogLinearFamily>(t.domain, t.aux_structure, s.cards());
    std::vector<std::size_t> map;
    for (const auto& c : t.aux_structure) map.push_back(s.layout().offset(*s.layout().find(c)));
    blocks.push_back(conditional_objective(fam, j, patterns_from_data(data, *fam)));
    maps.push_back(std::move(map));
  }
  objs.emplace_back("composite", sum_objectives(std::move(blocks), std::move(maps), s.dimension(), "composite"));

  double worst = 0;
  for (const auto& [name, obj] : objs) {
    for (int p = 0; p < 5; ++p) worst = std::max(worst, check_gradient(obj, uniform_params(obj.dimension, 1.0, rng)));
  }
  return {worst < 1e-5, std::to_string(objs.size()) + " objective kinds x 5 points, max relative error " + fmt(worst)};
}

Outcome pl_certification() {
  int checked = 0, failed = 0;
  for (const auto& g : {grid_graph(3, 3), complete_graph(5)}) {
    const auto s = pairwise_structure(g);
    for (std::size_t m = 0; m < g.num_nodes(); ++m) {
      const auto node = static_cast<NodeId>(m);
      const auto A = set_union({node}, neighbors(g, node));
      for (std::size_t c : s.cliques_of(node)) {
        ++checked;
        failed += !strong_lap_satisfied(g, A, s.cliques()[c]);
      }
    }
  }
  return {failed == 0, std::to_string(checked - failed) + "/" + std::to_string(checked) + " (node, clique) pairs certified"};
}

Outcome determinism_and_cost() {
  ExperimentConfig cfg;
  cfg.sizes = {500, 5000};
  cfg.replicates = 4;
  cfg.seed = 17;
  cfg.estimators = {"ml", "lap-full", "clap", "consensus-linear:pl", "consensus-max:lap-1node", "ccl-marg"};
  auto csv = [](const ExperimentConfig& c) {
    std::ostringstream out;
    write_csv(out, run_experiment(c));
    return out.str();
  };
  const auto one = csv(cfg);
  cfg.threads = 4;
  const auto four = csv(cfg);
  std::istringstream in(one);
  std::uint64_t lap = 0, pl = 0;
  for (const auto& r : read_csv(in)) {
    if (r.estimator == "lap-full") lap = r.comm_units;
    if (r.estimator == "consensus-linear:pl") pl = r.comm_units;
  }
  const bool same = one == four;
  return {same && lap == 21 && pl == 33,
          std::string(same ? "byte-identical" : "DIFFERENT") + " CSV for 1 and 4 threads; comm LAP " +
              std::to_string(lap) + " < consensus-PL " + std::to_string(pl)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    failures += !o.pass;
    std::printf("%s [%02d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt.count());
    std::fflush(stdout);
  };

  report(1, "marginal fits on certified domains recover clique parameters", marginal_oracle);
  report(2, "conditional fits recover clique parameters", conditional_oracle);
  report(3, "uncertified domain {5,7,8} is biased for {7,8}", negative_control);
  report(4, "canonical potential extraction round-trips", canonical_roundtrip);
  report(5, "induced edges match the support of the marginal's potentials", induced_graph_equivalence);

  ExperimentConfig cfg;
  cfg.model = ModelSpec::parse("grid:3x3");
  cfg.sizes = {100, 1000, 10000, 100000};
  cfg.replicates = 20;
  cfg.seed = 2024;
  cfg.estimators = experiment_estimators();
  Grouped grouped;
  double exp_seconds = 0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      grouped = group(run_experiment(cfg));
    } catch (const std::exception& e) {
      std::printf("experiment failed: %s\n", e.what());
    }
    exp_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("     experiment: %zu estimators x %zu sizes x %zu replicates in %.1fs\n", cfg.estimators.size(),
                cfg.sizes.size(), cfg.replicates, exp_seconds);
  }
  report(6, "RMSE decreases with N and is below 0.05 at N=1e5", [&] { return consistency(cfg, grouped); });
  report(7, "full neighbourhood no worse than one-node neighbourhood", [&] { return neighbourhood_trend(cfg, grouped); });
  report(8, "omitting induced edges leaves a bias", [&] { return misspecification_bias(cfg, grouped); });
  report(9, "objective gradients match finite differences", gradient_checks);
  report(10, "pseudo-likelihood domains are certified", pl_certification);
  report(11, "thread-independent output and communication ordering", determinism_and_cost);

  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
