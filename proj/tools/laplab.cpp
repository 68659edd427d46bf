#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "laplab/error.hpp"
#include "laplab/estimators.hpp"
#include "laplab/graph.hpp"
#include "laplab/harness.hpp"
#include "laplab/io.hpp"
#include "laplab/parallel.hpp"

using namespace laplab;

namespace {

// Print a node list shifted by the user's index base.
std::string labels(const NodeSet& nodes, int base, char sep = '-') {
  std::string out;
  for (NodeId v : nodes) out += (out.empty() ? "" : std::string(1, sep)) + std::to_string(v + base);
  return out;
}

NodeSet node_arg(const std::string& text, int base, std::size_t num_nodes) {
  NodeSet out;
  for (NodeId v : parse_node_list(text)) {
    v -= base;
    if (v < 0 || static_cast<std::size_t>(v) >= num_nodes) {
      throw ParseError("node " + std::to_string(v + base) + " is outside the model");
    }
    out.push_back(v);
  }
  return make_node_set(std::move(out));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local estimators for discrete Markov random fields"};
  app.require_subcommand(1);

  std::string model_spec = "grid:3x3", out_path, model_path, data_path, estimator = "lap-full", config_path;
  std::string domain_arg, clique_arg, sampler = "exact";
  int cards = 2;
  double weight = 1.0, grad_tol = 1e-8, ridge = 0.0;
  std::uint64_t seed = 1;
  std::size_t n = 1000, threads = 1, burn_in = GibbsConfig{}.burn_in, thinning = GibbsConfig{}.thinning;
  int max_iters = 5000;
  std::optional<std::size_t> threads_override;
  bool one_based = false;

  auto* gen = app.add_subcommand("generate", "Write a random model with U[-w, w] parameters");
  gen->add_option("--model", model_spec, "grid:RxC, full:M, bipartite:MxN")->capture_default_str();
  gen->add_option("--cards", cards, "States per variable")->capture_default_str();
  gen->add_option("--weight", weight, "Parameter range w")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out_path, "Model file")->required();

  auto* smp = app.add_subcommand("sample", "Draw a dataset from a model file");
  smp->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  smp->add_option("--n", n, "Number of samples")->capture_default_str();
  smp->add_option("--seed", seed)->capture_default_str();
  smp->add_option("--sampler", sampler)->check(CLI::IsMember({"exact", "gibbs"}))->capture_default_str();
  smp->add_option("--burn-in", burn_in, "Gibbs sweeps before the first sample")->capture_default_str();
  smp->add_option("--thinning", thinning, "Gibbs sweeps between samples")->capture_default_str();
  smp->add_option("--out", out_path, "Dataset file")->required();

  auto* est = app.add_subcommand("estimate", "Fit one estimator and write the estimated model");
  est->add_option("--model-structure", model_path, "Model file; only its structure is used")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  est->add_option("--estimator", estimator)->capture_default_str();
  est->add_option("--grad-tol", grad_tol)->capture_default_str();
  est->add_option("--max-iters", max_iters)->capture_default_str();
  est->add_option("--ridge", ridge)->capture_default_str();
  est->add_option("--threads", threads, "0 = all cores")->capture_default_str();
  est->add_option("--out", out_path, "Estimated model file")->required();

  auto* exp = app.add_subcommand("experiment", "Run an experiment config and write a CSV report");
  exp->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  exp->add_option("--threads", threads_override, "Overrides the config value");
  exp->add_option("--out", out_path, "CSV file; a .meta.txt sidecar is written next to it")->required();

  auto* chk = app.add_subcommand("check", "Strong LAP verdict and induced edges for a domain");
  chk->add_option("--model", model_path, "Model or graph file")->required()->check(CLI::ExistingFile);
  chk->add_option("--domain", domain_arg, "Comma-separated node ids")->required();
  chk->add_option("--clique", clique_arg, "Comma-separated node ids")->required();
  chk->add_flag("--one-based", one_based, "Node ids on the command line and in the output start at 1");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      save_model(out_path, generate_model(ModelSpec::parse(model_spec), cards, weight, seed));
    } else if (*smp) {
      const auto m = load_model(model_path);
      Rng rng(seed);
      const auto d =
          sampler == "exact" ? sample_exact(m, n, rng) : sample_gibbs(m, n, GibbsConfig{burn_in, thinning}, rng);
      save_dataset(out_path, d);
    } else if (*est) {
      const auto s = load_model(model_path).structure();
      const auto data = load_dataset(data_path);
      if (data.num_vars() != s.num_nodes()) throw ParseError("dataset and model disagree on the number of nodes");
      RunOptions ro;
      ro.fit.opt.grad_tol = grad_tol;
      ro.fit.opt.max_iters = max_iters;
      ro.fit.ridge = ridge;
      ro.threads = resolve_threads(threads);
      const auto run = run_estimator(parse_estimator(estimator), s, data, ro);
      {
        std::ofstream out(out_path);
        if (!out) throw ParseError("cannot write " + out_path);
        out << "# estimator " << run.name << ", N = " << data.num_samples() << ", status " << run.status << '\n';
        write_model(out, MrfModel(s, run.estimate.params.values));
      }
      std::cout << "estimator " << run.name << "\nstatus " << run.status << "\nblocks " << run.blocks
                << "\ncomm_units " << run.comm_units << '\n';
    } else if (*exp) {
      auto cfg = load_config(config_path);
      if (threads_override) cfg.threads = *threads_override;
      const auto rows = run_experiment(cfg);
      save_experiment(out_path, rows, cfg);
      std::cout << rows.size() << " rows written to " << out_path << '\n';
    } else if (*chk) {
      // Accept either a model file or a bare graph file.
      UndirectedGraph g;
      try {
        g = load_model(model_path).structure().graph();
      } catch (const ParseError&) {
        g = load_graph(model_path);
      }
      const int base = one_based ? 1 : 0;
      const auto A = node_arg(domain_arg, base, g.num_nodes());
      const Clique q(node_arg(clique_arg, base, g.num_nodes()));
      if (!is_subset(q.nodes(), A)) throw ParseError("the clique must lie inside the domain");
      const bool ok = strong_lap_satisfied(g, A, q);
      std::cout << "strong_lap " << (ok ? "satisfied" : "violated") << '\n';
      // Edges of the induced graph that the model graph lacks.
      std::cout << "induced_edges";
      bool any = false;
      for (const auto& [a, b] : induced_edges(g, A)) {
        if (g.has_edge(a, b)) continue;
        std::cout << ' ' << (a + base) << '-' << (b + base);
        any = true;
      }
      if (!any) std::cout << " none";
      std::cout << "\nmarginal_cliques";
      for (const auto& c : marginal_clique_system(g, A).sorted()) std::cout << ' ' << labels(c.nodes(), base);
      std::cout << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
