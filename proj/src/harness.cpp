#include "laplab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "laplab/error.hpp"
#include "laplab/io.hpp"
#include "laplab/parallel.hpp"

namespace laplab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto k = s.find(sep, start);
    out.push_back(s.substr(start, k == std::string::npos ? std::string::npos : k - start));
    if (k == std::string::npos) return out;
    start = k + 1;
  }
}

template <class T>
T parse_unsigned(const std::string& text, const std::string& what) {
  const auto t = trim(text);
  T v{};
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec == std::errc() && r.ptr == t.data() + t.size()) return v;
  // Accept integral scientific notation such as 1e5.
  double d = 0;
  try {
    d = parse_double(t);
  } catch (const ParseError&) {
    throw ParseError("bad " + what + " '" + text + "'");
  }
  if (d < 0 || d != std::floor(d) || d > 1e18) throw ParseError("bad " + what + " '" + text + "'");
  return static_cast<T>(d);
}

std::pair<std::size_t, std::size_t> parse_shape(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2) throw std::invalid_argument("expected RxC, got '" + text + "'");
  return {parse_unsigned<std::size_t>(parts[0], "dimension"), parse_unsigned<std::size_t>(parts[1], "dimension")};
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ParseError("bad boolean '" + text + "'");
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

ModelStructure pairwise(std::size_t nodes, const std::vector<UndirectedGraph::Edge>& edges, int cards) {
  std::vector<Clique> cliques;
  for (std::size_t k = 0; k < nodes; ++k) cliques.emplace_back(std::vector<NodeId>{static_cast<NodeId>(k)});
  for (const auto& [a, b] : edges) cliques.emplace_back(std::vector<NodeId>{a, b});
  return ModelStructure(UndirectedGraph(nodes, edges), CliqueSystem(std::move(cliques)),
                        Cardinalities(nodes, cards));
}

std::string failure_status(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const CapExceeded&) {
    return "failed-cap";
  } catch (const NonFiniteError&) {
    return "failed-nonfinite";
  } catch (...) {
    return "failed";
  }
}

ResultRow failed_row(const std::string& name, std::size_t n, std::size_t rep, double wall_ms, std::string status) {
  ResultRow row;
  row.estimator = name;
  row.n = n;
  row.replicate = rep;
  row.clique = kAggregateLabel;
  row.wall_ms = wall_ms;
  row.status = std::move(status);
  return row;
}

std::string opt_to_string(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Sort key for the clique column: node list, with the aggregate row last.
std::pair<int, std::vector<NodeId>> clique_key(const std::string& label) {
  if (label == kAggregateLabel) return {1, {}};
  std::vector<NodeId> ids;
  for (const auto& part : split(label, '-')) ids.push_back(parse_unsigned<NodeId>(part, "clique label"));
  return {0, ids};
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("model spec needs a kind prefix: '" + text + "'");
  const auto kind = text.substr(0, colon), arg = text.substr(colon + 1);
  ModelSpec spec;
  if (kind == "grid" || kind == "bipartite") {
    spec.kind = kind == "grid" ? Kind::grid : Kind::bipartite;
    std::tie(spec.rows, spec.cols) = parse_shape(arg);
    if (spec.rows == 0 || spec.cols == 0) throw std::invalid_argument("model dimensions must be positive");
  } else if (kind == "full") {
    spec.kind = Kind::full;
    spec.rows = parse_unsigned<std::size_t>(arg, "node count");
    spec.cols = 1;
    if (spec.rows == 0) throw std::invalid_argument("model dimensions must be positive");
  } else if (kind == "file") {
    spec.kind = Kind::file;
    if (arg.empty()) throw std::invalid_argument("file model spec needs a path");
    spec.path = arg;
  } else {
    throw std::invalid_argument("unknown model kind '" + kind + "'");
  }
  return spec;
}

std::string ModelSpec::to_string() const {
  switch (kind) {
    case Kind::grid: return "grid:" + std::to_string(rows) + "x" + std::to_string(cols);
    case Kind::full: return "full:" + std::to_string(rows);
    case Kind::bipartite: return "bipartite:" + std::to_string(rows) + "x" + std::to_string(cols);
    case Kind::file: return "file:" + path.string();
  }
  return {};
}

ModelStructure make_structure(const ModelSpec& spec, int cards) {
  if (cards < 2) throw std::invalid_argument("cardinality must be at least 2");
  std::vector<UndirectedGraph::Edge> edges;
  switch (spec.kind) {
    case ModelSpec::Kind::grid: {
      auto id = [&](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * spec.cols + c); };
      for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
          if (c + 1 < spec.cols) edges.emplace_back(id(r, c), id(r, c + 1));
          if (r + 1 < spec.rows) edges.emplace_back(id(r, c), id(r + 1, c));
        }
      }
      std::sort(edges.begin(), edges.end());
      return pairwise(spec.rows * spec.cols, edges, cards);
    }
    case ModelSpec::Kind::full:
      for (std::size_t a = 0; a < spec.rows; ++a) {
        for (std::size_t b = a + 1; b < spec.rows; ++b) edges.emplace_back(a, b);
      }
      return pairwise(spec.rows, edges, cards);
    case ModelSpec::Kind::bipartite:
      for (std::size_t a = 0; a < spec.rows; ++a) {
        for (std::size_t b = 0; b < spec.cols; ++b) edges.emplace_back(a, spec.rows + b);
      }
      return pairwise(spec.rows + spec.cols, edges, cards);
    case ModelSpec::Kind::file:
      return load_model(spec.path).structure();
  }
  throw std::logic_error("unhandled model kind");
}

MrfModel generate_model(const ModelSpec& spec, int cards, double weight, std::uint64_t seed) {
  if (spec.kind == ModelSpec::Kind::file) return load_model(spec.path);
  if (!(weight >= 0) || !std::isfinite(weight)) throw std::invalid_argument("weight must be finite and >= 0");
  auto s = make_structure(spec, cards);
  Rng rng(seed, 0);
  std::vector<double> theta(s.dimension());
  for (auto& t : theta) t = rng.uniform(-weight, weight);
  return MrfModel(std::move(s), std::move(theta));
}

void ExperimentConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("sizes must not be empty");
  for (auto n : sizes) {
    if (n == 0) throw std::invalid_argument("sizes must be positive");
  }
  if (replicates == 0) throw std::invalid_argument("replicates must be at least 1");
  if (estimators.empty()) throw std::invalid_argument("at least one estimator is required");
  for (const auto& e : estimators) parse_estimator(e);
  if (cards < 2) throw std::invalid_argument("cards must be at least 2");
  if (!(grad_tol > 0)) throw std::invalid_argument("grad_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(ridge >= 0)) throw std::invalid_argument("ridge must be >= 0");
}

FitOptions ExperimentConfig::fit_options() const {
  FitOptions fo;
  fo.opt.grad_tol = grad_tol;
  fo.opt.max_iters = max_iters;
  fo.ridge = ridge;
  fo.enumeration_cap = enumeration_cap;
  return fo;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : read_key_values(in)) {
    try {
      if (key == "model") {
        cfg.model = ModelSpec::parse(value);
      } else if (key == "cards") {
        cfg.cards = parse_unsigned<int>(value, "cards");
      } else if (key == "weight") {
        cfg.weight = parse_double(value);
      } else if (key == "sizes") {
        cfg.sizes.clear();
        for (const auto& p : split(value, ',')) cfg.sizes.push_back(parse_unsigned<std::size_t>(p, "size"));
      } else if (key == "replicates") {
        cfg.replicates = parse_unsigned<std::size_t>(value, "replicates");
      } else if (key == "seed") {
        cfg.seed = parse_unsigned<std::uint64_t>(value, "seed");
      } else if (key == "estimators") {
        cfg.estimators.clear();
        for (const auto& p : split(value, ',')) {
          if (!trim(p).empty()) cfg.estimators.push_back(trim(p));
        }
      } else if (key == "grad_tol") {
        cfg.grad_tol = parse_double(value);
      } else if (key == "max_iters") {
        cfg.max_iters = parse_unsigned<int>(value, "max_iters");
      } else if (key == "ridge") {
        cfg.ridge = parse_double(value);
      } else if (key == "threads") {
        cfg.threads = parse_unsigned<std::size_t>(value, "threads");
      } else if (key == "sampler") {
        if (value == "exact") {
          cfg.sampler = Sampler::exact;
        } else if (value == "gibbs") {
          cfg.sampler = Sampler::gibbs;
        } else {
          throw ParseError("sampler must be exact or gibbs");
        }
      } else if (key == "burn_in") {
        cfg.gibbs.burn_in = parse_unsigned<std::size_t>(value, "burn_in");
      } else if (key == "thinning") {
        cfg.gibbs.thinning = parse_unsigned<std::size_t>(value, "thinning");
      } else if (key == "timing") {
        cfg.timing = parse_bool(value);
      } else if (key == "enumeration_cap") {
        cfg.enumeration_cap = parse_unsigned<std::uint64_t>(value, "enumeration_cap");
      } else {
        throw ParseError("unknown key");
      }
    } catch (const std::exception& e) {
      throw ParseError("config key '" + key + "': " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_config(in);
}

std::string describe_config(const ExperimentConfig& cfg) {
  std::vector<std::string> sizes;
  for (auto n : cfg.sizes) sizes.push_back(std::to_string(n));
  std::ostringstream out;
  out << "model = " << cfg.model.to_string() << '\n'
      << "cards = " << cfg.cards << '\n'
      << "weight = " << format_double(cfg.weight) << '\n'
      << "sizes = " << join(sizes, ",") << '\n'
      << "replicates = " << cfg.replicates << '\n'
      << "seed = " << cfg.seed << '\n'
      << "estimators = " << join(cfg.estimators, ",") << '\n'
      << "grad_tol = " << format_double(cfg.grad_tol) << '\n'
      << "max_iters = " << cfg.max_iters << '\n'
      << "ridge = " << format_double(cfg.ridge) << '\n'
      << "threads = " << cfg.threads << '\n'
      << "sampler = " << (cfg.sampler == Sampler::exact ? "exact" : "gibbs") << '\n'
      << "burn_in = " << cfg.gibbs.burn_in << '\n'
      << "thinning = " << cfg.gibbs.thinning << '\n'
      << "timing = " << (cfg.timing ? "true" : "false") << '\n'
      << "enumeration_cap = " << cfg.enumeration_cap << '\n';
  return out.str();
}

std::vector<ResultRow> result_rows(const EstimatorRun& run, const MrfModel& truth, std::size_t n,
                                   std::size_t replicate, double wall_ms) {
  const auto& layout = truth.structure().layout();
  const auto& est = run.estimate.params.values;
  const auto& theta = truth.parameters();
  if (est.size() != theta.size()) throw std::invalid_argument("estimate does not match the true layout");
  if (!std::all_of(est.begin(), est.end(), [](double v) { return std::isfinite(v); })) {
    auto row = failed_row(run.name, n, replicate, wall_ms, "failed-nonfinite");
    row.blocks = run.blocks;
    row.comm_units = run.comm_units;
    return {row};
  }
  std::vector<ResultRow> rows;
  double total_abs = 0, total_sq = 0;
  auto base = [&] {
    ResultRow row;
    row.estimator = run.name;
    row.n = n;
    row.replicate = replicate;
    row.wall_ms = wall_ms;
    row.blocks = run.blocks;
    row.comm_units = run.comm_units;
    row.status = run.status;
    return row;
  };
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    double max_abs = 0, sq = 0;
    for (std::size_t k = layout.offset(c); k < layout.offset(c) + layout.dim(c); ++k) {
      const double d = std::abs(est[k] - theta[k]);
      max_abs = std::max(max_abs, d);
      sq += d * d;
      total_abs += d;
      total_sq += d * d;
    }
    auto row = base();
    row.clique = layout.clique(c).label('-');
    row.abs_error = max_abs;
    row.rmse = layout.dim(c) ? std::sqrt(sq / static_cast<double>(layout.dim(c))) : 0.0;
    rows.push_back(std::move(row));
  }
  auto all = base();
  all.clique = kAggregateLabel;
  const double d = static_cast<double>(est.size());
  all.abs_error = est.empty() ? 0.0 : total_abs / d;
  all.rmse = est.empty() ? 0.0 : std::sqrt(total_sq / d);
  rows.push_back(std::move(all));
  return rows;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.estimator != b.estimator) return a.estimator < b.estimator;
    if (a.n != b.n) return a.n < b.n;
    if (a.replicate != b.replicate) return a.replicate < b.replicate;
    return clique_key(a.clique) < clique_key(b.clique);
  });
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto truth = generate_model(cfg.model, cfg.cards, cfg.weight, cfg.seed);
  const auto& s = truth.structure();
  std::vector<EstimatorSpec> specs;
  for (const auto& e : cfg.estimators) specs.push_back(parse_estimator(e));
  const std::size_t max_n = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const std::size_t threads = resolve_threads(cfg.threads);

  RunOptions ro;
  ro.fit = cfg.fit_options();
  ro.threads = std::max<std::size_t>(1, threads / cfg.replicates);

  auto replicate_rows = [&](std::size_t rep) {
    Rng rng = Rng(cfg.seed, 1).substream(rep);
    const Dataset full = cfg.sampler == Sampler::exact ? sample_exact(truth, max_n, rng, cfg.enumeration_cap)
                                                       : sample_gibbs(truth, max_n, cfg.gibbs, rng);
    std::vector<ResultRow> rows;
    for (std::size_t n : cfg.sizes) {
      const Dataset data = full.head(n);
      auto emit = [&](const std::vector<EstimatorRun>& runs, const std::map<std::string, std::exception_ptr>& errors,
                      double wall_ms) {
        for (const auto& run : runs) {
          for (auto& row : result_rows(run, truth, n, rep, wall_ms)) rows.push_back(std::move(row));
        }
        for (const auto& [name, e] : errors) rows.push_back(failed_row(name, n, rep, wall_ms, failure_status(e)));
      };
      if (cfg.timing) {
        for (const auto& sp : specs) {
          std::map<std::string, std::exception_ptr> errors;
          const auto t0 = std::chrono::steady_clock::now();
          const auto runs = run_estimators({sp}, s, data, ro, &errors);
          const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
          emit(runs, errors, dt.count());
        }
      } else {
        std::map<std::string, std::exception_ptr> errors;
        emit(run_estimators(specs, s, data, ro, &errors), errors, 0.0);
      }
    }
    return rows;
  };

  std::vector<ResultRow> rows;
  for (auto& part : parallel_map(cfg.replicates, threads, replicate_rows)) {
    for (auto& row : part) rows.push_back(std::move(row));
  }
  sort_rows(rows);
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.n << ',' << r.replicate << ',' << r.clique << ',' << opt_to_string(r.abs_error)
        << ',' << opt_to_string(r.rmse) << ',' << format_double(r.wall_ms) << ',' << r.blocks << ','
        << r.comm_units << ',' << r.status << '\n';
  }
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw ParseError("missing or wrong CSV header");
  std::vector<ResultRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    try {
      if (f.size() != 10) throw ParseError("expected 10 fields");
      ResultRow r;
      r.estimator = f[0];
      r.n = parse_unsigned<std::size_t>(f[1], "N");
      r.replicate = parse_unsigned<std::size_t>(f[2], "replicate");
      r.clique = f[3];
      if (!f[4].empty()) r.abs_error = parse_double(f[4]);
      if (!f[5].empty()) r.rmse = parse_double(f[5]);
      r.wall_ms = parse_double(f[6]);
      r.blocks = parse_unsigned<std::size_t>(f[7], "blocks");
      r.comm_units = parse_unsigned<std::uint64_t>(f[8], "comm_units");
      r.status = f[9];
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError("CSV line " + std::to_string(number) + ": " + e.what());
    }
  }
  return rows;
}

void save_experiment(const std::filesystem::path& path, const std::vector<ResultRow>& rows,
                     const ExperimentConfig& cfg) {
  {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    write_csv(out, rows);
    if (!out) throw ParseError("write failed for " + path.string());
  }
  const auto meta = path.string() + ".meta.txt";
  std::ofstream out(meta);
  if (!out) throw ParseError("cannot write " + meta);
  out << "# effective configuration of " << path.filename().string() << '\n' << describe_config(cfg);
}

}  // namespace laplab
