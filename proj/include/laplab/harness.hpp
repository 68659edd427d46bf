#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "laplab/estimators.hpp"
#include "laplab/model.hpp"

namespace laplab {

/// `grid:RxC`, `full:M`, `bipartite:MxN` or `file:<path>`.
struct ModelSpec {
  enum class Kind { grid, full, bipartite, file };
  Kind kind = Kind::grid;
  std::size_t rows = 3, cols = 3;  // grid shape, or visible x hidden counts for bipartite
  std::filesystem::path path;

  static ModelSpec parse(const std::string& text);
  std::string to_string() const;
};

/// Unary plus pairwise cliques on the named graph. Grid nodes are row-major;
/// bipartite nodes list the first side before the second.
ModelStructure make_structure(const ModelSpec& spec, int cards);

/// Parameters i.i.d. uniform on [-w, w] in layout order, from a stream fixed
/// by `seed`. A file spec returns the stored model unchanged.
MrfModel generate_model(const ModelSpec& spec, int cards, double weight, std::uint64_t seed);

enum class Sampler { exact, gibbs };

struct ExperimentConfig {
  ModelSpec model;
  int cards = 2;
  double weight = 1.0;
  std::vector<std::size_t> sizes{100, 1000, 10000, 100000};
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  std::vector<std::string> estimators{"ml", "lap-full", "lap-1node", "clap", "pl"};
  double grad_tol = 1e-8;
  int max_iters = 5000;
  double ridge = 0.0;
  std::size_t threads = 1;  // 0 = hardware concurrency
  Sampler sampler = Sampler::exact;
  GibbsConfig gibbs;
  bool timing = false;      // off keeps output byte-identical between runs
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;

  /// Throws std::invalid_argument on an empty size list, zero replicates,
  /// no estimators or an unknown estimator name.
  void validate() const;
  FitOptions fit_options() const;
};

/// Reads `key = value` lines; unknown keys, repeated keys and bad values throw ParseError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key with its effective value, in the config file syntax.
std::string describe_config(const ExperimentConfig& cfg);

struct ResultRow {
  std::string estimator;
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::string clique;               // node labels joined by '-', or ALL
  std::optional<double> abs_error;  // max over the clique's entries; mean over all entries for ALL
  std::optional<double> rmse;       // over the clique's entries, or over all parameters for ALL
  double wall_ms = 0;
  std::size_t blocks = 0;
  std::uint64_t comm_units = 0;
  std::string status;               // ok, nonconverged, uncertified, failed-cap, failed-nonfinite, failed

  bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kAggregateLabel = "ALL";
inline constexpr const char* kCsvHeader = "estimator,N,replicate,clique,abs_error,rmse,wall_ms,blocks,comm_units,status";

/// Error rows of one run against the truth.
std::vector<ResultRow> result_rows(const EstimatorRun& run, const MrfModel& truth, std::size_t n,
                                   std::size_t replicate, double wall_ms);

/// Sorts by estimator, N, replicate, then clique node list with ALL last.
void sort_rows(std::vector<ResultRow>& rows);

/// Replicate r draws max(sizes) samples from its own substream; each size
/// uses the leading rows, so the curves of one replicate are nested. Jobs run
/// through a parallel map and the rows come back sorted.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);
/// Writes the CSV and a `<path>.meta.txt` sidecar echoing the effective config.
void save_experiment(const std::filesystem::path& path, const std::vector<ResultRow>& rows,
                     const ExperimentConfig& cfg);

}  // namespace laplab
