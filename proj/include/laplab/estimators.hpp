#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/model.hpp"
#include "laplab/optimize.hpp"
#include "laplab/potentials.hpp"

namespace laplab {

enum class ObjectiveKind { marginal, conditional, full };
enum class Neighbourhood { full, one_node };

std::string to_string(ObjectiveKind kind);

/// One independent sub-problem: a domain, the auxiliary cliques that
/// parametrize it and the model cliques it reports.
struct EstimatorTask {
  std::size_t block_id = 0;
  NodeSet domain;
  ObjectiveKind kind = ObjectiveKind::marginal;
  NodeId pivot = -1;             // conditioned node for the conditional kind
  Clique anchor;                 // generating maximal clique; empty for node blocks
  CliqueSystem targets;          // model cliques this block estimates
  CliqueSystem authoritative;    // targets this block alone supplies in assembly
  CliqueSystem aux_structure;    // cliques of the auxiliary model
  bool certified = true;         // every target passes the Strong LAP check and the structure includes induced edges
  bool with_induced_edges = true;
};

/// Free parameters of the auxiliary model, and of the reported targets only.
std::size_t aux_dimension(const EstimatorTask& task, const Cardinalities& cards);
std::size_t target_dimension(const EstimatorTask& task, const Cardinalities& cards);

/// One marginal-ML block per maximal clique q on A_q (or on q and the
/// neighbours of a pivot node for `one_node`). Every model clique is owned by
/// the first maximal clique containing it.
std::vector<EstimatorTask> build_lap_tasks(const ModelStructure& s, Neighbourhood nbhd, bool with_induced_edges);
/// Conditional blocks on A_q, one per (maximal clique, pivot) pair in use.
std::vector<EstimatorTask> build_clap_tasks(const ModelStructure& s);
/// One conditional block per node m over {m} and its neighbours.
std::vector<EstimatorTask> build_pl_tasks(const ModelStructure& s);

/// Conditional task for node j over an arbitrary domain containing j.
EstimatorTask make_conditional_task(const ModelStructure& s, NodeId j, const NodeSet& domain,
                                    std::size_t block_id = 0);
/// Marginal task over an arbitrary domain with the marginal (or internal-only) structure.
EstimatorTask make_marginal_task(const ModelStructure& s, const NodeSet& domain, bool with_induced_edges,
                                 std::size_t block_id = 0);

struct CliqueEstimate {
  Clique clique;
  std::vector<double> values;     // free entries, table order
  std::vector<double> precision;  // 1 / diag of the inverse information; empty when not computed
  bool authoritative = false;
};

struct LocalEstimate {
  std::size_t block_id = 0;
  std::vector<CliqueEstimate> cliques;
  OptReport report;
  std::size_t num_samples = 0;  // 0 for fits to an exact distribution
  bool certified = true;

  const CliqueEstimate* find(const Clique& c) const;
};

struct Contribution {
  std::size_t block_id;
  double weight;
};

struct GlobalEstimate {
  ParamVector params;
  std::vector<std::vector<Contribution>> provenance;  // per model clique, layout order
  bool converged = true;
  bool certified = true;
  int iterations = 0;
};

struct FitOptions {
  OptConfig opt;
  double ridge = 0.0;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  bool with_precision = false;
};

LocalEstimate lap_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                           const FitOptions& fo = {});
LocalEstimate clap_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                            const FitOptions& fo = {});
/// Either of the above by task kind.
LocalEstimate local_estimate(const EstimatorTask& task, const ModelStructure& s, const Dataset& data,
                             const FitOptions& fo = {});

/// Infinite-data fit. `target` is a distribution over exactly the task
/// domain: a marginal for marginal tasks; a marginal or conditional table for
/// conditional tasks (it weights the conditioning configurations).
LocalEstimate fit_to_distribution(const EstimatorTask& task, const ModelStructure& s,
                                  const ProbabilityTable& target, const FitOptions& fo = {});

/// Full likelihood over all nodes. Throws CapExceeded when not enumerable.
GlobalEstimate centralized_ml(const ModelStructure& s, const Dataset& data, const FitOptions& fo = {});

/// Sum of block objectives over one shared parameter vector. Auxiliary
/// cliques that are not certified model cliques of their block stay local.
GlobalEstimate centralized_composite(const std::vector<EstimatorTask>& tasks, const ModelStructure& s,
                                     const Dataset& data, ObjectiveKind kind, const FitOptions& fo = {});

struct ConsensusOperator {
  enum class Kind { linear, max_select, authoritative };
  enum class Weights { uniform, samples, curvature };
  Kind kind = Kind::linear;
  Weights weights = Weights::uniform;
};

/// Global vector with the block's targets filled in and exact zeros elsewhere.
std::vector<double> embed(const LocalEstimate& est, const ModelStructure& s);

/// Per-clique combination of overlapping estimates. Throws std::invalid_argument
/// if some model clique has no contribution (or no authoritative one).
GlobalEstimate consensus_combine(const std::vector<LocalEstimate>& estimates, const ConsensusOperator& op,
                                 const ModelStructure& s);

// ----------------------------------------------------------- registry

enum class BaseMethod { ml, lap_full, lap_full_noedges, lap_1node, clap, pl, ccl_cond, ccl_marg };

struct EstimatorSpec {
  std::string name;
  BaseMethod base = BaseMethod::ml;
  std::optional<ConsensusOperator> consensus;  // set for block-based estimators
};

/// Parses `ml`, `lap-full`, `lap-full-noedges`, `lap-1node`, `clap`, `pl`,
/// `ccl-cond`, `ccl-marg` and `consensus-{linear,max,auth}:<base>` where
/// linear also accepts a trailing `:uniform`, `:samples` or `:curvature`.
/// Throws std::invalid_argument on anything else.
EstimatorSpec parse_estimator(const std::string& name);
std::string base_name(BaseMethod base);
bool is_block_method(BaseMethod base);
std::vector<EstimatorTask> build_tasks(BaseMethod base, const ModelStructure& s);

struct EstimatorRun {
  std::string name;
  GlobalEstimate estimate;
  std::size_t blocks = 0;
  std::uint64_t comm_units = 0;
  std::string status;  // ok, nonconverged, uncertified
};

struct RunOptions {
  FitOptions fit;
  std::size_t threads = 1;
};

/// Parameter scalars transmitted, by the analytic rules: one upload of
/// authoritative parameters per block for assembly, every block's targets for
/// consensus and iterations x D for centralized fits.
std::uint64_t communication_cost(const EstimatorSpec& spec, const std::vector<EstimatorTask>& tasks,
                                 const ModelStructure& s, int iterations = 1);

/// Runs estimators on one dataset. Block fits are shared between estimators
/// with the same base and run through a parallel map. A failing estimator is
/// recorded in `errors` and skipped; without the map the error propagates.
std::vector<EstimatorRun> run_estimators(const std::vector<EstimatorSpec>& specs, const ModelStructure& s,
                                         const Dataset& data, const RunOptions& ro,
                                         std::map<std::string, std::exception_ptr>* errors = nullptr);
EstimatorRun run_estimator(const EstimatorSpec& spec, const ModelStructure& s, const Dataset& data,
                           const RunOptions& ro = {});

}  // namespace laplab
