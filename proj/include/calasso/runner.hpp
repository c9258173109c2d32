#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calasso/ca.hpp"
#include "calasso/classical.hpp"
#include "calasso/cluster.hpp"
#include "calasso/dataset.hpp"

namespace calasso {

enum class Algorithm { sfista, spnm, ca_sfista, ca_spnm, reference };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm algorithm);

/// Either a LIBSVM file or a synthetic problem.
struct DataSource {
  std::optional<std::string> libsvm_path;
  std::optional<std::size_t> features;  // d override for LIBSVM input
  SyntheticParams synthetic;
};

Dataset load_data(const DataSource& source);

/// Per-dataset parameter choices used in the convergence and scaling studies.
struct Preset {
  std::string_view name;
  std::size_t samples;
  std::size_t features;
  double lambda;
  double sampling_fraction;
  std::size_t block_size;
};

std::optional<Preset> find_preset(std::string_view name);

struct ExperimentSpec {
  Algorithm algorithm = Algorithm::ca_sfista;
  DataSource data;
  double lambda = 0.1;
  SolverConfig solver;  // solver.step <= 0 selects 1/L_hat
  std::size_t processors = 1;
  MachineParams machine;
  unsigned threads = 1;
  bool with_reference = true;  // compute w_op for the rel_sol_err column
  std::optional<std::string> output_path;
  std::optional<std::string> reference_cache;

  void validate() const;
};

struct ReferenceOptions {
  double kkt_tolerance = 1e-8;
  std::size_t max_iterations = 1'000'000;
};

struct ReferenceSolution {
  std::vector<double> w_op;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
};

/// Full-batch FISTA with t = 1/L_hat until the KKT residual drops to the
/// tolerance. Throws ReferenceError when the budget runs out.
ReferenceSolution solve_reference(const LassoProblem& problem, const ReferenceOptions& options = {});

/// Cached w_op, reused only when both the dataset fingerprint and lambda match.
std::optional<ReferenceSolution> load_cached_reference(const std::string& path, std::uint64_t fingerprint,
                                                       double lambda);
void store_cached_reference(const std::string& path, std::uint64_t fingerprint, double lambda,
                            const ReferenceSolution& solution);

/// Cache lookup, else solve (and store when a path is given).
ReferenceSolution obtain_reference(const LassoProblem& problem, const std::optional<std::string>& cache_path);

/// 1 / estimate_lipschitz(data).
double default_step(const Dataset& data);

RunTrace run_algorithm(Algorithm algorithm, const LassoProblem& problem, const SolverConfig& config,
                       VirtualCluster& cluster, std::span<const double> reference = {});

inline constexpr std::string_view kTraceHeader = "# calasso-trace v1";
inline constexpr std::string_view kTraceColumns = "iter,objective,rel_sol_err,F,L,W,M_peak,modeled_time";
inline constexpr std::string_view kSweepHeader = "# calasso-sweep v1";

void write_trace_csv(const RunTrace& trace, std::ostream& out);
std::string trace_csv(const RunTrace& trace);

struct ExperimentResult {
  RunTrace trace;
  std::optional<ReferenceSolution> reference;
  std::string csv;
  std::optional<std::string> error;  // set when the run diverged; csv then holds the partial trace
};

/// Loads the data, resolves the step and reference, runs on a fresh virtual
/// cluster, and writes the CSV to spec.output_path when set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Same, on an already loaded dataset and optional precomputed reference.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& data,
                                const ReferenceSolution* reference);

struct SweepGrid {
  std::vector<std::size_t> block_sizes;
  std::vector<double> sampling_fractions;
  std::vector<std::size_t> processors;
  std::vector<std::uint64_t> seeds;
};

struct SweepCell {
  std::size_t block_size = 1;
  double sampling_fraction = 1.0;
  std::size_t processors = 1;
  std::uint64_t seed = 0;
  RunTrace trace;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string csv;
};

/// One run per grid point (k outermost, then b, P, seed), sharing one
/// reference solution. Cell failures land in the error column.
SweepResult sweep(const ExperimentSpec& base, const SweepGrid& grid);

}  // namespace calasso
