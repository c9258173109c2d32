#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "calasso/cluster.hpp"
#include "calasso/error.hpp"
#include "calasso/linalg.hpp"
#include "calasso/prox.hpp"

namespace calasso {

enum class GradientPoint {
  auxiliary,         // grad f evaluated at v_j (standard FISTA)
  previous_iterate,  // grad f evaluated at w_{j-1}, then applied at v_j
};

enum class StoppingMode {
  fixed_iterations,  // run exactly `iterations` steps
  tolerance,         // stop at the first iteration with relative solution error < tolerance
};

struct SolverConfig {
  double sampling_fraction = 1.0;  // b
  double step = 0.0;               // t, constant across iterations
  std::size_t iterations = 100;    // T
  std::size_t inner_iterations = 1;  // Q, SPNM inner ISTA steps
  std::size_t block_size = 1;        // k, CA variants only
  std::uint64_t seed = 0;
  double tolerance = 0.1;
  StoppingMode stopping = StoppingMode::fixed_iterations;
  GradientPoint gradient_point = GradientPoint::auxiliary;
  bool momentum = true;
  bool record_iterates = true;

  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  std::optional<double> rel_sol_err;
  CostCounters counters;
  double modeled_time = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  /// w_j for every recorded row when SolverConfig::record_iterates is set.
  std::vector<std::vector<double>> iterates;
  std::vector<double> solution;
  bool reached_tolerance = false;
};

/// Non-finite iterate. Carries the rows recorded before the failure.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, RunTrace partial);

  std::size_t iteration() const noexcept { return iteration_; }
  const RunTrace& partial() const noexcept { return partial_; }

 private:
  std::size_t iteration_;
  RunTrace partial_;
};

/// Flops charged by one sfista_step: gradient (2d^2) plus momentum and
/// prox-gradient updates (2d each).
constexpr std::uint64_t sfista_step_flops(std::size_t d) { return 2 * d * d + 4 * d; }

/// Flops charged by one spnm_step: gradient at w_{j-1} (2d^2 + 2d) plus
/// Q inner model steps of 2(d^2 + d) each.
constexpr std::uint64_t spnm_step_flops(std::size_t d, std::size_t q) {
  return 2 * d * d + 2 * d + 2 * q * (d * d + d);
}

/// One SFISTA update at global iteration j >= 1:
///   beta = max(0, (j-2)/j),  v = w1 + beta (w1 - w2),
///   w_j  = S_{lambda t}(v - t (G p - R)),  p = v (or w1 for GradientPoint::previous_iterate).
/// `w1` = w_{j-1}, `w2` = w_{j-2}.
std::vector<double> sfista_step(const GramView& gram, std::span<const double> w1, std::span<const double> w2,
                                std::size_t j, double lambda, const SolverConfig& config,
                                FlopMeter* meter = nullptr);

/// One SPNM update: Q ISTA steps on the quadratic model around w_{j-1} with
/// Hessian G, warm-started at z_0 = w_{j-1}. The model gradient at z is
/// (G w_{j-1} - R) + G (z - w_{j-1}).
std::vector<double> spnm_step(const GramView& gram, std::span<const double> w1, double lambda,
                              const SolverConfig& config, FlopMeter* meter = nullptr);

/// Stochastic FISTA on the virtual cluster: one Gram all-reduce per iteration.
/// `reference` (optional) enables relative-error columns and tolerance stopping.
RunTrace run_sfista(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                    std::span<const double> reference = {});

/// Stochastic proximal Newton on the virtual cluster.
RunTrace run_spnm(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                  std::span<const double> reference = {});

/// Per-rank words of solver state besides the Gram payload.
constexpr std::size_t sfista_vector_words(std::size_t d) { return 4 * d; }
constexpr std::size_t spnm_vector_words(std::size_t d) { return 6 * d; }

}  // namespace calasso
