#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "calasso/classical.hpp"

namespace calasso::detail {

/// Appends one trace row per global iteration and decides tolerance stops.
class TraceRecorder {
 public:
  TraceRecorder(const LassoProblem& problem, const SolverConfig& config, const VirtualCluster& cluster,
                std::span<const double> reference)
      : problem_(problem), config_(config), cluster_(cluster), reference_(reference) {
    if (config.stopping == StoppingMode::tolerance && reference.empty()) {
      throw ParameterError("tolerance stopping needs a reference solution");
    }
    if (!reference.empty() && reference.size() != problem.dim()) {
      throw DimensionError("reference solution has the wrong length");
    }
  }

  /// Records w_j; returns true when the run should stop early.
  bool record(std::size_t iteration, std::span<const double> w) {
    for (double v : w) {
      if (!std::isfinite(v)) throw DivergenceError(iteration, std::move(trace_));
    }
    TraceRow row;
    row.iteration = iteration;
    row.objective = objective(problem_, w);
    if (!reference_.empty()) row.rel_sol_err = relative_solution_error(w, reference_);
    row.counters = cluster_.counters();
    row.modeled_time = cluster_.modeled_time();
    trace_.rows.push_back(row);
    if (config_.record_iterates) trace_.iterates.emplace_back(w.begin(), w.end());
    if (config_.stopping == StoppingMode::tolerance && row.rel_sol_err && *row.rel_sol_err < config_.tolerance) {
      trace_.reached_tolerance = true;
      return true;
    }
    return false;
  }

  RunTrace finish(std::span<const double> w) && {
    trace_.solution.assign(w.begin(), w.end());
    return std::move(trace_);
  }

 private:
  const LassoProblem& problem_;
  const SolverConfig& config_;
  const VirtualCluster& cluster_;
  std::span<const double> reference_;
  RunTrace trace_;
};

/// Every virtual processor holds its own copy of the iterate history.
struct Replica {
  std::vector<double> w;
  std::vector<double> w_prev;
};

inline void check_replicas_agree(const std::vector<Replica>& replicas) {
  for (const auto& r : replicas) {
    if (r.w != replicas.front().w) throw ContractViolation("redundant replicas disagree");
  }
}

}  // namespace calasso::detail
