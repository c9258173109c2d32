#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "calasso/dataset.hpp"
#include "calasso/linalg.hpp"

namespace calasso {

/// Seconds per flop (gamma), per message (alpha) and per word (beta).
struct MachineParams {
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  void validate() const;
  bool operator==(const MachineParams&) const = default;
};

/// Parses "gamma,alpha,beta".
MachineParams parse_machine_params(std::string_view text);

/// Critical-path tallies: flops F, message rounds L, words W and peak memory words.
struct CostCounters {
  std::uint64_t flops = 0;
  std::uint64_t messages = 0;
  std::uint64_t words = 0;
  std::uint64_t memory_peak = 0;

  bool operator==(const CostCounters&) const = default;
};

/// T = gamma F + alpha L + beta W.
double modeled_time(const CostCounters& counters, const MachineParams& machine);

/// ceil(log2 P): rounds of a recursive-doubling all-reduce.
std::size_t allreduce_rounds(std::size_t processors);

class VirtualCluster;

/// What one virtual processor sees during a local phase.
class ProcContext {
 public:
  std::size_t rank() const noexcept { return rank_; }
  std::size_t owned_begin() const noexcept { return begin_; }
  std::size_t owned_end() const noexcept { return end_; }
  FlopMeter& meter() noexcept { return *meter_; }
  /// Words held beyond the resident data block; feeds the peak-memory counter.
  void set_workspace(std::size_t words);

 private:
  friend class VirtualCluster;
  ProcContext(VirtualCluster& owner, std::size_t rank, std::size_t begin, std::size_t end, FlopMeter& meter)
      : owner_(&owner), rank_(rank), begin_(begin), end_(end), meter_(&meter) {}

  VirtualCluster* owner_;
  std::size_t rank_;
  std::size_t begin_;
  std::size_t end_;
  FlopMeter* meter_;
};

/// P virtual processors executing barrier-synchronous phases.
///
/// Local phases run a body on every rank (on up to `threads` OS threads) and
/// add the largest per-rank flop delta to the critical path. Collectives are
/// recursive-doubling all-reduces: ceil(log2 P) rounds, the full payload sent
/// in each round, summed in a fixed rank-ordered binary tree so results do not
/// depend on the thread schedule.
class VirtualCluster {
 public:
  /// `resident_words[p]` is the data held permanently by rank p (empty = none).
  explicit VirtualCluster(ColumnPartition partition, MachineParams machine = {},
                          std::vector<std::size_t> resident_words = {}, unsigned threads = 1);

  /// Partitions `data` by nonzeros and makes each rank resident on its block.
  static VirtualCluster for_dataset(const Dataset& data, std::size_t processors, MachineParams machine = {},
                                    unsigned threads = 1);

  std::size_t processors() const noexcept { return partition_.processors(); }
  const ColumnPartition& partition() const noexcept { return partition_; }
  const MachineParams& machine() const noexcept { return machine_; }
  unsigned threads() const noexcept { return threads_; }

  void local_phase(const std::function<void(ProcContext&)>& body);

  /// Sums `payloads` (one per rank, equal lengths) and leaves the sum in every entry.
  void all_reduce_sum(std::span<std::vector<double>> payloads);

  /// Sets the workspace of every rank at once (outside phases).
  void set_workspace_all(std::size_t words);

  const CostCounters& counters() const noexcept { return critical_; }
  /// Per-rank running totals (flops, rounds, words, peak memory).
  std::span<const CostCounters> rank_counters() const noexcept { return per_rank_; }
  double modeled_time() const { return calasso::modeled_time(critical_, machine_); }
  void reset_counters();

 private:
  friend class ProcContext;
  void note_workspace(std::size_t rank, std::size_t words);
  void refresh_memory_peak();

  ColumnPartition partition_;
  MachineParams machine_;
  std::vector<std::size_t> resident_;
  unsigned threads_;
  std::vector<FlopMeter> meters_;
  std::vector<CostCounters> per_rank_;
  CostCounters critical_;
  std::atomic<bool> in_local_phase_{false};
};

/// A program for spmd_execute: local bodies operate on the rank's buffer,
/// all-reduce phases sum the buffers across ranks.
struct Phase {
  enum class Kind { local, all_reduce };
  Kind kind = Kind::local;
  std::function<void(ProcContext&, std::vector<double>&)> body;

  static Phase local(std::function<void(ProcContext&, std::vector<double>&)> fn) {
    return {Kind::local, std::move(fn)};
  }
  static Phase all_reduce() { return {Kind::all_reduce, {}}; }
};

struct SpmdResult {
  std::vector<std::vector<double>> buffers;
  CostCounters counters;
};

/// Runs the phases in lockstep; each rank starts with an empty buffer.
SpmdResult spmd_execute(VirtualCluster& cluster, std::span<const Phase> program);

}  // namespace calasso
