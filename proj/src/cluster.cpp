#include "calasso/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "calasso/error.hpp"

namespace calasso {

void MachineParams::validate() const {
  if (!(gamma >= 0.0 && alpha >= 0.0 && beta >= 0.0)) {
    throw ParameterError("machine parameters gamma, alpha, beta must all be >= 0");
  }
}

MachineParams parse_machine_params(std::string_view text) {
  double fields[3] = {0.0, 0.0, 0.0};
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    auto token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (count == 3) throw ParameterError("machine parameters take exactly three values: gamma,alpha,beta");
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), fields[count]);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      throw ParameterError("bad machine parameter '" + std::string(token) + "'");
    }
    ++count;
    pos = comma + 1;
  }
  if (count != 3) throw ParameterError("machine parameters take exactly three values: gamma,alpha,beta");
  MachineParams out{fields[0], fields[1], fields[2]};
  out.validate();
  return out;
}

double modeled_time(const CostCounters& counters, const MachineParams& machine) {
  return machine.gamma * static_cast<double>(counters.flops) + machine.alpha * static_cast<double>(counters.messages) +
         machine.beta * static_cast<double>(counters.words);
}

std::size_t allreduce_rounds(std::size_t processors) {
  std::size_t rounds = 0;
  while ((std::size_t{1} << rounds) < processors) ++rounds;
  return rounds;
}

void ProcContext::set_workspace(std::size_t words) { owner_->note_workspace(rank_, words); }

VirtualCluster::VirtualCluster(ColumnPartition partition, MachineParams machine,
                               std::vector<std::size_t> resident_words, unsigned threads)
    : partition_(std::move(partition)),
      machine_(machine),
      resident_(std::move(resident_words)),
      threads_(std::max(1U, threads)) {
  const std::size_t P = partition_.processors();
  if (P == 0) throw ParameterError("cluster needs at least one processor");
  machine_.validate();
  if (resident_.empty()) resident_.assign(P, 0);
  if (resident_.size() != P) throw DimensionError("resident word list must have one entry per processor");
  meters_.assign(P, FlopMeter{});
  per_rank_.assign(P, CostCounters{});
  reset_counters();
}

VirtualCluster VirtualCluster::for_dataset(const Dataset& data, std::size_t processors, MachineParams machine,
                                           unsigned threads) {
  auto partition = partition_columns(data, processors);
  std::vector<std::size_t> resident(processors);
  for (std::size_t p = 0; p < processors; ++p) resident[p] = data.nnz(partition.begin(p), partition.end(p));
  return VirtualCluster(std::move(partition), machine, std::move(resident), threads);
}

void VirtualCluster::reset_counters() {
  critical_ = CostCounters{};
  for (std::size_t p = 0; p < per_rank_.size(); ++p) {
    meters_[p] = FlopMeter{};
    per_rank_[p] = CostCounters{};
    per_rank_[p].memory_peak = resident_[p];
  }
  refresh_memory_peak();
}

void VirtualCluster::note_workspace(std::size_t rank, std::size_t words) {
  auto& peak = per_rank_[rank].memory_peak;
  peak = std::max<std::uint64_t>(peak, resident_[rank] + words);
}

void VirtualCluster::refresh_memory_peak() {
  for (const auto& c : per_rank_) critical_.memory_peak = std::max(critical_.memory_peak, c.memory_peak);
}

void VirtualCluster::set_workspace_all(std::size_t words) {
  if (in_local_phase_.load()) throw ContractViolation("set_workspace_all called inside a local phase");
  for (std::size_t p = 0; p < per_rank_.size(); ++p) note_workspace(p, words);
  refresh_memory_peak();
}

void VirtualCluster::local_phase(const std::function<void(ProcContext&)>& body) {
  if (in_local_phase_.exchange(true)) throw ContractViolation("local phase started inside another local phase");
  const std::size_t P = processors();
  std::vector<std::uint64_t> before(P);
  for (std::size_t p = 0; p < P; ++p) before[p] = meters_[p].flops;

  std::vector<std::exception_ptr> failures(P);
  auto run_rank = [&](std::size_t p) {
    try {
      ProcContext ctx(*this, p, partition_.begin(p), partition_.end(p), meters_[p]);
      body(ctx);
    } catch (...) {
      failures[p] = std::current_exception();
    }
  };

  const std::size_t workers = std::min<std::size_t>(threads_, P);
  if (workers <= 1) {
    for (std::size_t p = 0; p < P; ++p) run_rank(p);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t p = t; p < P; p += workers) run_rank(p);
      });
    }
    for (auto& th : pool) th.join();
  }
  in_local_phase_.store(false);

  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::uint64_t slowest = 0;
  for (std::size_t p = 0; p < P; ++p) {
    const std::uint64_t delta = meters_[p].flops - before[p];
    per_rank_[p].flops += delta;
    slowest = std::max(slowest, delta);
  }
  critical_.flops += slowest;
  refresh_memory_peak();
}

void VirtualCluster::all_reduce_sum(std::span<std::vector<double>> payloads) {
  if (in_local_phase_.load()) throw ContractViolation("collective issued inside a local phase");
  const std::size_t P = processors();
  if (payloads.size() != P) {
    throw DimensionError("all-reduce expects " + std::to_string(P) + " payloads, got " +
                         std::to_string(payloads.size()));
  }
  const std::size_t s = payloads[0].size();
  for (const auto& p : payloads) {
    if (p.size() != s) throw DimensionError("all-reduce payload lengths differ");
  }

  // Binary tree over ranks: level by level, rank r absorbs rank r + stride.
  for (std::size_t stride = 1; stride < P; stride *= 2) {
    for (std::size_t r = 0; r + stride < P; r += 2 * stride) {
      auto& dst = payloads[r];
      const auto& src = payloads[r + stride];
      for (std::size_t i = 0; i < s; ++i) dst[i] += src[i];
    }
  }
  for (std::size_t r = 1; r < P; ++r) payloads[r] = payloads[0];

  const std::uint64_t rounds = allreduce_rounds(P);
  const std::uint64_t words = static_cast<std::uint64_t>(s) * rounds;
  for (auto& c : per_rank_) {
    c.messages += rounds;
    c.words += words;
    c.flops += words;
  }
  critical_.messages += rounds;
  critical_.words += words;
  critical_.flops += words;
}

SpmdResult spmd_execute(VirtualCluster& cluster, std::span<const Phase> program) {
  std::vector<std::vector<double>> buffers(cluster.processors());
  for (const auto& phase : program) {
    if (phase.kind == Phase::Kind::all_reduce) {
      cluster.all_reduce_sum(buffers);
    } else {
      cluster.local_phase([&](ProcContext& ctx) { phase.body(ctx, buffers[ctx.rank()]); });
    }
  }
  return {std::move(buffers), cluster.counters()};
}

}  // namespace calasso
