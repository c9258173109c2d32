#include "calasso/ca.hpp"

#include <algorithm>

#include "trace_recorder.hpp"

namespace calasso {

GramView GramBlocks::block(std::size_t j) const {
  if (j == 0 || j > count) throw DimensionError("Gram block index out of range");
  const std::span<const double> all(payload);
  return {d, all.subspan((j - 1) * d * d, d * d), all.subspan(count * d * d + (j - 1) * d, d)};
}

namespace {

/// Fills one payload per rank and all-reduces them in a single collective.
void exchange_blocks(const Dataset& data, const Sampler& sampler, std::size_t first_iteration,
                     std::size_t blocks, VirtualCluster& cluster, std::vector<std::vector<double>>& payloads,
                     std::size_t extra_words) {
  const std::size_t d = data.features();
  const std::size_t m = sampler.sample_size();
  for (auto& p : payloads) p.assign(blocks * gram_words(d), 0.0);

  cluster.local_phase([&](ProcContext& ctx) {
    auto buf = std::span(payloads[ctx.rank()]);
    for (std::size_t j = 0; j < blocks; ++j) {
      const auto sample = sampler.indices(first_iteration + j);
      const auto mine = owned_slice(sample, ctx.owned_begin(), ctx.owned_end());
      sampled_gram_into(data, mine, ctx.owned_begin(), ctx.owned_end(), m, buf.subspan(j * d * d, d * d),
                        buf.subspan(blocks * d * d + j * d, d), &ctx.meter());
    }
    ctx.set_workspace(buf.size() + extra_words);
  });

  cluster.all_reduce_sum(payloads);
}

enum class Update { sfista, spnm };

RunTrace run_ca(Update update, const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                std::span<const double> reference) {
  config.validate();
  const Dataset& data = problem.data();
  if (cluster.partition().columns() != data.samples()) {
    throw DimensionError("cluster partition does not match the dataset column count");
  }
  const std::size_t d = problem.dim();
  const std::size_t P = cluster.processors();
  const std::size_t k = config.block_size;
  const std::size_t T = config.iterations;
  const Sampler sampler(config.seed, config.sampling_fraction, data.samples());
  const std::size_t vector_words = update == Update::sfista ? sfista_vector_words(d) : spnm_vector_words(d);

  std::vector<detail::Replica> replicas(P, detail::Replica{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)});
  std::vector<std::vector<double>> payloads(P);
  detail::TraceRecorder recorder(problem, config, cluster, reference);
  cluster.set_workspace_all(vector_words);

  bool stop = false;
  for (std::size_t outer = 0; outer * k < T && !stop; ++outer) {
    const std::size_t first = outer * k + 1;
    const std::size_t blocks = std::min(k, T - outer * k);
    exchange_blocks(data, sampler, first, blocks, cluster, payloads, vector_words);

    for (std::size_t j = 1; j <= blocks && !stop; ++j) {
      const std::size_t global = first + j - 1;
      cluster.local_phase([&](ProcContext& ctx) {
        const auto buf = std::span<const double>(payloads[ctx.rank()]);
        const GramView gram{d, buf.subspan((j - 1) * d * d, d * d), buf.subspan(blocks * d * d + (j - 1) * d, d)};
        auto& rep = replicas[ctx.rank()];
        auto next = update == Update::sfista
                        ? sfista_step(gram, rep.w, rep.w_prev, global, problem.lambda(), config, &ctx.meter())
                        : spnm_step(gram, rep.w, problem.lambda(), config, &ctx.meter());
        rep.w_prev = std::move(rep.w);
        rep.w = std::move(next);
      });
      stop = recorder.record(global, replicas.front().w);
    }
  }
  detail::check_replicas_agree(replicas);
  return std::move(recorder).finish(replicas.front().w);
}

}  // namespace

GramBlocks build_gram_blocks(const LassoProblem& problem, const Sampler& sampler, std::size_t outer,
                             std::size_t k, std::size_t blocks, VirtualCluster& cluster) {
  if (k == 0) throw ParameterError("block size k must be >= 1");
  if (blocks == 0 || blocks > k) throw ParameterError("block count must lie in [1, k]");
  const Dataset& data = problem.data();
  if (sampler.population() != data.samples()) throw DimensionError("sampler population does not match dataset");
  std::vector<std::vector<double>> payloads(cluster.processors());
  exchange_blocks(data, sampler, outer * k + 1, blocks, cluster, payloads, 0);
  GramBlocks out(data.features(), blocks, outer * k + 1);
  out.payload = std::move(payloads.front());
  return out;
}

RunTrace run_ca_sfista(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                       std::span<const double> reference) {
  return run_ca(Update::sfista, problem, config, cluster, reference);
}

RunTrace run_ca_spnm(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                     std::span<const double> reference) {
  return run_ca(Update::spnm, problem, config, cluster, reference);
}

}  // namespace calasso
