#include "calasso/classical.hpp"

#include <cmath>
#include <string>

#include "trace_recorder.hpp"

namespace calasso {

void SolverConfig::validate() const {
  if (!(sampling_fraction > 0.0 && sampling_fraction <= 1.0)) {
    throw ParameterError("sampling fraction b must lie in (0, 1]");
  }
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("step size t must be > 0");
  if (iterations == 0) throw ParameterError("iteration budget T must be >= 1");
  if (inner_iterations == 0) throw ParameterError("inner iteration count Q must be >= 1");
  if (block_size == 0) throw ParameterError("block size k must be >= 1");
  if (stopping == StoppingMode::tolerance && !(tolerance > 0.0)) {
    throw ParameterError("tolerance must be > 0 in tolerance mode");
  }
}

DivergenceError::DivergenceError(std::size_t iteration, RunTrace partial)
    : Error("iterate became non-finite at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      partial_(std::move(partial)) {}

std::vector<double> sfista_step(const GramView& gram, std::span<const double> w1, std::span<const double> w2,
                                std::size_t j, double lambda, const SolverConfig& config, FlopMeter* meter) {
  const std::size_t d = gram.d;
  if (w1.size() != d || w2.size() != d) throw DimensionError("sfista_step: history length mismatch");
  if (j == 0) throw ParameterError("sfista_step: iterations are numbered from 1");

  const double beta =
      (config.momentum && j >= 2) ? static_cast<double>(j - 2) / static_cast<double>(j) : 0.0;
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = w1[i] + beta * (w1[i] - w2[i]);

  const auto point = config.gradient_point == GradientPoint::auxiliary ? std::span<const double>(v) : w1;
  const auto grad = sampled_gradient(gram, point);

  const double t = config.step;
  const double threshold = lambda * t;
  for (std::size_t i = 0; i < d; ++i) v[i] = soft_threshold(v[i] - t * grad[i], threshold);
  if (meter != nullptr) meter->add(sfista_step_flops(d));
  return v;
}

std::vector<double> spnm_step(const GramView& gram, std::span<const double> w1, double lambda,
                              const SolverConfig& config, FlopMeter* meter) {
  const std::size_t d = gram.d;
  if (w1.size() != d) throw DimensionError("spnm_step: iterate length mismatch");

  const auto grad_at_w = sampled_gradient(gram, w1);
  const double t = config.step;
  const double threshold = lambda * t;

  std::vector<double> z(w1.begin(), w1.end());
  std::vector<double> offset(d);
  std::vector<double> curvature(d);
  for (std::size_t q = 0; q < config.inner_iterations; ++q) {
    for (std::size_t i = 0; i < d; ++i) offset[i] = z[i] - w1[i];
    symv(d, gram.G, offset, curvature);
    for (std::size_t i = 0; i < d; ++i) {
      const double model_grad = grad_at_w[i] + curvature[i];
      z[i] = soft_threshold(z[i] - t * model_grad, threshold);
    }
  }
  if (meter != nullptr) meter->add(spnm_step_flops(d, config.inner_iterations));
  return z;
}

namespace {

enum class Update { sfista, spnm };

RunTrace run_classical(Update update, const LassoProblem& problem, const SolverConfig& config,
                       VirtualCluster& cluster, std::span<const double> reference) {
  config.validate();
  const Dataset& data = problem.data();
  if (cluster.partition().columns() != data.samples()) {
    throw DimensionError("cluster partition does not match the dataset column count");
  }
  const std::size_t d = problem.dim();
  const std::size_t P = cluster.processors();
  const Sampler sampler(config.seed, config.sampling_fraction, data.samples());
  const std::size_t m = sampler.sample_size();
  const std::size_t vector_words = update == Update::sfista ? sfista_vector_words(d) : spnm_vector_words(d);

  std::vector<detail::Replica> replicas(P, detail::Replica{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)});
  std::vector<std::vector<double>> payloads(P, std::vector<double>(gram_words(d)));
  detail::TraceRecorder recorder(problem, config, cluster, reference);
  cluster.set_workspace_all(vector_words);

  for (std::size_t j = 1; j <= config.iterations; ++j) {
    cluster.local_phase([&](ProcContext& ctx) {
      const auto sample = sampler.indices(j);
      const auto mine = owned_slice(sample, ctx.owned_begin(), ctx.owned_end());
      auto& buf = payloads[ctx.rank()];
      sampled_gram_into(data, mine, ctx.owned_begin(), ctx.owned_end(), m, std::span(buf).first(d * d),
                        std::span(buf).subspan(d * d), &ctx.meter());
      ctx.set_workspace(buf.size() + vector_words);
    });

    cluster.all_reduce_sum(payloads);

    cluster.local_phase([&](ProcContext& ctx) {
      const auto& buf = payloads[ctx.rank()];
      const GramView gram{d, std::span(buf).first(d * d), std::span(buf).subspan(d * d)};
      auto& rep = replicas[ctx.rank()];
      auto next = update == Update::sfista
                      ? sfista_step(gram, rep.w, rep.w_prev, j, problem.lambda(), config, &ctx.meter())
                      : spnm_step(gram, rep.w, problem.lambda(), config, &ctx.meter());
      rep.w_prev = std::move(rep.w);
      rep.w = std::move(next);
    });

    if (recorder.record(j, replicas.front().w)) break;
  }
  detail::check_replicas_agree(replicas);
  return std::move(recorder).finish(replicas.front().w);
}

}  // namespace

RunTrace run_sfista(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                    std::span<const double> reference) {
  return run_classical(Update::sfista, problem, config, cluster, reference);
}

RunTrace run_spnm(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                  std::span<const double> reference) {
  return run_classical(Update::spnm, problem, config, cluster, reference);
}

}  // namespace calasso
