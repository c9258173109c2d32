#include "calasso/runner.hpp"

#include <array>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calasso/error.hpp"

namespace calasso {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 5> kAlgorithmNames{{
    {Algorithm::sfista, "sfista"},
    {Algorithm::spnm, "spnm"},
    {Algorithm::ca_sfista, "ca-sfista"},
    {Algorithm::ca_spnm, "ca-spnm"},
    {Algorithm::reference, "reference"},
}};

// lambda, b and k as used for abalone, covtype and susy.
constexpr std::array<Preset, 3> kPresets{{
    {"abalone", 4177, 8, 0.1, 0.1, 32},
    {"covtype", 581012, 54, 0.01, 0.01, 32},
    {"susy", 5000000, 18, 0.01, 0.01, 32},
}};

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

void write_rows(const RunTrace& trace, std::ostream& out, std::string_view prefix) {
  for (const auto& row : trace.rows) {
    out << prefix << row.iteration << ',';
    put_double(out, row.objective);
    out << ',';
    if (row.rel_sol_err) put_double(out, *row.rel_sol_err);
    out << ',' << row.counters.flops << ',' << row.counters.messages << ',' << row.counters.words << ','
        << row.counters.memory_peak << ',';
    put_double(out, row.modeled_time);
    out << '\n';
  }
}

std::string fingerprint_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  for (const auto& [alg, label] : kAlgorithmNames) {
    if (label == name) return alg;
  }
  throw ParameterError("unknown algorithm '" + std::string(name) +
                       "' (expected sfista, spnm, ca-sfista, ca-spnm or reference)");
}

std::string_view algorithm_name(Algorithm algorithm) {
  for (const auto& [alg, label] : kAlgorithmNames) {
    if (alg == algorithm) return label;
  }
  return "unknown";
}

std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

Dataset load_data(const DataSource& source) {
  if (source.libsvm_path) return load_libsvm(*source.libsvm_path, source.features);
  return synthesize(source.synthetic).data;
}

void ExperimentSpec::validate() const {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (processors == 0) throw ParameterError("processor count must be >= 1");
  machine.validate();
  if (algorithm == Algorithm::reference) return;
  SolverConfig probe = solver;
  if (probe.step <= 0.0) probe.step = 1.0;  // resolved later from the data
  probe.validate();
  if ((algorithm == Algorithm::spnm || algorithm == Algorithm::ca_spnm) && solver.inner_iterations == 0) {
    throw ParameterError("SPNM variants need Q >= 1");
  }
  if ((algorithm == Algorithm::ca_sfista || algorithm == Algorithm::ca_spnm) && solver.block_size == 0) {
    throw ParameterError("CA variants need k >= 1");
  }
}

double default_step(const Dataset& data) { return 1.0 / estimate_lipschitz(data); }

// ---------------------------------------------------------------------------
// Reference solution

ReferenceSolution solve_reference(const LassoProblem& problem, const ReferenceOptions& options) {
  const Dataset& data = problem.data();
  const std::size_t d = problem.dim();
  const std::size_t n = data.samples();

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const GramPair full = sampled_gram(data, all, 0, n, n);
  const GramView gram = full.view();

  SolverConfig config;
  config.step = default_step(data);

  std::vector<double> w(d, 0.0);
  std::vector<double> w_prev(d, 0.0);
  std::vector<double> grad(d);
  const auto certify = [&](std::size_t iterations) -> std::optional<ReferenceSolution> {
    symv(d, gram.G, w, grad);
    for (std::size_t i = 0; i < d; ++i) grad[i] -= gram.R[i];
    if (kkt_residual_from_gradient(grad, w, problem.lambda()) > 0.5 * options.kkt_tolerance) return std::nullopt;
    // Final word goes to the data-space gradient, not the Gram shortcut.
    const double residual = kkt_residual(problem, w);
    if (residual > options.kkt_tolerance) return std::nullopt;
    return ReferenceSolution{w, residual, iterations};
  };

  if (auto done = certify(0)) return *done;
  for (std::size_t j = 1; j <= options.max_iterations; ++j) {
    auto next = sfista_step(gram, w, w_prev, j, problem.lambda(), config);
    w_prev = std::move(w);
    w = std::move(next);
    for (double v : w) {
      if (!std::isfinite(v)) throw ReferenceError("reference solver diverged at iteration " + std::to_string(j));
    }
    if (auto done = certify(j)) return *done;
  }
  throw ReferenceError("reference solver did not reach KKT residual " + std::to_string(options.kkt_tolerance) +
                       " within " + std::to_string(options.max_iterations) + " iterations (residual " +
                       std::to_string(kkt_residual(problem, w)) + ")");
}

std::optional<ReferenceSolution> load_cached_reference(const std::string& path, std::uint64_t fingerprint,
                                                       double lambda) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json doc;
  try {
    in >> doc;
    if (doc.at("schema").get<std::string>() != "calasso-reference v1") return std::nullopt;
    if (doc.at("dataset").get<std::string>() != fingerprint_hex(fingerprint)) return std::nullopt;
    if (doc.at("lambda").get<double>() != lambda) return std::nullopt;
    ReferenceSolution out;
    out.w_op = doc.at("w_op").get<std::vector<double>>();
    out.kkt_residual = doc.at("kkt_residual").get<double>();
    out.iterations = doc.at("iterations").get<std::size_t>();
    return out;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void store_cached_reference(const std::string& path, std::uint64_t fingerprint, double lambda,
                            const ReferenceSolution& solution) {
  nlohmann::json doc;
  doc["schema"] = "calasso-reference v1";
  doc["dataset"] = fingerprint_hex(fingerprint);
  doc["lambda"] = lambda;
  doc["w_op"] = solution.w_op;
  doc["kkt_residual"] = solution.kkt_residual;
  doc["iterations"] = solution.iterations;
  std::ofstream out(path);
  if (!out) throw Error("cannot write reference cache " + path);
  out << doc.dump(2) << '\n';
}

ReferenceSolution obtain_reference(const LassoProblem& problem, const std::optional<std::string>& cache_path) {
  const auto fingerprint = problem.data().fingerprint();
  if (cache_path) {
    if (auto cached = load_cached_reference(*cache_path, fingerprint, problem.lambda())) {
      if (cached->w_op.size() == problem.dim()) return *cached;
    }
  }
  auto solution = solve_reference(problem);
  if (cache_path) store_cached_reference(*cache_path, fingerprint, problem.lambda(), solution);
  return solution;
}

// ---------------------------------------------------------------------------
// Running

RunTrace run_algorithm(Algorithm algorithm, const LassoProblem& problem, const SolverConfig& config,
                       VirtualCluster& cluster, std::span<const double> reference) {
  switch (algorithm) {
    case Algorithm::sfista:
      return run_sfista(problem, config, cluster, reference);
    case Algorithm::spnm:
      return run_spnm(problem, config, cluster, reference);
    case Algorithm::ca_sfista:
      return run_ca_sfista(problem, config, cluster, reference);
    case Algorithm::ca_spnm:
      return run_ca_spnm(problem, config, cluster, reference);
    case Algorithm::reference:
      break;
  }
  throw ParameterError("run_algorithm: the reference solver is not a cluster algorithm");
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n' << kTraceColumns << '\n';
  write_rows(trace, out, "");
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream out;
  write_trace_csv(trace, out);
  return out.str();
}

namespace {

std::string reference_csv(const ReferenceSolution& ref) {
  std::ostringstream out;
  out << "# calasso-reference v1\n# kkt_residual=";
  put_double(out, ref.kkt_residual);
  out << " iterations=" << ref.iterations << "\ncoord,w_op\n";
  for (std::size_t i = 0; i < ref.w_op.size(); ++i) {
    out << i << ',';
    put_double(out, ref.w_op[i]);
    out << '\n';
  }
  return out.str();
}

void write_file(const std::optional<std::string>& path, const std::string& text) {
  if (!path) return;
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw Error("cannot write " + *path);
  out << text;
}

bool is_zero(std::span<const double> w) {
  for (double v : w) {
    if (v != 0.0) return false;
  }
  return true;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& data,
                                const ReferenceSolution* reference) {
  spec.validate();
  const LassoProblem problem(data, spec.lambda);
  ExperimentResult result;

  const bool needs_reference = spec.algorithm == Algorithm::reference || spec.with_reference ||
                               spec.solver.stopping == StoppingMode::tolerance;
  if (needs_reference) {
    result.reference = reference != nullptr ? *reference : obtain_reference(problem, spec.reference_cache);
  }
  if (spec.algorithm == Algorithm::reference) {
    result.csv = reference_csv(*result.reference);
    write_file(spec.output_path, result.csv);
    return result;
  }
  if (result.reference && is_zero(result.reference->w_op)) {
    throw UndefinedReferenceError(
        "reference solution is zero (lambda >= lambda_max); relative solution error is undefined");
  }

  SolverConfig config = spec.solver;
  if (config.step <= 0.0) config.step = default_step(data);
  VirtualCluster cluster = VirtualCluster::for_dataset(data, spec.processors, spec.machine, spec.threads);
  const std::span<const double> w_op =
      result.reference ? std::span<const double>(result.reference->w_op) : std::span<const double>{};

  try {
    result.trace = run_algorithm(spec.algorithm, problem, config, cluster, w_op);
  } catch (const DivergenceError& e) {
    result.trace = e.partial();
    result.error = e.what();
  }
  result.csv = trace_csv(result.trace);
  write_file(spec.output_path, result.csv);
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const Dataset data = load_data(spec.data);
  return run_experiment(spec, data, nullptr);
}

// ---------------------------------------------------------------------------
// Sweeps

SweepResult sweep(const ExperimentSpec& base, const SweepGrid& grid) {
  if (grid.block_sizes.empty() && grid.sampling_fractions.empty() && grid.processors.empty() &&
      grid.seeds.empty()) {
    throw ParameterError("sweep grid is empty");
  }
  if (base.algorithm == Algorithm::reference) throw ParameterError("sweep needs a solver algorithm");
  const auto pick = [](const auto& values, auto fallback) {
    using T = std::decay_t<decltype(fallback)>;
    return values.empty() ? std::vector<T>{fallback} : std::vector<T>(values.begin(), values.end());
  };
  const auto ks = pick(grid.block_sizes, base.solver.block_size);
  const auto bs = pick(grid.sampling_fractions, base.solver.sampling_fraction);
  const auto ps = pick(grid.processors, base.processors);
  const auto seeds = pick(grid.seeds, base.solver.seed);

  const Dataset data = load_data(base.data);
  std::optional<ReferenceSolution> reference;
  if (base.with_reference || base.solver.stopping == StoppingMode::tolerance) {
    reference = obtain_reference(LassoProblem(data, base.lambda), base.reference_cache);
  }

  SweepResult result;
  std::ostringstream csv;
  csv << kSweepHeader << '\n' << "k,b,P,seed," << kTraceColumns << ",error\n";
  for (std::size_t k : ks) {
    for (double b : bs) {
      for (std::size_t P : ps) {
        for (std::uint64_t seed : seeds) {
          SweepCell cell{k, b, P, seed, {}, std::nullopt};
          ExperimentSpec spec = base;
          spec.solver.block_size = k;
          spec.solver.sampling_fraction = b;
          spec.solver.seed = seed;
          spec.processors = P;
          spec.output_path.reset();
          try {
            auto run = run_experiment(spec, data, reference ? &*reference : nullptr);
            cell.trace = std::move(run.trace);
            cell.error = std::move(run.error);
          } catch (const Error& e) {
            cell.error = e.what();
          }

          std::ostringstream prefix;
          prefix << k << ',';
          put_double(prefix, b);
          prefix << ',' << P << ',' << seed << ',';
          std::ostringstream rows;
          write_rows(cell.trace, rows, prefix.str());
          // Every data row gets a trailing (empty) error field.
          std::string line;
          std::istringstream split(rows.str());
          while (std::getline(split, line)) csv << line << ",\n";
          if (cell.error) {
            std::string message = *cell.error;
            for (auto& c : message) {
              if (c == ',' || c == '\n') c = ';';
            }
            csv << prefix.str() << ",,,,,,,," << message << '\n';
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  result.csv = csv.str();
  write_file(base.output_path, result.csv);
  return result;
}

}  // namespace calasso
