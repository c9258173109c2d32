// Command-line experiment driver.
//
//   calasso run   --alg ca-sfista --synthetic 20,200,0.25,0.1 --lambda 0.05 --k 8 --iters 200 --out trace.csv
//   calasso sweep --alg ca-spnm --data abalone.txt --preset abalone --k-grid 1,8,32 --p-grid 1,2,4,8
//
// Every flag may also come from a key=value file passed with --config.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "calasso/error.hpp"
#include "calasso/runner.hpp"

namespace {

struct Options {
  std::string algorithm = "ca-sfista";
  std::string data_path;
  std::vector<double> synthetic{20, 200, 0.25, 0.1};
  std::size_t features = 0;
  std::string preset;
  double lambda = -1.0;
  double b = -1.0;
  std::size_t k = 0;
  std::size_t q = 1;
  std::size_t iters = 100;
  double tol = -1.0;
  double step = 0.0;
  std::size_t procs = 1;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  double scale_decades = 0.0;
  std::vector<double> machine{0, 0, 0};
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> beta;
  unsigned threads = 1;
  std::string out;
  std::string reference_cache;
  bool gradient_at_previous = false;
  bool no_reference = false;
  std::vector<std::size_t> k_grid;
  std::vector<double> b_grid;
  std::vector<std::size_t> p_grid;
  std::vector<std::uint64_t> seed_grid;
};

void add_common(CLI::App& app, Options& o) {
  app.add_option("--alg", o.algorithm, "sfista | spnm | ca-sfista | ca-spnm | reference")
      ->check(CLI::IsMember({"sfista", "spnm", "ca-sfista", "ca-spnm", "reference"}));
  app.add_option("--data", o.data_path, "LIBSVM input file");
  app.add_option("--features", o.features, "override the feature count d of --data");
  app.add_option("--synthetic", o.synthetic, "synthetic problem d,n,sparsity,noise (used without --data)")
      ->delimiter(',')
      ->expected(4);
  app.add_option("--data-seed", o.data_seed, "seed for the synthetic generator");
  app.add_option("--scale-decades", o.scale_decades, "synthetic feature scales span this many decades");
  app.add_option("--preset", o.preset, "abalone | covtype | susy: default lambda, b and k")
      ->check(CLI::IsMember({"abalone", "covtype", "susy"}));
  app.add_option("--lambda", o.lambda, "L1 weight");
  app.add_option("--b", o.b, "sampling fraction in (0, 1]");
  app.add_option("--k", o.k, "step-block size of the CA variants");
  app.add_option("--q", o.q, "inner ISTA iterations of the SPNM variants");
  app.add_option("--iters", o.iters, "iteration budget T");
  app.add_option("--tol", o.tol, "stop once the relative solution error drops below this value");
  app.add_option("--step", o.step, "fixed step size t (default 1/L)");
  app.add_option("--procs", o.procs, "virtual processors P");
  app.add_option("--seed", o.seed, "sampling seed");
  app.add_option("--machine", o.machine, "gamma,alpha,beta of the cost model")
      ->delimiter(',')
      ->expected(3)
      ->check(CLI::NonNegativeNumber);
  app.add_option("--gamma", o.gamma, "seconds per flop (overrides --machine)");
  app.add_option("--alpha", o.alpha, "seconds per message (overrides --machine)");
  app.add_option("--beta", o.beta, "seconds per word (overrides --machine)");
  app.add_option("--threads", o.threads, "OS threads driving the virtual processors");
  app.add_option("--out", o.out, "CSV output path (default stdout)");
  app.add_option("--reference-cache", o.reference_cache, "JSON cache for the reference solution");
  app.add_flag("--gradient-at-previous", o.gradient_at_previous, "evaluate the SFISTA gradient at w_{j-1} instead of v_j");
  app.add_flag("--no-reference", o.no_reference, "skip the reference solve (empty rel_sol_err column)");
}

calasso::ExperimentSpec make_spec(const Options& o) {
  using namespace calasso;
  ExperimentSpec spec;
  spec.algorithm = parse_algorithm(o.algorithm);

  double lambda = 0.1;
  double b = 1.0;
  std::size_t k = 1;
  if (!o.preset.empty()) {
    const auto preset = find_preset(o.preset);
    lambda = preset->lambda;
    b = preset->sampling_fraction;
    k = preset->block_size;
  }
  spec.lambda = o.lambda >= 0.0 ? o.lambda : lambda;
  spec.solver.sampling_fraction = o.b > 0.0 ? o.b : b;
  spec.solver.block_size = o.k > 0 ? o.k : k;
  spec.solver.inner_iterations = o.q;
  spec.solver.iterations = o.iters;
  spec.solver.step = o.step;
  spec.solver.seed = o.seed;
  spec.solver.record_iterates = false;
  if (o.tol > 0.0) {
    spec.solver.stopping = StoppingMode::tolerance;
    spec.solver.tolerance = o.tol;
  }
  if (o.gradient_at_previous) spec.solver.gradient_point = GradientPoint::previous_iterate;

  if (!o.data_path.empty()) {
    spec.data.libsvm_path = o.data_path;
    if (o.features > 0) spec.data.features = o.features;
  } else {
    const auto& shape = o.synthetic;
    if (shape[0] < 1 || shape[1] < 1 || shape[0] != std::floor(shape[0]) || shape[1] != std::floor(shape[1])) {
      throw ParameterError("--synthetic expects positive integer d and n");
    }
    spec.data.synthetic.features = static_cast<std::size_t>(shape[0]);
    spec.data.synthetic.samples = static_cast<std::size_t>(shape[1]);
    spec.data.synthetic.sparsity = shape[2];
    spec.data.synthetic.noise_sd = shape[3];
    spec.data.synthetic.seed = o.data_seed;
    spec.data.synthetic.scale_decades = o.scale_decades;
  }
  spec.processors = o.procs;
  spec.machine = MachineParams{o.machine[0], o.machine[1], o.machine[2]};
  if (o.gamma) spec.machine.gamma = *o.gamma;
  if (o.alpha) spec.machine.alpha = *o.alpha;
  if (o.beta) spec.machine.beta = *o.beta;
  spec.threads = o.threads;
  spec.with_reference = !o.no_reference;
  if (!o.out.empty()) spec.output_path = o.out;
  if (!o.reference_cache.empty()) spec.reference_cache = o.reference_cache;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-avoiding stochastic FISTA / proximal Newton LASSO solvers on a virtual cluster"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  Options opts;
  add_common(app, opts);
  app.add_option("--k-grid", opts.k_grid, "sweep: block sizes")->delimiter(',');
  app.add_option("--b-grid", opts.b_grid, "sweep: sampling fractions")->delimiter(',');
  app.add_option("--p-grid", opts.p_grid, "sweep: processor counts")->delimiter(',');
  app.add_option("--seed-grid", opts.seed_grid, "sweep: sampling seeds")->delimiter(',');

  auto* run = app.add_subcommand("run", "run one experiment and emit its per-iteration CSV trace")->fallthrough();
  app.add_subcommand("sweep", "run a grid over k, b, P and seeds and emit one combined CSV")->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!opts.k_grid.empty() || !opts.b_grid.empty() || !opts.p_grid.empty() || !opts.seed_grid.empty()) {
        throw calasso::ParameterError("grid options belong to the sweep subcommand");
      }
      const auto spec = make_spec(opts);
      const auto result = calasso::run_experiment(spec);
      if (!spec.output_path) std::cout << result.csv;
      if (result.error) {
        std::cerr << "calasso: " << *result.error << " (partial trace written)\n";
        return 2;
      }
    } else {
      const auto spec = make_spec(opts);
      calasso::SweepGrid grid{opts.k_grid, opts.b_grid, opts.p_grid, opts.seed_grid};
      if (grid.block_sizes.empty() && grid.sampling_fractions.empty() && grid.processors.empty() &&
          grid.seeds.empty()) {
        grid.block_sizes.push_back(spec.solver.block_size);
      }
      const auto result = calasso::sweep(spec, grid);
      if (!spec.output_path) std::cout << result.csv;
    }
  } catch (const calasso::Error& e) {
    std::cerr << "calasso: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "calasso: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
