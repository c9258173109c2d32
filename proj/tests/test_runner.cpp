#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "calasso/error.hpp"
#include "calasso/runner.hpp"
#include "test_util.hpp"

using namespace calasso;
namespace fs = std::filesystem;

namespace {

ExperimentSpec synthetic_spec(Algorithm alg, std::size_t d, std::size_t n, double lambda, std::uint64_t data_seed = 0) {
  ExperimentSpec spec;
  spec.algorithm = alg;
  spec.data.synthetic = SyntheticParams{d, n, 0.25, 0.1, data_seed};
  spec.lambda = lambda;
  spec.solver.record_iterates = false;
  return spec;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("calasso_test_" + std::to_string(::getpid()) + "_" + name)).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Presets, DatasetValues) {
  EXPECT_EQ(find_preset("abalone")->lambda, 0.1);
  EXPECT_EQ(find_preset("covtype")->lambda, 0.01);
  EXPECT_EQ(find_preset("susy")->lambda, 0.01);
  EXPECT_EQ(find_preset("abalone")->samples, 4177u);
  EXPECT_EQ(find_preset("abalone")->features, 8u);
  EXPECT_EQ(find_preset("abalone")->sampling_fraction, 0.1);
  EXPECT_EQ(find_preset("covtype")->sampling_fraction, 0.01);
  EXPECT_EQ(find_preset("covtype")->block_size, 32u);
  EXPECT_FALSE(find_preset("mnist"));
}

TEST(Algorithms, NamesRoundTrip) {
  for (auto a : {Algorithm::sfista, Algorithm::spnm, Algorithm::ca_sfista, Algorithm::ca_spnm, Algorithm::reference}) {
    EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
  }
  EXPECT_THROW(parse_algorithm("ista"), ParameterError);
}

TEST(Reference, ZeroAboveLambdaMax) {
  const auto data = synthesize({10, 100, 0.3, 0.1, 1}).data;
  const auto ref = solve_reference(LassoProblem(data, lambda_max(data)));
  EXPECT_EQ(ref.w_op, std::vector<double>(10, 0.0));
  EXPECT_LE(ref.iterations, 5u);

  auto spec = synthetic_spec(Algorithm::sfista, 10, 100, 0.0);
  spec.data.synthetic = SyntheticParams{10, 100, 0.3, 0.1, 1};
  spec.lambda = lambda_max(data) * 1.01;
  EXPECT_THROW(run_experiment(spec), UndefinedReferenceError);
}

TEST(Reference, IdentityLeastSquares) {
  const auto data = Dataset::from_dense(2, 2, std::vector<double>{1, 0, 0, 1}, {1.0, 2.0});
  const auto ref = solve_reference(LassoProblem(data, 0.0));
  EXPECT_NEAR(ref.w_op[0], 1.0, 1e-12);
  EXPECT_NEAR(ref.w_op[1], 2.0, 1e-12);
}

TEST(Reference, CertificateAndSupportRecovery) {
  const auto problem = synthesize({20, 200, 0.25, 0.1, 0});
  const auto ref = solve_reference(LassoProblem(problem.data, 0.1));
  EXPECT_LE(ref.kkt_residual, 1e-8);
  EXPECT_LE(kkt_residual(LassoProblem(problem.data, 0.1), ref.w_op), 1e-8);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(ref.w_op[i] != 0.0, problem.w_true[i] != 0.0) << i;
}

TEST(Reference, BudgetExhaustionIsAnError) {
  const auto data = synthesize({20, 200, 0.25, 0.1, 0}).data;
  EXPECT_THROW(solve_reference(LassoProblem(data, 0.01), ReferenceOptions{1e-8, 3}), ReferenceError);
}

TEST(Reference, CacheReusedOnlyOnMatch) {
  const auto data = synthesize({6, 60, 0.5, 0.1, 2}).data;
  const LassoProblem problem(data, 0.05);
  const auto path = temp_path("ref.json");
  fs::remove(path);
  const auto first = obtain_reference(problem, path);
  ASSERT_TRUE(fs::exists(path));

  ReferenceSolution planted = first;
  planted.w_op[0] += 1.0;
  store_cached_reference(path, data.fingerprint(), 0.05, planted);
  EXPECT_EQ(obtain_reference(problem, path).w_op, planted.w_op);

  EXPECT_FALSE(load_cached_reference(path, data.fingerprint(), 0.06));
  EXPECT_FALSE(load_cached_reference(path, data.fingerprint() ^ 1, 0.05));
  const auto other = obtain_reference(LassoProblem(data, 0.06), path);
  EXPECT_NE(other.w_op, planted.w_op);
  fs::remove(path);
}

TEST(Experiment, CsvSchemaAndCounters) {
  auto spec = synthetic_spec(Algorithm::ca_sfista, 8, 100, 0.05);
  spec.solver.iterations = 100;
  spec.solver.block_size = 32;
  spec.solver.sampling_fraction = 0.5;
  spec.processors = 4;
  const auto result = run_experiment(spec);
  std::istringstream in(result.csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kTraceHeader);
  std::getline(in, line);
  EXPECT_EQ(line, kTraceColumns);
  std::size_t rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(rows, 100u);
  EXPECT_EQ(result.trace.rows.back().counters.messages, 4u * 2u);
  EXPECT_EQ(last.substr(0, 4), "100,");
}

TEST(Experiment, ByteIdenticalAndWritesFile) {
  auto spec = synthetic_spec(Algorithm::ca_spnm, 8, 120, 0.05);
  spec.solver.iterations = 30;
  spec.solver.block_size = 4;
  spec.solver.inner_iterations = 5;
  spec.solver.sampling_fraction = 0.25;
  spec.processors = 3;
  spec.machine = {1e-9, 1e-6, 1e-8};
  const auto a = run_experiment(spec);
  spec.output_path = temp_path("trace.csv");
  const auto b = run_experiment(spec);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(read_file(*spec.output_path), a.csv);
  fs::remove(*spec.output_path);
}

TEST(Experiment, ReferenceAlgorithmEmitsSolution) {
  auto spec = synthetic_spec(Algorithm::reference, 6, 60, 0.05);
  const auto result = run_experiment(spec);
  ASSERT_TRUE(result.reference);
  EXPECT_NE(result.csv.find("coord,w_op\n"), std::string::npos);
  EXPECT_EQ(std::count(result.csv.begin(), result.csv.end(), '\n'), 3 + 6);
}

TEST(Experiment, NoReferenceLeavesColumnEmpty) {
  auto spec = synthetic_spec(Algorithm::sfista, 6, 60, 0.05);
  spec.with_reference = false;
  spec.solver.iterations = 3;
  const auto result = run_experiment(spec);
  EXPECT_FALSE(result.reference);
  EXPECT_FALSE(result.trace.rows[0].rel_sol_err);
  EXPECT_NE(result.csv.find("\n1,"), std::string::npos);
}

TEST(Experiment, DivergenceKeepsPartialTrace) {
  auto spec = synthetic_spec(Algorithm::sfista, 6, 60, 0.0);
  spec.with_reference = false;
  spec.solver.iterations = 5000;
  spec.solver.step = 50.0 / estimate_lipschitz(load_data(spec.data));
  const auto result = run_experiment(spec);
  ASSERT_TRUE(result.error);
  EXPECT_FALSE(result.trace.rows.empty());
  EXPECT_LT(result.trace.rows.size(), 5000u);
  EXPECT_EQ(result.csv, trace_csv(result.trace));
}

TEST(Experiment, ToleranceExitIdenticalAcrossBlockSizes) {
  auto spec = synthetic_spec(Algorithm::ca_sfista, 10, 200, 0.05);
  spec.solver.stopping = StoppingMode::tolerance;
  spec.solver.tolerance = 0.1;
  spec.solver.sampling_fraction = 0.5;
  spec.solver.iterations = 1000;
  std::optional<std::size_t> stop;
  for (std::size_t k : {1u, 8u, 32u}) {
    spec.solver.block_size = k;
    const auto result = run_experiment(spec);
    ASSERT_TRUE(result.trace.reached_tolerance);
    if (!stop) stop = result.trace.rows.size();
    EXPECT_EQ(result.trace.rows.size(), *stop);
  }
}

TEST(Experiment, ValidatesSpec) {
  auto spec = synthetic_spec(Algorithm::ca_sfista, 6, 60, 0.05);
  spec.solver.block_size = 0;
  EXPECT_THROW(run_experiment(spec), ParameterError);
  spec = synthetic_spec(Algorithm::spnm, 6, 60, 0.05);
  spec.solver.inner_iterations = 0;
  EXPECT_THROW(run_experiment(spec), ParameterError);
  spec = synthetic_spec(Algorithm::sfista, 6, 60, -1.0);
  EXPECT_THROW(run_experiment(spec), ParameterError);
  spec = synthetic_spec(Algorithm::sfista, 6, 60, 0.05);
  spec.processors = 0;
  EXPECT_THROW(run_experiment(spec), ParameterError);
}

TEST(Sweep, BlockSizesGiveIdenticalTrajectories) {
  auto spec = synthetic_spec(Algorithm::ca_sfista, 10, 200, 0.05);
  spec.solver.iterations = 64;
  spec.solver.sampling_fraction = 0.1;
  spec.solver.seed = 4;
  const auto result = sweep(spec, SweepGrid{{1, 8, 32}, {}, {}, {}});
  ASSERT_EQ(result.cells.size(), 3u);
  for (const auto& cell : result.cells) {
    ASSERT_FALSE(cell.error);
    for (std::size_t j = 0; j < 64; ++j) {
      const double a = *result.cells[0].trace.rows[j].rel_sol_err;
      const double b = *cell.trace.rows[j].rel_sol_err;
      EXPECT_LE(std::abs(a - b), 1e-10 * std::max(1.0, a));
    }
  }
  std::istringstream in(result.csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kSweepHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "k,b,P,seed," + std::string(kTraceColumns) + ",error");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 11), "1,0.1,1,4,1");
}

TEST(Sweep, SmallerSamplesPlateauHigher) {
  std::vector<std::vector<double>> finals(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ExperimentSpec spec;
    spec.algorithm = Algorithm::ca_sfista;
    spec.data.synthetic = SyntheticParams{8, 4000, 1.0, 0.1, seed, 2.0};
    spec.lambda = 0.01;
    spec.solver.iterations = 100;
    spec.solver.block_size = 32;
    spec.solver.seed = seed;
    spec.solver.record_iterates = false;
    const auto result = sweep(spec, SweepGrid{{}, {0.01, 0.5, 1.0}, {}, {}});
    for (std::size_t i = 0; i < 3; ++i) finals[i].push_back(*result.cells[i].trace.rows.back().rel_sol_err);
  }
  EXPECT_GE(median(finals[0]), median(finals[1]));
  EXPECT_GE(median(finals[0]), median(finals[2]));
}

TEST(Sweep, FlopDominatedTimeHalvesPerDoubling) {
  auto spec = synthetic_spec(Algorithm::ca_sfista, 8, 4000, 0.05);
  spec.solver.iterations = 16;
  spec.solver.block_size = 4;
  spec.with_reference = false;
  spec.machine = {1.0, 0.0, 0.0};
  const auto result = sweep(spec, SweepGrid{{}, {}, {1, 2, 4, 8}, {}});
  for (std::size_t i = 1; i < 4; ++i) {
    const double ratio =
        result.cells[i - 1].trace.rows.back().modeled_time / result.cells[i].trace.rows.back().modeled_time;
    EXPECT_NEAR(ratio, 2.0, 0.1) << "P=" << result.cells[i].processors;
  }
}

TEST(Sweep, CellFailuresLandInErrorColumn) {
  auto spec = synthetic_spec(Algorithm::sfista, 6, 50, 0.05);
  spec.solver.iterations = 3;
  const auto result = sweep(spec, SweepGrid{{}, {0.001, 1.0}, {}, {}});
  ASSERT_EQ(result.cells.size(), 2u);
  EXPECT_TRUE(result.cells[0].error);
  EXPECT_FALSE(result.cells[1].error);
  EXPECT_NE(result.csv.find("floor(b*n) = 0"), std::string::npos);
  EXPECT_THROW(sweep(spec, SweepGrid{}), ParameterError);
}
