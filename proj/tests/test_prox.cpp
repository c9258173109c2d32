#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "calasso/error.hpp"
#include "calasso/prox.hpp"
#include "test_util.hpp"

using namespace calasso;
using calasso::test_support::tiny_dataset;

namespace {

// argmin_z 0.5 (z - v)^2 + tau |z| by grid search: coarse pass, then a 1e-8 grid around the best point.
double prox_by_grid(double v, double tau) {
  auto cost = [&](double z) { return 0.5 * (z - v) * (z - v) + tau * std::abs(z); };
  const double lo = -std::abs(v) - 1.0, hi = std::abs(v) + 1.0;
  double best = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double z = lo + (hi - lo) * i / 20000.0;
    if (cost(z) < cost(best)) best = z;
  }
  const double h = (hi - lo) / 20000.0;
  double fine = best;
  for (int i = -100000; i <= 100000; ++i) {
    const double z = best + h * i / 100000.0;
    if (cost(z) < cost(fine)) fine = z;
  }
  if (cost(0.0) <= cost(fine)) fine = 0.0;
  return fine;
}

}  // namespace

TEST(Objective, Examples) {
  const auto data = tiny_dataset();
  EXPECT_DOUBLE_EQ(objective(LassoProblem(data, 0.1), std::vector<double>{0.0, 0.0}), 0.5);

  // X^T w = y for w = [1, -1]: columns [1,0] and [2,1] give 1 and 1.
  EXPECT_DOUBLE_EQ(objective(LassoProblem(data, 0.0), std::vector<double>{1.0, -1.0}), 0.0);

  const std::vector<double> ones{1.0, 1.0};
  EXPECT_DOUBLE_EQ(objective(LassoProblem(data, 1.0), ones) - smooth_loss(LassoProblem(data, 1.0), ones), 2.0);
  EXPECT_THROW(objective(LassoProblem(data, 0.1), std::vector<double>{1.0}), DimensionError);
  EXPECT_THROW(LassoProblem(data, -0.5), ParameterError);
}

TEST(Gradient, Examples) {
  const auto data = tiny_dataset();
  const LassoProblem problem(data, 0.0);
  EXPECT_EQ(full_gradient(problem, std::vector<double>{1.0, 0.0}), (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(full_gradient(problem, std::vector<double>{0.0, 0.0}), (std::vector<double>{-1.5, -0.5}));
}

TEST(Gradient, FiniteDifferences) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = synthesize({5, 30, 0.6, 0.2, seed}).data;
    const LassoProblem problem(data, 0.0);
    std::vector<double> w(5);
    for (auto& v : w) v = normal(gen);
    const auto g = full_gradient(problem, w);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 5; ++i) {
      auto plus = w, minus = w;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (smooth_loss(problem, plus) - smooth_loss(problem, minus)) / (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-5);
    }
  }
}

TEST(Gradient, SampledMatchesFullAtFullBatch) {
  const auto data = tiny_dataset();
  const std::vector<std::size_t> both{0, 1};
  const auto gram = sampled_gram(data, both, 0, 2, 2);
  EXPECT_EQ(sampled_gradient(gram.view(), std::vector<double>{1.0, 0.0}), (std::vector<double>{1.0, 0.5}));

  const auto big = synthesize({8, 90, 0.5, 0.1, 4}).data;
  std::vector<std::size_t> all(90);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto full = sampled_gram(big, all, 0, 90, 90);
  const std::vector<double> w{0.5, -1, 2, 0, 0.25, 3, -0.75, 1};
  const auto a = sampled_gradient(full.view(), w);
  const auto b = full_gradient(LassoProblem(big, 0.0), w);
  EXPECT_LE((test_support::as_eigen(a) - test_support::as_eigen(b)).norm() / test_support::as_eigen(b).norm(), 1e-12);
}

TEST(Gradient, SampledExamples) {
  const auto data = tiny_dataset();
  const std::vector<std::size_t> first{0};
  const auto gram = sampled_gram(data, first, 0, 2, 1);
  EXPECT_EQ(sampled_gradient(gram.view(), std::vector<double>{1.0, 0.0}), (std::vector<double>{0.0, 0.0}));
  const std::vector<std::size_t> both{0, 1};
  const auto full = sampled_gram(data, both, 0, 2, 2);
  EXPECT_EQ(sampled_gradient(full.view(), std::vector<double>{0.0, 0.0}), (std::vector<double>{-1.5, -0.5}));
}

TEST(SoftThreshold, Branches) {
  EXPECT_EQ(soft_threshold(2.5, 1.0), 1.5);
  EXPECT_EQ(soft_threshold(-0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
  const std::vector<double> v{1.5, -2.0, 0.0, 1e-300};
  EXPECT_EQ(soft_threshold(v, 0.0), v);
  std::vector<double> w = v;
  EXPECT_THROW(soft_threshold_inplace(w, -1.0), ParameterError);
}

TEST(SoftThreshold, ScalarProxOracle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0), t(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double v = u(gen), tau = t(gen);
    EXPECT_NEAR(soft_threshold(v, tau), prox_by_grid(v, tau), 1e-7) << v << ' ' << tau;
  }
}

TEST(SoftThreshold, NonexpansiveAndShrinking) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = normal(gen);
    for (auto& x : b) x = normal(gen);
    const double tau = t(gen);
    const auto sa = soft_threshold(a, tau), sb = soft_threshold(b, tau);
    EXPECT_LE((test_support::as_eigen(sa) - test_support::as_eigen(sb)).norm(),
              (test_support::as_eigen(a) - test_support::as_eigen(b)).norm() + 1e-12);
    EXPECT_LE(norm1(sa), norm1(a) + 1e-12);
    if (norm_inf(a) <= tau) EXPECT_EQ(sa, std::vector<double>(6, 0.0));
  }
}

TEST(Kkt, ZeroIsOptimalAboveLambdaMax) {
  const auto data = tiny_dataset();
  EXPECT_DOUBLE_EQ(lambda_max(data), 1.5);
  EXPECT_EQ(kkt_residual(LassoProblem(data, 1.5), std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_GT(kkt_residual(LassoProblem(data, 1.4), std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_GT(kkt_residual(LassoProblem(data, 0.1), std::vector<double>{5.0, -3.0}), 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto big = synthesize({10, 80, 0.3, 0.1, seed}).data;
    EXPECT_EQ(kkt_residual(LassoProblem(big, lambda_max(big)), std::vector<double>(10, 0.0)), 0.0);
  }
}

TEST(Kkt, LeastSquaresAtZeroLambda) {
  const auto data = synthesize({6, 50, 0.5, 0.3, 2}).data;
  const auto X = test_support::dense_matrix(data);
  const Eigen::VectorXd w = (X * X.transpose()).ldlt().solve(X * test_support::labels_vector(data));
  const std::vector<double> ws(w.data(), w.data() + w.size());
  EXPECT_LE(kkt_residual(LassoProblem(data, 0.0), ws), 1e-8);
}

TEST(Kkt, FromGradientCases) {
  // Nonzero coordinate: |g + lambda sign(w)|; zero coordinate: max(0, |g| - lambda).
  const std::vector<double> g{-0.1, 0.3, 0.05};
  const std::vector<double> w{2.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(kkt_residual_from_gradient(g, w, 0.1), 0.2);
  EXPECT_DOUBLE_EQ(kkt_residual_from_gradient(g, w, 0.3), 0.2);
}

TEST(RelativeError, Examples) {
  const std::vector<double> w_op{3.0, 4.0};
  EXPECT_EQ(relative_solution_error(w_op, w_op), 0.0);
  EXPECT_DOUBLE_EQ(relative_solution_error(std::vector<double>{6.0, 8.0}, w_op), 1.0);
  EXPECT_DOUBLE_EQ(relative_solution_error(std::vector<double>{3.5, 4.0}, w_op), 0.1);
  EXPECT_THROW(relative_solution_error(w_op, std::vector<double>{0.0, 0.0}), UndefinedReferenceError);
}
