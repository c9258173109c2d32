#include "calasso/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calasso/error.hpp"

namespace calasso {

LassoProblem::LassoProblem(const Dataset& data, double lambda) : data_(&data), lambda_(lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
}

namespace {

void check_dim(const LassoProblem& problem, std::span<const double> w) {
  if (w.size() != problem.dim()) {
    throw DimensionError("iterate has length " + std::to_string(w.size()) + ", expected " +
                         std::to_string(problem.dim()));
  }
}

}  // namespace

double smooth_loss(const LassoProblem& problem, std::span<const double> w) {
  check_dim(problem, w);
  const Dataset& data = problem.data();
  const auto y = data.labels();
  double acc = 0.0;
  for (std::size_t i = 0; i < data.samples(); ++i) {
    const auto col = data.column(i);
    double pred = 0.0;
    for (std::size_t p = 0; p < col.rows.size(); ++p) pred += col.values[p] * w[col.rows[p]];
    const double r = pred - y[i];
    acc += r * r;
  }
  return acc / (2.0 * static_cast<double>(data.samples()));
}

double objective(const LassoProblem& problem, std::span<const double> w) {
  return smooth_loss(problem, w) + problem.lambda() * norm1(w);
}

std::vector<double> full_gradient(const LassoProblem& problem, std::span<const double> w, FlopMeter* meter) {
  check_dim(problem, w);
  const Dataset& data = problem.data();
  const auto y = data.labels();
  std::vector<double> g(problem.dim(), 0.0);
  std::uint64_t work = 0;
  for (std::size_t i = 0; i < data.samples(); ++i) {
    const auto col = data.column(i);
    double r = -y[i];
    for (std::size_t p = 0; p < col.rows.size(); ++p) r += col.values[p] * w[col.rows[p]];
    for (std::size_t p = 0; p < col.rows.size(); ++p) g[col.rows[p]] += r * col.values[p];
    work += 4 * col.rows.size() + 1;
  }
  const double inv_n = 1.0 / static_cast<double>(data.samples());
  for (auto& v : g) v *= inv_n;
  if (meter != nullptr) meter->add(work + g.size());
  return g;
}

std::vector<double> sampled_gradient(const GramView& gram, std::span<const double> w, FlopMeter* meter) {
  if (w.size() != gram.d) throw DimensionError("sampled_gradient: iterate length mismatch");
  auto g = symv(gram, w, meter);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gram.R[i];
  if (meter != nullptr) meter->add(g.size());
  return g;
}

double soft_threshold(double v, double threshold) {
  if (v > threshold) return v - threshold;
  if (v < -threshold) return v + threshold;
  return 0.0;
}

void soft_threshold_inplace(std::span<double> v, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("soft-threshold level must be >= 0");
  for (auto& x : v) x = soft_threshold(x, threshold);
}

std::vector<double> soft_threshold(std::span<const double> v, double threshold) {
  std::vector<double> out(v.begin(), v.end());
  soft_threshold_inplace(out, threshold);
  return out;
}

double kkt_residual_from_gradient(std::span<const double> gradient, std::span<const double> w, double lambda) {
  if (gradient.size() != w.size()) throw DimensionError("kkt_residual: gradient length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double violation = w[i] != 0.0 ? std::abs(gradient[i] + std::copysign(lambda, w[i]))
                                         : std::max(0.0, std::abs(gradient[i]) - lambda);
    worst = std::max(worst, violation);
  }
  return worst;
}

double kkt_residual(const LassoProblem& problem, std::span<const double> w) {
  const auto g = full_gradient(problem, w);
  return kkt_residual_from_gradient(g, w, problem.lambda());
}

double relative_solution_error(std::span<const double> w, std::span<const double> w_op) {
  if (w.size() != w_op.size()) throw DimensionError("relative_solution_error: length mismatch");
  const double ref = norm2(w_op);
  if (ref == 0.0) throw UndefinedReferenceError("relative solution error is undefined for a zero reference");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w[i] - w_op[i];
    acc += diff * diff;
  }
  return std::sqrt(acc) / ref;
}

double lambda_max(const Dataset& data) {
  std::vector<double> xy(data.features(), 0.0);
  const auto y = data.labels();
  for (std::size_t i = 0; i < data.samples(); ++i) {
    const auto col = data.column(i);
    for (std::size_t p = 0; p < col.rows.size(); ++p) xy[col.rows[p]] += col.values[p] * y[i];
  }
  return norm_inf(xy) / static_cast<double>(data.samples());
}

}  // namespace calasso
