#pragma once

#include <span>
#include <vector>

#include "calasso/dataset.hpp"
#include "calasso/linalg.hpp"

namespace calasso {

/// min_w (1/2n) ||X^T w - y||^2 + lambda ||w||_1 over a borrowed dataset.
/// The dataset must outlive the problem.
class LassoProblem {
 public:
  LassoProblem(const Dataset& data, double lambda);

  const Dataset& data() const noexcept { return *data_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t dim() const noexcept { return data_->features(); }

 private:
  const Dataset* data_;
  double lambda_;
};

/// Smooth part f(w) = (1/2n) ||X^T w - y||^2.
double smooth_loss(const LassoProblem& problem, std::span<const double> w);

/// F(w) = f(w) + lambda ||w||_1.
double objective(const LassoProblem& problem, std::span<const double> w);

/// (1/n)(X X^T w - X y), evaluated as (1/n) sum_i x_i (x_i^T w - y_i).
std::vector<double> full_gradient(const LassoProblem& problem, std::span<const double> w,
                                  FlopMeter* meter = nullptr);

/// G w - R for a Gram pair already normalized by 1/m.
std::vector<double> sampled_gradient(const GramView& gram, std::span<const double> w, FlopMeter* meter = nullptr);

/// Componentwise shrinkage toward zero by `threshold`; |v_i| <= threshold maps to exactly 0.
double soft_threshold(double v, double threshold);
std::vector<double> soft_threshold(std::span<const double> v, double threshold);
void soft_threshold_inplace(std::span<double> v, double threshold);

/// Largest violation of the LASSO subgradient optimality conditions; 0 iff w is optimal.
double kkt_residual(const LassoProblem& problem, std::span<const double> w);

/// Same certificate with a precomputed gradient.
double kkt_residual_from_gradient(std::span<const double> gradient, std::span<const double> w, double lambda);

/// ||w - w_op|| / ||w_op||; throws UndefinedReferenceError when w_op = 0.
double relative_solution_error(std::span<const double> w, std::span<const double> w_op);

/// ||(1/n) X y||_inf: the smallest lambda for which w = 0 is optimal.
double lambda_max(const Dataset& data);

}  // namespace calasso
