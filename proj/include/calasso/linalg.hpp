#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calasso/dataset.hpp"

namespace calasso {

/// Flop tally. One multiply-add pair counts as 2 flops.
struct FlopMeter {
  std::uint64_t flops = 0;

  void add(std::uint64_t n) noexcept { flops += n; }
};

/// Read-only view of one sampled Gram block: G is d x d row-major, R has length d.
struct GramView {
  std::size_t d = 0;
  std::span<const double> G;
  std::span<const double> R;
};

/// G = (1/m) sum_{i in S} x_i x_i^T and R = (1/m) sum_{i in S} x_i y_i.
struct GramPair {
  std::size_t d = 0;
  std::vector<double> G;
  std::vector<double> R;

  GramPair() = default;
  explicit GramPair(std::size_t dim) : d(dim), G(dim * dim, 0.0), R(dim, 0.0) {}

  GramView view() const { return {d, G, R}; }
  /// Payload words exchanged in a collective.
  std::size_t words() const noexcept { return G.size() + R.size(); }
};

/// Words in one Gram block payload: d^2 + d.
constexpr std::size_t gram_words(std::size_t d) noexcept { return d * d + d; }

/// Accumulates the local partial Gram pair over `sampled` (sorted, all inside
/// [owned_begin, owned_end)) into `G_out` (d*d) and `R_out` (d), scaled by
/// 1/m_global. Columns are summed in ascending index order so the result is
/// bitwise reproducible. Charges 2*nnz(x_i)^2 + 2*nnz(x_i) flops per column.
///
/// Throws OwnershipError for an index outside the owned block.
void sampled_gram_into(const Dataset& data, std::span<const std::size_t> sampled, std::size_t owned_begin,
                       std::size_t owned_end, std::size_t m_global, std::span<double> G_out,
                       std::span<double> R_out, FlopMeter* meter = nullptr);

GramPair sampled_gram(const Dataset& data, std::span<const std::size_t> sampled, std::size_t owned_begin,
                      std::size_t owned_end, std::size_t m_global, FlopMeter* meter = nullptr);

/// out = G w for a d x d row-major G. 2d^2 flops.
void symv(std::size_t d, std::span<const double> G, std::span<const double> w, std::span<double> out,
          FlopMeter* meter = nullptr);
std::vector<double> symv(const GramView& gram, std::span<const double> w, FlopMeter* meter = nullptr);

// Level-1 kernels, 2d flops each.
void axpy(double alpha, std::span<const double> x, std::span<double> y, FlopMeter* meter = nullptr);
double dot(std::span<const double> x, std::span<const double> y, FlopMeter* meter = nullptr);
double norm2(std::span<const double> x, FlopMeter* meter = nullptr);
double norm1(std::span<const double> x, FlopMeter* meter = nullptr);
double norm_inf(std::span<const double> x);

struct LipschitzOptions {
  double rel_tol = 1e-6;
  std::size_t max_iterations = 1000;
};

/// Largest eigenvalue of (1/n) X X^T by power iteration, floored at 1e-12.
double estimate_lipschitz(const Dataset& data, const LipschitzOptions& options = {});

}  // namespace calasso
