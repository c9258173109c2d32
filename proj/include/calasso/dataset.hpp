#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace calasso {

enum class Storage { dense, sparse };

/// Feature matrix X (d x n, one column per sample) plus the label vector y.
///
/// Columns are stored compressed (CSC). Dense datasets store every one of the
/// d entries of each column, so kernels see a single layout and dense work
/// counts fall out of the per-nonzero accounting.
class Dataset {
 public:
  struct Column {
    std::span<const std::uint32_t> rows;
    std::span<const double> values;
  };

  /// `column_major` holds d*n values, column i at [i*d, (i+1)*d).
  static Dataset from_dense(std::size_t d, std::size_t n, std::span<const double> column_major,
                            std::vector<double> labels);

  /// Sparse columns; row indices within a column must be strictly increasing.
  static Dataset from_csc(std::size_t d, std::size_t n, std::vector<std::size_t> col_ptr,
                          std::vector<std::uint32_t> row_idx, std::vector<double> values,
                          std::vector<double> labels);

  std::size_t features() const noexcept { return d_; }
  std::size_t samples() const noexcept { return n_; }
  Storage storage() const noexcept { return storage_; }

  Column column(std::size_t i) const;
  std::size_t column_nnz(std::size_t i) const { return col_ptr_[i + 1] - col_ptr_[i]; }
  std::size_t nnz() const noexcept { return values_.size(); }
  /// Stored entries in columns [begin, end).
  std::size_t nnz(std::size_t begin, std::size_t end) const { return col_ptr_[end] - col_ptr_[begin]; }

  std::span<const double> labels() const noexcept { return y_; }

  /// Column-major d*n copy with explicit zeros.
  std::vector<double> to_dense() const;

  /// FNV-1a over shape, structure, values and labels.
  std::uint64_t fingerprint() const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;
  void validate() const;

  std::size_t d_ = 0;
  std::size_t n_ = 0;
  Storage storage_ = Storage::dense;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::uint32_t> row_idx_;
  std::vector<double> values_;
  std::vector<double> y_;
};

/// Reads `label idx:val ...` lines (1-based, strictly increasing indices).
/// Sample i becomes column i. `features` overrides d when given and must be
/// at least the largest index seen.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> features = std::nullopt);
Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> features = std::nullopt);
Dataset load_libsvm(const std::string& path, std::optional<std::size_t> features = std::nullopt);

/// Writes the stored entries of each column; values use shortest round-trip form.
void write_libsvm(const Dataset& data, std::ostream& out);

struct SyntheticParams {
  std::size_t features = 20;
  std::size_t samples = 200;
  double sparsity = 0.25;  // fraction of nonzero entries in the planted w
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  double scale_decades = 0.0;  // feature r is scaled by 10^(-scale_decades * r / (d-1))
};

struct SyntheticProblem {
  Dataset data;
  std::vector<double> w_true;
};

/// Dense standard-normal X, planted w with ceil(sparsity*d) nonzeros of
/// magnitude in [1, 2], and y = X^T w + noise.
SyntheticProblem synthesize(const SyntheticParams& params);

/// Contiguous column blocks: block p is [boundaries[p], boundaries[p+1]).
struct ColumnPartition {
  std::vector<std::size_t> boundaries;

  std::size_t processors() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  std::size_t begin(std::size_t p) const { return boundaries[p]; }
  std::size_t end(std::size_t p) const { return boundaries[p + 1]; }
  std::size_t columns() const noexcept { return boundaries.empty() ? 0 : boundaries.back(); }
  /// Rank owning column `col`.
  std::size_t owner(std::size_t col) const;
};

/// Splits columns into P contiguous blocks whose nonzero counts track
/// total_nnz/P: boundary p is placed where the nnz prefix sum is closest to
/// p*total/P (earliest on ties), keeping at least one column per block when n >= P.
ColumnPartition partition_columns(const Dataset& data, std::size_t processors);
ColumnPartition partition_columns(std::span<const std::size_t> column_nnz, std::size_t processors);

/// Uniform sampling of m = floor(b*n) distinct columns without replacement.
///
/// The draw for a given iteration is a pure function of (seed, iteration), so
/// every solver variant and every virtual processor sees the same sample.
class Sampler {
 public:
  Sampler(std::uint64_t seed, double fraction, std::size_t population);

  std::uint64_t seed() const noexcept { return seed_; }
  double fraction() const noexcept { return fraction_; }
  std::size_t population() const noexcept { return n_; }
  std::size_t sample_size() const noexcept { return m_; }

  /// Sorted ascending, length sample_size().
  std::vector<std::size_t> indices(std::uint64_t iteration) const;

 private:
  std::uint64_t seed_;
  double fraction_;
  std::size_t n_;
  std::size_t m_;
};

/// Sorted indices restricted to [begin, end); input must be sorted.
std::span<const std::size_t> owned_slice(std::span<const std::size_t> sorted, std::size_t begin,
                                         std::size_t end);

}  // namespace calasso
