#include "calasso/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "calasso/error.hpp"
#include "rng.hpp"

namespace calasso {

Dataset Dataset::from_dense(std::size_t d, std::size_t n, std::span<const double> column_major,
                            std::vector<double> labels) {
  if (column_major.size() != d * n) {
    throw DimensionError("dense matrix has " + std::to_string(column_major.size()) +
                         " values, expected d*n = " + std::to_string(d * n));
  }
  Dataset out;
  out.d_ = d;
  out.n_ = n;
  out.storage_ = Storage::dense;
  out.col_ptr_.resize(n + 1);
  out.row_idx_.resize(d * n);
  out.values_.assign(column_major.begin(), column_major.end());
  for (std::size_t i = 0; i <= n; ++i) out.col_ptr_[i] = i * d;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) out.row_idx_[i * d + r] = static_cast<std::uint32_t>(r);
  }
  out.y_ = std::move(labels);
  out.validate();
  return out;
}

Dataset Dataset::from_csc(std::size_t d, std::size_t n, std::vector<std::size_t> col_ptr,
                          std::vector<std::uint32_t> row_idx, std::vector<double> values,
                          std::vector<double> labels) {
  Dataset out;
  out.d_ = d;
  out.n_ = n;
  out.storage_ = Storage::sparse;
  out.col_ptr_ = std::move(col_ptr);
  out.row_idx_ = std::move(row_idx);
  out.values_ = std::move(values);
  out.y_ = std::move(labels);
  out.validate();
  return out;
}

void Dataset::validate() const {
  if (d_ == 0 || n_ == 0) throw DimensionError("dataset needs d >= 1 and n >= 1");
  if (y_.size() != n_) {
    throw DimensionError("label vector has length " + std::to_string(y_.size()) + ", expected " +
                         std::to_string(n_));
  }
  if (col_ptr_.size() != n_ + 1 || col_ptr_.front() != 0 || col_ptr_.back() != values_.size() ||
      row_idx_.size() != values_.size()) {
    throw DimensionError("inconsistent column structure");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (col_ptr_[i] > col_ptr_[i + 1]) throw DimensionError("column pointers must be non-decreasing");
    for (std::size_t p = col_ptr_[i]; p < col_ptr_[i + 1]; ++p) {
      if (row_idx_[p] >= d_) throw DimensionError("row index out of range in column " + std::to_string(i));
      if (p > col_ptr_[i] && row_idx_[p] <= row_idx_[p - 1]) {
        throw DimensionError("row indices must increase within column " + std::to_string(i));
      }
    }
  }
}

Dataset::Column Dataset::column(std::size_t i) const {
  const std::size_t lo = col_ptr_[i];
  const std::size_t len = col_ptr_[i + 1] - lo;
  return {std::span<const std::uint32_t>(row_idx_).subspan(lo, len),
          std::span<const double>(values_).subspan(lo, len)};
}

std::vector<double> Dataset::to_dense() const {
  std::vector<double> out(d_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = col_ptr_[i]; p < col_ptr_[i + 1]; ++p) out[i * d_ + row_idx_[p]] = values_[p];
  }
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

template <class T>
void fnv_mix(std::uint64_t& h, const T& value) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(&value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, static_cast<std::uint64_t>(d_));
  fnv_mix(h, static_cast<std::uint64_t>(n_));
  for (auto p : col_ptr_) fnv_mix(h, static_cast<std::uint64_t>(p));
  for (auto r : row_idx_) fnv_mix(h, r);
  for (auto v : values_) fnv_mix(h, v);
  for (auto v : y_) fnv_mix(h, v);
  return h;
}

// ---------------------------------------------------------------------------
// LIBSVM text format

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

double parse_double(std::string_view token, std::size_t line, const char* what) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw ParseError(line, std::string("non-numeric ") + what + " '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) throw ParseError(line, std::string("non-finite ") + what);
  return value;
}

std::uint64_t parse_index(std::string_view token, std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(line, "non-numeric feature index '" + std::string(token) + "'");
  }
  if (value == 0) throw ParseError(line, "feature indices are 1-based, got 0");
  if (value > std::numeric_limits<std::uint32_t>::max()) throw ParseError(line, "feature index too large");
  return value;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> features) {
  std::vector<std::size_t> col_ptr{0};
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t max_index = 0;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < line.size() && is_blank(line[pos])) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && !is_blank(line[pos])) ++pos;
      return line.substr(start, pos - start);
    };

    std::string_view label_tok = next_token();
    if (label_tok.empty()) continue;
    if (label_tok.find(':') != std::string_view::npos) throw ParseError(line_no, "missing label");
    labels.push_back(parse_double(label_tok, line_no, "label"));

    std::uint64_t previous = 0;
    for (std::string_view tok = next_token(); !tok.empty(); tok = next_token()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(line_no, "expected idx:val, got '" + std::string(tok) + "'");
      const std::uint64_t idx = parse_index(tok.substr(0, colon), line_no);
      if (idx <= previous) {
        throw ParseError(line_no, "feature index " + std::to_string(idx) + " does not increase (previous " +
                                      std::to_string(previous) + ")");
      }
      previous = idx;
      const double v = parse_double(tok.substr(colon + 1), line_no, "feature value");
      rows.push_back(static_cast<std::uint32_t>(idx - 1));
      values.push_back(v);
      max_index = std::max<std::size_t>(max_index, idx);
    }
    col_ptr.push_back(values.size());
  }
  if (labels.empty()) throw ParseError(0, "no samples");

  std::size_t d = max_index;
  if (features) {
    if (*features < max_index) {
      throw ParseError(0, "feature override " + std::to_string(*features) + " is below largest index " +
                              std::to_string(max_index));
    }
    d = *features;
  }
  if (d == 0) throw ParseError(0, "no features");
  const std::size_t n = labels.size();
  return Dataset::from_csc(d, n, std::move(col_ptr), std::move(rows), std::move(values), std::move(labels));
}

Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> features) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, features);
}

Dataset load_libsvm(const std::string& path, std::optional<std::size_t> features) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_libsvm(in, features);
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_libsvm(const Dataset& data, std::ostream& out) {
  const auto y = data.labels();
  for (std::size_t i = 0; i < data.samples(); ++i) {
    put_double(out, y[i]);
    const auto col = data.column(i);
    for (std::size_t p = 0; p < col.rows.size(); ++p) {
      out << ' ' << (col.rows[p] + 1) << ':';
      put_double(out, col.values[p]);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic problems

SyntheticProblem synthesize(const SyntheticParams& params) {
  const std::size_t d = params.features;
  const std::size_t n = params.samples;
  if (d == 0 || n == 0) throw ParameterError("synthetic problem needs d >= 1 and n >= 1");
  if (!(params.sparsity >= 0.0 && params.sparsity <= 1.0)) throw ParameterError("sparsity must lie in [0, 1]");
  if (!(params.noise_sd >= 0.0)) throw ParameterError("noise_sd must be >= 0");
  if (!std::isfinite(params.scale_decades)) throw ParameterError("scale_decades must be finite");

  std::mt19937_64 gen(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(1.0, 2.0);

  std::vector<double> x(d * n);
  for (auto& v : x) v = normal(gen);
  if (params.scale_decades != 0.0 && d > 1) {
    std::vector<double> scale(d);
    for (std::size_t r = 0; r < d; ++r) {
      scale[r] = std::pow(10.0, -params.scale_decades * static_cast<double>(r) / static_cast<double>(d - 1));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) x[i * d + r] *= scale[r];
    }
  }

  const auto support_size =
      std::min(d, static_cast<std::size_t>(std::ceil(params.sparsity * static_cast<double>(d) - 1e-12)));
  std::vector<std::size_t> coords(d);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  std::shuffle(coords.begin(), coords.end(), gen);
  std::vector<double> w(d, 0.0);
  for (std::size_t s = 0; s < support_size; ++s) {
    const double sign = (gen() & 1U) ? 1.0 : -1.0;
    w[coords[s]] = sign * magnitude(gen);
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) acc += x[i * d + r] * w[r];
    if (params.noise_sd > 0.0) acc += params.noise_sd * normal(gen);
    y[i] = acc;
  }
  return {Dataset::from_dense(d, n, x, std::move(y)), std::move(w)};
}

// ---------------------------------------------------------------------------
// Partitioning

std::size_t ColumnPartition::owner(std::size_t col) const {
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), col);
  // Empty blocks share a boundary value; upper_bound lands after the last of them.
  return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

ColumnPartition partition_columns(std::span<const std::size_t> column_nnz, std::size_t processors) {
  if (processors == 0) throw ParameterError("processor count must be >= 1");
  const std::size_t n = column_nnz.size();
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + column_nnz[i];
  const double total = static_cast<double>(prefix[n]);
  const bool every_block_nonempty = n >= processors;

  ColumnPartition part;
  part.boundaries.assign(processors + 1, 0);
  part.boundaries[processors] = n;
  for (std::size_t p = 1; p < processors; ++p) {
    const double target = total * static_cast<double>(p) / static_cast<double>(processors);
    std::size_t lo = part.boundaries[p - 1] + (every_block_nonempty ? 1 : 0);
    std::size_t hi = every_block_nonempty ? n - (processors - p) : n;
    lo = std::min(lo, n);
    std::size_t best = lo;
    double best_gap = std::abs(static_cast<double>(prefix[lo]) - target);
    for (std::size_t c = lo + 1; c <= hi; ++c) {
      const double gap = std::abs(static_cast<double>(prefix[c]) - target);
      if (gap < best_gap) {
        best = c;
        best_gap = gap;
      }
      if (static_cast<double>(prefix[c]) >= target) break;
    }
    part.boundaries[p] = best;
  }
  return part;
}

ColumnPartition partition_columns(const Dataset& data, std::size_t processors) {
  std::vector<std::size_t> nnz(data.samples());
  for (std::size_t i = 0; i < nnz.size(); ++i) nnz[i] = data.column_nnz(i);
  return partition_columns(nnz, processors);
}

// ---------------------------------------------------------------------------
// Sampling

Sampler::Sampler(std::uint64_t seed, double fraction, std::size_t population)
    : seed_(seed), fraction_(fraction), n_(population) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("sampling fraction b must lie in (0, 1]");
  if (population == 0) throw ParameterError("sampling population must be >= 1");
  // Guard so that e.g. b = 0.29, n = 100 yields 29 despite 0.29*100 < 29 in binary.
  const double raw = fraction * static_cast<double>(population);
  m_ = std::min(population, static_cast<std::size_t>(std::floor(raw * (1.0 + 1e-12))));
  if (m_ == 0) {
    throw ParameterError("floor(b*n) = 0 for b = " + std::to_string(fraction) + ", n = " +
                         std::to_string(population));
  }
}

std::vector<std::size_t> Sampler::indices(std::uint64_t iteration) const {
  std::vector<std::size_t> out;
  if (m_ == n_) {
    out.resize(n_);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  detail::SplitMix64 gen(detail::counter_key(seed_, iteration));
  // Floyd's algorithm: m distinct uniform draws in O(m).
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(m_ * 2);
  out.reserve(m_);
  for (std::size_t j = n_ - m_; j < n_; ++j) {
    const std::size_t t = static_cast<std::size_t>(gen.bounded(static_cast<std::uint64_t>(j) + 1));
    const std::size_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::span<const std::size_t> owned_slice(std::span<const std::size_t> sorted, std::size_t begin,
                                         std::size_t end) {
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), begin);
  auto hi = std::lower_bound(lo, sorted.end(), end);
  return sorted.subspan(static_cast<std::size_t>(lo - sorted.begin()), static_cast<std::size_t>(hi - lo));
}

}  // namespace calasso
