#include "calasso/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calasso/error.hpp"

namespace calasso {

namespace {

void charge(FlopMeter* meter, std::uint64_t n) {
  if (meter != nullptr) meter->add(n);
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

void sampled_gram_into(const Dataset& data, std::span<const std::size_t> sampled, std::size_t owned_begin,
                       std::size_t owned_end, std::size_t m_global, std::span<double> G_out,
                       std::span<double> R_out, FlopMeter* meter) {
  const std::size_t d = data.features();
  require_same(G_out.size(), d * d, "sampled_gram G");
  require_same(R_out.size(), d, "sampled_gram R");
  if (m_global == 0) throw ParameterError("sampled_gram: global sample size must be >= 1");
  std::fill(G_out.begin(), G_out.end(), 0.0);
  std::fill(R_out.begin(), R_out.end(), 0.0);

  const auto y = data.labels();
  std::uint64_t work = 0;
  for (std::size_t i : sampled) {
    if (i < owned_begin || i >= owned_end) {
      throw OwnershipError("column " + std::to_string(i) + " is outside owned block [" +
                           std::to_string(owned_begin) + ", " + std::to_string(owned_end) + ")");
    }
    const auto col = data.column(i);
    const std::size_t nz = col.rows.size();
    for (std::size_t a = 0; a < nz; ++a) {
      const double va = col.values[a];
      double* row = G_out.data() + static_cast<std::size_t>(col.rows[a]) * d;
      // Full outer product (not a triangle) keeps G exactly symmetric: va*vb == vb*va.
      for (std::size_t b = 0; b < nz; ++b) row[col.rows[b]] += va * col.values[b];
      R_out[col.rows[a]] += va * y[i];
    }
    work += 2 * nz * nz + 2 * nz;
  }
  const auto m = static_cast<double>(m_global);
  for (auto& g : G_out) g /= m;
  for (auto& r : R_out) r /= m;
  charge(meter, work);
}

GramPair sampled_gram(const Dataset& data, std::span<const std::size_t> sampled, std::size_t owned_begin,
                      std::size_t owned_end, std::size_t m_global, FlopMeter* meter) {
  GramPair out(data.features());
  sampled_gram_into(data, sampled, owned_begin, owned_end, m_global, out.G, out.R, meter);
  return out;
}

void symv(std::size_t d, std::span<const double> G, std::span<const double> w, std::span<double> out,
          FlopMeter* meter) {
  require_same(G.size(), d * d, "symv matrix");
  require_same(w.size(), d, "symv vector");
  require_same(out.size(), d, "symv output");
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = G.data() + r * d;
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += row[c] * w[c];
    out[r] = acc;
  }
  charge(meter, 2 * d * d);
}

std::vector<double> symv(const GramView& gram, std::span<const double> w, FlopMeter* meter) {
  std::vector<double> out(gram.d);
  symv(gram.d, gram.G, w, out, meter);
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y, FlopMeter* meter) {
  require_same(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  charge(meter, 2 * x.size());
}

double dot(std::span<const double> x, std::span<const double> y, FlopMeter* meter) {
  require_same(x.size(), y.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  charge(meter, 2 * x.size());
  return acc;
}

double norm2(std::span<const double> x, FlopMeter* meter) { return std::sqrt(dot(x, x, meter)); }

double norm1(std::span<const double> x, FlopMeter* meter) {
  double acc = 0.0;
  for (double v : x) acc += std::abs(v);
  charge(meter, 2 * x.size());
  return acc;
}

double norm_inf(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc = std::max(acc, std::abs(v));
  return acc;
}

double estimate_lipschitz(const Dataset& data, const LipschitzOptions& options) {
  constexpr double kFloor = 1e-12;
  const std::size_t d = data.features();
  const std::size_t n = data.samples();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Applies (1/n) X X^T via the sample columns.
  auto apply = [&](std::span<const double> v, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = data.column(i);
      double proj = 0.0;
      for (std::size_t p = 0; p < col.rows.size(); ++p) proj += col.values[p] * v[col.rows[p]];
      for (std::size_t p = 0; p < col.rows.size(); ++p) out[col.rows[p]] += proj * col.values[p];
    }
    for (auto& o : out) o *= inv_n;
  };

  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<double> av(d);
  double rayleigh = 0.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    apply(v, av);
    const double next = dot(v, av);
    const double len = norm2(av);
    if (len == 0.0) return kFloor;
    for (std::size_t r = 0; r < d; ++r) v[r] = av[r] / len;
    const bool settled = it > 0 && std::abs(next - rayleigh) <= options.rel_tol * std::abs(next);
    rayleigh = next;
    if (settled) break;
  }
  return std::max(rayleigh, kFloor);
}

}  // namespace calasso
