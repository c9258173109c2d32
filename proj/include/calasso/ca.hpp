#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "calasso/classical.hpp"

namespace calasso {

/// k sampled Gram blocks laid out as one contiguous payload
/// [G_1 | ... | G_k | R_1 | ... | R_k], block j belonging to global
/// iteration first_iteration + j - 1.
struct GramBlocks {
  std::size_t d = 0;
  std::size_t count = 0;
  std::size_t first_iteration = 1;
  std::vector<double> payload;

  GramBlocks() = default;
  GramBlocks(std::size_t dim, std::size_t blocks, std::size_t first)
      : d(dim), count(blocks), first_iteration(first), payload(blocks * gram_words(dim), 0.0) {}

  /// Block j in 1..count.
  GramView block(std::size_t j) const;
  std::size_t words() const noexcept { return payload.size(); }
};

/// Builds the Gram blocks for outer round `outer` (0-based): every rank sums
/// its owned share of each of the `blocks` global samples, then a single
/// all-reduce replicates the concatenated payload. `blocks` is k, or fewer
/// for a final partial round.
GramBlocks build_gram_blocks(const LassoProblem& problem, const Sampler& sampler, std::size_t outer,
                             std::size_t k, std::size_t blocks, VirtualCluster& cluster);

/// k-step SFISTA: one Gram all-reduce every k iterations, k local updates in between.
RunTrace run_ca_sfista(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                       std::span<const double> reference = {});

/// k-step SPNM.
RunTrace run_ca_spnm(const LassoProblem& problem, const SolverConfig& config, VirtualCluster& cluster,
                     std::span<const double> reference = {});

}  // namespace calasso
