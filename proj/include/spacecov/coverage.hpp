#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spacecov/simdist.hpp"

namespace spacecov {

struct CoverageReport {
  std::vector<std::string> universe;
  std::vector<std::string> subset;
  double score = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  int n_bootstrap = 0;
  std::uint64_t seed = 0;
  std::string sim_matrix_digest;

  std::string to_json(int indent = 2) const;
};

enum class RankMode { GREEDY_GAIN, NOVELTY, LANG_NN_DISTANCE };

std::string to_string(RankMode mode);

struct RankedCandidates {
  RankMode mode = RankMode::GREEDY_GAIN;
  std::vector<std::string> base;
  // (id, marginal gain or novelty or nearest-neighbour distance), in rank order.
  std::vector<std::pair<std::string, double>> ranking;
};

// Mean over the universe of each element's maximum similarity to the subset.
// The universe is a multiset: repeated ids count with multiplicity.
double coverage(const SymmetricMatrix& sim,
                std::span<const std::string> universe,
                std::span<const std::string> subset);

// Percentile interval from n resamples of the universe (with replacement,
// same cardinality), subset held fixed. Replica i draws from the SplitMix64
// substream (seed, i), so the result is independent of evaluation order.
std::pair<double, double> bootstrap_coverage_ci(
    const SymmetricMatrix& sim, std::span<const std::string> subset,
    std::span<const std::string> universe, int n, double level,
    std::uint64_t seed);

// Greedy coverage maximization over the fixed universe of all sim ids.
// Monotone submodular objective, so the result is within (1 - 1/e) of the
// optimal size-k extension. Ties break lexicographically on id.
RankedCandidates greedy_extend(const SymmetricMatrix& sim,
                               std::span<const std::string> base,
                               std::span<const std::string> candidates,
                               std::size_t k);

// novelty = 1 - max similarity to any base element; descending.
RankedCandidates novelty_ranking(const SymmetricMatrix& sim,
                                 std::span<const std::string> base,
                                 std::span<const std::string> candidates);

// Candidates ordered by distance to their nearest base language; descending,
// so the most distant (highest-priority) language comes first.
RankedCandidates rank_languages(const SymmetricMatrix& dist,
                                std::span<const std::string> base,
                                std::span<const std::string> candidates);

}  // namespace spacecov
