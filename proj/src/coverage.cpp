#include "spacecov/coverage.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "spacecov/error.hpp"
#include "spacecov/rng.hpp"
#include "spacecov/stats.hpp"

namespace spacecov {

std::string to_string(RankMode mode) {
  switch (mode) {
    case RankMode::GREEDY_GAIN: return "GREEDY_GAIN";
    case RankMode::NOVELTY: return "NOVELTY";
    case RankMode::LANG_NN_DISTANCE: return "LANG_NN_DISTANCE";
  }
  fail("unreachable rank mode");
}

std::string CoverageReport::to_json(int indent) const {
  nlohmann::json doc{{"universe", universe},
                     {"subset", subset},
                     {"score", score},
                     {"n_bootstrap", n_bootstrap},
                     {"seed", seed},
                     {"sim_matrix_digest", sim_matrix_digest}};
  if (ci_low) doc["ci_low"] = *ci_low;
  if (ci_high) doc["ci_high"] = *ci_high;
  return doc.dump(indent) + "\n";
}

namespace {

std::vector<std::size_t> resolve_ids(const SymmetricMatrix& sim,
                                     std::span<const std::string> ids,
                                     const char* role) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    if (!sim.contains(id)) fail("coverage: unknown ", role, " id '", id, "'");
    out.push_back(sim.index_of(id));
  }
  return out;
}

double coverage_indexed(const SymmetricMatrix& sim,
                        std::span<const std::size_t> universe,
                        std::span<const std::size_t> subset) {
  double acc = 0.0;
  for (std::size_t u : universe) {
    double best = sim.at(subset[0], u);
    for (std::size_t k = 1; k < subset.size(); ++k)
      best = std::max(best, sim.at(subset[k], u));
    acc += best;
  }
  return acc / static_cast<double>(universe.size());
}

}  // namespace

double coverage(const SymmetricMatrix& sim,
                std::span<const std::string> universe,
                std::span<const std::string> subset) {
  if (subset.empty()) fail("coverage: empty subset");
  if (universe.empty()) fail("coverage: empty universe");
  std::vector<std::size_t> u = resolve_ids(sim, universe, "universe");
  std::vector<std::size_t> s = resolve_ids(sim, subset, "subset");
  return coverage_indexed(sim, u, s);
}

std::pair<double, double> bootstrap_coverage_ci(
    const SymmetricMatrix& sim, std::span<const std::string> subset,
    std::span<const std::string> universe, int n, double level,
    std::uint64_t seed) {
  if (n < 1) fail("bootstrap: n must be >= 1, got ", n);
  if (!(level > 0.0 && level < 1.0)) fail("bootstrap: level must be in (0,1)");
  if (subset.empty()) fail("coverage: empty subset");
  if (universe.empty()) fail("coverage: empty universe");
  std::vector<std::size_t> u = resolve_ids(sim, universe, "universe");
  std::vector<std::size_t> s = resolve_ids(sim, subset, "subset");

  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<std::size_t> resampled(u.size());
  for (int rep = 0; rep < n; ++rep) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    for (std::size_t i = 0; i < u.size(); ++i)
      resampled[i] = u[rng.below(u.size())];
    scores[static_cast<std::size_t>(rep)] = coverage_indexed(sim, resampled, s);
  }
  std::sort(scores.begin(), scores.end());
  double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(scores, alpha), quantile_sorted(scores, 1.0 - alpha)};
}

RankedCandidates greedy_extend(const SymmetricMatrix& sim,
                               std::span<const std::string> base,
                               std::span<const std::string> candidates,
                               std::size_t k) {
  if (k > candidates.size())
    fail("greedy_extend: k=", k, " exceeds ", candidates.size(), " candidates");
  if (base.empty() && candidates.empty())
    fail("greedy_extend: base may be empty only if candidates are not");
  std::vector<std::size_t> base_idx = resolve_ids(sim, base, "base");
  std::vector<std::string> cand_sorted(candidates.begin(), candidates.end());
  std::sort(cand_sorted.begin(), cand_sorted.end());
  std::vector<std::size_t> cand_idx = resolve_ids(sim, cand_sorted, "candidate");

  std::size_t n = sim.size();
  // Best similarity to the growing subset, per universe element. The gain of
  // a candidate is then a sum of per-element improvements, which keeps the
  // selected gains non-increasing.
  std::vector<double> best(n, 0.0);
  for (std::size_t b : base_idx)
    for (std::size_t u = 0; u < n; ++u) best[u] = std::max(best[u], sim.at(b, u));

  RankedCandidates out;
  out.mode = RankMode::GREEDY_GAIN;
  out.base.assign(base.begin(), base.end());
  std::vector<bool> taken(cand_idx.size(), false);
  for (std::size_t step = 0; step < k; ++step) {
    double best_gain = -1.0;
    std::size_t best_pos = cand_idx.size();
    for (std::size_t c = 0; c < cand_idx.size(); ++c) {
      if (taken[c]) continue;
      double gain = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        double v = sim.at(cand_idx[c], u);
        if (v > best[u]) gain += v - best[u];
      }
      gain /= static_cast<double>(n);
      if (gain > best_gain) {  // strict: first (lexicographic) wins ties
        best_gain = gain;
        best_pos = c;
      }
    }
    taken[best_pos] = true;
    out.ranking.emplace_back(cand_sorted[best_pos], best_gain);
    for (std::size_t u = 0; u < n; ++u)
      best[u] = std::max(best[u], sim.at(cand_idx[best_pos], u));
  }
  return out;
}

RankedCandidates novelty_ranking(const SymmetricMatrix& sim,
                                 std::span<const std::string> base,
                                 std::span<const std::string> candidates) {
  if (base.empty()) fail("novelty_ranking: empty base");
  if (candidates.empty()) fail("novelty_ranking: empty candidates");
  std::set<std::string> base_set(base.begin(), base.end());
  for (const std::string& c : candidates)
    if (base_set.count(c))
      fail("novelty_ranking: candidate '", c, "' also appears in base");
  std::vector<std::size_t> base_idx = resolve_ids(sim, base, "base");
  std::vector<std::size_t> cand_idx = resolve_ids(sim, candidates, "candidate");

  RankedCandidates out;
  out.mode = RankMode::NOVELTY;
  out.base.assign(base.begin(), base.end());
  for (std::size_t c = 0; c < cand_idx.size(); ++c) {
    double best = 0.0;
    for (std::size_t b : base_idx) best = std::max(best, sim.at(cand_idx[c], b));
    out.ranking.emplace_back(candidates[c], 1.0 - best);
  }
  std::sort(out.ranking.begin(), out.ranking.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return out;
}

RankedCandidates rank_languages(const SymmetricMatrix& dist,
                                std::span<const std::string> base,
                                std::span<const std::string> candidates) {
  if (base.empty()) fail("rank_languages: empty base");
  if (candidates.empty()) fail("rank_languages: empty candidates");
  std::set<std::string> base_set(base.begin(), base.end());
  for (const std::string& c : candidates)
    if (base_set.count(c))
      fail("rank_languages: candidate '", c, "' also appears in base");
  std::vector<std::size_t> base_idx = resolve_ids(dist, base, "base");
  std::vector<std::size_t> cand_idx = resolve_ids(dist, candidates, "candidate");

  RankedCandidates out;
  out.mode = RankMode::LANG_NN_DISTANCE;
  out.base.assign(base.begin(), base.end());
  for (std::size_t c = 0; c < cand_idx.size(); ++c) {
    double nearest = dist.at(cand_idx[c], base_idx[0]);
    for (std::size_t k = 1; k < base_idx.size(); ++k)
      nearest = std::min(nearest, dist.at(cand_idx[c], base_idx[k]));
    out.ranking.emplace_back(candidates[c], nearest);
  }
  std::sort(out.ranking.begin(), out.ranking.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return out;
}

}  // namespace spacecov
