#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spacecov/label_store.hpp"
#include "spacecov/simdist.hpp"

namespace spacecov {

struct EvalReport {
  std::string language;
  std::vector<std::string> scene_ids;
  std::vector<int> binary;        // 0/1 per scene
  std::vector<double> graded;     // [0,1] per scene
  std::vector<double> max_graded; // modal proportion per scene
  double mean_binary = 0.0;
  double mean_graded = 0.0;
  double mean_max_graded = 0.0;
  std::size_t n_scenes = 0;

  void write_csv(std::ostream& out,
                 const std::vector<std::string>& comments = {}) const;
  std::string to_json(int indent = 2) const;
};

// 1 iff the model's label appears among any human annotator's labels for the
// scene. Scenes evaluated are those of the model matrix; each must be
// covered by the human table.
std::vector<int> binary_score(const LabelMatrix& model,
                              const LabelTable& humans,
                              const std::string& language);

// Proportion of human annotators whose label equals the model's.
std::vector<double> graded_score(const LabelMatrix& model,
                                 const LabelTable& humans,
                                 const std::string& language);

// Modal-label proportion: the ceiling on any model's graded score.
double max_graded(const LabelTable& humans, const std::string& language,
                  const std::string& scene_id);

// Per-scene scores plus the three means, bundled.
EvalReport evaluate_language(const LabelMatrix& model, const LabelTable& humans,
                             const std::string& language);

struct AlignmentSummary {
  double mean = 0.0;
  double q_low = 0.0;   // 2.5% quantile of the per-pair distribution
  double q_high = 0.0;  // 97.5% quantile
  std::vector<double> pair_scores;  // all ordered pairs, enumeration order
};

// Every ordered annotator pair (a,b), a != b: a's labels scored binary
// against {b} over the scenes both labeled, averaged per pair.
AlignmentSummary human_human_alignment(const LabelTable& humans,
                                       const std::string& language);

struct PearsonResult {
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_bootstrap = 0;
  int skipped = 0;  // resamples discarded because x or y came out constant
};

// Percentile bootstrap over joint (x_i, y_i) index resamples.
PearsonResult pearson_with_bootstrap(std::span<const double> x,
                                     std::span<const double> y, int n,
                                     std::uint64_t seed);

// Per target, the distance to its nearest base language, in target order.
std::vector<double> nn_distance_vector(const SymmetricMatrix& dist,
                                       std::span<const std::string> base,
                                       std::span<const std::string> targets);

}  // namespace spacecov
