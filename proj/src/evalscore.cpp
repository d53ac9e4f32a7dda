#include "spacecov/evalscore.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "spacecov/csv.hpp"
#include "spacecov/error.hpp"
#include "spacecov/rng.hpp"
#include "spacecov/stats.hpp"

namespace spacecov {

namespace {

// (scene -> normalized labels, one per annotator) for one language.
std::map<std::string, std::vector<std::string>> human_cells(
    const LabelTable& humans, const std::string& language) {
  std::map<std::string, std::vector<std::string>> cells;
  for (const LabelEntry& e : humans.entries())
    if (e.language == language) cells[e.scene_id].push_back(e.normalized_label);
  if (cells.empty()) fail("no human labels for language '", language, "'");
  return cells;
}

const std::vector<std::string>& cell_or_fail(
    const std::map<std::string, std::vector<std::string>>& cells,
    const std::string& scene_id, const std::string& language) {
  auto it = cells.find(scene_id);
  if (it == cells.end())
    fail("scene '", scene_id, "' has no human labels for language '", language,
         "'");
  return it->second;
}

}  // namespace

std::vector<int> binary_score(const LabelMatrix& model, const LabelTable& humans,
                              const std::string& language) {
  auto cells = human_cells(humans, language);
  std::size_t l = model.language_index(language);
  std::vector<int> scores;
  scores.reserve(model.scenes().size());
  for (std::size_t s = 0; s < model.scenes().size(); ++s) {
    const auto& labels = cell_or_fail(cells, model.scenes()[s], language);
    const std::string& m = model.label(l, s);
    bool hit = std::find(labels.begin(), labels.end(), m) != labels.end();
    scores.push_back(hit ? 1 : 0);
  }
  return scores;
}

std::vector<double> graded_score(const LabelMatrix& model,
                                 const LabelTable& humans,
                                 const std::string& language) {
  auto cells = human_cells(humans, language);
  std::size_t l = model.language_index(language);
  std::vector<double> scores;
  scores.reserve(model.scenes().size());
  for (std::size_t s = 0; s < model.scenes().size(); ++s) {
    const auto& labels = cell_or_fail(cells, model.scenes()[s], language);
    const std::string& m = model.label(l, s);
    auto hits = static_cast<double>(std::count(labels.begin(), labels.end(), m));
    scores.push_back(hits / static_cast<double>(labels.size()));
  }
  return scores;
}

double max_graded(const LabelTable& humans, const std::string& language,
                  const std::string& scene_id) {
  auto cells = human_cells(humans, language);
  return modal_label(cell_or_fail(cells, scene_id, language)).proportion;
}

EvalReport evaluate_language(const LabelMatrix& model, const LabelTable& humans,
                             const std::string& language) {
  EvalReport report;
  report.language = language;
  report.scene_ids = model.scenes();
  report.n_scenes = report.scene_ids.size();
  report.binary = binary_score(model, humans, language);
  report.graded = graded_score(model, humans, language);
  auto cells = human_cells(humans, language);
  report.max_graded.reserve(report.n_scenes);
  for (const std::string& scene : report.scene_ids)
    report.max_graded.push_back(
        modal_label(cell_or_fail(cells, scene, language)).proportion);

  double b = 0.0, g = 0.0, m = 0.0;
  for (std::size_t i = 0; i < report.n_scenes; ++i) {
    b += report.binary[i];
    g += report.graded[i];
    m += report.max_graded[i];
  }
  auto n = static_cast<double>(report.n_scenes);
  report.mean_binary = b / n;
  report.mean_graded = g / n;
  report.mean_max_graded = m / n;
  return report;
}

void EvalReport::write_csv(std::ostream& out,
                           const std::vector<std::string>& comments) const {
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << "scene_id,binary,graded,max_graded\n";
  for (std::size_t i = 0; i < scene_ids.size(); ++i)
    out << csv::format_row({scene_ids[i], std::to_string(binary[i]),
                            csv::format_double(graded[i]),
                            csv::format_double(max_graded[i])});
}

std::string EvalReport::to_json(int indent) const {
  nlohmann::json doc{{"language", language},
                     {"n_scenes", n_scenes},
                     {"mean_binary", mean_binary},
                     {"mean_graded", mean_graded},
                     {"mean_max_graded", mean_max_graded}};
  return doc.dump(indent) + "\n";
}

AlignmentSummary human_human_alignment(const LabelTable& humans,
                                       const std::string& language) {
  std::vector<std::string> annotators = humans.annotators(language);
  if (annotators.size() < 2)
    fail("human_human_alignment: need >= 2 annotators for language '", language,
         "', found ", annotators.size());

  // (annotator -> scene -> label), labels unique per (scene, annotator).
  std::map<std::string, std::map<std::string, std::string>> by_annotator;
  for (const LabelEntry& e : humans.entries())
    if (e.language == language)
      by_annotator[e.annotator_id][e.scene_id] = e.normalized_label;

  AlignmentSummary summary;
  for (const std::string& a : annotators) {
    for (const std::string& b : annotators) {
      if (a == b) continue;
      const auto& labels_a = by_annotator[a];
      const auto& labels_b = by_annotator[b];
      int agree = 0;
      int total = 0;
      for (const auto& [scene, label] : labels_a) {
        auto it = labels_b.find(scene);
        if (it == labels_b.end()) continue;
        ++total;
        if (it->second == label) ++agree;
      }
      if (total == 0)
        fail("human_human_alignment: annotators '", a, "' and '", b,
             "' share no scenes");
      summary.pair_scores.push_back(static_cast<double>(agree) /
                                    static_cast<double>(total));
    }
  }
  summary.mean = mean(summary.pair_scores);
  std::vector<double> sorted = summary.pair_scores;
  std::sort(sorted.begin(), sorted.end());
  summary.q_low = quantile_sorted(sorted, 0.025);
  summary.q_high = quantile_sorted(sorted, 0.975);
  return summary;
}

PearsonResult pearson_with_bootstrap(std::span<const double> x,
                                     std::span<const double> y, int n,
                                     std::uint64_t seed) {
  PearsonResult result;
  result.r = pearson(x, y);  // validates lengths and non-constancy
  result.n_bootstrap = n;
  if (n < 1) fail("pearson bootstrap: n must be >= 1, got ", n);

  std::vector<double> rx(x.size()), ry(y.size());
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(n));
  for (int rep = 0; rep < n; ++rep) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::size_t j = rng.below(x.size());
      rx[i] = x[j];
      ry[i] = y[j];
    }
    if (is_constant(rx) || is_constant(ry)) {
      ++result.skipped;
      continue;
    }
    scores.push_back(pearson(rx, ry));
  }
  if (scores.empty())
    fail("pearson bootstrap: every resample was constant (", result.skipped,
         " of ", n, ")");
  std::sort(scores.begin(), scores.end());
  result.ci_low = quantile_sorted(scores, 0.025);
  result.ci_high = quantile_sorted(scores, 0.975);
  return result;
}

std::vector<double> nn_distance_vector(const SymmetricMatrix& dist,
                                       std::span<const std::string> base,
                                       std::span<const std::string> targets) {
  if (base.empty()) fail("nn_distance_vector: empty base");
  std::set<std::string> base_set(base.begin(), base.end());
  for (const std::string& t : targets)
    if (base_set.count(t))
      fail("nn_distance_vector: target '", t, "' also appears in base");
  std::vector<double> out;
  out.reserve(targets.size());
  for (const std::string& t : targets) {
    std::size_t ti = dist.index_of(t);
    double nearest = dist.at(ti, dist.index_of(base[0]));
    for (std::size_t k = 1; k < base.size(); ++k)
      nearest = std::min(nearest, dist.at(ti, dist.index_of(base[k])));
    out.push_back(nearest);
  }
  return out;
}

}  // namespace spacecov
