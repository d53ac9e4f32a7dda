#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "spacecov/error.hpp"
#include "spacecov/evalscore.hpp"
#include "spacecov/rng.hpp"
#include "support/fixtures.hpp"

using namespace spacecov;

namespace {

LabelTable table_from(const std::vector<std::array<const char*, 4>>& rows) {
  LabelTable t;
  for (const auto& r : rows) {
    LabelEntry e;
    e.scene_id = r[0];
    e.language = r[1];
    e.annotator_id = r[2];
    e.raw_label = r[3];
    t.add(e);
  }
  return t;
}

// a1: on,in,on,under  a2: on,on,above,under  a3: in,in,on,under
LabelTable three_annotator_fixture() {
  return table_from({{"s1", "en", "a1", "on"},
                     {"s2", "en", "a1", "in"},
                     {"s3", "en", "a1", "on"},
                     {"s4", "en", "a1", "under"},
                     {"s1", "en", "a2", "on"},
                     {"s2", "en", "a2", "on"},
                     {"s3", "en", "a2", "above"},
                     {"s4", "en", "a2", "under"},
                     {"s1", "en", "a3", "in"},
                     {"s2", "en", "a3", "in"},
                     {"s3", "en", "a3", "on"},
                     {"s4", "en", "a3", "under"}});
}

LabelMatrix model_row(const std::vector<std::string>& scenes,
                      const std::vector<std::string>& labels) {
  return LabelMatrix({"en"}, scenes, labels, CellProvenance::LLM);
}

}  // namespace

TEST_CASE("binary score: 1 iff any human produced the model's label") {
  LabelTable humans = table_from({{"s1", "en", "a1", "on"},
                                  {"s1", "en", "a2", "above"},
                                  {"s2", "en", "a1", "in"},
                                  {"s2", "en", "a2", "in"}});
  LabelMatrix hit = model_row({"s1", "s2"}, {"on", "in"});
  CHECK(binary_score(hit, humans, "en") == std::vector<int>{1, 1});
  LabelMatrix miss = model_row({"s1", "s2"}, {"at", "in"});
  CHECK(binary_score(miss, humans, "en") == std::vector<int>{0, 1});
}

TEST_CASE("graded score is the agreeing-annotator proportion") {
  LabelTable humans;
  for (int i = 0; i < 13; ++i) {
    LabelEntry e;
    e.scene_id = "s1";
    e.language = "en";
    e.annotator_id = "m" + std::to_string(i);
    e.raw_label = i < 9 ? "on" : "above";
    humans.add(e);
  }
  LabelMatrix on = model_row({"s1"}, {"on"});
  CHECK(graded_score(on, humans, "en")[0] ==
        doctest::Approx(9.0 / 13.0).epsilon(1e-15));
  LabelMatrix absent = model_row({"s1"}, {"at"});
  CHECK(graded_score(absent, humans, "en")[0] == 0.0);
  CHECK(max_graded(humans, "en", "s1") ==
        doctest::Approx(9.0 / 13.0).epsilon(1e-15));
}

TEST_CASE("unanimous humans give max_graded 1 and errors on empty cells") {
  LabelTable humans = table_from({{"s1", "en", "a1", "on"},
                                  {"s1", "en", "a2", "on"}});
  CHECK(max_graded(humans, "en", "s1") == 1.0);
  CHECK_THROWS_AS(max_graded(humans, "en", "s9"), Error);
}

TEST_CASE("scoring a scene without human labels is an error") {
  LabelTable humans = table_from({{"s1", "en", "a1", "on"}});
  LabelMatrix model = model_row({"s1", "s2"}, {"on", "in"});
  CHECK_THROWS_AS(binary_score(model, humans, "en"), Error);
}

TEST_CASE("evaluate_language bundles scores and means") {
  LabelTable humans = three_annotator_fixture();
  LabelMatrix model = model_row({"s1", "s2", "s3", "s4"},
                                {"on", "in", "above", "below"});
  EvalReport report = evaluate_language(model, humans, "en");
  CHECK(report.language == "en");
  CHECK(report.n_scenes == 4);
  CHECK(report.binary == std::vector<int>{1, 1, 1, 0});
  CHECK(report.graded[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(report.graded[3] == 0.0);
  CHECK(report.mean_binary == doctest::Approx(0.75).epsilon(1e-15));
  // max_graded per scene: 2/3, 2/3, 2/3, 1
  CHECK(report.mean_max_graded == doctest::Approx((2.0 / 3.0 * 3 + 1.0) / 4).epsilon(1e-14));
  CHECK(report.mean_graded <= report.mean_max_graded);

  std::ostringstream out;
  report.write_csv(out, {"tool: spacecov evaluate"});
  std::string text = out.str();
  CHECK(text.find("scene_id,binary,graded,max_graded") != std::string::npos);
  CHECK(text.find("s4,0,0,1") != std::string::npos);
}

TEST_CASE("binary and graded satisfy their coupling identities") {
  auto manifest = fixtures::small_manifest(12);
  auto humans = fixtures::synthetic_labels(manifest, {"en"}, 5, 77);
  auto model_table = fixtures::synthetic_labels(manifest, {"en"}, 1, 78);
  LabelMatrix model =
      build_matrix(model_table, manifest, BuildPolicy::MODAL, CellProvenance::LLM);
  EvalReport report = evaluate_language(model, humans, "en");
  for (std::size_t i = 0; i < report.n_scenes; ++i) {
    CHECK((report.binary[i] == 1) == (report.graded[i] > 0.0));
    CHECK(report.graded[i] <= report.max_graded[i] + 1e-15);
  }
}

TEST_CASE("human-human alignment on the 3-annotator hand fixture") {
  LabelTable humans = three_annotator_fixture();
  AlignmentSummary summary = human_human_alignment(humans, "en");
  // ordered pair scores: (a1,a2)=.5 (a2,a1)=.5 (a1,a3)=.75 (a3,a1)=.75
  //                      (a2,a3)=.25 (a3,a2)=.25
  REQUIRE(summary.pair_scores.size() == 6);
  CHECK(summary.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(summary.q_low == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(summary.q_high == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("alignment extremes: identical twins and total disagreement") {
  LabelTable twins = table_from({{"s1", "en", "a1", "on"},
                                 {"s2", "en", "a1", "in"},
                                 {"s1", "en", "a2", "on"},
                                 {"s2", "en", "a2", "in"}});
  CHECK(human_human_alignment(twins, "en").mean == 1.0);

  LabelTable feud = table_from({{"s1", "en", "a1", "on"},
                                {"s2", "en", "a1", "in"},
                                {"s1", "en", "a2", "under"},
                                {"s2", "en", "a2", "above"}});
  CHECK(human_human_alignment(feud, "en").mean == 0.0);

  LabelTable lonely = table_from({{"s1", "en", "a1", "on"}});
  CHECK_THROWS_AS(human_human_alignment(lonely, "en"), Error);
}

TEST_CASE("alignment ignores annotator names") {
  LabelTable humans = three_annotator_fixture();
  LabelTable renamed;
  for (LabelEntry e : humans.entries()) {
    e.normalized_label.clear();
    e.annotator_id = "annotator-" + e.annotator_id;
    renamed.add(e);
  }
  AlignmentSummary a = human_human_alignment(humans, "en");
  AlignmentSummary b = human_human_alignment(renamed, "en");
  CHECK(a.mean == b.mean);
  CHECK(a.q_low == b.q_low);
  CHECK(a.q_high == b.q_high);
}

TEST_CASE("pearson_with_bootstrap: perfect correlation and determinism") {
  std::vector<double> x{0.1, 0.5, 0.9, 1.4, 2.2, 3.1};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v + 1.0);
  PearsonResult r = pearson_with_bootstrap(x, y, 500, 11);
  CHECK(r.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ci_low == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.ci_high == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<double> y2{0.3, 0.2, 1.1, 0.9, 2.4, 2.0};
  PearsonResult a = pearson_with_bootstrap(x, y2, 400, 5);
  PearsonResult b = pearson_with_bootstrap(x, y2, 400, 5);
  CHECK(a.r == b.r);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.ci_low <= a.r);
  CHECK(a.r <= a.ci_high);

  std::vector<double> constant(6, 2.0);
  CHECK_THROWS_AS(pearson_with_bootstrap(x, constant, 100, 1), Error);
}

TEST_CASE("anti-correlated input gives r = -1") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{8.0, 6.0, 4.0, 2.0};
  PearsonResult r = pearson_with_bootstrap(x, y, 200, 2);
  CHECK(r.r == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("nn_distance_vector takes the minimum over base languages") {
  SymmetricMatrix dist({"de", "en", "fr", "ko"}, MatrixKind::LANG_DIST);
  dist.set(0, 1, 0.3);
  dist.set(0, 2, 0.2);
  dist.set(0, 3, 0.9);
  dist.set(1, 2, 0.4);
  dist.set(1, 3, 0.6);
  dist.set(2, 3, 0.8);
  std::vector<std::string> base{"en", "fr"};
  std::vector<std::string> targets{"de", "ko"};
  auto v = nn_distance_vector(dist, base, targets);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.2).epsilon(1e-15));  // de: min(0.3, 0.2)
  CHECK(v[1] == doctest::Approx(0.6).epsilon(1e-15));  // ko: min(0.6, 0.8)

  std::vector<std::string> single{"en"};
  auto column = nn_distance_vector(dist, single, targets);
  CHECK(column[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(column[1] == doctest::Approx(0.6).epsilon(1e-15));

  std::vector<std::string> overlap{"en", "de"};
  CHECK_THROWS_AS(nn_distance_vector(dist, base, overlap), Error);
}
