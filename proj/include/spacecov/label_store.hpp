#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spacecov {

enum class SetTag { TRPS, ZHANG, LJSP, LCXRK, OTHER };
enum class Highlight { GOLD, YELLOW_ARROW, RED_ARROW };

std::string to_string(SetTag tag);
std::string to_string(Highlight h);
SetTag set_tag_from_string(const std::string& s);
Highlight highlight_from_string(const std::string& s);

struct SceneRecord {
  std::string scene_id;
  SetTag set_tag = SetTag::OTHER;
  int page_number = 0;
  std::string focal_object;
  std::string background_object;
  Highlight highlight = Highlight::GOLD;
};

// Ordered list of scenes, one per page. Pages must run 1..N with unique
// scene ids; the canonical 220-scene layout additionally pins highlights to
// pages 1-113 gold, 114-176 yellow arrow, 177-220 red arrow.
class SceneManifest {
public:
  SceneManifest() = default;
  explicit SceneManifest(std::vector<SceneRecord> scenes);

  static SceneManifest from_json(const std::string& json_text);
  static SceneManifest load(const std::string& path);
  std::string to_json() const;

  std::size_t size() const { return scenes_.size(); }
  const std::vector<SceneRecord>& scenes() const { return scenes_; }
  const SceneRecord& at(std::size_t index) const { return scenes_[index]; }
  bool contains(const std::string& scene_id) const;
  std::vector<std::string> scene_ids() const;
  std::vector<std::string> scene_ids(SetTag tag) const;

  // Contiguous runs of equal highlight, as (first_page, last_page, highlight).
  std::vector<std::tuple<int, int, Highlight>> highlight_runs() const;

private:
  void validate() const;
  std::vector<SceneRecord> scenes_;
};

struct LabelEntry {
  std::string scene_id;
  std::string language;
  std::string annotator_id;
  std::string raw_label;
  std::string normalized_label;
};

// NFC-normalizes, trims, collapses internal whitespace, applies Unicode
// default case folding, then re-applies NFC so the result is canonical and
// the whole operation is idempotent. Errors if nothing is left.
std::string normalize_label(const std::string& raw);

class LabelTable {
public:
  LabelTable() = default;

  // Throws on a duplicate (scene, language, annotator) triple. Derives
  // normalized_label from raw_label unless the caller pre-filled it.
  void add(LabelEntry entry);

  static LabelTable parse_csv(std::istream& in);
  static LabelTable parse_csv_string(const std::string& text);
  static LabelTable load(const std::string& path);
  void write_csv(std::ostream& out,
                 const std::vector<std::string>& comments = {}) const;

  const std::vector<LabelEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::string> languages() const;  // sorted, unique
  std::vector<std::string> scene_ids() const;  // sorted, unique
  std::vector<std::string> annotators(const std::string& language) const;
  LabelTable restrict_language(const std::string& language) const;

  // Normalized labels for one cell, in insertion order.
  std::vector<std::string> cell(const std::string& scene_id,
                                const std::string& language) const;

  bool operator==(const LabelTable& other) const;

private:
  std::vector<LabelEntry> entries_;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t>
      by_triple_;
};

struct ModalResult {
  std::string label;
  double proportion = 0.0;
  bool tie = false;
};

// Most frequent label and its relative frequency; ties resolved to the
// codepoint-lexicographically smallest label and flagged.
ModalResult modal_label(const std::vector<std::string>& cell);

enum class CellProvenance { SINGLE_ANNOTATOR, MODAL, LLM };
enum class BuildPolicy { MODAL, REQUIRE_SINGLE };

std::string to_string(CellProvenance p);

// One canonical label per (language, scene). Languages are sorted
// lexicographically; scenes follow manifest page order.
class LabelMatrix {
public:
  LabelMatrix(std::vector<std::string> languages, std::vector<std::string> scenes,
              std::vector<std::string> cells, CellProvenance provenance);

  const std::vector<std::string>& languages() const { return languages_; }
  const std::vector<std::string>& scenes() const { return scenes_; }
  CellProvenance provenance() const { return provenance_; }

  const std::string& label(std::size_t language_index,
                           std::size_t scene_index) const;
  std::size_t language_index(const std::string& language) const;
  std::size_t scene_index(const std::string& scene_id) const;
  bool has_language(const std::string& language) const;
  bool has_scene(const std::string& scene_id) const;

  // Canonical serialization used for digests: a label CSV with one synthetic
  // annotator per cell, rows ordered by (language, scene).
  std::string canonical_bytes() const;

private:
  std::vector<std::string> languages_;
  std::vector<std::string> scenes_;
  std::vector<std::string> cells_;  // row-major: languages x scenes
  CellProvenance provenance_;
  std::map<std::string, std::size_t> language_index_;
  std::map<std::string, std::size_t> scene_index_;
};

// Collapses a table onto the (languages-in-table) x (scenes-in-manifest)
// grid. MODAL applies modal_label per cell; REQUIRE_SINGLE errors on any
// cell with more than one annotator and tags cells with single_provenance.
LabelMatrix build_matrix(const LabelTable& table, const SceneManifest& manifest,
                         BuildPolicy policy,
                         CellProvenance single_provenance =
                             CellProvenance::SINGLE_ANNOTATOR);

// Cross-checks scene ids between a manifest and a table. Returns
// human-readable diagnostics; empty means consistent.
std::vector<std::string> validate_manifest(const SceneManifest& manifest,
                                           const LabelTable& table);

}  // namespace spacecov
