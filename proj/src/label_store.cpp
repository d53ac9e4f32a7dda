#include "spacecov/label_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "spacecov/csv.hpp"
#include "spacecov/error.hpp"
#include "spacecov/unicode.hpp"

namespace spacecov {

std::string to_string(SetTag tag) {
  switch (tag) {
    case SetTag::TRPS: return "TRPS";
    case SetTag::ZHANG: return "ZHANG";
    case SetTag::LJSP: return "LJSP";
    case SetTag::LCXRK: return "LCXRK";
    case SetTag::OTHER: return "OTHER";
  }
  fail("unreachable set tag");
}

std::string to_string(Highlight h) {
  switch (h) {
    case Highlight::GOLD: return "GOLD";
    case Highlight::YELLOW_ARROW: return "YELLOW_ARROW";
    case Highlight::RED_ARROW: return "RED_ARROW";
  }
  fail("unreachable highlight");
}

std::string to_string(CellProvenance p) {
  switch (p) {
    case CellProvenance::SINGLE_ANNOTATOR: return "SINGLE_ANNOTATOR";
    case CellProvenance::MODAL: return "MODAL";
    case CellProvenance::LLM: return "LLM";
  }
  fail("unreachable provenance");
}

SetTag set_tag_from_string(const std::string& s) {
  if (s == "TRPS") return SetTag::TRPS;
  if (s == "ZHANG") return SetTag::ZHANG;
  if (s == "LJSP") return SetTag::LJSP;
  if (s == "LCXRK") return SetTag::LCXRK;
  if (s == "OTHER") return SetTag::OTHER;
  fail("unknown set tag: '", s, "'");
}

Highlight highlight_from_string(const std::string& s) {
  if (s == "GOLD") return Highlight::GOLD;
  if (s == "YELLOW_ARROW") return Highlight::YELLOW_ARROW;
  if (s == "RED_ARROW") return Highlight::RED_ARROW;
  fail("unknown highlight: '", s, "'");
}

SceneManifest::SceneManifest(std::vector<SceneRecord> scenes)
    : scenes_(std::move(scenes)) {
  validate();
}

void SceneManifest::validate() const {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < scenes_.size(); ++i) {
    const SceneRecord& s = scenes_[i];
    if (s.scene_id.empty()) fail("manifest entry ", i, ": empty scene_id");
    if (!ids.insert(s.scene_id).second)
      fail("manifest: duplicate scene_id '", s.scene_id, "'");
    if (s.page_number != static_cast<int>(i) + 1)
      fail("manifest: expected page ", i + 1, " at position ", i, ", found page ",
           s.page_number, " (pages must run 1..N in order)");
  }
  if (scenes_.size() == 220) {
    for (const SceneRecord& s : scenes_) {
      Highlight expected = s.page_number <= 113 ? Highlight::GOLD
                           : s.page_number <= 176 ? Highlight::YELLOW_ARROW
                                                  : Highlight::RED_ARROW;
      if (s.highlight != expected)
        fail("manifest: page ", s.page_number, " has highlight ",
             to_string(s.highlight), " but the 220-scene layout requires ",
             to_string(expected));
    }
  }
}

SceneManifest SceneManifest::from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail("manifest: invalid JSON: ", e.what());
  }
  if (!doc.is_array()) fail("manifest: top-level value must be an array");
  std::vector<SceneRecord> scenes;
  scenes.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    if (!item.is_object()) fail("manifest entry ", i, ": not an object");
    SceneRecord rec;
    try {
      rec.scene_id = item.at("scene_id").get<std::string>();
      rec.set_tag = set_tag_from_string(item.at("set_tag").get<std::string>());
      rec.page_number = item.at("page_number").get<int>();
      rec.focal_object = item.at("focal_object").get<std::string>();
      rec.background_object = item.at("background_object").get<std::string>();
      rec.highlight =
          highlight_from_string(item.at("highlight").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail("manifest entry ", i, ": ", e.what());
    }
    scenes.push_back(std::move(rec));
  }
  return SceneManifest(std::move(scenes));
}

SceneManifest SceneManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open manifest: ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string SceneManifest::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const SceneRecord& s : scenes_) {
    doc.push_back({{"scene_id", s.scene_id},
                   {"set_tag", to_string(s.set_tag)},
                   {"page_number", s.page_number},
                   {"focal_object", s.focal_object},
                   {"background_object", s.background_object},
                   {"highlight", to_string(s.highlight)}});
  }
  return doc.dump(2) + "\n";
}

bool SceneManifest::contains(const std::string& scene_id) const {
  return std::any_of(scenes_.begin(), scenes_.end(),
                     [&](const SceneRecord& s) { return s.scene_id == scene_id; });
}

std::vector<std::string> SceneManifest::scene_ids() const {
  std::vector<std::string> ids;
  ids.reserve(scenes_.size());
  for (const SceneRecord& s : scenes_) ids.push_back(s.scene_id);
  return ids;
}

std::vector<std::string> SceneManifest::scene_ids(SetTag tag) const {
  std::vector<std::string> ids;
  for (const SceneRecord& s : scenes_)
    if (s.set_tag == tag) ids.push_back(s.scene_id);
  return ids;
}

std::vector<std::tuple<int, int, Highlight>> SceneManifest::highlight_runs()
    const {
  std::vector<std::tuple<int, int, Highlight>> runs;
  for (const SceneRecord& s : scenes_) {
    if (!runs.empty() && std::get<2>(runs.back()) == s.highlight)
      std::get<1>(runs.back()) = s.page_number;
    else
      runs.emplace_back(s.page_number, s.page_number, s.highlight);
  }
  return runs;
}

std::string normalize_label(const std::string& raw) {
  std::size_t bad = 0;
  if (!uni::valid_utf8(raw, &bad))
    fail("label: invalid UTF-8 at byte offset ", bad);
  std::string s = uni::nfc(raw);
  s = uni::collapse_whitespace(s);
  if (s.empty()) fail("label empty after trimming whitespace");
  s = uni::casefold(s);
  return uni::nfc(s);
}

void LabelTable::add(LabelEntry entry) {
  auto key = std::make_tuple(entry.scene_id, entry.language, entry.annotator_id);
  if (by_triple_.count(key))
    fail("duplicate (scene, language, annotator) triple: (", entry.scene_id,
         ", ", entry.language, ", ", entry.annotator_id, ")");
  if (entry.normalized_label.empty()) {
    try {
      entry.normalized_label = normalize_label(entry.raw_label);
    } catch (const Error& e) {
      fail("entry (", entry.scene_id, ", ", entry.language, ", ",
           entry.annotator_id, "): ", e.what());
    }
  }
  by_triple_.emplace(std::move(key), entries_.size());
  entries_.push_back(std::move(entry));
}

namespace {
const char* kLabelHeader[] = {"scene_id", "language", "annotator_id", "label"};
}

LabelTable LabelTable::parse_csv_string(const std::string& text) {
  csv::Document doc = csv::read_string(text);
  if (doc.header.fields !=
      std::vector<std::string>(std::begin(kLabelHeader), std::end(kLabelHeader)))
    fail("label CSV line ", doc.header.line,
         ": header must be exactly 'scene_id,language,annotator_id,label'");
  LabelTable table;
  for (const csv::Record& rec : doc.records) {
    if (rec.fields.size() != 4)
      fail("label CSV line ", rec.line, ": expected 4 fields, found ",
           rec.fields.size());
    LabelEntry entry;
    entry.scene_id = rec.fields[0];
    entry.language = rec.fields[1];
    entry.annotator_id = rec.fields[2];
    entry.raw_label = rec.fields[3];
    if (entry.scene_id.empty())
      fail("label CSV line ", rec.line, ": empty scene_id");
    if (entry.language.empty())
      fail("label CSV line ", rec.line, ": empty language");
    if (entry.annotator_id.empty())
      fail("label CSV line ", rec.line, ": empty annotator_id");
    try {
      entry.normalized_label = normalize_label(entry.raw_label);
    } catch (const Error& e) {
      fail("label CSV line ", rec.line, ": ", e.what());
    }
    try {
      table.add(std::move(entry));
    } catch (const Error& e) {
      fail("label CSV line ", rec.line, ": ", e.what());
    }
  }
  return table;
}

LabelTable LabelTable::parse_csv(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_string(buf.str());
}

LabelTable LabelTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open label CSV: ", path);
  return parse_csv(in);
}

void LabelTable::write_csv(std::ostream& out,
                           const std::vector<std::string>& comments) const {
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << "scene_id,language,annotator_id,label\n";
  for (const LabelEntry& e : entries_)
    out << csv::format_row({e.scene_id, e.language, e.annotator_id, e.raw_label});
}

std::vector<std::string> LabelTable::languages() const {
  std::set<std::string> langs;
  for (const LabelEntry& e : entries_) langs.insert(e.language);
  return {langs.begin(), langs.end()};
}

std::vector<std::string> LabelTable::scene_ids() const {
  std::set<std::string> ids;
  for (const LabelEntry& e : entries_) ids.insert(e.scene_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> LabelTable::annotators(const std::string& language) const {
  std::set<std::string> ids;
  for (const LabelEntry& e : entries_)
    if (e.language == language) ids.insert(e.annotator_id);
  return {ids.begin(), ids.end()};
}

LabelTable LabelTable::restrict_language(const std::string& language) const {
  LabelTable out;
  for (const LabelEntry& e : entries_)
    if (e.language == language) out.add(e);
  return out;
}

std::vector<std::string> LabelTable::cell(const std::string& scene_id,
                                          const std::string& language) const {
  std::vector<std::string> labels;
  for (const LabelEntry& e : entries_)
    if (e.scene_id == scene_id && e.language == language)
      labels.push_back(e.normalized_label);
  return labels;
}

bool LabelTable::operator==(const LabelTable& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const LabelEntry& a = entries_[i];
    const LabelEntry& b = other.entries_[i];
    if (a.scene_id != b.scene_id || a.language != b.language ||
        a.annotator_id != b.annotator_id || a.raw_label != b.raw_label ||
        a.normalized_label != b.normalized_label)
      return false;
  }
  return true;
}

ModalResult modal_label(const std::vector<std::string>& cell) {
  if (cell.empty()) fail("modal_label: empty cell");
  std::map<std::string, int> counts;
  for (const std::string& label : cell) ++counts[label];
  ModalResult result;
  int best = 0;
  for (const auto& [label, count] : counts) {  // lexicographic order
    if (count > best) {
      best = count;
      result.label = label;
    }
  }
  int n_at_best = 0;
  for (const auto& [label, count] : counts)
    if (count == best) ++n_at_best;
  result.tie = n_at_best > 1;
  result.proportion = static_cast<double>(best) / static_cast<double>(cell.size());
  return result;
}

LabelMatrix::LabelMatrix(std::vector<std::string> languages,
                         std::vector<std::string> scenes,
                         std::vector<std::string> cells,
                         CellProvenance provenance)
    : languages_(std::move(languages)),
      scenes_(std::move(scenes)),
      cells_(std::move(cells)),
      provenance_(provenance) {
  if (cells_.size() != languages_.size() * scenes_.size())
    fail("label matrix: ", cells_.size(), " cells for ", languages_.size(),
         " languages x ", scenes_.size(), " scenes");
  for (const std::string& cell : cells_)
    if (cell.empty()) fail("label matrix: empty canonical label");
  for (std::size_t i = 0; i < languages_.size(); ++i)
    if (!language_index_.emplace(languages_[i], i).second)
      fail("label matrix: duplicate language '", languages_[i], "'");
  for (std::size_t i = 0; i < scenes_.size(); ++i)
    if (!scene_index_.emplace(scenes_[i], i).second)
      fail("label matrix: duplicate scene '", scenes_[i], "'");
}

const std::string& LabelMatrix::label(std::size_t language_index,
                                      std::size_t scene_index) const {
  return cells_[language_index * scenes_.size() + scene_index];
}

std::size_t LabelMatrix::language_index(const std::string& language) const {
  auto it = language_index_.find(language);
  if (it == language_index_.end()) fail("unknown language: '", language, "'");
  return it->second;
}

std::size_t LabelMatrix::scene_index(const std::string& scene_id) const {
  auto it = scene_index_.find(scene_id);
  if (it == scene_index_.end()) fail("unknown scene: '", scene_id, "'");
  return it->second;
}

bool LabelMatrix::has_language(const std::string& language) const {
  return language_index_.count(language) > 0;
}

bool LabelMatrix::has_scene(const std::string& scene_id) const {
  return scene_index_.count(scene_id) > 0;
}

std::string LabelMatrix::canonical_bytes() const {
  std::ostringstream out;
  out << "scene_id,language,annotator_id,label\n";
  for (std::size_t l = 0; l < languages_.size(); ++l)
    for (std::size_t s = 0; s < scenes_.size(); ++s)
      out << csv::format_row(
          {scenes_[s], languages_[l], to_string(provenance_), label(l, s)});
  return out.str();
}

LabelMatrix build_matrix(const LabelTable& table, const SceneManifest& manifest,
                         BuildPolicy policy, CellProvenance single_provenance) {
  std::vector<std::string> languages = table.languages();
  std::vector<std::string> scenes = manifest.scene_ids();
  if (languages.empty()) fail("build_matrix: table has no entries");

  // Group normalized labels per (language, scene) in one pass.
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> cells;
  for (const LabelEntry& e : table.entries())
    cells[{e.language, e.scene_id}].push_back(e.normalized_label);

  std::vector<std::string> missing;
  std::vector<std::string> multi;
  std::vector<std::string> canonical;
  canonical.reserve(languages.size() * scenes.size());
  for (const std::string& lang : languages) {
    for (const std::string& scene : scenes) {
      auto it = cells.find({lang, scene});
      if (it == cells.end() || it->second.empty()) {
        missing.push_back("(" + lang + ", " + scene + ")");
        canonical.emplace_back();
        continue;
      }
      const std::vector<std::string>& labels = it->second;
      if (policy == BuildPolicy::REQUIRE_SINGLE && labels.size() > 1) {
        multi.push_back("(" + lang + ", " + scene + ")");
        canonical.emplace_back();
        continue;
      }
      canonical.push_back(policy == BuildPolicy::MODAL ? modal_label(labels).label
                                                       : labels.front());
    }
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "build_matrix: " << missing.size() << " missing cell(s):";
    for (const std::string& m : missing) os << " " << m;
    throw Error(os.str());
  }
  if (!multi.empty()) {
    std::ostringstream os;
    os << "build_matrix: REQUIRE_SINGLE but " << multi.size()
       << " cell(s) have multiple annotators:";
    for (const std::string& m : multi) os << " " << m;
    throw Error(os.str());
  }
  CellProvenance provenance = policy == BuildPolicy::MODAL
                                  ? CellProvenance::MODAL
                                  : single_provenance;
  return LabelMatrix(std::move(languages), std::move(scenes),
                     std::move(canonical), provenance);
}

std::vector<std::string> validate_manifest(const SceneManifest& manifest,
                                           const LabelTable& table) {
  std::vector<std::string> diagnostics;
  std::set<std::string> manifest_ids;
  for (const SceneRecord& s : manifest.scenes()) manifest_ids.insert(s.scene_id);
  std::set<std::string> table_ids;
  for (const LabelEntry& e : table.entries()) table_ids.insert(e.scene_id);

  for (const std::string& id : table_ids)
    if (!manifest_ids.count(id))
      diagnostics.push_back("table references scene '" + id +
                            "' absent from manifest");
  for (const std::string& id : manifest_ids)
    if (!table_ids.count(id))
      diagnostics.push_back("unlabeled scene: manifest scene '" + id +
                            "' never appears in table");
  return diagnostics;
}

}  // namespace spacecov
