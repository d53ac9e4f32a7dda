#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spacecov/coverage.hpp"
#include "spacecov/csv.hpp"
#include "spacecov/digest.hpp"
#include "spacecov/elicit.hpp"
#include "spacecov/embed.hpp"
#include "spacecov/error.hpp"
#include "spacecov/evalscore.hpp"
#include "spacecov/label_store.hpp"
#include "spacecov/simdist.hpp"
#include "spacecov/stats.hpp"

namespace {

using nlohmann::json;
using namespace spacecov;

// Resolved command context: what ran, with which settings, on which inputs.
// Every output file embeds this so results stay traceable to their inputs.
struct Meta {
  std::string command;
  json config = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)

  void add_input(const std::string& path) {
    inputs.emplace_back(path, file_digest(path));
  }

  std::vector<std::string> comments() const {
    std::vector<std::string> out;
    out.push_back("tool: spacecov " + command);
    out.push_back("config: " + config.dump());
    for (const auto& [path, digest] : inputs) {
      out.push_back("input: " + path + " sha256=" + digest);
    }
    return out;
  }

  void attach(json& doc) const {
    doc["command"] = command;
    doc["config"] = config;
    json in = json::object();
    for (const auto& [path, digest] : inputs) in[path] = digest;
    doc["inputs"] = in;
  }
};

void with_output(const std::string& out_path,
                 const std::function<void(std::ostream&)>& fn) {
  if (out_path.empty() || out_path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail("cannot open ", out_path, " for writing");
  fn(out);
  out.flush();
  if (!out) fail("write failed for ", out_path);
}

// One id per line; blank lines and '#' comments skipped.
std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

std::vector<std::string> complement(const std::vector<std::string>& all,
                                    const std::vector<std::string>& base) {
  std::set<std::string> taken(base.begin(), base.end());
  std::vector<std::string> rest;
  for (const std::string& id : all) {
    if (!taken.count(id)) rest.push_back(id);
  }
  return rest;
}

BuildPolicy parse_policy(const std::string& name) {
  if (name == "modal") return BuildPolicy::MODAL;
  if (name == "require-single") return BuildPolicy::REQUIRE_SINGLE;
  fail("unknown policy \"", name, "\" (expected modal or require-single)");
}

struct TableInputs {
  std::string labels_path;
  std::string manifest_path;
  std::string policy = "modal";
};

void add_table_flags(CLI::App* cmd, TableInputs& t) {
  cmd->add_option("--labels", t.labels_path, "label CSV")->required();
  cmd->add_option("--manifest", t.manifest_path, "scene manifest JSON")
      ->required();
  cmd->add_option("--policy", t.policy,
                  "cell collapse policy: modal or require-single")
      ->default_val("modal");
}

struct LoadedTable {
  SceneManifest manifest;
  LabelTable table;
  LabelMatrix matrix;
};

LoadedTable load_table(const TableInputs& t, Meta& meta,
                       CellProvenance single_provenance =
                           CellProvenance::SINGLE_ANNOTATOR) {
  meta.config["labels"] = t.labels_path;
  meta.config["manifest"] = t.manifest_path;
  meta.config["policy"] = t.policy;
  meta.add_input(t.labels_path);
  meta.add_input(t.manifest_path);
  SceneManifest manifest = SceneManifest::load(t.manifest_path);
  LabelTable table = LabelTable::load(t.labels_path);
  auto diagnostics = validate_manifest(manifest, table);
  if (!diagnostics.empty()) {
    std::ostringstream msg;
    msg << "labels and manifest disagree:";
    for (const std::string& d : diagnostics) msg << "\n  " << d;
    fail(msg.str());
  }
  LabelMatrix matrix =
      build_matrix(table, manifest, parse_policy(t.policy), single_provenance);
  return {std::move(manifest), std::move(table), std::move(matrix)};
}

void write_ranking_csv(std::ostream& out, const RankedCandidates& ranked,
                       const Meta& meta) {
  std::vector<std::string> comments = meta.comments();
  comments.push_back("mode: " + to_string(ranked.mode));
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << csv::format_row({"rank", "id", "score"});
  for (std::size_t i = 0; i < ranked.ranking.size(); ++i) {
    out << csv::format_row({std::to_string(i + 1), ranked.ranking[i].first,
                            csv::format_double(ranked.ranking[i].second)});
  }
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
  TableInputs table;
  std::string out;
};

void cmd_ingest(const IngestOpts& o) {
  Meta meta;
  meta.command = "ingest";
  LoadedTable loaded = load_table(o.table, meta);
  with_output(o.out, [&](std::ostream& out) {
    loaded.table.write_csv(out, meta.comments());
  });
  std::cerr << "scenes: " << loaded.manifest.size()
            << ", languages: " << loaded.table.languages().size()
            << ", entries: " << loaded.table.size() << "\n";
}

// ---------------------------------------------------------------------------
// similarity

struct SimilarityOpts {
  TableInputs table;
  bool dissim = false;
  std::string out;
};

void cmd_similarity(const SimilarityOpts& o) {
  Meta meta;
  meta.command = "similarity";
  meta.config["dissim"] = o.dissim;
  LoadedTable loaded = load_table(o.table, meta);
  SymmetricMatrix sim = scene_similarity_matrix(loaded.matrix);
  SymmetricMatrix result = o.dissim ? to_dissimilarity(sim) : std::move(sim);
  std::vector<std::string> comments = meta.comments();
  comments.push_back("matrix-digest: sha256=" +
                     sha256_hex(loaded.matrix.canonical_bytes()));
  with_output(o.out, [&](std::ostream& out) { result.write_csv(out, comments); });
}

// ---------------------------------------------------------------------------
// coverage

struct CoverageOpts {
  std::string sim_path;
  std::string universe = "all";
  std::string subset_path;
  int bootstrap = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_coverage(const CoverageOpts& o) {
  Meta meta;
  meta.command = "coverage";
  meta.config["sim"] = o.sim_path;
  meta.config["universe"] = o.universe;
  meta.config["subset"] = o.subset_path;
  meta.config["bootstrap"] = o.bootstrap;
  meta.config["level"] = o.level;
  meta.config["seed"] = o.seed;
  meta.add_input(o.sim_path);
  meta.add_input(o.subset_path);

  SymmetricMatrix sim = SymmetricMatrix::load(o.sim_path);
  if (sim.kind() != MatrixKind::SCENE_SIM && sim.kind() != MatrixKind::LANG_SIM) {
    fail("coverage needs a similarity matrix, got ", to_string(sim.kind()));
  }
  std::vector<std::string> universe;
  if (o.universe == "all") {
    universe = sim.ids();
  } else {
    meta.add_input(o.universe);
    universe = read_id_list(o.universe);
  }
  std::vector<std::string> subset = read_id_list(o.subset_path);

  CoverageReport report;
  report.universe = universe;
  report.subset = subset;
  report.score = coverage(sim, universe, subset);
  report.n_bootstrap = o.bootstrap;
  report.seed = o.seed;
  report.sim_matrix_digest = file_digest(o.sim_path);
  if (o.bootstrap > 0) {
    auto [lo, hi] =
        bootstrap_coverage_ci(sim, subset, universe, o.bootstrap, o.level, o.seed);
    report.ci_low = lo;
    report.ci_high = hi;
  }
  json doc = json::parse(report.to_json());
  meta.attach(doc);
  with_output(o.out, [&](std::ostream& out) { out << doc.dump(2) << "\n"; });
}

// ---------------------------------------------------------------------------
// rank-scenes

struct RankScenesOpts {
  std::string sim_path;
  std::string base_path;
  std::string candidates = "all-others";
  std::string mode = "greedy";
  std::size_t k = 0;
  std::string out;
};

void cmd_rank_scenes(const RankScenesOpts& o) {
  Meta meta;
  meta.command = "rank-scenes";
  meta.config["sim"] = o.sim_path;
  meta.config["base"] = o.base_path;
  meta.config["candidates"] = o.candidates;
  meta.config["mode"] = o.mode;
  meta.add_input(o.sim_path);
  meta.add_input(o.base_path);

  SymmetricMatrix sim = SymmetricMatrix::load(o.sim_path);
  std::vector<std::string> base = read_id_list(o.base_path);
  std::vector<std::string> candidates;
  if (o.candidates == "all-others") {
    candidates = complement(sim.ids(), base);
  } else {
    meta.add_input(o.candidates);
    candidates = read_id_list(o.candidates);
  }

  RankedCandidates ranked;
  if (o.mode == "greedy") {
    std::size_t k = o.k == 0 ? candidates.size() : o.k;
    meta.config["k"] = k;
    ranked = greedy_extend(sim, base, candidates, k);
  } else if (o.mode == "novelty") {
    ranked = novelty_ranking(sim, base, candidates);
  } else {
    fail("unknown mode \"", o.mode, "\" (expected greedy or novelty)");
  }
  with_output(o.out,
              [&](std::ostream& out) { write_ranking_csv(out, ranked, meta); });
}

// ---------------------------------------------------------------------------
// rank-languages

struct RankLanguagesOpts {
  std::string dist_path;
  std::string base_path;
  std::string candidates = "all-others";
  std::string out;
};

void cmd_rank_languages(const RankLanguagesOpts& o) {
  Meta meta;
  meta.command = "rank-languages";
  meta.config["dist"] = o.dist_path;
  meta.config["base"] = o.base_path;
  meta.config["candidates"] = o.candidates;
  meta.add_input(o.dist_path);
  meta.add_input(o.base_path);

  SymmetricMatrix dist = SymmetricMatrix::load(o.dist_path, MatrixKind::LANG_DIST);
  std::vector<std::string> base = read_id_list(o.base_path);
  std::vector<std::string> candidates;
  if (o.candidates == "all-others") {
    candidates = complement(dist.ids(), base);
  } else {
    meta.add_input(o.candidates);
    candidates = read_id_list(o.candidates);
  }
  RankedCandidates ranked = rank_languages(dist, base, candidates);
  with_output(o.out,
              [&](std::ostream& out) { write_ranking_csv(out, ranked, meta); });
}

// ---------------------------------------------------------------------------
// distances

struct DistancesOpts {
  TableInputs table;
  bool normalize = true;
  std::string out;
};

void cmd_distances(const DistancesOpts& o) {
  Meta meta;
  meta.command = "distances";
  meta.config["normalize_vi"] = o.normalize;
  LoadedTable loaded = load_table(o.table, meta);
  SymmetricMatrix dist = language_distance_matrix(loaded.matrix, o.normalize);
  std::vector<std::string> comments = meta.comments();
  comments.push_back("matrix-digest: sha256=" +
                     sha256_hex(loaded.matrix.canonical_bytes()));
  with_output(o.out, [&](std::ostream& out) { dist.write_csv(out, comments); });
}

// ---------------------------------------------------------------------------
// mds

struct MdsOpts {
  std::string dissim_path;
  int dims = 2;
  std::string out;
  std::string stress_profile_path;
};

void cmd_mds(const MdsOpts& o) {
  Meta meta;
  meta.command = "mds";
  meta.config["dissim"] = o.dissim_path;
  meta.config["dims"] = o.dims;
  meta.add_input(o.dissim_path);

  SymmetricMatrix dissim = SymmetricMatrix::load(o.dissim_path);
  Embedding embedding = classical_mds(dissim, o.dims);
  with_output(o.out, [&](std::ostream& out) {
    embedding.write_csv(out, meta.comments());
  });
  std::cerr << "stress-1 (k=" << o.dims << "): " << embedding.stress << "\n";
  if (!o.stress_profile_path.empty()) {
    auto profile = stress_profile(dissim, o.dims);
    with_output(o.stress_profile_path, [&](std::ostream& out) {
      write_stress_profile_csv(out, profile, meta.comments());
    });
  }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string model_path;
  std::string humans_path;
  std::string manifest_path;
  std::string language;
  bool as_json = false;
  std::string out;
};

void cmd_evaluate(const EvaluateOpts& o) {
  Meta meta;
  meta.command = "evaluate";
  meta.config["model"] = o.model_path;
  meta.config["humans"] = o.humans_path;
  meta.config["manifest"] = o.manifest_path;
  meta.config["language"] = o.language;
  meta.add_input(o.model_path);
  meta.add_input(o.humans_path);
  meta.add_input(o.manifest_path);

  SceneManifest manifest = SceneManifest::load(o.manifest_path);
  LabelTable model_table =
      LabelTable::load(o.model_path).restrict_language(o.language);
  LabelTable humans =
      LabelTable::load(o.humans_path).restrict_language(o.language);
  if (model_table.size() == 0) {
    fail("model table has no labels for ", o.language);
  }
  if (humans.size() == 0) fail("human table has no labels for ", o.language);

  // Evaluate on the scenes both sides labeled, keeping manifest order.
  auto model_scenes = model_table.scene_ids();
  auto human_scenes = humans.scene_ids();
  std::set<std::string> model_set(model_scenes.begin(), model_scenes.end());
  std::set<std::string> human_set(human_scenes.begin(), human_scenes.end());
  std::vector<SceneRecord> shared;
  for (const SceneRecord& scene : manifest.scenes()) {
    if (model_set.count(scene.scene_id) && human_set.count(scene.scene_id)) {
      SceneRecord copy = scene;
      copy.page_number = static_cast<int>(shared.size()) + 1;
      shared.push_back(std::move(copy));
    }
  }
  if (shared.empty()) fail("model and humans share no manifest scenes");
  SceneManifest shared_manifest(std::move(shared));

  LabelMatrix model = build_matrix(model_table, shared_manifest,
                                   BuildPolicy::MODAL, CellProvenance::LLM);
  EvalReport report = evaluate_language(model, humans, o.language);
  if (o.as_json) {
    json doc = json::parse(report.to_json());
    meta.attach(doc);
    with_output(o.out, [&](std::ostream& out) { out << doc.dump(2) << "\n"; });
  } else {
    with_output(o.out,
                [&](std::ostream& out) { report.write_csv(out, meta.comments()); });
  }
  std::cerr << "language " << o.language << ": mean binary "
            << report.mean_binary << ", mean graded " << report.mean_graded
            << ", mean max graded " << report.mean_max_graded << " over "
            << report.n_scenes << " scenes\n";
  auto annotators = humans.annotators(o.language);
  if (annotators.size() >= 2) {
    AlignmentSummary baseline = human_human_alignment(humans, o.language);
    std::cerr << "human-human baseline: mean " << baseline.mean << " ["
              << baseline.q_low << ", " << baseline.q_high << "]\n";
  }
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateOpts {
  std::string x_path;
  std::string y_path;
  int bootstrap = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

// Reads an `id,value` CSV into parallel vectors.
std::pair<std::vector<std::string>, std::vector<double>> read_value_series(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  csv::Document doc = csv::read(in);
  if (doc.header.fields != std::vector<std::string>{"id", "value"}) {
    fail(path, ": header must be exactly `id,value`");
  }
  std::vector<std::string> ids;
  std::vector<double> values;
  for (const csv::Record& rec : doc.records) {
    if (rec.fields.size() != 2) {
      fail(path, " line ", rec.line, ": expected 2 fields");
    }
    ids.push_back(rec.fields[0]);
    values.push_back(csv::parse_double(rec.fields[1], rec.line));
  }
  return {std::move(ids), std::move(values)};
}

void cmd_correlate(const CorrelateOpts& o) {
  Meta meta;
  meta.command = "correlate";
  meta.config["x"] = o.x_path;
  meta.config["y"] = o.y_path;
  meta.config["bootstrap"] = o.bootstrap;
  meta.config["seed"] = o.seed;
  meta.add_input(o.x_path);
  meta.add_input(o.y_path);

  auto [x_ids, x] = read_value_series(o.x_path);
  auto [y_ids, y_raw] = read_value_series(o.y_path);
  if (x_ids.size() != y_ids.size()) {
    fail("series lengths differ: ", x_ids.size(), " vs ", y_ids.size());
  }
  std::map<std::string, double> y_by_id;
  for (std::size_t i = 0; i < y_ids.size(); ++i) {
    if (!y_by_id.emplace(y_ids[i], y_raw[i]).second) {
      fail(o.y_path, ": duplicate id ", y_ids[i]);
    }
  }
  std::vector<double> y;
  for (const std::string& id : x_ids) {
    auto it = y_by_id.find(id);
    if (it == y_by_id.end()) fail(o.y_path, ": missing id ", id);
    y.push_back(it->second);
  }

  PearsonResult result = pearson_with_bootstrap(x, y, o.bootstrap, o.seed);
  json doc{{"r", result.r},
           {"ci_low", result.ci_low},
           {"ci_high", result.ci_high},
           {"n", x.size()},
           {"n_bootstrap", result.n_bootstrap},
           {"skipped_resamples", result.skipped},
           {"seed", o.seed}};
  meta.attach(doc);
  with_output(o.out, [&](std::ostream& out) { out << doc.dump(2) << "\n"; });
}

// ---------------------------------------------------------------------------
// elicit

struct ElicitOpts {
  std::string profile_path;
  std::string manifest_path;
  std::string reference_labels_path;
  std::string target;
  std::string target_name;
  std::string reference;
  std::string reference_name;
  bool text_only = false;
  double temperature = 0.0;
  std::string cache_dir;
  bool dry_run = false;
  std::string out;
};

void cmd_elicit(const ElicitOpts& o) {
  Meta meta;
  meta.command = "elicit";
  meta.config["profile"] = o.profile_path;
  meta.config["manifest"] = o.manifest_path;
  meta.config["reference_labels"] = o.reference_labels_path;
  meta.config["target"] = o.target;
  meta.config["text_only"] = o.text_only;
  meta.config["temperature"] = o.temperature;
  meta.config["dry_run"] = o.dry_run;
  meta.add_input(o.profile_path);
  meta.add_input(o.manifest_path);
  meta.add_input(o.reference_labels_path);

  ElicitationSpec spec;
  spec.manifest = SceneManifest::load(o.manifest_path);
  spec.provider = ProviderProfile::load(o.profile_path);
  spec.target_code = o.target;
  spec.target_name = o.target_name;
  spec.reference_code = o.reference.empty() ? reference_policy(o.target) : o.reference;
  spec.reference_name = o.reference_name;
  spec.text_only = o.text_only;
  spec.temperature = o.temperature;
  meta.config["reference"] = spec.reference_code;

  LabelTable reference_table = LabelTable::load(o.reference_labels_path)
                                   .restrict_language(spec.reference_code);
  if (reference_table.size() == 0) {
    fail("reference table has no labels for ", spec.reference_code);
  }
  LabelMatrix reference = build_matrix(reference_table, spec.manifest,
                                       BuildPolicy::MODAL);
  for (std::size_t j = 0; j < spec.manifest.size(); ++j) {
    spec.reference_labels.push_back(reference.label(0, j));
  }

  ElicitOptions options;
  options.cache_dir = o.cache_dir;
  options.dry_run = o.dry_run;
  HttplibTransport transport;
  ElicitResult result = run_elicitation(spec, transport, options);

  const std::string key = cache_key(spec, result.prompt);
  std::cerr << "prompt digest: " << result.prompt.digest << "\n"
            << "cache key: " << key << "\n";
  if (o.dry_run) {
    std::cerr << "dry run: request written to "
              << (std::filesystem::path(o.cache_dir) / (key + ".request")).string()
              << "\n";
    return;
  }
  std::cerr << (result.cache_hit ? "cache hit" : "fetched from provider")
            << "\n";
  std::vector<std::string> comments = meta.comments();
  comments.push_back("prompt-digest: " + result.prompt.digest);
  comments.push_back("cache-key: " + key);
  with_output(o.out, [&](std::ostream& out) {
    result.labels->write_csv(out, comments);
  });
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineOpts {
  TableInputs table;
  std::string out_dir;
  std::uint64_t seed = 0;
  int bootstrap = 1000;
  double level = 0.95;
  int dims = 2;
  bool normalize_vi = true;
};

template <class Fn>
decltype(auto) stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    fail("stage ", name, ": ", e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open ", path.string(), " for writing");
  out << text;
  if (!out) fail("write failed for ", path.string());
}

void cmd_pipeline(const PipelineOpts& o) {
  Meta meta;
  meta.command = "pipeline";
  meta.config["out_dir"] = o.out_dir;
  meta.config["seed"] = o.seed;
  meta.config["bootstrap"] = o.bootstrap;
  meta.config["level"] = o.level;
  meta.config["dims"] = o.dims;
  meta.config["normalize_vi"] = o.normalize_vi;

  LoadedTable loaded = stage("ingest", [&] { return load_table(o.table, meta); });
  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  const std::string matrix_digest = sha256_hex(loaded.matrix.canonical_bytes());
  std::vector<std::string> comments = meta.comments();
  comments.push_back("matrix-digest: sha256=" + matrix_digest);

  SymmetricMatrix sim = stage("similarity", [&] {
    return scene_similarity_matrix(loaded.matrix);
  });
  {
    std::ostringstream buf;
    sim.write_csv(buf, comments);
    write_text_file(dir / "sim.csv", buf.str());
  }

  // Coverage rows mirror the incremental extensions of the first stimulus
  // set: base, then base plus each later set. A manifest without a TRPS
  // block falls back to one row per set.
  json coverage_doc;
  meta.attach(coverage_doc);
  coverage_doc["matrix_digest"] = matrix_digest;
  stage("coverage", [&] {
    const std::vector<std::string> universe = sim.ids();
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    std::vector<std::string> trps = loaded.manifest.scene_ids(SetTag::TRPS);
    const SetTag extensions[] = {SetTag::ZHANG, SetTag::LJSP, SetTag::LCXRK,
                                 SetTag::OTHER};
    if (!trps.empty()) {
      rows.emplace_back(to_string(SetTag::TRPS), trps);
      for (SetTag tag : extensions) {
        std::vector<std::string> extra = loaded.manifest.scene_ids(tag);
        if (extra.empty()) continue;
        std::vector<std::string> combined = trps;
        combined.insert(combined.end(), extra.begin(), extra.end());
        rows.emplace_back(to_string(SetTag::TRPS) + "+" + to_string(tag),
                          std::move(combined));
      }
    } else {
      for (SetTag tag : extensions) {
        std::vector<std::string> scenes = loaded.manifest.scene_ids(tag);
        if (!scenes.empty()) rows.emplace_back(to_string(tag), std::move(scenes));
      }
    }
    if (rows.empty()) fail("manifest defines no stimulus sets");

    json out_rows = json::array();
    for (const auto& [name, subset] : rows) {
      json row;
      row["name"] = name;
      row["n_scenes"] = subset.size();
      row["score"] = coverage(sim, universe, subset);
      auto [lo, hi] = bootstrap_coverage_ci(sim, subset, universe, o.bootstrap,
                                            o.level, o.seed);
      row["ci_low"] = lo;
      row["ci_high"] = hi;
      out_rows.push_back(std::move(row));
    }
    coverage_doc["rows"] = std::move(out_rows);
    coverage_doc["n_universe"] = universe.size();
    write_text_file(dir / "coverage.json", coverage_doc.dump(2) + "\n");
  });

  stage("novelty", [&] {
    std::vector<std::string> base = loaded.manifest.scene_ids(SetTag::TRPS);
    if (base.empty()) {
      auto all = sim.ids();
      base.assign(all.begin(), all.begin() + 1);
    }
    std::vector<std::string> candidates = complement(sim.ids(), base);
    if (candidates.empty()) fail("no candidate scenes outside the base set");
    RankedCandidates ranked = novelty_ranking(sim, base, candidates);
    std::ostringstream buf;
    write_ranking_csv(buf, ranked, meta);
    write_text_file(dir / "novelty.csv", buf.str());
  });

  SymmetricMatrix langdist = stage("distances", [&] {
    return language_distance_matrix(loaded.matrix, o.normalize_vi);
  });
  {
    std::ostringstream buf;
    langdist.write_csv(buf, comments);
    write_text_file(dir / "langdist.csv", buf.str());
  }

  stage("rank-languages", [&] {
    std::vector<std::string> languages = langdist.ids();
    std::string base = languages.front();
    if (langdist.contains("en")) base = "en";
    std::vector<std::string> base_list{base};
    std::vector<std::string> candidates = complement(languages, base_list);
    if (candidates.empty()) fail("only one language present");
    RankedCandidates ranked = rank_languages(langdist, base_list, candidates);
    std::ostringstream buf;
    write_ranking_csv(buf, ranked, meta);
    write_text_file(dir / "ranking.csv", buf.str());
  });

  std::vector<std::pair<int, double>> profile;
  stage("mds", [&] {
    SymmetricMatrix dissim = to_dissimilarity(sim);
    Embedding embedding = classical_mds(dissim, o.dims);
    std::ostringstream buf;
    embedding.write_csv(buf, comments);
    write_text_file(dir / "coords.csv", buf.str());
    profile = stress_profile(dissim, o.dims);
  });

  json run_doc;
  meta.attach(run_doc);
  run_doc["matrix_digest"] = matrix_digest;
  run_doc["n_scenes"] = loaded.manifest.size();
  run_doc["n_languages"] = loaded.matrix.languages().size();
  json profile_json = json::array();
  for (const auto& [k, s] : profile) profile_json.push_back({{"k", k}, {"stress", s}});
  run_doc["stress_profile"] = profile_json;
  run_doc["artifacts"] = {"run.json",     "sim.csv",     "coverage.json",
                          "novelty.csv",  "langdist.csv", "ranking.csv",
                          "coords.csv"};
  write_text_file(dir / "run.json", run_doc.dump(2) + "\n");
  std::cerr << "pipeline complete: 7 artifacts in " << o.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spacecov: coverage-guided extension of cross-linguistic "
               "spatial categorization datasets"};
  app.require_subcommand(1);

  auto ingest = std::make_shared<IngestOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "ingest", "validate labels against a manifest and emit the "
                  "normalized table");
    add_table_flags(cmd, ingest->table);
    cmd->add_option("--out", ingest->out, "output CSV (default stdout)");
    cmd->callback([ingest] { cmd_ingest(*ingest); });
  }

  auto similarity = std::make_shared<SimilarityOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "similarity", "scene-by-scene cross-linguistic similarity matrix");
    add_table_flags(cmd, similarity->table);
    cmd->add_flag("--dissim", similarity->dissim,
                  "emit 1 - sim instead of sim");
    cmd->add_option("--out", similarity->out, "output CSV (default stdout)");
    cmd->callback([similarity] { cmd_similarity(*similarity); });
  }

  auto coverage_opts = std::make_shared<CoverageOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "coverage", "coverage of a scene subset with a bootstrap CI");
    cmd->add_option("--sim", coverage_opts->sim_path, "similarity matrix CSV")
        ->required();
    cmd->add_option("--universe", coverage_opts->universe,
                    "'all' or a file of ids")
        ->default_val("all");
    cmd->add_option("--subset", coverage_opts->subset_path, "file of subset ids")
        ->required();
    cmd->add_option("--bootstrap", coverage_opts->bootstrap,
                    "bootstrap resamples (0 disables the CI)")
        ->default_val(1000);
    cmd->add_option("--level", coverage_opts->level, "CI level")
        ->default_val(0.95);
    cmd->add_option("--seed", coverage_opts->seed, "RNG seed")->required();
    cmd->add_option("--out", coverage_opts->out, "output JSON (default stdout)");
    cmd->callback([coverage_opts] { cmd_coverage(*coverage_opts); });
  }

  auto rank_scenes = std::make_shared<RankScenesOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "rank-scenes", "rank candidate scenes by greedy gain or novelty");
    cmd->add_option("--sim", rank_scenes->sim_path, "similarity matrix CSV")
        ->required();
    cmd->add_option("--base", rank_scenes->base_path, "file of base scene ids")
        ->required();
    cmd->add_option("--candidates", rank_scenes->candidates,
                    "'all-others' or a file of ids")
        ->default_val("all-others");
    cmd->add_option("--mode", rank_scenes->mode, "greedy or novelty")
        ->default_val("greedy");
    cmd->add_option("--k", rank_scenes->k,
                    "greedy picks (0 ranks every candidate)");
    cmd->add_option("--out", rank_scenes->out, "output CSV (default stdout)");
    cmd->callback([rank_scenes] { cmd_rank_scenes(*rank_scenes); });
  }

  auto rank_langs = std::make_shared<RankLanguagesOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "rank-languages", "rank candidate languages by distance to a base set");
    cmd->add_option("--dist", rank_langs->dist_path, "language distance CSV")
        ->required();
    cmd->add_option("--base", rank_langs->base_path, "file of base languages")
        ->required();
    cmd->add_option("--candidates", rank_langs->candidates,
                    "'all-others' or a file of codes")
        ->default_val("all-others");
    cmd->add_option("--out", rank_langs->out, "output CSV (default stdout)");
    cmd->callback([rank_langs] { cmd_rank_languages(*rank_langs); });
  }

  auto distances = std::make_shared<DistancesOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "distances", "variation-of-information distances between languages");
    add_table_flags(cmd, distances->table);
    cmd->add_flag("--normalize-vi,!--no-normalize-vi", distances->normalize,
                  "divide by log2(n scenes) (default on)");
    cmd->add_option("--out", distances->out, "output CSV (default stdout)");
    cmd->callback([distances] { cmd_distances(*distances); });
  }

  auto mds = std::make_shared<MdsOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "mds", "classical MDS embedding of a dissimilarity matrix");
    cmd->add_option("--dissim", mds->dissim_path, "dissimilarity matrix CSV")
        ->required();
    cmd->add_option("--dims", mds->dims, "embedding dimensions")
        ->default_val(2);
    cmd->add_option("--out", mds->out, "coordinates CSV (default stdout)");
    cmd->add_option("--stress-profile", mds->stress_profile_path,
                    "also write stress at k = 1..dims to this CSV");
    cmd->callback([mds] { cmd_mds(*mds); });
  }

  auto evaluate = std::make_shared<EvaluateOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "evaluate", "score model labels against human labels");
    cmd->add_option("--model", evaluate->model_path, "model label CSV")
        ->required();
    cmd->add_option("--humans", evaluate->humans_path, "human label CSV")
        ->required();
    cmd->add_option("--manifest", evaluate->manifest_path,
                    "scene manifest JSON")
        ->required();
    cmd->add_option("--language", evaluate->language, "language code")
        ->required();
    cmd->add_flag("--json", evaluate->as_json, "emit the JSON summary");
    cmd->add_option("--out", evaluate->out, "output file (default stdout)");
    cmd->callback([evaluate] { cmd_evaluate(*evaluate); });
  }

  auto correlate = std::make_shared<CorrelateOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "correlate", "Pearson r with a bootstrap CI over two id,value series");
    cmd->add_option("--x", correlate->x_path, "first id,value CSV")->required();
    cmd->add_option("--y", correlate->y_path, "second id,value CSV")
        ->required();
    cmd->add_option("--bootstrap", correlate->bootstrap, "bootstrap resamples")
        ->default_val(1000);
    cmd->add_option("--seed", correlate->seed, "RNG seed")->required();
    cmd->add_option("--out", correlate->out, "output JSON (default stdout)");
    cmd->callback([correlate] { cmd_correlate(*correlate); });
  }

  auto elicit = std::make_shared<ElicitOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "elicit", "prompt an LLM for labels in a target language");
    cmd->add_option("--profile", elicit->profile_path, "provider profile JSON")
        ->required();
    cmd->add_option("--manifest", elicit->manifest_path, "scene manifest JSON")
        ->required();
    cmd->add_option("--reference-labels", elicit->reference_labels_path,
                    "label CSV holding the reference language")
        ->required();
    cmd->add_option("--target", elicit->target, "target language code")
        ->required();
    cmd->add_option("--target-name", elicit->target_name,
                    "display name when the code is not en/zh");
    cmd->add_option("--reference", elicit->reference,
                    "reference language code (default: zh for en, else en)");
    cmd->add_option("--reference-name", elicit->reference_name,
                    "display name when the code is not en/zh");
    cmd->add_flag("--text-only", elicit->text_only,
                  "describe scenes in text instead of attaching the document");
    cmd->add_option("--temperature", elicit->temperature, "sampling temperature")
        ->default_val(0.0);
    cmd->add_option("--cache-dir", elicit->cache_dir, "response cache directory")
        ->required();
    cmd->add_flag("--dry-run", elicit->dry_run,
                  "build the prompt and request without any network call");
    cmd->add_option("--out", elicit->out, "label CSV (default stdout)");
    cmd->callback([elicit] { cmd_elicit(*elicit); });
  }

  auto pipeline = std::make_shared<PipelineOpts>();
  {
    CLI::App* cmd = app.add_subcommand(
        "pipeline", "full analysis bundle from labels + manifest");
    add_table_flags(cmd, pipeline->table);
    cmd->add_option("--out-dir", pipeline->out_dir, "output directory")
        ->required();
    cmd->add_option("--seed", pipeline->seed, "RNG seed")->required();
    cmd->add_option("--bootstrap", pipeline->bootstrap, "bootstrap resamples")
        ->default_val(1000);
    cmd->add_option("--level", pipeline->level, "CI level")->default_val(0.95);
    cmd->add_option("--dims", pipeline->dims, "MDS dimensions")->default_val(2);
    cmd->add_flag("--normalize-vi,!--no-normalize-vi", pipeline->normalize_vi,
                  "divide VI by log2(n scenes) (default on)");
    cmd->callback([pipeline] { cmd_pipeline(*pipeline); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
