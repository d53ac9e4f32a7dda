#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spacecov/error.hpp"

namespace fixtures {

using namespace spacecov;

namespace {

const char* kFocalObjects[] = {"cup",   "ball",  "book", "lamp",  "spoon",
                               "apple", "coin",  "boat", "cloud", "ring"};
const char* kBackgroundObjects[] = {"table", "box",   "shelf", "cloth",
                                    "bowl",  "fence", "river", "plate",
                                    "tree",  "wall"};

// Spatial terms across scripts so normalization and serialization see
// non-ASCII input everywhere.
const char* kTerms[] = {"on",     "in",    "under",  "above", "behind",
                        "près de", "sobre", "ÜBER",   "içinde", "안에",
                        "上面",    "trên",  "κοντά",  "у",      "おく"};
constexpr int kNumTerms = 15;
constexpr int kLatentRelations = 12;

std::string scene_id_for(int page) {
  std::ostringstream id;
  id << 's';
  if (page < 100) id << '0';
  if (page < 10) id << '0';
  id << page;
  return id.str();
}

SceneRecord make_scene(int page, SetTag tag, Highlight highlight) {
  SceneRecord scene;
  scene.scene_id = scene_id_for(page);
  scene.set_tag = tag;
  scene.page_number = page;
  scene.focal_object = kFocalObjects[page % 10];
  scene.background_object = kBackgroundObjects[(page / 10) % 10];
  scene.highlight = highlight;
  return scene;
}

}  // namespace

SceneManifest four_set_manifest() {
  std::vector<SceneRecord> scenes;
  scenes.reserve(220);
  for (int page = 1; page <= 71; ++page) {
    scenes.push_back(make_scene(page, SetTag::TRPS, Highlight::GOLD));
  }
  for (int page = 72; page <= 113; ++page) {
    scenes.push_back(make_scene(page, SetTag::LCXRK, Highlight::GOLD));
  }
  for (int page = 114; page <= 176; ++page) {
    scenes.push_back(make_scene(page, SetTag::ZHANG, Highlight::YELLOW_ARROW));
  }
  for (int page = 177; page <= 220; ++page) {
    scenes.push_back(make_scene(page, SetTag::LJSP, Highlight::RED_ARROW));
  }
  return SceneManifest(std::move(scenes));
}

SceneManifest small_manifest(int n_scenes) {
  if (n_scenes % 4 != 0) fail("small_manifest needs a multiple of 4");
  const int per_set = n_scenes / 4;
  std::vector<SceneRecord> scenes;
  scenes.reserve(n_scenes);
  const SetTag tags[] = {SetTag::TRPS, SetTag::ZHANG, SetTag::LJSP,
                         SetTag::LCXRK};
  const Highlight highlights[] = {Highlight::GOLD, Highlight::YELLOW_ARROW,
                                  Highlight::RED_ARROW, Highlight::GOLD};
  for (int page = 1; page <= n_scenes; ++page) {
    const int block = (page - 1) / per_set;
    scenes.push_back(make_scene(page, tags[block], highlights[block]));
  }
  return SceneManifest(std::move(scenes));
}

LabelTable synthetic_labels(const SceneManifest& manifest,
                            const std::vector<std::string>& languages,
                            int annotators_per_language, std::uint64_t seed,
                            double noise) {
  const int n = static_cast<int>(manifest.size());

  SplitMix64 scene_rng = SplitMix64::stream(seed, 1);
  std::vector<int> latent(n);
  for (int i = 0; i < n; ++i) {
    latent[i] = static_cast<int>(scene_rng.below(kLatentRelations));
  }

  LabelTable table;
  for (std::size_t l = 0; l < languages.size(); ++l) {
    SplitMix64 lang_rng = SplitMix64::stream(seed, 10 + l);
    const int vocabulary = 4 + static_cast<int>(lang_rng.below(6));
    const int offset = static_cast<int>(lang_rng.below(kNumTerms));
    std::vector<int> term_of_relation(kLatentRelations);
    for (int t = 0; t < kLatentRelations; ++t) {
      term_of_relation[t] =
          (offset + static_cast<int>(lang_rng.below(vocabulary))) % kNumTerms;
    }
    for (int a = 0; a < annotators_per_language; ++a) {
      SplitMix64 annotator_rng =
          SplitMix64::stream(seed, 1000 + l * 100 + a);
      for (int i = 0; i < n; ++i) {
        int term = term_of_relation[latent[i]];
        if (annotator_rng.next_unit() < noise) {
          term = term_of_relation[annotator_rng.below(kLatentRelations)];
        }
        LabelEntry entry;
        entry.scene_id = manifest.at(i).scene_id;
        entry.language = languages[l];
        entry.annotator_id = "a" + std::to_string(a + 1);
        entry.raw_label = kTerms[term];
        table.add(std::move(entry));
      }
    }
  }
  return table;
}

SymmetricMatrix random_similarity(int n, SplitMix64& rng) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (int i = 0; i < n; ++i) ids.push_back(scene_id_for(i + 1));
  SymmetricMatrix sim(std::move(ids), MatrixKind::SCENE_SIM);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) sim.set(i, j, rng.next_unit());
  }
  sim.validate();
  return sim;
}

Partition random_partition(int n, int max_blocks, SplitMix64& rng) {
  Partition p;
  p.elements.reserve(n);
  for (int i = 0; i < n; ++i) p.elements.push_back("e" + std::to_string(i));
  std::vector<int> relabel(max_blocks, -1);
  int next_block = 0;
  for (int i = 0; i < n; ++i) {
    int raw = static_cast<int>(rng.below(max_blocks));
    if (relabel[raw] < 0) relabel[raw] = next_block++;
    p.block_of.push_back(relabel[raw]);
  }
  p.n_blocks = next_block;
  return p;
}

std::vector<std::vector<double>> random_points(int n, int k, SplitMix64& rng) {
  std::vector<std::vector<double>> points(n, std::vector<double>(k));
  for (auto& point : points) {
    for (double& coordinate : point) {
      coordinate = rng.next_unit() * 10.0 - 5.0;
    }
  }
  return points;
}

SymmetricMatrix distance_matrix(const std::vector<std::vector<double>>& points,
                                const std::vector<std::string>& ids) {
  const std::size_t n = points.size();
  std::vector<std::string> names = ids;
  if (names.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back("p" + std::to_string(i));
    }
  }
  SymmetricMatrix d(std::move(names), MatrixKind::SCENE_DISSIM);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t c = 0; c < points[i].size(); ++c) {
        const double diff = points[i][c] - points[j][c];
        sum += diff * diff;
      }
      d.set(i, j, std::sqrt(sum));
    }
  }
  return d;
}

std::filesystem::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("spacecov_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open ", path.string(), " for writing");
  out << text;
}

}  // namespace fixtures
