#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spacecov/label_store.hpp"
#include "spacecov/rng.hpp"
#include "spacecov/simdist.hpp"

namespace fixtures {

// 220 scenes in the canonical page layout: two gold-highlighted blocks
// (pages 1-71 and 72-113), a yellow-arrow block (114-176) and a red-arrow
// block (177-220).
spacecov::SceneManifest four_set_manifest();

// n scenes split evenly over the four stimulus sets; n must be divisible
// by 4. Pages 1..n, small enough for brute-force checks.
spacecov::SceneManifest small_manifest(int n_scenes = 20);

// Labels drawn from a latent-relation model: each scene carries one of a few
// latent spatial relations, each language merges relations into its own
// lexical categories, and each annotator reports the language's term with a
// little noise. Deterministic in (manifest, languages, annotators, seed).
spacecov::LabelTable synthetic_labels(const spacecov::SceneManifest& manifest,
                                      const std::vector<std::string>& languages,
                                      int annotators_per_language,
                                      std::uint64_t seed,
                                      double noise = 0.2);

// Symmetric matrix with unit diagonal and uniform [0,1] off-diagonal values.
spacecov::SymmetricMatrix random_similarity(int n, spacecov::SplitMix64& rng);

// Partition of elements e0..e{n-1} into at most max_blocks blocks, block ids
// densely numbered in first-appearance order.
spacecov::Partition random_partition(int n, int max_blocks,
                                     spacecov::SplitMix64& rng);

std::vector<std::vector<double>> random_points(int n, int k,
                                               spacecov::SplitMix64& rng);

spacecov::SymmetricMatrix distance_matrix(
    const std::vector<std::vector<double>>& points,
    const std::vector<std::string>& ids = {});

// Fresh empty directory under the system temp root.
std::filesystem::path fresh_temp_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fixtures
