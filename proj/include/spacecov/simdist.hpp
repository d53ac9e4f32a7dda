#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spacecov/label_store.hpp"

namespace spacecov {

enum class MatrixKind { SCENE_SIM, SCENE_DISSIM, LANG_DIST, LANG_SIM };

std::string to_string(MatrixKind kind);
MatrixKind matrix_kind_from_string(const std::string& s);

// Dense symmetric matrix over scene ids or language codes. Similarities
// carry a unit diagonal and values in [0,1]; distances a zero diagonal and
// non-negative values.
class SymmetricMatrix {
public:
  SymmetricMatrix(std::vector<std::string> ids, MatrixKind kind);

  std::size_t size() const { return ids_.size(); }
  MatrixKind kind() const { return kind_; }
  const std::vector<std::string>& ids() const { return ids_; }

  double at(std::size_t i, std::size_t j) const {
    return values_[i * ids_.size() + j];
  }
  void set(std::size_t i, std::size_t j, double v);
  std::size_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const;

  // Checks symmetry, the diagonal convention, and the value range for kind().
  void validate() const;

  void write_csv(std::ostream& out,
                 const std::vector<std::string>& comments = {}) const;
  std::string to_csv() const;
  // Kind comes from a '# kind: ...' comment when present, otherwise from
  // `expected`; when both are present they must agree.
  static SymmetricMatrix read_csv(std::istream& in,
                                  std::optional<MatrixKind> expected = {});
  static SymmetricMatrix load(const std::string& path,
                              std::optional<MatrixKind> expected = {});

private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  MatrixKind kind_;
  std::map<std::string, std::size_t> index_;
};

// Scenes grouped by shared canonical label in one language. Blocks are
// numbered in order of first appearance along the scene list.
struct Partition {
  std::vector<std::string> elements;
  std::vector<int> block_of;  // aligned with elements
  int n_blocks = 0;

  std::vector<int> block_sizes() const;
};

// Fraction of languages whose canonical labels for the two scenes match;
// 1 on the diagonal by definition.
double scene_similarity(const LabelMatrix& matrix, const std::string& scene_i,
                        const std::string& scene_j);

SymmetricMatrix scene_similarity_matrix(const LabelMatrix& matrix);

// D = 1 - sim, elementwise. Applying it to a SCENE_DISSIM matrix inverts it.
SymmetricMatrix to_dissimilarity(const SymmetricMatrix& sim);

Partition language_partition(const LabelMatrix& matrix,
                             const std::string& language);

// Entropy of the block-size distribution, in bits. 0 log 0 := 0.
double partition_entropy(const Partition& p);

// VI(P,Q) = H(P) + H(Q) - 2 I(P;Q), in bits; 0 iff P = Q.
double variation_of_information(const Partition& p, const Partition& q);

// Pairwise VI between language partitions. With normalize, values are
// divided by log2(n_scenes) so they lie in [0,1].
SymmetricMatrix language_distance_matrix(const LabelMatrix& matrix,
                                         bool normalize);

// 1 - D over a normalized distance matrix.
SymmetricMatrix language_similarity_matrix(const SymmetricMatrix& dist);

}  // namespace spacecov
