#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "spacecov/simdist.hpp"

namespace spacecov {

struct Embedding {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> coordinates;  // n rows of k values
  int k = 0;
  double stress = 0.0;
  std::vector<double> eigenvalues;  // all n, descending, before clamping

  void write_csv(std::ostream& out,
                 const std::vector<std::string>& comments = {}) const;
};

struct EigenSystem {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[j] pairs with values[j]
};

// Cyclic Jacobi rotations; converged when the off-diagonal Frobenius norm
// drops below 1e-12, capped at 100 sweeps. Deterministic sweep order, so
// repeated runs agree to the bit.
EigenSystem jacobi_eigensystem(const std::vector<double>& matrix, std::size_t n);

// Torgerson double centering B = -1/2 J D^2 J followed by the Jacobi
// eigendecomposition; coordinates are the top-k eigenvectors scaled by
// sqrt(max(lambda, 0)). Negative eigenvalues stay visible in `eigenvalues`.
// Sign convention: the largest-magnitude coordinate of each dimension is
// positive.
Embedding classical_mds(const SymmetricMatrix& dissim, int k);

// Kruskal stress-1 between the input dissimilarities and the embedded
// Euclidean distances.
double stress(const SymmetricMatrix& dissim,
              const std::vector<std::vector<double>>& coordinates);

// (k, stress) for classical_mds at each k in 1..k_max.
std::vector<std::pair<int, double>> stress_profile(const SymmetricMatrix& dissim,
                                                   int k_max);

void write_stress_profile_csv(std::ostream& out,
                              const std::vector<std::pair<int, double>>& profile,
                              const std::vector<std::string>& comments = {});

}  // namespace spacecov
