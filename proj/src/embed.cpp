#include "spacecov/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "spacecov/csv.hpp"
#include "spacecov/error.hpp"

namespace spacecov {

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sum += a[i * n + j] * a[i * n + j];
  return std::sqrt(sum);
}

}  // namespace

EigenSystem jacobi_eigensystem(const std::vector<double>& matrix, std::size_t n) {
  if (matrix.size() != n * n) fail("jacobi: matrix size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (matrix[i * n + j] != matrix[j * n + i])
        fail("jacobi: input not symmetric at (", i, ",", j, ")");

  std::vector<double> a = matrix;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  constexpr double kOffTol = 1e-12;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a, n) <= kOffTol) break;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (apq == 0.0) continue;
        double app = a[p * n + p];
        double aqq = a[q * n + q];
        // Skip rotations too small to change the diagonal.
        if (std::abs(apq) < 1e-300 ||
            (std::abs(app) + 100.0 * std::abs(apq) == std::abs(app) &&
             std::abs(aqq) + 100.0 * std::abs(apq) == std::abs(aqq))) {
          a[p * n + q] = a[q * n + p] = 0.0;
          continue;
        }
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double tau = s / (1.0 + c);

        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = a[q * n + p] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          double aip = a[i * n + p];
          double aiq = a[i * n + q];
          a[i * n + p] = a[p * n + i] = aip - s * (aiq + tau * aip);
          a[i * n + q] = a[q * n + i] = aiq + s * (aip - tau * aiq);
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v[i * n + p];
          double viq = v[i * n + q];
          v[i * n + p] = vip - s * (viq + tau * vip);
          v[i * n + q] = viq + s * (vip - tau * viq);
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x * n + x] > a[y * n + y];
  });

  EigenSystem sys;
  sys.values.reserve(n);
  sys.vectors.reserve(n);
  for (std::size_t j : order) {
    sys.values.push_back(a[j * n + j]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i * n + j];
    sys.vectors.push_back(std::move(col));
  }
  return sys;
}

Embedding classical_mds(const SymmetricMatrix& dissim, int k) {
  if (dissim.kind() == MatrixKind::SCENE_SIM || dissim.kind() == MatrixKind::LANG_SIM)
    fail("classical_mds: input must be a dissimilarity or distance matrix, got ",
         to_string(dissim.kind()));
  std::size_t n = dissim.size();
  if (k < 1 || static_cast<std::size_t>(k) > n - 1)
    fail("classical_mds: k=", k, " out of range [1, ", n - 1, "]");
  for (std::size_t i = 0; i < n; ++i) {
    if (dissim.at(i, i) != 0.0)
      fail("classical_mds: nonzero diagonal at '", dissim.ids()[i], "'");
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(dissim.at(i, j) >= 0.0))
        fail("classical_mds: negative dissimilarity at ('", dissim.ids()[i],
             "','", dissim.ids()[j], "')");
  }

  // B = -1/2 J D^2 J via row/column mean subtraction; each unordered pair is
  // evaluated once and mirrored so B stays exactly symmetric despite rounding.
  std::vector<double> d2(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = dissim.at(i, j);
      d2[i * n + j] = d * d;
    }
  std::vector<double> row_mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += d2[i * n + j];
    row_mean[i] = acc / static_cast<double>(n);
  }
  double grand = 0.0;
  for (double m : row_mean) grand += m;
  grand /= static_cast<double>(n);
  std::vector<double> b(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v = -0.5 * (d2[i * n + j] - row_mean[i] - row_mean[j] + grand);
      b[i * n + j] = v;
      b[j * n + i] = v;
    }
  }

  EigenSystem sys = jacobi_eigensystem(b, n);

  Embedding emb;
  emb.ids = dissim.ids();
  emb.k = k;
  emb.eigenvalues = sys.values;
  emb.coordinates.assign(n, std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::vector<double> column(n);
  for (int dim = 0; dim < k; ++dim) {
    double lambda = std::max(0.0, sys.values[static_cast<std::size_t>(dim)]);
    double scale = std::sqrt(lambda);
    const std::vector<double>& vec = sys.vectors[static_cast<std::size_t>(dim)];
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = scale * vec[i];
      mean += column[i];
    }
    mean /= static_cast<double>(n);
    // Re-center: eigenvector columns of B are centered up to rounding, but
    // near-null directions can pick up a visible constant component.
    for (std::size_t i = 0; i < n; ++i) column[i] -= mean;
    // Orient so the largest-magnitude entry is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(column[i]) > std::abs(column[arg])) arg = i;
    double sign = column[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i)
      emb.coordinates[i][static_cast<std::size_t>(dim)] = sign * column[i];
  }
  emb.stress = stress(dissim, emb.coordinates);
  return emb;
}

double stress(const SymmetricMatrix& dissim,
              const std::vector<std::vector<double>>& coordinates) {
  std::size_t n = dissim.size();
  if (coordinates.size() != n)
    fail("stress: ", coordinates.size(), " coordinate rows for ", n, " ids");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double delta = dissim.at(i, j);
      double dist2 = 0.0;
      for (std::size_t d = 0; d < coordinates[i].size(); ++d) {
        double diff = coordinates[i][d] - coordinates[j][d];
        dist2 += diff * diff;
      }
      double diff = std::sqrt(dist2) - delta;
      num += diff * diff;
      den += delta * delta;
    }
  }
  if (den == 0.0) fail("stress: all input dissimilarities are zero");
  return std::sqrt(num / den);
}

std::vector<std::pair<int, double>> stress_profile(const SymmetricMatrix& dissim,
                                                   int k_max) {
  if (k_max < 1 || static_cast<std::size_t>(k_max) > dissim.size() - 1)
    fail("stress_profile: k_max=", k_max, " out of range [1, ",
         dissim.size() - 1, "]");
  std::vector<std::pair<int, double>> profile;
  profile.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k)
    profile.emplace_back(k, classical_mds(dissim, k).stress);
  return profile;
}

void Embedding::write_csv(std::ostream& out,
                          const std::vector<std::string>& comments) const {
  for (const std::string& c : comments) out << "# " << c << "\n";
  std::vector<std::string> header{"id"};
  for (int d = 1; d <= k; ++d) header.push_back("dim" + std::to_string(d));
  out << csv::format_row(header);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::string> row{ids[i]};
    for (double c : coordinates[i]) row.push_back(csv::format_double(c));
    out << csv::format_row(row);
  }
}

void write_stress_profile_csv(std::ostream& out,
                              const std::vector<std::pair<int, double>>& profile,
                              const std::vector<std::string>& comments) {
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << "k,stress\n";
  for (const auto& [k, s] : profile)
    out << k << "," << csv::format_double(s) << "\n";
}

}  // namespace spacecov
