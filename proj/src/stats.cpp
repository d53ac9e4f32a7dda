#include "spacecov/stats.hpp"

#include <cmath>
#include <cstddef>

#include "spacecov/error.hpp"

namespace spacecov {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail("quantile of empty sample");
  if (p < 0.0 || p > 1.0) fail("quantile level out of [0,1]: ", p);
  if (sorted.size() == 1) return sorted[0];
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(h);
  if (lo >= sorted.size() - 1) return sorted[sorted.size() - 1];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) fail("mean of empty sample");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

bool is_constant(std::span<const double> values) {
  for (double v : values)
    if (v != values[0]) return false;
  return true;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail("pearson: length mismatch (", x.size(), " vs ", y.size(), ")");
  if (x.size() < 3) fail("pearson: need at least 3 observations");
  if (is_constant(x) || is_constant(y)) fail("pearson: constant input vector");
  double mx = mean(x);
  double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace spacecov
