#pragma once

#include <span>
#include <vector>

namespace spacecov {

// Empirical quantile with linear interpolation between order statistics
// (the "type 7" convention). Input must already be sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> values);

// Sample Pearson correlation. Errors on length mismatch, length < 3, or a
// constant input vector.
double pearson(std::span<const double> x, std::span<const double> y);

bool is_constant(std::span<const double> values);

}  // namespace spacecov
