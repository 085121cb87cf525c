#pragma once

#include <span>
#include <vector>

namespace cardcorr {

// Linear interpolation between order statistics (Hyndman-Fan type 7):
// h = (n - 1) * p, q = x[floor(h)] + (h - floor(h)) * (x[floor(h) + 1] - x[floor(h)]).
// `sorted` must be non-empty and ascending; p is clamped to [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Copies and sorts, then applies quantile_sorted. Throws EmptyInput when empty.
double quantile(std::span<const double> values, double p);

double median(std::span<const double> values);

}  // namespace cardcorr
