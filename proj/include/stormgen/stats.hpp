#pragma once

#include <span>
#include <vector>

namespace stormgen {

/// Inverse-ECDF quantile of an ascending-sorted sample: the smallest x with
/// ECDF(x) >= q, q in (0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

/// Same on an unsorted sample with NaN entries ignored. Throws DataError
/// when no value is left.
double empirical_quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);

}  // namespace stormgen
