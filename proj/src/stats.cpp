#include "stormgen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stormgen/errors.hpp"

namespace stormgen {

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("quantile level must lie in (0, 1]");
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

double empirical_quantile(std::span<const double> values, double q) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, q);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double x : values) s += x;
  return s / static_cast<double>(values.size());
}

}  // namespace stormgen
