#pragma once

namespace stormgen {

/// Standard normal distribution function, computed through erfc.
double normal_cdf(double x);

/// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);

/// Inverse of normal_cdf on (0, 1). Rational approximation refined by one
/// Halley step; close to full double precision.
double normal_quantile(double p);

}  // namespace stormgen
