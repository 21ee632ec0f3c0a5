#include "stormgen/dependence.hpp"

#include <cmath>
#include <stdexcept>

#include "stormgen/normal.hpp"

namespace stormgen {

void validate(const VariogramParams& t) {
  if (!(t.beta1 > 0.0 && t.beta2 > 0.0) || !std::isfinite(t.beta1) || !std::isfinite(t.beta2)) {
    throw std::domain_error("variogram: beta1 and beta2 must be positive");
  }
  if (!(t.alpha1 > 0.0 && t.alpha1 <= 2.0 && t.alpha2 > 0.0 && t.alpha2 <= 2.0)) {
    throw std::domain_error("variogram: alpha1 and alpha2 must lie in (0, 2]");
  }
}

void validate(const AdvectionTransform& a) {
  if (!(a.eta1 > 0.0) || !std::isfinite(a.eta1)) throw std::domain_error("advection: eta1 must be positive");
  if (!(a.eta2 >= 0.0) || !std::isfinite(a.eta2)) throw std::domain_error("advection: eta2 must be non-negative");
}

double variogram(Vec2 h, double tau, const VariogramParams& theta, Velocity v) {
  const double d = (h - tau * v).norm();
  const double spatial = d > 0.0 ? theta.beta1 * std::pow(d, theta.alpha1) : 0.0;
  const double at = std::abs(tau);
  const double temporal = at > 0.0 ? theta.beta2 * std::pow(at, theta.alpha2) : 0.0;
  return 2.0 * (spatial + temporal);
}

// 2 (1 - Phi(sqrt(g / 2))) = erfc(sqrt(g) / 2)
double chi_from_variogram(double gamma) { return std::erfc(0.5 * std::sqrt(gamma)); }

double chi_r(Vec2 h, double tau, const VariogramParams& theta, Velocity v) {
  return chi_from_variogram(variogram(h, tau, theta, v));
}

double inverse_chi(double chi) {
  if (!(chi > 0.0 && chi <= 1.0)) throw std::domain_error("inverse_chi: chi must lie in (0, 1]");
  if (chi == 1.0) return 0.0;
  // Phi^{-1}(1 - chi/2) = -Phi^{-1}(chi/2)
  const double z = normal_quantile(0.5 * chi);
  return 2.0 * z * z;
}

Velocity transform_advection(Velocity v, const AdvectionTransform& a) {
  const double speed = v.norm();
  if (speed == 0.0) return {0.0, 0.0};
  const double scale = a.eta1 * std::pow(speed, a.eta2) / speed;
  return scale * v;
}

std::optional<Velocity> cap_speed(Velocity v, double cap) {
  if (!(cap > 0.0)) throw std::domain_error("cap_speed: cap must be positive");
  if (v.norm() <= cap) return v;
  return std::nullopt;
}

}  // namespace stormgen
