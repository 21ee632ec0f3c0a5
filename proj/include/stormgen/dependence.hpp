#pragma once

#include <optional>

#include "stormgen/geometry.hpp"

namespace stormgen {

/// Theta = (beta1, beta2, alpha1, alpha2) of the power variogram
/// 2 (beta1 |h - tau V|^alpha1 + beta2 |tau|^alpha2).
struct VariogramParams {
  double beta1 = 1.0;
  double beta2 = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
};

/// A(V) = eta1 |V|^eta2 V / |V|, with A(0) = 0.
struct AdvectionTransform {
  double eta1 = 1.0;
  double eta2 = 1.0;
};

void validate(const VariogramParams& theta);
void validate(const AdvectionTransform& adv);

double variogram(Vec2 h, double tau, const VariogramParams& theta, Velocity v);

/// r-extremogram as a function of the variogram value: 2 (1 - Phi(sqrt(gamma / 2))).
double chi_from_variogram(double gamma);

double chi_r(Vec2 h, double tau, const VariogramParams& theta, Velocity v);

/// gamma = 2 [Phi^{-1}(1 - chi / 2)]^2. Throws std::domain_error unless chi in (0, 1].
double inverse_chi(double chi);

Velocity transform_advection(Velocity v_emp, const AdvectionTransform& adv);

/// v if |v| <= cap, std::nullopt otherwise (the episode is to be excluded).
std::optional<Velocity> cap_speed(Velocity v, double cap);

}  // namespace stormgen
