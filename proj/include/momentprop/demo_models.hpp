/**
 * @file demo_models.hpp
 * @brief The two reference systems shipped with the CLI and the demos.
 */
#pragma once

#include <numbers>

#include "momentprop/system_model.hpp"

namespace momentprop {

/// Logistic map with r ~ U(0.3, 0.7) and x0 ~ N(0.5, 0.1^2) truncated to [0, 1].
inline PolynomialSystemSpec logistic_demo_model() {
  PolynomialSystemSpec spec = build_logistic_model(ScalarDistribution::uniform(0.3, 0.7),
                                                   ScalarDistribution::truncated_gaussian(0.5, 0.1, 0.0, 1.0));
  spec.name = "logistic";
  return spec;
}

inline BicycleParams vehicle_demo_params() {
  BicycleParams bp;
  bp.dt = 0.1;
  bp.beta = std::numbers::pi / 8.0;
  bp.length = 2.5;
  return bp;
}

/// Kinematic bicycle with a(t) ~ U(0.9, 1) and N(0, 0.1^2) uncertainty on X, Y, psi, v.
inline PolynomialSystemSpec vehicle_demo_model() {
  const BicycleParams bp = vehicle_demo_params();
  PolynomialSystemSpec spec =
      build_bicycle_model(bp, ScalarDistribution::uniform(0.9, 1.0), bicycle_initial_state(bp.beta, 0.1));
  spec.name = "vehicle";
  return spec;
}

}  // namespace momentprop
