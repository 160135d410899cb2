#pragma once

/**
 * @file presets.hpp
 * @brief Material data and loading of the two tension experiments.
 */

#include "plastdam/fields.hpp"
#include "plastdam/material.hpp"

namespace plastdam::presets {

inline constexpr double young = 27e9;         // Pa
inline constexpr double poisson = 0.2;
inline constexpr double lambda_damaged = 750.0;  // Pa
inline constexpr double mu_damaged = 112.5;      // Pa
inline constexpr double yield_stress = 2e6;      // Pa
inline constexpr double activation = 1.2e3;      // Pa
inline constexpr double healing_factor = 1e6;    // b = healing_factor * a
inline constexpr double kappa2 = 1e-3;           // J/m
inline constexpr double t_end = 80.0;
inline constexpr double ramp_rate = 1e-3;        // m per unit process time
inline constexpr int n_sub = 24;

inline MaterialParams material() {
  const Lame intact = lame_from_young_poisson(young, poisson);
  MaterialParams p;
  p.lambda1 = intact.lambda;
  p.mu1 = intact.mu;
  p.lambda0 = lambda_damaged;
  p.mu0 = mu_damaged;
  p.hardening = young / 20.0;
  p.sigma_y = yield_stress;
  p.a = activation;
  p.b = healing_factor * activation;
  p.kappa2 = kappa2;
  return p;
}

inline LoadProgram loading(Variant variant, double tau = 1.0) {
  LoadProgram l;
  l.t_end = t_end;
  l.tau = tau;
  l.ramp_rate = ramp_rate;
  l.variant = variant;
  return l;
}

}  // namespace plastdam::presets
