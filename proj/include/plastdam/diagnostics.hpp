#pragma once

/**
 * @file diagnostics.hpp
 * @brief A-posteriori checks of a computed step: the approximate
 * maximum-dissipation residuum and the displacement stationarity residual.
 *
 * The residuum of step k compares the dissipation of the increments
 * (pi^k - pi^{k-1}, zeta^k - zeta^{k-1}) with the work of the driving forces
 * frozen at step k-1:
 *
 *   R = sigma_y |dpi| - xi_plast : dpi                                  (per element)
 *     + w (a dzeta^- + b dzeta^+) + (d + kappa2 K zeta^{k-1} + xi_const) dzeta  (per node)
 *
 * where xi_plast = 2 mu(zeta^{k-2}) (dev e(u^{k-1}) - pi^{k-1}) - H pi^{k-1} is the
 * plastic driving stress of step k-1 and d are the damage driving
 * coefficients of (u^{k-1}, pi^{k-1}). Displacements are stored including
 * their Dirichlet values, so e(u^{k-1}) already contains the boundary shift.
 * For k = 1 the damage two steps back is the initial damage.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "plastdam/damage_step.hpp"
#include "plastdam/fields.hpp"
#include "plastdam/material.hpp"

namespace plastdam {

struct AmdpRecord {
  int step = 0;
  std::vector<double> residuum_field;  ///< per-element density [Pa]
  double plastic_part = 0.0;           ///< [J]
  double damage_part = 0.0;            ///< [J]
  double residuum_integral = 0.0;      ///< [J]
  double cumulative_integral = 0.0;    ///< [J]
};

/// Step history needed by the residuum of step k.
struct AmdpHistory {
  const std::vector<double>& zeta_km2;  ///< damage at step k-2 (initial damage for k = 1)
  const State& q_km1;
  const std::vector<double>& xi_const_km1;  ///< box multiplier of step k-1 (zeros for k = 1)
  const State& q_k;
};

inline AmdpRecord amdp_step_residuum(int k, const AmdpHistory& h, const Model& model, double cumulative_before = 0.0) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  if (k < 1) throw std::invalid_argument("residuum needs a step index k >= 1");
  if (h.xi_const_km1.size() != mesh.num_nodes() || h.zeta_km2.size() != mesh.num_nodes())
    throw std::invalid_argument("residuum history of step k-1 is incomplete");

  AmdpRecord rec;
  rec.step = k;
  rec.residuum_field.assign(mesh.num_elements(), 0.0);

  const auto strain = p1_strain(mesh, h.q_km1.u);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Mat2 dpi = h.q_k.pi[e] - h.q_km1.pi[e];
    if (dpi.isZero(0.0)) continue;
    const Mat2 xi = plastic_driving_stress(strain[e], h.q_km1.pi[e], mean_zeta(mesh, h.zeta_km2, e), p);
    const double density = plastic_dissipation_density(dpi, p) - ddot(xi, dpi);
    rec.residuum_field[e] += density;
    rec.plastic_part += mesh.element_area[e] * density;
  }

  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  const Vector zeta_km1 = Eigen::Map<const Vector>(h.q_km1.zeta.data(), n);
  const Vector smooth_grad = damage_driving_coefficients(mesh, h.q_km1.u, h.q_km1.pi, p) +
                             p.kappa2 * (assemble_gradient_stiffness(mesh) * zeta_km1);
  std::vector<double> nodal(mesh.num_nodes(), 0.0);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const double dz = h.q_k.zeta[i] - h.q_km1.zeta[i];
    if (dz == 0.0) continue;
    nodal[i] = mesh.lumped_weight[i] * damage_dissipation_density(dz, p) +
               (smooth_grad[static_cast<Eigen::Index>(i)] + h.xi_const_km1[i]) * dz;
    rec.damage_part += nodal[i];
  }
  // Scatter nodal contributions to the adjacent elements in proportion to area.
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (int a = 0; a < 3; ++a) {
      const int i = mesh.elements[e][a];
      if (nodal[i] != 0.0) rec.residuum_field[e] += nodal[i] / (3.0 * mesh.lumped_weight[i]);
    }

  rec.residuum_integral = rec.plastic_part + rec.damage_part;
  rec.cumulative_integral = cumulative_before + rec.residuum_integral;
  return rec;
}

/// Stationarity residual of the displacement equation: largest free-dof
/// force imbalance relative to the largest reaction at constrained dofs.
inline double euler_lagrange_residual(const State& s, const Model& model) {
  const Vector r = displacement_gradient(s, model);
  const DofPartition dofs = DofPartition::from(model.mesh, model.tags);
  double free_max = 0.0, fixed_max = 0.0;
  for (int d : dofs.free) free_max = std::max(free_max, std::abs(r[d]));
  for (int d : dofs.fixed) fixed_max = std::max(fixed_max, std::abs(r[d]));
  if (fixed_max == 0.0) return free_max;
  return free_max / fixed_max;
}

}  // namespace plastdam
