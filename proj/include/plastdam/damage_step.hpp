#pragma once

/**
 * @file damage_step.hpp
 * @brief Second fractional step: minimize E(u_k, pi_k, zeta) + R2(zeta - zeta_prev)
 * over nodal damage 0 <= zeta <= 1 at frozen displacement and plastic strain.
 *
 * The elastic energy is affine in zeta, so with one-point quadrature it
 * reduces to d'zeta with nodal driving coefficients
 *   d_i = sum_{e ni i} A_e g_e / 3,   g_e = 1/2 (C1 - C0) e_el : e_el.
 * The gradient term is kappa2/2 zeta'K zeta with the P1 Laplacian K. The
 * dissipation is split with nodal increments zeta = zeta_prev + up - down,
 * charged with lumped weights w_i: b w_i up_i (healing) and a w_i down_i
 * (damage). This yields a box QP in the stacked vector [up; down].
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "plastdam/fields.hpp"
#include "plastdam/material.hpp"
#include "plastdam/qp_solver.hpp"

namespace plastdam {

struct DamageQp {
  BoxQp<SparseMatrix> qp;         ///< variables [up; down]
  Vector zeta_prev;
  Vector driving;                 ///< d_i [J]
  SparseMatrix gradient_stiffness;  ///< K (without kappa2)
};

struct DamageQpSolution {
  std::vector<double> zeta;
  std::vector<double> zeta_up;
  std::vector<double> zeta_down;
  std::vector<double> xi_const;  ///< nodal box multiplier, integrated [J]
  std::vector<double> driving;   ///< nodal driving coefficients used [J]
  double kkt_residual = 0.0;
  int iterations = 0;
  double dissipated_damage = 0.0;  ///< lumped R2 of the increment [J]
};

/// Nodal driving coefficients d_i = sum A_e g_e / 3 for the elastic strain e(u) - pi.
inline Vector damage_driving_coefficients(const Mesh& mesh, const std::vector<Vec2>& u, const std::vector<Mat2>& pi,
                                          const MaterialParams& p) {
  const auto strain = p1_strain(mesh, u);
  Vector d = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double share = mesh.element_area[e] * damage_driving_density(strain[e] - pi[e], p) / 3.0;
    for (int a = 0; a < 3; ++a) d[mesh.elements[e][a]] += share;
  }
  return d;
}

inline DamageQp assemble_damage_qp(const std::vector<Vec2>& u, const std::vector<Mat2>& pi,
                                   const std::vector<double>& zeta_prev, const Model& model) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());

  DamageQp out;
  out.gradient_stiffness = assemble_gradient_stiffness(mesh);
  out.driving = damage_driving_coefficients(mesh, u, pi, p);
  out.zeta_prev = Eigen::Map<const Vector>(zeta_prev.data(), n);

  const SparseMatrix& K = out.gradient_stiffness;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(4 * K.nonZeros()));
  for (Eigen::Index col = 0; col < K.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
      const double v = p.kappa2 * it.value();
      trips.emplace_back(it.row(), col, v);
      trips.emplace_back(it.row() + n, col + n, v);
      trips.emplace_back(it.row(), col + n, -v);
      trips.emplace_back(it.row() + n, col, -v);
    }
  out.qp.hessian.resize(2 * n, 2 * n);
  out.qp.hessian.setFromTriplets(trips.begin(), trips.end());

  const Vector smooth_grad = out.driving + p.kappa2 * (K * out.zeta_prev);
  const Vector w = Eigen::Map<const Vector>(mesh.lumped_weight.data(), n);
  out.qp.linear.resize(2 * n);
  out.qp.linear.head(n) = smooth_grad + p.b * w;
  out.qp.linear.tail(n) = -smooth_grad + p.a * w;
  out.qp.lower = Vector::Zero(2 * n);
  out.qp.upper.resize(2 * n);
  out.qp.upper.head(n) = (1.0 - out.zeta_prev.array()).matrix();
  out.qp.upper.tail(n) = out.zeta_prev;
  return out;
}

/// Box multiplier at nodes where zeta sits on 0 or 1, recovered from the
/// nodal stationarity of the smooth part G = d + kappa2 K zeta:
/// xi = -G - s with the dissipation slope s chosen from the subdifferential
/// w [-a, b] (or the one-sided value when zeta moved), clamped to the normal
/// cone of [0,1].
inline std::vector<double> box_multiplier(const Vector& smooth_grad, const std::vector<double>& zeta,
                                          const std::vector<double>& zeta_prev, const std::vector<double>& w,
                                          const MaterialParams& p) {
  std::vector<double> xi(zeta.size(), 0.0);
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    const bool at_zero = zeta[i] <= 0.0, at_one = zeta[i] >= 1.0;
    if (!at_zero && !at_one) continue;
    const double dz = zeta[i] - zeta_prev[i];
    double lo = -p.a * w[i], hi = p.b * w[i];
    if (dz < 0.0) hi = lo;
    else if (dz > 0.0) lo = hi;
    const double target = -smooth_grad[static_cast<Eigen::Index>(i)];
    const double slope = std::clamp(target, lo, hi);
    double v = target - slope;
    if (at_zero && !at_one) v = std::min(v, 0.0);
    if (at_one && !at_zero) v = std::max(v, 0.0);
    xi[i] = v;
  }
  return xi;
}

inline DamageQpSolution solve_damage(const std::vector<Vec2>& u, const std::vector<Mat2>& pi,
                                     const std::vector<double>& zeta_prev, const Model& model,
                                     const QpOptions& qp_opt = {}) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  const std::size_t n = mesh.num_nodes();
  const auto ni = static_cast<Eigen::Index>(n);
  const DamageQp dq = assemble_damage_qp(u, pi, zeta_prev, model);

  const QpSolution sol = solve_box_qp(dq.qp, Vector::Zero(2 * ni), qp_opt);

  DamageQpSolution out;
  out.zeta.resize(n);
  out.zeta_up.resize(n);
  out.zeta_down.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double up = sol.x[static_cast<Eigen::Index>(i)];
    double down = sol.x[static_cast<Eigen::Index>(i) + ni];
    // Both increments positive cannot be optimal; remove the common part.
    const double common = std::min(up, down);
    up -= common;
    down -= common;
    out.zeta_up[i] = up;
    out.zeta_down[i] = down;
    out.zeta[i] = std::clamp(zeta_prev[i] + up - down, 0.0, 1.0);
  }
  const Vector z = Eigen::Map<const Vector>(out.zeta.data(), ni);
  const Vector smooth_grad = dq.driving + p.kappa2 * (dq.gradient_stiffness * z);
  out.xi_const = box_multiplier(smooth_grad, out.zeta, zeta_prev, mesh.lumped_weight, p);
  out.driving.assign(dq.driving.data(), dq.driving.data() + ni);
  out.kkt_residual = sol.kkt_residual;
  out.iterations = sol.iterations;
  out.dissipated_damage = damage_dissipation(mesh, out.zeta, zeta_prev, p);
  return out;
}

/// Value of the damage step functional E(u, pi, zeta) + R2(zeta - zeta_prev).
inline double damage_step_functional(const std::vector<Vec2>& u, const std::vector<Mat2>& pi,
                                     const std::vector<double>& zeta, const std::vector<double>& zeta_prev,
                                     const Model& model) {
  return total_energy(State{u, pi, zeta}, model) + damage_dissipation(model.mesh, zeta, zeta_prev, model.params);
}

}  // namespace plastdam
