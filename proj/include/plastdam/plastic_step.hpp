#pragma once

/**
 * @file plastic_step.hpp
 * @brief First fractional step: minimize E(u, pi, zeta_frozen) + R1(pi - pi_prev)
 * over (u, pi) with the damage frozen at its previous value.
 *
 * The functional is jointly convex. It is minimized by alternating exact
 * minimizations: a linear elastic solve for u at fixed pi (the constrained
 * stiffness is factored once per call), then the closed-form return map on
 * every element at fixed u. Each half-step cannot increase the functional.
 */

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "plastdam/fields.hpp"
#include "plastdam/material.hpp"

namespace plastdam {

struct PlasticStepOptions {
  double energy_rtol = 1e-12;     ///< stop on relative decrease of the step functional
  double increment_rtol = 1e-10;  ///< stop on relative displacement increment
  int max_sweeps = 200;
};

struct PlasticStepReport {
  int iterations = 0;
  double energy_final = 0.0;       ///< stored energy at (u_k, pi_k, zeta_frozen) [J]
  double increment_norm = 0.0;     ///< last relative u increment
  double dissipated_plastic = 0.0; ///< sigma_y sum A |pi_k - pi_prev| [J]
  double step_functional = 0.0;    ///< energy_final + dissipated_plastic
};

struct PlasticStepResult {
  std::vector<Vec2> u;
  std::vector<Mat2> pi;
  PlasticStepReport report;
};

class PlasticStepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace plastic_detail {

/// Linear form of the elastic energy in u produced by a frozen plastic
/// strain: f_ai = A (C(zeta) pi grad phi_a)_i, plus the body force.
inline Vector plastic_load(const Model& model, const std::vector<Mat2>& pi, const std::vector<double>& zeta) {
  const Mesh& mesh = model.mesh;
  Vector f = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double z = mean_zeta(mesh, zeta, e);
    const Mat2 sigma_p = model.params.lambda(z) * pi[e].trace() * Mat2::Identity() + 2.0 * model.params.mu(z) * pi[e];
    for (int a = 0; a < 3; ++a)
      f.segment<2>(2 * mesh.elements[e][a]) += mesh.element_area[e] * (sigma_p * mesh.grad_phi[e][a]);
  }
  const Vec2& g = model.load.body_force;
  if (g.squaredNorm() > 0.0)
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) f.segment<2>(2 * i) += mesh.lumped_weight[i] * g;
  return f;
}

}  // namespace plastic_detail

/// Value of the plastic step functional E(u, pi, zeta) + R1(pi - pi_prev).
inline double plastic_step_functional(const std::vector<Vec2>& u, const std::vector<Mat2>& pi,
                                      const std::vector<Mat2>& pi_prev, const std::vector<double>& zeta,
                                      const Model& model) {
  return total_energy(State{u, pi, zeta}, model) + plastic_dissipation(model.mesh, pi, pi_prev, model.params);
}

inline PlasticStepResult solve_plastic(const State& prev, const std::vector<double>& zeta_frozen, double t_k,
                                       const Model& model, const PlasticStepOptions& opt = {}) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  for (double z : zeta_frozen)
    if (!(z >= 0.0 && z <= 1.0)) throw std::domain_error("frozen damage outside [0,1]");

  const DofPartition dofs = DofPartition::from(mesh, model.tags);
  const SparseMatrix K = assemble_elastic_stiffness(mesh, zeta_frozen, p);
  // Two fully clamped vertices remove the rigid motions of a connected mesh.
  if (model.tags.dirichlet_xy.size() < 2)
    throw PlasticStepError("constrained elastic stiffness is singular; check the boundary tagging");
  Eigen::SimplicialLDLT<SparseMatrix> solver(restrict_to_free(K, dofs));
  if (solver.info() != Eigen::Success || (solver.vectorD().size() > 0 && !(solver.vectorD().minCoeff() > 0.0)))
    throw PlasticStepError("constrained elastic stiffness is singular; check the boundary tagging");

  State s = impose_dirichlet(State{prev.u, prev.pi, zeta_frozen}, t_k, mesh, model.tags, model.load);
  Vector u = flatten(s.u);
  Vector u_fixed = Vector::Zero(u.size());
  for (int d : dofs.fixed) u_fixed[d] = u[d];
  const Vector K_fixed = K * u_fixed;

  PlasticStepResult out;
  std::vector<Mat2> pi = prev.pi;
  double functional_prev = std::numeric_limits<double>::infinity();
  const auto nf = static_cast<Eigen::Index>(dofs.free.size());

  int sweep = 1;
  for (;; ++sweep) {
    const Vector rhs_full = plastic_detail::plastic_load(model, pi, zeta_frozen) - K_fixed;
    Vector rhs(nf);
    for (Eigen::Index i = 0; i < nf; ++i) rhs[i] = rhs_full[dofs.free[i]];
    const Vector uf = solver.solve(rhs);
    if (solver.info() != Eigen::Success) throw PlasticStepError("linear solve failed in plastic step");

    Vector u_new = u_fixed;
    for (Eigen::Index i = 0; i < nf; ++i) u_new[dofs.free[i]] = uf[i];
    const double du = (u_new - u).norm();
    const double u_scale = u_new.norm();
    u = std::move(u_new);

    const std::vector<Vec2> u_nodes = unflatten(u);
    const auto strain = p1_strain(mesh, u_nodes);
    bool pi_changed = false;
    std::vector<Mat2> pi_new(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      pi_new[e] = return_map(strain[e], prev.pi[e], mean_zeta(mesh, zeta_frozen, e), p).pi;
      if (pi_new[e] != pi[e]) pi_changed = true;
    }
    pi = std::move(pi_new);

    const double functional = plastic_step_functional(u_nodes, pi, prev.pi, zeta_frozen, model);
    out.report.increment_norm = u_scale > 0.0 ? du / u_scale : du;
    out.report.iterations = sweep;
    const bool energy_stalled =
        sweep > 1 && functional_prev - functional <= opt.energy_rtol * std::abs(functional);
    const bool increment_small = sweep > 1 && out.report.increment_norm <= opt.increment_rtol;
    functional_prev = functional;
    if (!pi_changed || energy_stalled || increment_small) break;
    if (sweep >= opt.max_sweeps)
      throw PlasticStepError("plastic step reached the sweep cap (" + std::to_string(opt.max_sweeps) +
                             "), last relative increment " + std::to_string(out.report.increment_norm));
  }

  out.u = unflatten(u);
  out.pi = std::move(pi);
  out.report.energy_final = total_energy(State{out.u, out.pi, zeta_frozen}, model);
  out.report.dissipated_plastic = plastic_dissipation(mesh, out.pi, prev.pi, p);
  out.report.step_functional = out.report.energy_final + out.report.dissipated_plastic;
  return out;
}

}  // namespace plastdam
