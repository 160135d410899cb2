#pragma once

/**
 * @file fields.hpp
 * @brief Discrete state, loading program and global finite-element operators.
 *
 * Displacement and damage are P1 (nodal), plastic strain is P0
 * (elementwise). All integrals use one-point quadrature at the centroid,
 * which is exact for the P0/P1 integrands involved. Displacement degrees of
 * freedom are interleaved: dof 2*i + c is component c of node i.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "plastdam/material.hpp"
#include "plastdam/mesh.hpp"

namespace plastdam {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct State {
  std::vector<Vec2> u;     ///< nodal displacement [m]
  std::vector<Mat2> pi;    ///< elementwise plastic strain, trace-free
  std::vector<double> zeta;  ///< nodal damage, 1 = intact

  /// Undeformed, plastically virgin, intact material.
  static State initial(const Mesh& mesh) {
    return {std::vector<Vec2>(mesh.num_nodes(), Vec2::Zero()),
            std::vector<Mat2>(mesh.num_elements(), Mat2::Zero()), std::vector<double>(mesh.num_nodes(), 1.0)};
  }
};

struct LoadProgram {
  double t_end = 80.0;
  double tau = 1.0;
  double ramp_rate = 1e-3;  ///< horizontal shift per unit process time [m]
  Variant variant = Variant::asymmetric;
  Vec2 body_force = Vec2::Zero();  ///< [N/m^3]

  int num_steps() const {
    if (!(tau > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("t_end and tau must be positive");
    const double ratio = t_end / tau;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
      throw std::invalid_argument("t_end/tau must be an integer (t_end=" + std::to_string(t_end) +
                                  ", tau=" + std::to_string(tau) + ")");
    return static_cast<int>(rounded);
  }
  double time(int k) const { return k * tau; }
  double shift(double t) const { return ramp_rate * t; }
};

/// Everything that stays fixed during a run.
struct Model {
  Mesh mesh;
  BoundaryTags tags;
  MaterialParams params;
  LoadProgram load;

  Model(Mesh m, MaterialParams p, LoadProgram l)
      : mesh(std::move(m)), tags(tag_boundaries(mesh, l.variant)), params(p), load(l) {}
};

inline double mean_zeta(const Mesh& mesh, const std::vector<double>& zeta, std::size_t e) {
  const auto& t = mesh.elements[e];
  return (zeta[t[0]] + zeta[t[1]] + zeta[t[2]]) / 3.0;
}

inline Vec2 element_gradient(const Mesh& mesh, const std::vector<double>& f, std::size_t e) {
  // Differences to the first vertex, so constant fields have exactly zero gradient.
  const auto& t = mesh.elements[e];
  return (f[t[1]] - f[t[0]]) * mesh.grad_phi[e][1] + (f[t[2]] - f[t[0]]) * mesh.grad_phi[e][2];
}

/// Affine extension of the Dirichlet data, u_D(t)(x, y) = (w(t) x, 0).
inline std::vector<Vec2> dirichlet_extension(const Mesh& mesh, double shift) {
  std::vector<Vec2> ud(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) ud[i] = Vec2(shift * mesh.nodes[i].x(), 0.0);
  return ud;
}

/// Constrained dof list and prescribed values at time t.
struct DirichletData {
  std::vector<int> dofs;
  std::vector<double> values;
};

inline DirichletData dirichlet_data(const Mesh& mesh, const BoundaryTags& tags, double shift) {
  DirichletData d;
  for (int n : tags.dirichlet_xy) {
    d.dofs.push_back(2 * n);
    d.values.push_back(shift * mesh.nodes[n].x());
    d.dofs.push_back(2 * n + 1);
    d.values.push_back(0.0);
  }
  for (int n : tags.dirichlet_x) {
    d.dofs.push_back(2 * n);
    d.values.push_back(shift * mesh.nodes[n].x());
  }
  return d;
}

inline State impose_dirichlet(State state, double t, const Mesh& mesh, const BoundaryTags& tags,
                              const LoadProgram& load) {
  const DirichletData d = dirichlet_data(mesh, tags, load.shift(t));
  for (std::size_t i = 0; i < d.dofs.size(); ++i) state.u[d.dofs[i] / 2][d.dofs[i] % 2] = d.values[i];
  return state;
}

inline void check_state(const Mesh& mesh, const State& s) {
  if (s.u.size() != mesh.num_nodes() || s.zeta.size() != mesh.num_nodes() || s.pi.size() != mesh.num_elements())
    throw std::invalid_argument("state dimensions do not match the mesh");
  for (double z : s.zeta)
    if (!(z >= 0.0 && z <= 1.0)) throw std::domain_error("damage outside [0,1]");
  for (const Mat2& p : s.pi)
    if (std::abs(p.trace()) > 1e-10) throw std::domain_error("plastic strain not trace-free");
}

/// Split of the stored energy; gradient term uses the exact P1 stiffness.
struct EnergyParts {
  double elastic = 0.0;
  double hardening = 0.0;
  double gradient = 0.0;
  double body_work = 0.0;
  double total() const { return elastic + hardening + gradient - body_work; }
};

inline EnergyParts energy_parts(const State& s, const Model& model) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  check_state(mesh, s);
  const auto strain = p1_strain(mesh, s.u);
  EnergyParts parts;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double area = mesh.element_area[e];
    const double z = mean_zeta(mesh, s.zeta, e);
    parts.elastic += area * elastic_energy_density(strain[e] - s.pi[e], z, p);
    parts.hardening += area * 0.5 * p.hardening * ddot(s.pi[e], s.pi[e]);
    parts.gradient += area * 0.5 * p.kappa2 * element_gradient(mesh, s.zeta, e).squaredNorm();
  }
  const Vec2& g = model.load.body_force;
  if (g.squaredNorm() > 0.0)
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) parts.body_work += mesh.lumped_weight[i] * g.dot(s.u[i]);
  return parts;
}

/// Stored energy of the state (per unit thickness) under the model's loading.
/// The time enters only through the Dirichlet values already in s.u.
inline double total_energy(const State& s, const Model& model) { return energy_parts(s, model).total(); }

inline double plastic_dissipation(const Mesh& mesh, const std::vector<Mat2>& pi, const std::vector<Mat2>& pi_prev,
                                  const MaterialParams& p) {
  double d = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    d += mesh.element_area[e] * plastic_dissipation_density(pi[e] - pi_prev[e], p);
  return d;
}

/// Damage dissipation with nodal (lumped) integration.
inline double damage_dissipation(const Mesh& mesh, const std::vector<double>& zeta,
                                 const std::vector<double>& zeta_prev, const MaterialParams& p) {
  double d = 0.0;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    d += mesh.lumped_weight[i] * damage_dissipation_density(zeta[i] - zeta_prev[i], p);
  return d;
}

/// Elastic stiffness at frozen damage: K_ab^ij = A [lambda g_a,i g_b,j + mu (delta_ij g_a.g_b + g_a,j g_b,i)].
inline SparseMatrix assemble_elastic_stiffness(const Mesh& mesh, const std::vector<double>& zeta,
                                               const MaterialParams& p) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.num_elements() * 36);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double area = mesh.element_area[e];
    const double z = mean_zeta(mesh, zeta, e);
    const double lam = p.lambda(z), mu = p.mu(z);
    const auto& g = mesh.grad_phi[e];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double gg = g[a].dot(g[b]);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double v = area * (lam * g[a][i] * g[b][j] + mu * ((i == j ? gg : 0.0) + g[a][j] * g[b][i]));
            trips.emplace_back(2 * mesh.elements[e][a] + i, 2 * mesh.elements[e][b] + j, v);
          }
      }
  }
  const auto n = static_cast<Eigen::Index>(2 * mesh.num_nodes());
  SparseMatrix K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

/// P1 Laplacian stiffness, K_ab = A g_a . g_b (no kappa2 factor).
inline SparseMatrix assemble_gradient_stiffness(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.num_elements() * 9);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trips.emplace_back(mesh.elements[e][a], mesh.elements[e][b],
                           mesh.element_area[e] * mesh.grad_phi[e][a].dot(mesh.grad_phi[e][b]));
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  SparseMatrix K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

inline Vector flatten(const std::vector<Vec2>& u) {
  Vector v(static_cast<Eigen::Index>(2 * u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v.segment<2>(static_cast<Eigen::Index>(2 * i)) = u[i];
  return v;
}

inline std::vector<Vec2> unflatten(const Vector& v) {
  std::vector<Vec2> u(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = v.segment<2>(static_cast<Eigen::Index>(2 * i));
  return u;
}

/// Gradient of the stored energy with respect to the nodal displacement:
/// r_ai = A (sigma grad phi_a)_i - body force share.
inline Vector displacement_gradient(const State& s, const Model& model) {
  const Mesh& mesh = model.mesh;
  const MaterialParams& p = model.params;
  const auto strain = p1_strain(mesh, s.u);
  Vector r = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double z = mean_zeta(mesh, s.zeta, e);
    const Mat2 sigma = p.lambda(z) * (strain[e] - s.pi[e]).trace() * Mat2::Identity() +
                       2.0 * p.mu(z) * (strain[e] - s.pi[e]);
    for (int a = 0; a < 3; ++a)
      r.segment<2>(2 * mesh.elements[e][a]) += mesh.element_area[e] * (sigma * mesh.grad_phi[e][a]);
  }
  const Vec2& g = model.load.body_force;
  if (g.squaredNorm() > 0.0)
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) r.segment<2>(2 * i) -= mesh.lumped_weight[i] * g;
  return r;
}

/// Split of the displacement dofs into free and constrained sets.
struct DofPartition {
  std::vector<int> free;
  std::vector<int> fixed;
  std::vector<int> free_index;  ///< global dof -> position in free, or -1

  static DofPartition from(const Mesh& mesh, const BoundaryTags& tags) {
    DofPartition d;
    const std::size_t n = 2 * mesh.num_nodes();
    std::vector<char> is_fixed(n, 0);
    for (int v : tags.dirichlet_xy) is_fixed[2 * v] = is_fixed[2 * v + 1] = 1;
    for (int v : tags.dirichlet_x) is_fixed[2 * v] = 1;
    d.free_index.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_fixed[i]) {
        d.fixed.push_back(static_cast<int>(i));
      } else {
        d.free_index[i] = static_cast<int>(d.free.size());
        d.free.push_back(static_cast<int>(i));
      }
    }
    return d;
  }
};

/// Restriction of a global symmetric matrix to the free dofs.
inline SparseMatrix restrict_to_free(const SparseMatrix& K, const DofPartition& dofs) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
    const int jc = dofs.free_index[static_cast<std::size_t>(col)];
    if (jc < 0) continue;
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
      const int ir = dofs.free_index[static_cast<std::size_t>(it.row())];
      if (ir >= 0) trips.emplace_back(ir, jc, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(dofs.free.size());
  SparseMatrix Kff(n, n);
  Kff.setFromTriplets(trips.begin(), trips.end());
  return Kff;
}

}  // namespace plastdam
