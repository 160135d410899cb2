#pragma once

/**
 * @file material.hpp
 * @brief Pointwise constitutive law: damage-dependent isotropic elasticity,
 * linear kinematic hardening, von Mises yield set and rate-independent
 * dissipation densities.
 *
 * Tensors are 2x2 and the deviator is taken in the planar sense,
 * dev A = A - tr(A)/2 I. Plastic strain is always trace-free.
 */

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace plastdam {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct MaterialParams {
  double lambda1 = 0.0;  ///< intact Lame lambda [Pa]
  double mu1 = 0.0;      ///< intact shear modulus [Pa]
  double lambda0 = 0.0;  ///< fully damaged Lame lambda [Pa]
  double mu0 = 0.0;      ///< fully damaged shear modulus [Pa]
  double hardening = 0.0;  ///< kinematic hardening modulus on deviators [Pa]
  double sigma_y = 0.0;  ///< yield stress [Pa]
  double a = 0.0;        ///< damage activation energy [Pa]
  double b = 0.0;        ///< healing threshold [Pa]
  double kappa2 = 0.0;   ///< damage gradient coefficient [J/m]

  double lambda(double zeta) const { return lambda0 + zeta * (lambda1 - lambda0); }
  double mu(double zeta) const { return mu0 + zeta * (mu1 - mu0); }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("material parameter constraint violated: ") + what);
    };
    require(lambda1 >= lambda0, "lambda1 >= lambda0");
    require(lambda0 >= 0.0, "lambda0 >= 0");
    require(mu1 >= mu0, "mu1 >= mu0");
    require(mu0 > 0.0, "mu0 > 0");
    require(sigma_y > 0.0, "sigma_y > 0");
    require(hardening > 0.0, "hardening > 0");
    require(a > 0.0, "a > 0");
    require(b >= a, "b >= a");
    require(kappa2 > 0.0, "kappa2 > 0");
  }
};

struct Lame {
  double lambda;
  double mu;
};

inline Lame lame_from_young_poisson(double young, double poisson) {
  if (!(young > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw std::invalid_argument("Poisson's ratio must lie in (-1, 0.5)");
  return {young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)), young / (2.0 * (1.0 + poisson))};
}

inline Mat2 dev(const Mat2& A) { return A - 0.5 * A.trace() * Mat2::Identity(); }

/// Frobenius norm |A| = sqrt(A:A).
inline double tnorm(const Mat2& A) { return std::sqrt(A.cwiseProduct(A).sum()); }

inline double ddot(const Mat2& A, const Mat2& B) { return A.cwiseProduct(B).sum(); }

inline void check_damage_range(double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0))
    throw std::domain_error("damage value " + std::to_string(zeta) + " outside [0,1]");
}

/// sigma = lambda(zeta) tr(e) I + 2 mu(zeta) e.
inline Mat2 stress(const Mat2& e_el, double zeta, const MaterialParams& p) {
  check_damage_range(zeta);
  return p.lambda(zeta) * e_el.trace() * Mat2::Identity() + 2.0 * p.mu(zeta) * e_el;
}

/// 1/2 C(zeta) e:e without range checks; used in inner loops.
inline double elastic_energy_density(const Mat2& e_el, double zeta, const MaterialParams& p) {
  const double tr = e_el.trace();
  return 0.5 * p.lambda(zeta) * tr * tr + p.mu(zeta) * ddot(e_el, e_el);
}

/// Damage driving density 1/2 (C1 - C0) e:e, the derivative of the elastic
/// energy density with respect to zeta.
inline double damage_driving_density(const Mat2& e_el, const MaterialParams& p) {
  const double tr = e_el.trace();
  return 0.5 * (p.lambda1 - p.lambda0) * tr * tr + (p.mu1 - p.mu0) * ddot(e_el, e_el);
}

inline double plastic_dissipation_density(const Mat2& delta_pi, const MaterialParams& p) {
  return p.sigma_y * tnorm(delta_pi);
}

inline double damage_dissipation_density(double delta_zeta, const MaterialParams& p) {
  return delta_zeta < 0.0 ? -p.a * delta_zeta : p.b * delta_zeta;
}

inline double stored_energy_density(const Mat2& e_total, const Mat2& pi, double zeta,
                                    const Vec2& grad_zeta, const MaterialParams& p) {
  check_damage_range(zeta);
  if (std::abs(pi.trace()) > 1e-10) throw std::domain_error("plastic strain must be trace-free");
  return elastic_energy_density(e_total - pi, zeta, p) + 0.5 * p.hardening * ddot(pi, pi) +
         0.5 * p.kappa2 * grad_zeta.squaredNorm();
}

/// Plastic driving stress 2 mu(zeta) (dev e - pi) - H pi; lies in the yield
/// set after a return map.
inline Mat2 plastic_driving_stress(const Mat2& e_total, const Mat2& pi, double zeta, const MaterialParams& p) {
  return 2.0 * p.mu(zeta) * (dev(e_total) - pi) - p.hardening * pi;
}

/// Elementwise objective minimized by the return map.
inline double return_map_objective(const Mat2& pi, const Mat2& e_total, const Mat2& pi_prev, double zeta,
                                   const MaterialParams& p) {
  return elastic_energy_density(e_total - pi, zeta, p) + 0.5 * p.hardening * ddot(pi, pi) +
         plastic_dissipation_density(pi - pi_prev, p);
}

struct ReturnMapResult {
  Mat2 pi;
  double dissipated;  ///< sigma_y |pi - pi_prev| [Pa]
};

/// Closed-form minimizer of return_map_objective over trace-free pi.
/// The tie |s_trial| == sigma_y stays elastic.
inline ReturnMapResult return_map(const Mat2& e_total, const Mat2& pi_prev, double zeta, const MaterialParams& p) {
  if (std::abs(pi_prev.trace()) > 1e-10) throw std::domain_error("previous plastic strain must be trace-free");
  const Mat2 s_trial = plastic_driving_stress(e_total, pi_prev, zeta, p);
  const double s_norm = tnorm(s_trial);
  if (s_norm <= p.sigma_y) return {pi_prev, 0.0};
  const double gamma = (s_norm - p.sigma_y) / (2.0 * p.mu(zeta) + p.hardening);
  Mat2 pi = pi_prev + (gamma / s_norm) * s_trial;
  // keep pi exactly symmetric and trace-free
  pi(1, 0) = pi(0, 1);
  pi(1, 1) = -pi(0, 0);
  return {pi, p.sigma_y * tnorm(pi - pi_prev)};
}

}  // namespace plastdam
