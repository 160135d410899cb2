#pragma once

// Independent reference solvers used by the unit tests and the acceptance run.
// They only evaluate objectives; none of them calls the solvers under test.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "plastdam/material.hpp"
#include "plastdam/qp_solver.hpp"

namespace oracle {

using plastdam::Mat2;
using plastdam::MaterialParams;

/// Elementwise plastic objective, written out from the energy density:
/// 1/2 lambda tr(e-pi)^2 + mu |e-pi|^2 + 1/2 h |pi|^2 + sigma_y |pi - pi_prev|.
inline double elementwise_objective(const Mat2& pi, const Mat2& e, const Mat2& pi_prev, double zeta,
                                    const MaterialParams& p) {
  const double lam = p.lambda0 + zeta * (p.lambda1 - p.lambda0);
  const double mu = p.mu0 + zeta * (p.mu1 - p.mu0);
  const Mat2 el = e - pi;
  const double tr = el(0, 0) + el(1, 1);
  double sq = 0.0, hp = 0.0, dp = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      sq += el(i, j) * el(i, j);
      hp += pi(i, j) * pi(i, j);
      dp += (pi(i, j) - pi_prev(i, j)) * (pi(i, j) - pi_prev(i, j));
    }
  return 0.5 * lam * tr * tr + mu * sq + 0.5 * p.hardening * hp + p.sigma_y * std::sqrt(dp);
}

inline Mat2 deviatoric(double x, double y) {
  Mat2 m;
  m << x, y, y, -x;
  return m;
}

struct BruteForceResult {
  Mat2 pi;
  double objective;
};

/// Minimizes the elementwise objective over deviatoric pi by sampling rays
/// from pi_prev. Along a ray the objective is quadratic in the ray length, so
/// each ray is minimized from three samples; the best direction is then
/// refined by golden-section search.
inline BruteForceResult brute_force_return_map(const Mat2& e, const Mat2& pi_prev, double zeta,
                                               const MaterialParams& p, int directions = 720) {
  const double f0 = elementwise_objective(pi_prev, e, pi_prev, zeta, p);
  const double scale = std::max({1e-12, std::abs(e(0, 0)) + std::abs(e(0, 1)) + std::abs(e(1, 1)),
                                 std::abs(pi_prev(0, 0)) + std::abs(pi_prev(0, 1))});
  auto ray = [&](double theta, double& r_best) {
    const Mat2 d = deviatoric(std::cos(theta), std::sin(theta));
    const double h = scale;
    const double f1 = elementwise_objective(pi_prev + h * d, e, pi_prev, zeta, p);
    const double f2 = elementwise_objective(pi_prev + 2.0 * h * d, e, pi_prev, zeta, p);
    // f(r) = A r^2 + B r + f0 on r >= 0, with r in units of h
    const double A = 0.5 * (f2 - 2.0 * f1 + f0);
    const double B = f1 - f0 - A;
    const double r = (A > 0.0 && B < 0.0) ? -B / (2.0 * A) : 0.0;
    r_best = r * h;
    return elementwise_objective(pi_prev + r_best * d, e, pi_prev, zeta, p);
  };
  double best = f0, best_theta = 0.0, best_r = 0.0;
  const double step = 2.0 * std::numbers::pi / directions;
  for (int k = 0; k < directions; ++k) {
    double r;
    const double f = ray(k * step, r);
    if (f < best) {
      best = f;
      best_theta = k * step;
      best_r = r;
    }
  }
  if (best_r > 0.0) {
    double lo = best_theta - step, hi = best_theta + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double r;
    for (int it = 0; it < 80; ++it) {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (ray(m1, r) < ray(m2, r)) hi = m2;
      else lo = m1;
    }
    best_theta = 0.5 * (lo + hi);
    const double f = ray(best_theta, r);
    if (f < best) {
      best = f;
      best_r = r;
    }
  }
  const Mat2 pi = best_r > 0.0 ? Mat2(pi_prev + best_r * deviatoric(std::cos(best_theta), std::sin(best_theta)))
                               : pi_prev;
  return {pi, best};
}

// ---- box QP ----

struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd c, lo, hi;
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + c.dot(x); }
};

/// Random PSD instance: H = Q diag(ev) Q' with a few exactly zero eigenvalues.
inline DenseQp random_psd_qp(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = normal(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev[i] = uni(rng) < 0.2 ? 0.0 : 0.05 + 10.0 * uni(rng);
  DenseQp qp;
  qp.H = Q * ev.asDiagonal() * Q.transpose();
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.c.resize(n);
  qp.lo.resize(n);
  qp.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    qp.c[i] = 5.0 * normal(rng);
    qp.lo[i] = -uni(rng);
    qp.hi[i] = uni(rng) < 0.1 ? qp.lo[i] : qp.lo[i] + 2.0 * uni(rng);
  }
  return qp;
}

/// Exhaustive search over the 3^n active-set patterns. Every KKT point of a
/// convex QP is optimal, and the optimal set has a vertex at which the free
/// block of H is nonsingular, so singular patterns can be skipped and the
/// first pattern passing the KKT test gives the optimal value.
inline std::optional<double> enumerate_box_qp(const DenseQp& qp, double tol = 1e-9) {
  const int n = static_cast<int>(qp.c.size());
  const double scale = std::max(1.0, qp.c.lpNorm<Eigen::Infinity>() + qp.H.lpNorm<Eigen::Infinity>());
  std::vector<int> state(n, 0);  // 0 free, 1 at lower, 2 at upper
  while (true) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) x[i] = qp.lo[i];
      else if (state[i] == 2) x[i] = qp.hi[i];
      else free.push_back(i);
    }
    bool ok = true;
    if (!free.empty()) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd Hff(m, m);
      Eigen::VectorXd rhs(m);
      for (int a = 0; a < m; ++a) {
        rhs[a] = -qp.c[free[a]];
        for (int b = 0; b < m; ++b) Hff(a, b) = qp.H(free[a], free[b]);
        for (int j = 0; j < n; ++j)
          if (state[j] != 0) rhs[a] -= qp.H(free[a], j) * x[j];
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(Hff);
      if (!lu.isInvertible()) ok = false;
      else {
        const Eigen::VectorXd xf = lu.solve(rhs);
        for (int a = 0; a < m; ++a) x[free[a]] = xf[a];
      }
    }
    if (ok) {
      const Eigen::VectorXd g = qp.H * x + qp.c;
      for (int i = 0; i < n && ok; ++i) {
        const double bt = tol * std::max(1.0, std::abs(qp.hi[i] - qp.lo[i]));
        if (x[i] < qp.lo[i] - bt || x[i] > qp.hi[i] + bt) ok = false;
        const bool fixed = qp.lo[i] == qp.hi[i];
        if (state[i] == 1 && !fixed && g[i] < -tol * scale) ok = false;
        if (state[i] == 2 && !fixed && g[i] > tol * scale) ok = false;
        if (state[i] == 0 && std::abs(g[i]) > tol * scale) ok = false;
      }
      if (ok) return qp.objective(x);
    }
    int i = 0;
    while (i < n && state[i] == 2) state[i++] = 0;
    if (i == n) return std::nullopt;
    ++state[i];
  }
}

/// Accelerated projected gradient with adaptive restart, run until the
/// projected residual drops below tol.
/// Projected residual of a box QP at x.
inline double kkt_residual(const DenseQp& qp, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = qp.H * x + qp.c;
  return (x - (x - g).cwiseMax(qp.lo).cwiseMin(qp.hi)).lpNorm<Eigen::Infinity>();
}

/// Accelerated projected gradient (FISTA with restart).  Every 100 iterations
/// the face suggested by the iterate is solved exactly; the result is accepted
/// only if it is feasible and passes the KKT test.
inline double long_run_box_qp(const DenseQp& qp, double tol = 1e-11, long max_iter = 2'000'000) {
  const Eigen::Index n = qp.c.size();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qp.H, Eigen::EigenvaluesOnly);
  const double L = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  auto proj = [&](const Eigen::VectorXd& v) { return v.cwiseMax(qp.lo).cwiseMin(qp.hi); };
  const double scale = std::max(1.0, qp.c.lpNorm<Eigen::Infinity>());
  const double width = std::max(1.0, (qp.hi - qp.lo).lpNorm<Eigen::Infinity>());

  auto polish = [&](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
    const Eigen::VectorXd g = qp.H * x + qp.c;
    const double eps = 1e-7 * width;
    Eigen::VectorXd z = x;
    std::vector<Eigen::Index> fr;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] <= qp.lo[i] + eps && g[i] >= 0.0) z[i] = qp.lo[i];
      else if (x[i] >= qp.hi[i] - eps && g[i] <= 0.0) z[i] = qp.hi[i];
      else fr.push_back(i);
    }
    if (!fr.empty()) {
      const auto m = static_cast<Eigen::Index>(fr.size());
      Eigen::MatrixXd Hff(m, m);
      Eigen::VectorXd rhs(m);
      Eigen::VectorXd zb = z;
      for (Eigen::Index a = 0; a < m; ++a) zb[fr[a]] = 0.0;
      const Eigen::VectorXd r0 = qp.H * zb + qp.c;
      for (Eigen::Index a = 0; a < m; ++a) {
        rhs[a] = -r0[fr[a]];
        for (Eigen::Index b = 0; b < m; ++b) Hff(a, b) = qp.H(fr[a], fr[b]);
      }
      // singular faces: take the solution closest to the current iterate
      Eigen::VectorXd xf(m);
      for (Eigen::Index a = 0; a < m; ++a) xf[a] = x[fr[a]];
      const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Hff);
      xf += cod.solve(rhs - Hff * xf);
      for (Eigen::Index a = 0; a < m; ++a) {
        if (xf[a] < qp.lo[fr[a]] - 1e-12 * width || xf[a] > qp.hi[fr[a]] + 1e-12 * width) return std::nullopt;
        z[fr[a]] = std::clamp(xf[a], qp.lo[fr[a]], qp.hi[fr[a]]);
      }
    }
    if (kkt_residual(qp, z) <= tol * scale) return z;
    return std::nullopt;
  };

  Eigen::VectorXd x = proj(Eigen::VectorXd::Zero(n)), y = x;
  double t = 1.0, f_prev = qp.objective(x);
  for (long it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd x_new = proj(y - (qp.H * y + qp.c) / L);
    const double f = qp.objective(x_new);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (f > f_prev + 1e-14 * std::max(1.0, std::abs(f_prev)) && t > 1.0) {  // restart momentum
      y = x;
      t = 1.0;
    } else {
      y = x_new + ((t - 1.0) / t_new) * (x_new - x);
      x = x_new;
      t = t_new;
      f_prev = std::min(f_prev, f);
    }
    if (it % 100 == 0) {
      if (const auto z = polish(x)) return qp.objective(*z);
    }
  }
  throw std::runtime_error("long_run_box_qp: no KKT point found");
}

inline plastdam::BoxQp<Eigen::MatrixXd> to_box_qp(const DenseQp& d) { return {d.H, d.c, d.lo, d.hi}; }

}  // namespace oracle
