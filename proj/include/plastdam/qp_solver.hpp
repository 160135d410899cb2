#pragma once

/**
 * @file qp_solver.hpp
 * @brief Bound-constrained convex quadratic programming.
 *
 * Minimizes f(x) = 1/2 x'Hx + c'x subject to lower <= x <= upper for a
 * symmetric positive-semidefinite H. The method alternates projected
 * gradient sweeps with spectral (Barzilai-Borwein) step lengths, which
 * identify the active face, and conjugate-gradient minimization on the free
 * variables of that face followed by a projected search. Every iterate is
 * feasible and the objective never increases.
 *
 * The Hessian type only needs `H * x` and `H.rows()`, so dense and sparse
 * Eigen matrices both work.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plastdam {

template <class Matrix>
struct BoxQp {
  Matrix hessian;
  Eigen::VectorXd linear;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(hessian * x) + linear.dot(x); }
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multiplier_lower;
  Eigen::VectorXd multiplier_upper;
  double kkt_residual = 0.0;  ///< ||x - clamp(x - grad)||_inf
  double objective = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-9;  ///< relative to max(1, ||c||_inf)
  int max_iterations = 10000;
  int max_projected_steps = 25;  ///< per projected gradient phase
};

class QpError : public std::runtime_error {
 public:
  enum class Kind { iteration_cap, not_psd, bad_input };
  QpError(Kind kind, const std::string& what, QpSolution best = {})
      : std::runtime_error(what), kind_(kind), best_(std::move(best)) {}
  Kind kind() const { return kind_; }
  const QpSolution& best() const { return best_; }

 private:
  Kind kind_;
  QpSolution best_;
};

namespace qp_detail {

inline Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

inline double projected_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  if (x.size() == 0) return 0.0;
  return (x - clamp(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

}  // namespace qp_detail

/// Multipliers from the gradient g = Hx + c on active bounds; zero elsewhere.
template <class Matrix>
void recover_multipliers(const BoxQp<Matrix>& qp, QpSolution& sol) {
  const Eigen::VectorXd g = qp.hessian * sol.x + qp.linear;
  const auto n = sol.x.size();
  sol.multiplier_lower = Eigen::VectorXd::Zero(n);
  sol.multiplier_upper = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sol.x[i] <= qp.lower[i]) sol.multiplier_lower[i] = std::max(g[i], 0.0);
    if (sol.x[i] >= qp.upper[i]) sol.multiplier_upper[i] = std::max(-g[i], 0.0);
  }
  sol.kkt_residual = qp_detail::projected_residual(sol.x, g, qp.lower, qp.upper);
  sol.objective = qp.objective(sol.x);
}

template <class Matrix>
QpSolution solve_box_qp(const BoxQp<Matrix>& qp, const Eigen::VectorXd& x0, const QpOptions& opt = {}) {
  using Eigen::VectorXd;
  const Eigen::Index n = qp.linear.size();
  if (qp.hessian.rows() != n || qp.lower.size() != n || qp.upper.size() != n || x0.size() != n)
    throw QpError(QpError::Kind::bad_input, "box QP dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(qp.lower[i] <= qp.upper[i])) throw QpError(QpError::Kind::bad_input, "inconsistent bounds");
    if (x0[i] < qp.lower[i] || x0[i] > qp.upper[i])
      throw QpError(QpError::Kind::bad_input, "starting point violates bounds");
  }

  const double c_scale = std::max(1.0, n > 0 ? qp.linear.template lpNorm<Eigen::Infinity>() : 0.0);
  const double stop = opt.tol * c_scale;

  VectorXd x = x0;
  VectorXd Hx = qp.hessian * x;
  VectorXd g = Hx + qp.linear;
  double f = 0.5 * x.dot(Hx) + qp.linear.dot(x);

  auto finish = [&](int iters) {
    QpSolution sol;
    sol.x = x;
    sol.iterations = iters;
    recover_multipliers(qp, sol);
    return sol;
  };

  // Free variables: not held at a bound by the gradient. Ties (zero partial
  // gradient at a bound) count as free.
  auto free_mask = [&](const VectorXd& xv, const VectorXd& gv) {
    std::vector<char> m(static_cast<std::size_t>(n), 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (qp.lower[i] == qp.upper[i]) m[i] = 0;
      else if (xv[i] <= qp.lower[i] && gv[i] > 0.0) m[i] = 0;
      else if (xv[i] >= qp.upper[i] && gv[i] < 0.0) m[i] = 0;
    }
    return m;
  };

  // Scale of H for the indefiniteness test, from a few power iterations.
  double h_scale = 0.0;
  if (n > 0) {
    VectorXd v = VectorXd::LinSpaced(n, 1.0, 2.0).normalized();
    for (int k = 0; k < 8; ++k) {
      VectorXd Hv = qp.hessian * v;
      h_scale = Hv.norm();
      if (h_scale == 0.0) break;
      v = Hv / h_scale;
    }
  }

  // Power iteration on h_scale I - H. A clearly negative Rayleigh quotient
  // certifies indefiniteness; first-order stationarity alone would not.
  if (n > 0 && h_scale > 0.0) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
    v.normalize();
    double rq = 0.0;
    for (int k = 0; k < 30; ++k) {
      const VectorXd Hv = qp.hessian * v;
      rq = v.dot(Hv);
      const VectorXd w = h_scale * v - Hv;
      const double wn = w.norm();
      if (wn == 0.0) break;
      v = w / wn;
    }
    if (rq < -1e-8 * h_scale)
      throw QpError(QpError::Kind::not_psd, "box QP Hessian has a negative eigenvalue", finish(0));
  }

  auto curvature = [&](const VectorXd& d, const VectorXd& Hd) {
    const double dHd = d.dot(Hd);
    if (dHd < -1e-10 * h_scale * d.squaredNorm())
      throw QpError(QpError::Kind::not_psd, "negative curvature detected in box QP", finish(0));
    return std::max(dHd, 0.0);
  };

  // Projected Armijo search along the path P(x + alpha d).
  auto projected_search = [&](const VectorXd& d, double alpha) -> bool {
    for (int k = 0; k < 80; ++k) {
      VectorXd xn = qp_detail::clamp(x + alpha * d, qp.lower, qp.upper);
      const VectorXd step = xn - x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) return false;
      VectorXd Hxn = qp.hessian * xn;
      const double fn = 0.5 * xn.dot(Hxn) + qp.linear.dot(xn);
      if (fn <= f + 1e-4 * g.dot(step) && fn <= f) {
        x = std::move(xn);
        Hx = std::move(Hxn);
        g = Hx + qp.linear;
        f = fn;
        return true;
      }
      alpha *= 0.5;
    }
    return false;
  };

  double bb_step = 1.0;
  if (n > 0) {
    const double gHg = g.dot(qp.hessian * g);
    if (gHg > 0.0) bb_step = g.squaredNorm() / gHg;
  }
  const double long_step = 1e20;

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    if (qp_detail::projected_residual(x, g, qp.lower, qp.upper) <= stop) return finish(iter);
    const double f_start = f;

    // Projected gradient phase; stops once the face settles or progress
    // falls well below the best decrease of the phase.
    double best_decrease = 0.0;
    std::vector<char> mask = free_mask(x, g);
    for (int k = 0; k < opt.max_projected_steps; ++k) {
      const VectorXd x_old = x, g_old = g;
      const double f_old = f;
      if (!projected_search(-g, bb_step)) break;
      const VectorXd s = x - x_old;
      const double sy = curvature(s, g - g_old);
      bb_step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-20, long_step) : long_step;
      const double decrease = f_old - f;
      best_decrease = std::max(best_decrease, decrease);
      std::vector<char> new_mask = free_mask(x, g);
      const bool same_face = new_mask == mask;
      mask = std::move(new_mask);
      if (same_face || decrease <= 0.25 * best_decrease) break;
    }
    if (qp_detail::projected_residual(x, g, qp.lower, qp.upper) <= stop) return finish(iter + 1);

    // Subspace phase: conjugate gradients on the free variables.
    mask = free_mask(x, g);
    VectorXd r = -g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!mask[i]) r[i] = 0.0;
    const double r0 = r.norm();
    if (r0 > 0.0) {
      VectorXd d = VectorXd::Zero(n);
      VectorXd p = r;
      double rr = r.squaredNorm();
      bool flat = false;
      for (Eigen::Index k = 0; k < n + 5; ++k) {
        VectorXd Hp = qp.hessian * p;
        for (Eigen::Index i = 0; i < n; ++i)
          if (!mask[i]) Hp[i] = 0.0;
        const double pHp = curvature(p, Hp);
        if (pHp <= 1e-14 * h_scale * p.squaredNorm()) {
          // The objective is linear along p inside the face.
          if (k == 0) flat = true;
          break;
        }
        const double alpha = rr / pHp;
        d += alpha * p;
        r -= alpha * Hp;
        const double rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) <= 1e-14 * r0) break;
        p = r + (rr_new / rr) * p;
        rr = rr_new;
      }
      if (flat)
        projected_search(p, long_step / std::max(1.0, p.lpNorm<Eigen::Infinity>()));
      else if (!projected_search(d, 1.0))
        projected_search(-g, bb_step);
    }
    if (!(f < f_start) && qp_detail::projected_residual(x, g, qp.lower, qp.upper) > stop) {
      QpSolution best = finish(iter + 1);
      throw QpError(QpError::Kind::iteration_cap,
                    "box QP stalled (kkt residual " + std::to_string(best.kkt_residual) + ")", best);
    }
  }
  QpSolution best = finish(iter);
  throw QpError(QpError::Kind::iteration_cap,
                "box QP iteration cap reached (kkt residual " + std::to_string(best.kkt_residual) + ")", best);
}

}  // namespace plastdam
