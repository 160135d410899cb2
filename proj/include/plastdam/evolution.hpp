#pragma once

/**
 * @file evolution.hpp
 * @brief Time loop of the fractional-step scheme.
 *
 * For k = 1..T/tau: impose the Dirichlet data at t_k, solve the plastic step
 * with the damage of step k-1, solve the damage step at the new (u, pi),
 * evaluate diagnostics and record. The loop performs no I/O; callers observe
 * steps through a callback.
 */

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plastdam/damage_step.hpp"
#include "plastdam/diagnostics.hpp"
#include "plastdam/fields.hpp"
#include "plastdam/plastic_step.hpp"

namespace plastdam {

struct EvolutionOptions {
  PlasticStepOptions plastic;
  QpOptions qp;
};

struct StepRecord {
  int k = 0;
  double t = 0.0;
  double energy = 0.0;           ///< E_k(q^k) [J]
  double energy_previous = 0.0;  ///< E_k(q^{k-1}) with the time-t_k Dirichlet data [J]
  double diss_plast_step = 0.0;
  double diss_dam_step = 0.0;
  double diss_plast_cum = 0.0;
  double diss_dam_cum = 0.0;
  double avg_von_mises = 0.0;    ///< integral of |dev sigma_el| [N]
  double amdp_step = 0.0;
  double amdp_cum = 0.0;
  double euler_lagrange = 0.0;
  double min_zeta = 1.0;
  PlasticStepReport plastic;
  int qp_iterations = 0;
  double qp_kkt_residual = 0.0;
};

struct TimeSeries {
  std::vector<StepRecord> steps;
};

/// Everything an observer may want to look at after step k.
struct StepView {
  const Model& model;
  const StepRecord& record;
  const State& previous;  ///< q^{k-1}; its zeta is the damage frozen in the plastic step
  const State& current;   ///< q^k
  const AmdpRecord& amdp;
  const DamageQpSolution& damage;
};

struct RunResult {
  TimeSeries series;
  State final_state;
};

class EvolutionError : public std::runtime_error {
 public:
  EvolutionError(const std::string& what, TimeSeries partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const TimeSeries& partial() const { return partial_; }

 private:
  TimeSeries partial_;
};

/// Integral of |dev sigma_el| with sigma_el = C(mean zeta)(e(u) - pi).
inline double average_von_mises(const State& s, const Model& model) {
  const Mesh& mesh = model.mesh;
  const auto strain = p1_strain(mesh, s.u);
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Mat2 sigma = stress(strain[e] - s.pi[e], mean_zeta(mesh, s.zeta, e), model.params);
    sum += mesh.element_area[e] * tnorm(dev(sigma));
  }
  return sum;
}

/// Per-element |dev sigma_el|.
inline std::vector<double> von_mises_field(const State& s, const Model& model) {
  const Mesh& mesh = model.mesh;
  const auto strain = p1_strain(mesh, s.u);
  std::vector<double> f(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    f[e] = tnorm(dev(stress(strain[e] - s.pi[e], mean_zeta(mesh, s.zeta, e), model.params)));
  return f;
}

/// q^{k-1} with its displacement shifted by the Dirichlet increment, so that
/// it satisfies the boundary data at t_k.
inline State shifted_to_time(const State& q, double shift_from, double shift_to, const Mesh& mesh) {
  State out = q;
  const double dw = shift_to - shift_from;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) out.u[i].x() += dw * mesh.nodes[i].x();
  return out;
}

using StepObserver = std::function<void(const StepView&)>;

inline RunResult run(const Model& model, const EvolutionOptions& opt = {}, const StepObserver& observer = {}) {
  model.params.validate();
  const int steps = model.load.num_steps();
  const Mesh& mesh = model.mesh;

  RunResult result;
  State previous = State::initial(mesh);
  std::vector<double> zeta_km2 = previous.zeta;
  std::vector<double> xi_const_km1(mesh.num_nodes(), 0.0);
  double diss_plast = 0.0, diss_dam = 0.0, amdp_cum = 0.0;

  for (int k = 1; k <= steps; ++k) {
    const double t = model.load.time(k);
    try {
      const PlasticStepResult ps = solve_plastic(previous, previous.zeta, t, model, opt.plastic);
      const DamageQpSolution ds = solve_damage(ps.u, ps.pi, previous.zeta, model, opt.qp);
      const State current{ps.u, ps.pi, ds.zeta};

      StepRecord rec;
      rec.k = k;
      rec.t = t;
      rec.energy = total_energy(current, model);
      rec.energy_previous = total_energy(
          shifted_to_time(previous, model.load.shift(model.load.time(k - 1)), model.load.shift(t), mesh), model);
      rec.diss_plast_step = ps.report.dissipated_plastic;
      rec.diss_dam_step = ds.dissipated_damage;
      diss_plast += rec.diss_plast_step;
      diss_dam += rec.diss_dam_step;
      rec.diss_plast_cum = diss_plast;
      rec.diss_dam_cum = diss_dam;
      rec.avg_von_mises = average_von_mises(current, model);

      const AmdpRecord amdp =
          amdp_step_residuum(k, AmdpHistory{zeta_km2, previous, xi_const_km1, current}, model, amdp_cum);
      amdp_cum = amdp.cumulative_integral;
      rec.amdp_step = amdp.residuum_integral;
      rec.amdp_cum = amdp_cum;
      rec.euler_lagrange = euler_lagrange_residual(State{current.u, current.pi, previous.zeta}, model);
      rec.min_zeta = *std::min_element(current.zeta.begin(), current.zeta.end());
      rec.plastic = ps.report;
      rec.qp_iterations = ds.iterations;
      rec.qp_kkt_residual = ds.kkt_residual;
      result.series.steps.push_back(rec);

      if (observer) observer(StepView{model, result.series.steps.back(), previous, current, amdp, ds});

      zeta_km2 = previous.zeta;
      xi_const_km1 = ds.xi_const;
      previous = current;
    } catch (const std::exception& ex) {
      throw EvolutionError("step " + std::to_string(k) + " (t=" + std::to_string(t) + ") failed: " + ex.what(),
                           result.series);
    }
  }
  result.final_state = std::move(previous);
  return result;
}

}  // namespace plastdam
