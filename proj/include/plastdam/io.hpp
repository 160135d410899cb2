#pragma once

/**
 * @file io.hpp
 * @brief Run configuration (key=value text with unit suffixes), the CSV time
 * series, legacy ASCII VTK snapshots and the JSON run manifest.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "plastdam/evolution.hpp"
#include "plastdam/presets.hpp"

namespace plastdam {

inline constexpr std::string_view version = "1.0.0";

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Variant variant = Variant::asymmetric;
  double young = presets::young;
  double poisson = presets::poisson;
  double lambda_damaged = presets::lambda_damaged;
  double mu_damaged = presets::mu_damaged;
  std::optional<double> hardening;  ///< default young/20
  double sigma_y = presets::yield_stress;
  double a = presets::activation;
  std::optional<double> b;          ///< default healing_factor * a
  double kappa2 = presets::kappa2;
  double t_end = presets::t_end;
  double tau = 1.0;
  double ramp_rate = presets::ramp_rate;
  int n_sub = presets::n_sub;
  std::string out = "out";
  int snapshot_every = 0;  ///< 0 disables snapshots
  double plastic_energy_rtol = PlasticStepOptions{}.energy_rtol;
  double plastic_increment_rtol = PlasticStepOptions{}.increment_rtol;
  int plastic_max_sweeps = PlasticStepOptions{}.max_sweeps;
  double qp_tol = QpOptions{}.tol;
  int qp_max_iterations = QpOptions{}.max_iterations;

  bool operator==(const RunConfig&) const = default;

  MaterialParams material() const {
    const Lame intact = lame_from_young_poisson(young, poisson);
    MaterialParams p;
    p.lambda1 = intact.lambda;
    p.mu1 = intact.mu;
    p.lambda0 = lambda_damaged;
    p.mu0 = mu_damaged;
    p.hardening = hardening.value_or(young / 20.0);
    p.sigma_y = sigma_y;
    p.a = a;
    p.b = b.value_or(presets::healing_factor * a);
    p.kappa2 = kappa2;
    return p;
  }

  LoadProgram load() const {
    LoadProgram l = presets::loading(variant, tau);
    l.t_end = t_end;
    l.ramp_rate = ramp_rate;
    return l;
  }

  EvolutionOptions options() const {
    EvolutionOptions o;
    o.plastic.energy_rtol = plastic_energy_rtol;
    o.plastic.increment_rtol = plastic_increment_rtol;
    o.plastic.max_sweeps = plastic_max_sweeps;
    o.qp.tol = qp_tol;
    o.qp.max_iterations = qp_max_iterations;
    return o;
  }

  Model model() const { return Model(build_crossed_mesh(n_sub), material(), load()); }

  /// Throws ConfigError naming the first offending key.
  void validate() const {
    auto require = [](bool ok, const char* key, const std::string& what) {
      if (!ok) throw ConfigError(key, what);
    };
    require(young > 0.0, "young", "must be positive");
    require(poisson > -1.0 && poisson < 0.5, "poisson", "must lie in (-1, 0.5)");
    require(n_sub >= 1, "n_sub", "must be at least 1");
    require(variant != Variant::asymmetric || n_sub % 6 == 0, "n_sub",
            "asymmetric variant needs n_sub divisible by 6");
    require(tau > 0.0, "tau", "must be positive");
    require(t_end > 0.0, "t_end", "must be positive");
    try {
      (void)load().num_steps();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("tau", ex.what());
    }
    require(ramp_rate >= 0.0, "ramp_rate", "must be nonnegative");
    require(snapshot_every >= 0, "snapshot_every", "must be nonnegative");
    require(plastic_max_sweeps >= 1, "plastic_max_sweeps", "must be at least 1");
    require(qp_max_iterations >= 1, "qp_max_iterations", "must be at least 1");
    require(qp_tol > 0.0, "qp_tol", "must be positive");
    const MaterialParams p = material();
    require(p.lambda1 >= p.lambda0 && p.lambda0 >= 0.0, "lambda_damaged", "need 0 <= lambda_damaged <= lambda1");
    require(p.mu1 >= p.mu0 && p.mu0 > 0.0, "mu_damaged", "need 0 < mu_damaged <= mu1");
    require(p.hardening > 0.0, "hardening", "must be positive");
    require(p.sigma_y > 0.0, "sigma_y", "must be positive");
    require(p.a > 0.0, "a", "must be positive");
    require(p.b >= p.a, "b", "must be at least a");
    require(p.kappa2 > 0.0, "kappa2", "must be positive");
  }
};

namespace io_detail {

enum class Dim { pressure, length, line_energy, number, integer, text };

struct Unit {
  std::string_view suffix;
  Dim dim;
  double factor;
};

inline constexpr Unit units[] = {
    {"GPa", Dim::pressure, 1e9}, {"MPa", Dim::pressure, 1e6}, {"kPa", Dim::pressure, 1e3},
    {"Pa", Dim::pressure, 1.0},  {"mm", Dim::length, 1e-3},   {"m", Dim::length, 1.0},
    {"J/m", Dim::line_energy, 1.0},
};

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_quantity(const std::string& key, std::string_view text, Dim dim) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) throw ConfigError(key, "malformed number '" + std::string(text) + "'");
  if (!std::isfinite(value)) throw ConfigError(key, "value must be finite");
  const std::string_view suffix = trim(text.substr(static_cast<std::size_t>(ptr - text.data())));
  if (suffix.empty()) return value;
  for (const Unit& u : units)
    if (u.suffix == suffix) {
      if (u.dim != dim) throw ConfigError(key, "unit '" + std::string(suffix) + "' does not fit this quantity");
      return value * u.factor;
    }
  throw ConfigError(key, "unknown unit '" + std::string(suffix) + "'");
}

inline int parse_int(const std::string& key, std::string_view text) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(key, "malformed integer '" + std::string(text) + "'");
  return value;
}

}  // namespace io_detail

/// Applies one key=value override. Unknown keys are rejected.
inline void apply_setting(RunConfig& c, const std::string& key, std::string_view value) {
  using io_detail::Dim;
  using io_detail::parse_int;
  using io_detail::parse_quantity;
  if (key == "preset" || key == "variant") {
    try {
      c.variant = variant_from_string(io_detail::trim(value));
    } catch (const std::exception&) {
      throw ConfigError(key, "expected asymmetric or symmetric");
    }
  } else if (key == "young") c.young = parse_quantity(key, value, Dim::pressure);
  else if (key == "poisson") c.poisson = parse_quantity(key, value, Dim::number);
  else if (key == "lambda_damaged") c.lambda_damaged = parse_quantity(key, value, Dim::pressure);
  else if (key == "mu_damaged") c.mu_damaged = parse_quantity(key, value, Dim::pressure);
  else if (key == "hardening") c.hardening = parse_quantity(key, value, Dim::pressure);
  else if (key == "sigma_y") c.sigma_y = parse_quantity(key, value, Dim::pressure);
  else if (key == "a") c.a = parse_quantity(key, value, Dim::pressure);
  else if (key == "b") c.b = parse_quantity(key, value, Dim::pressure);
  else if (key == "kappa2") c.kappa2 = parse_quantity(key, value, Dim::line_energy);
  else if (key == "t_end") c.t_end = parse_quantity(key, value, Dim::number);
  else if (key == "tau") c.tau = parse_quantity(key, value, Dim::number);
  else if (key == "ramp_rate") c.ramp_rate = parse_quantity(key, value, Dim::length);
  else if (key == "n_sub") c.n_sub = parse_int(key, value);
  else if (key == "out") c.out = std::string(io_detail::trim(value));
  else if (key == "snapshot_every") c.snapshot_every = parse_int(key, value);
  else if (key == "plastic_energy_rtol") c.plastic_energy_rtol = parse_quantity(key, value, Dim::number);
  else if (key == "plastic_increment_rtol") c.plastic_increment_rtol = parse_quantity(key, value, Dim::number);
  else if (key == "plastic_max_sweeps") c.plastic_max_sweeps = parse_int(key, value);
  else if (key == "qp_tol") c.qp_tol = parse_quantity(key, value, Dim::number);
  else if (key == "qp_max_iterations") c.qp_max_iterations = parse_int(key, value);
  else throw ConfigError(key, "unknown key");
}

/// Parses key=value lines ('#' starts a comment) on top of the defaults and validates.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = io_detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(s), "line " + std::to_string(lineno) + " is not key=value");
    apply_setting(base, std::string(io_detail::trim(s.substr(0, eq))), s.substr(eq + 1));
  }
  base.validate();
  return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::string_view csv_header = "t,avg_von_mises,energy,diss_plast_cum,diss_dam_cum,amdp_step,amdp_cum";

inline void write_timeseries_csv(std::ostream& os, const TimeSeries& series) {
  os << csv_header << '\n';
  for (const StepRecord& r : series.steps) {
    os << format_double(r.t) << ',' << format_double(r.avg_von_mises) << ',' << format_double(r.energy) << ','
       << format_double(r.diss_plast_cum) << ',' << format_double(r.diss_dam_cum) << ','
       << format_double(r.amdp_step) << ',' << format_double(r.amdp_cum) << '\n';
  }
  if (!os) throw std::runtime_error("failed writing time series");
}

inline void write_timeseries_csv(const std::string& path, const TimeSeries& series) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_timeseries_csv(f, series);
}

inline constexpr double log_floor = 1e-300;

/// Legacy ASCII unstructured grid with point data zeta, u and cell data
/// |pi|, |dev sigma_el|, R and log10(|R| + floor). An empty residuum field is
/// written as zeros.
inline void write_vtk_snapshot(std::ostream& os, const Model& model, const State& s,
                               const std::vector<double>& residuum, int step, double t) {
  const Mesh& mesh = model.mesh;
  check_state(mesh, s);
  if (!residuum.empty() && residuum.size() != mesh.num_elements())
    throw std::invalid_argument("residuum field size does not match the mesh");
  const std::size_t nn = mesh.num_nodes(), ne = mesh.num_elements();
  os << "# vtk DataFile Version 3.0\n";
  os << "plastdam step " << step << " t=" << format_double(t) << '\n';
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nn << " double\n";
  for (const Vec2& x : mesh.nodes) os << format_double(x.x()) << ' ' << format_double(x.y()) << " 0\n";
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (const auto& el : mesh.elements) os << "3 " << el[0] << ' ' << el[1] << ' ' << el[2] << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << "5\n";

  os << "POINT_DATA " << nn << '\n';
  os << "SCALARS zeta double 1\nLOOKUP_TABLE default\n";
  for (double z : s.zeta) os << format_double(z) << '\n';
  os << "VECTORS u double\n";
  for (const Vec2& u : s.u) os << format_double(u.x()) << ' ' << format_double(u.y()) << " 0\n";

  const std::vector<double> vm = von_mises_field(s, model);
  os << "CELL_DATA " << ne << '\n';
  os << "SCALARS plastic_strain_norm double 1\nLOOKUP_TABLE default\n";
  for (const Mat2& p : s.pi) os << format_double(tnorm(p)) << '\n';
  os << "SCALARS dev_stress_norm double 1\nLOOKUP_TABLE default\n";
  for (double v : vm) os << format_double(v) << '\n';
  os << "SCALARS residuum double 1\nLOOKUP_TABLE default\n";
  for (std::size_t e = 0; e < ne; ++e) os << format_double(residuum.empty() ? 0.0 : residuum[e]) << '\n';
  os << "SCALARS log10_abs_residuum double 1\nLOOKUP_TABLE default\n";
  for (std::size_t e = 0; e < ne; ++e)
    os << format_double(std::log10(std::abs(residuum.empty() ? 0.0 : residuum[e]) + log_floor)) << '\n';
  if (!os) throw std::runtime_error("failed writing VTK snapshot");
}

inline void write_vtk_snapshot(const std::string& path, const Model& model, const State& s,
                               const std::vector<double>& residuum, int step, double t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_vtk_snapshot(f, model, s, residuum, step, t);
}

// ---- manifest ----

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = std::string(to_string(c.variant));
  j["young"] = c.young;
  j["poisson"] = c.poisson;
  j["lambda_damaged"] = c.lambda_damaged;
  j["mu_damaged"] = c.mu_damaged;
  if (c.hardening) j["hardening"] = *c.hardening;
  j["sigma_y"] = c.sigma_y;
  j["a"] = c.a;
  if (c.b) j["b"] = *c.b;
  j["kappa2"] = c.kappa2;
  j["t_end"] = c.t_end;
  j["tau"] = c.tau;
  j["ramp_rate"] = c.ramp_rate;
  j["n_sub"] = c.n_sub;
  j["out"] = c.out;
  j["snapshot_every"] = c.snapshot_every;
  j["plastic_energy_rtol"] = c.plastic_energy_rtol;
  j["plastic_increment_rtol"] = c.plastic_increment_rtol;
  j["plastic_max_sweeps"] = c.plastic_max_sweeps;
  j["qp_tol"] = c.qp_tol;
  j["qp_max_iterations"] = c.qp_max_iterations;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "preset") c.variant = variant_from_string(value.get<std::string>());
      else if (key == "young") c.young = value.get<double>();
      else if (key == "poisson") c.poisson = value.get<double>();
      else if (key == "lambda_damaged") c.lambda_damaged = value.get<double>();
      else if (key == "mu_damaged") c.mu_damaged = value.get<double>();
      else if (key == "hardening") c.hardening = value.get<double>();
      else if (key == "sigma_y") c.sigma_y = value.get<double>();
      else if (key == "a") c.a = value.get<double>();
      else if (key == "b") c.b = value.get<double>();
      else if (key == "kappa2") c.kappa2 = value.get<double>();
      else if (key == "t_end") c.t_end = value.get<double>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "ramp_rate") c.ramp_rate = value.get<double>();
      else if (key == "n_sub") c.n_sub = value.get<int>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "snapshot_every") c.snapshot_every = value.get<int>();
      else if (key == "plastic_energy_rtol") c.plastic_energy_rtol = value.get<double>();
      else if (key == "plastic_increment_rtol") c.plastic_increment_rtol = value.get<double>();
      else if (key == "plastic_max_sweeps") c.plastic_max_sweeps = value.get<int>();
      else if (key == "qp_tol") c.qp_tol = value.get<double>();
      else if (key == "qp_max_iterations") c.qp_max_iterations = value.get<int>();
      else throw ConfigError(key, "unknown key");
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(key, ex.what());
    } catch (const std::invalid_argument& ex) {
      if (dynamic_cast<const ConfigError*>(&ex)) throw;
      throw ConfigError(key, ex.what());
    }
  }
  return c;
}

struct RunSummary {
  std::string status = "ok";  ///< "ok" or the error message
  int steps_completed = 0;
  double t_final = 0.0;
  double diss_plast_cum = 0.0;
  double diss_dam_cum = 0.0;
  double amdp_cum = 0.0;
};

inline nlohmann::ordered_json manifest_json(const RunConfig& c, const RunSummary& s) {
  nlohmann::ordered_json j;
  j["program"] = "plastdam";
  j["version"] = std::string(version);
  j["config"] = config_to_json(c);
  j["result"] = {{"status", s.status},
                 {"steps_completed", s.steps_completed},
                 {"t_final", s.t_final},
                 {"diss_plast_cum", s.diss_plast_cum},
                 {"diss_dam_cum", s.diss_dam_cum},
                 {"amdp_cum", s.amdp_cum}};
  return j;
}

inline std::string emit_manifest(const RunConfig& c, const RunSummary& s = {}) {
  return manifest_json(c, s).dump(2) + "\n";
}

/// Reads the config back from a manifest produced by emit_manifest.
inline RunConfig parse_manifest(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw std::invalid_argument(std::string("malformed manifest: ") + ex.what());
  }
  if (!j.contains("config") || !j["config"].is_object())
    throw std::invalid_argument("manifest has no config object");
  return config_from_json(j["config"]);
}

inline RunSummary summarize(const TimeSeries& series, std::string status = "ok") {
  RunSummary s;
  s.status = std::move(status);
  s.steps_completed = static_cast<int>(series.steps.size());
  if (!series.steps.empty()) {
    const StepRecord& r = series.steps.back();
    s.t_final = r.t;
    s.diss_plast_cum = r.diss_plast_cum;
    s.diss_dam_cum = r.diss_dam_cum;
    s.amdp_cum = r.amdp_cum;
  }
  return s;
}

}  // namespace plastdam
