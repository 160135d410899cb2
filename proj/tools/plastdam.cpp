// Command-line driver: run, check, mesh-info.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plastdam/io.hpp"

namespace fs = std::filesystem;
using namespace plastdam;

namespace {

struct Flags {
  std::string config_file;
  std::vector<std::string> settings;
  std::string preset;
  std::optional<double> tau, t_end;
  std::optional<int> n_sub, snapshot_every;
  std::string out;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file");
  cmd->add_option("--set", f.settings, "extra key=value override (repeatable)");
  cmd->add_option("--preset", f.preset, "experiment geometry")->check(CLI::IsMember({"asymmetric", "symmetric"}));
  cmd->add_option("--tau", f.tau, "time step");
  cmd->add_option("--n-sub", f.n_sub, "square subdivisions per side");
  cmd->add_option("--t-end", f.t_end, "final process time");
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config_file.empty()) c = load_config_file(f.config_file);
  if (!f.preset.empty()) apply_setting(c, "preset", f.preset);
  if (f.tau) c.tau = *f.tau;
  if (f.n_sub) c.n_sub = *f.n_sub;
  if (f.t_end) c.t_end = *f.t_end;
  if (!f.out.empty()) c.out = f.out;
  if (f.snapshot_every) c.snapshot_every = *f.snapshot_every;
  for (const std::string& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
    apply_setting(c, kv.substr(0, eq), std::string_view(kv).substr(eq + 1));
  }
  c.validate();
  return c;
}

std::string snapshot_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%05d.vtk", k);
  return buf;
}

int cmd_run(const Flags& f) {
  const RunConfig cfg = resolve(f);
  const Model model = cfg.model();
  fs::create_directories(cfg.out);
  const fs::path dir(cfg.out);
  const int steps = model.load.num_steps();
  std::cerr << "run: preset=" << to_string(cfg.variant) << " n_sub=" << cfg.n_sub << " tau=" << cfg.tau
            << " steps=" << steps << " -> " << cfg.out << '\n';

  if (cfg.snapshot_every > 0)
    write_vtk_snapshot((dir / snapshot_name(0)).string(), model, State::initial(model.mesh), {}, 0, 0.0);
  const int report_every = std::max(1, steps / 20);
  auto observer = [&](const StepView& v) {
    const StepRecord& r = v.record;
    if (cfg.snapshot_every > 0 && (r.k % cfg.snapshot_every == 0 || r.k == steps))
      write_vtk_snapshot((dir / snapshot_name(r.k)).string(), model, v.current, v.amdp.residuum_field, r.k, r.t);
    if (r.k % report_every == 0 || r.k == steps)
      std::fprintf(stderr, "  t=%8.3f  avg|dev s|=%.4e  E=%.4e  diss=%.4e  amdp_cum=%.4e  min zeta=%.3f\n", r.t,
                   r.avg_von_mises, r.energy, r.diss_plast_cum + r.diss_dam_cum, r.amdp_cum, r.min_zeta);
  };

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const RunResult res = run(model, cfg.options(), observer);
    write_timeseries_csv((dir / "timeseries.csv").string(), res.series);
    std::ofstream((dir / "manifest.json").string()) << emit_manifest(cfg, summarize(res.series));
  } catch (const EvolutionError& ex) {
    write_timeseries_csv((dir / "timeseries.csv").string(), ex.partial());
    std::ofstream((dir / "manifest.json").string()) << emit_manifest(cfg, summarize(ex.partial(), ex.what()));
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  std::fprintf(stderr, "done in %.2f s\n",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

int cmd_mesh_info(const Flags& f) {
  const RunConfig cfg = resolve(f);
  const Mesh mesh = build_crossed_mesh(cfg.n_sub);
  const BoundaryTags tags = tag_boundaries(mesh, cfg.variant);
  double area = 0.0, amin = 1e300, amax = 0.0;
  for (double a : mesh.element_area) {
    area += a;
    amin = std::min(amin, a);
    amax = std::max(amax, a);
  }
  std::printf("n_sub          %d\n", cfg.n_sub);
  std::printf("preset         %s\n", std::string(to_string(cfg.variant)).c_str());
  std::printf("nodes          %zu\n", mesh.num_nodes());
  std::printf("elements       %zu\n", mesh.num_elements());
  std::printf("total area     %.17g\n", area);
  std::printf("element area   %.6g .. %.6g\n", amin, amax);
  std::printf("dirichlet_xy   %zu\n", tags.dirichlet_xy.size());
  std::printf("dirichlet_x    %zu\n", tags.dirichlet_x.size());
  std::printf("free boundary  %zu\n", tags.free.size());
  return 0;
}

// Property checks on tiny meshes.
int cmd_check() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++failures;
  };
  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& ex) {
      report(name, false, std::string("exception: ") + ex.what());
    }
  };

  guarded("mesh", [&] {
    bool ok = true;
    for (int n = 1; n <= 12; ++n) {
      const Mesh m = build_crossed_mesh(n);
      double area = 0.0;
      for (double a : m.element_area) area += a;
      ok = ok && m.num_elements() == static_cast<std::size_t>(4 * n * n) &&
           m.num_nodes() == static_cast<std::size_t>((n + 1) * (n + 1) + n * n) && std::abs(area - 1.0) <= 1e-12;
    }
    report("mesh", ok, "counts and area for n_sub = 1..12");
  });

  guarded("p1 exactness", [&] {
    const Mesh m = build_crossed_mesh(3);
    std::vector<Vec2> u(m.num_nodes());
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = Vec2(0.3 * m.nodes[i].x() - 0.1 * m.nodes[i].y(), 0.2 * m.nodes[i].x() + 0.5 * m.nodes[i].y());
    double err = 0.0;
    Mat2 exact;
    exact << 0.3, 0.05, 0.05, 0.5;
    for (const Mat2& e : p1_strain(m, u)) err = std::max(err, (e - exact).cwiseAbs().maxCoeff());
    report("p1 exactness", err <= 1e-14, "max strain error " + format_double(err));
  });

  guarded("return map", [&] {
    const MaterialParams p = presets::material();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1e-3);
    double worst = 0.0;
    for (int s = 0; s < 200; ++s) {
      Mat2 e;
      e << g(rng), g(rng), 0.0, g(rng);
      e(1, 0) = e(0, 1);
      Mat2 pp;
      pp << g(rng), g(rng), 0.0, 0.0;
      pp(1, 0) = pp(0, 1);
      pp(1, 1) = -pp(0, 0);
      const double z = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const Mat2 pi = return_map(e, pp, z, p).pi;
      worst = std::max(worst, tnorm(plastic_driving_stress(e, pi, z, p)) / p.sigma_y);
    }
    report("return map", worst <= 1.0 + 1e-8, "max |driving stress|/sigma_y " + format_double(worst));
  });

  guarded("short run", [&] {
    RunConfig c;
    c.n_sub = 6;
    c.tau = 0.5;
    c.t_end = 3.0;
    const Model model = c.model();
    double worst_decrease = 0.0, worst_amdp = 0.0;
    const RunResult r = run(model, c.options());
    for (const StepRecord& s : r.series.steps) {
      const double lhs = s.energy + s.diss_plast_step + s.diss_dam_step;
      worst_decrease = std::max(worst_decrease, (lhs - s.energy_previous) / std::max(1.0, std::abs(s.energy_previous)));
      worst_amdp = std::min(worst_amdp, s.amdp_step / (s.diss_plast_step + s.diss_dam_step + 1.0));
    }
    report("per-step decrease", worst_decrease <= 1e-8, "max relative excess " + format_double(worst_decrease));
    report("amdp nonnegative", worst_amdp >= -1e-8, "min scaled step residuum " + format_double(worst_amdp));
  });

  std::printf("%s\n", failures == 0 ? "all checks passed" : "some checks failed");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elasto-plastic gradient-damage simulator"};
  app.require_subcommand(1);
  Flags run_flags, info_flags;

  auto* run_cmd = app.add_subcommand("run", "run a simulation and write CSV, manifest and snapshots");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--out", run_flags.out, "output directory");
  run_cmd->add_option("--snapshot-every", run_flags.snapshot_every, "write a VTK snapshot every N steps (0 = off)");

  auto* check_cmd = app.add_subcommand("check", "run property checks on tiny meshes");

  auto* info_cmd = app.add_subcommand("mesh-info", "print mesh and boundary statistics");
  add_common(info_cmd, info_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run_flags);
    if (*check_cmd) return cmd_check();
    if (*info_cmd) return cmd_mesh_info(info_flags);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
