#include "topo/cli.hpp"

#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "topo/errors.hpp"
#include "topo/io.hpp"
#include "topo/parallel.hpp"

namespace topo {

void RunConfig::validate() const {
  options.validate();
  if (write_every < 0) throw InvalidArgument("write-every must be >= 0");
  if (threads < 0) throw InvalidArgument("threads must be >= 0");
}

OptimizationState execute(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  ProblemSpec spec = get_problem(cfg.problem, cfg.dims);
  if (cfg.mesh_file) spec.mesh_file = cfg.mesh_file;
  const Model model = build_model(spec, cfg.options.params.d_min);

  std::filesystem::create_directories(cfg.out_dir);
  RunOptions options = cfg.options;
  fmt::print(log, "iter,objective,volfrac,change\n");
  options.observer = [&](const OptimizationState& state) {
    fmt::print(log, "{}\n", format_history_row(state.history.back()));
    log.flush();
    if (cfg.write_every > 0 && state.iteration % cfg.write_every == 0)
      write_vtk(cfg.out_dir / fmt::format("density_{:04d}.vtk", state.iteration), model.mesh,
                state.density.values);
  };

  const OptimizationState state = run_optimization(model, options);

  write_history_csv(cfg.out_dir / "history.csv", state.history);
  if (cfg.write_every == 0 || state.iteration % cfg.write_every != 0)
    write_vtk(cfg.out_dir / fmt::format("density_{:04d}.vtk", state.iteration), model.mesh, state.density.values);
  if (model.mesh.dim() == 2 && model.mesh.structured())
    write_density_image(cfg.out_dir / "density_final.pgm", model.mesh, state.density.values);
  fmt::print(log, "# {} after {} iterations, objective {}\n", state.converged ? "converged" : "stopped",
             state.iteration, state.objective);
  return state;
}

namespace {

void add_run_options(CLI::App& run, RunConfig& cfg, std::map<std::string, CLI::Option*>& set) {
  auto& p = cfg.options.params;
  auto& o = cfg.options;
  run.add_option("--problem", cfg.problem, "catalog problem (see `topo problems`)");
  run.add_option("--mesh", cfg.mesh_file, "native mesh file replacing the generated mesh");
  run.add_option("--nelx", cfg.dims.nelx, "elements along x");
  run.add_option("--nely", cfg.dims.nely, "elements along y");
  run.add_option("--nelz", cfg.dims.nelz, "elements along z (3D problems)");
  set["volfrac"] = run.add_option("--volfrac", p.volfrac, "target volume fraction in (0, 1]");
  set["penal"] = run.add_option("--penal", p.penal, "SIMP penalty exponent (>= 1)");
  set["rmin"] = run.add_option("--rmin", o.rmin, "filter radius");
  run.add_option("--move", p.move, "OC move limit")->capture_default_str();
  run.add_option("--eta", p.damping, "OC damping exponent")->capture_default_str();
  run.add_option("--dmin", p.d_min, "minimum density")->capture_default_str();
  run.add_flag("--count-volume", p.count_volume, "volume constraint counts cells instead of measuring them");
  run.add_option("--E", o.material.young_modulus, "Young's modulus")->capture_default_str();
  run.add_option("--nu", o.material.poisson_ratio, "Poisson ratio")->capture_default_str();
  run.add_flag("--plane-stress", o.material.plane_stress, "plane stress instead of plane strain (2D)");

  const std::map<std::string, SolverMethod> solvers{
      {"auto", SolverMethod::Auto}, {"direct", SolverMethod::Direct}, {"cg", SolverMethod::CG}};
  run.add_option("--solver", o.solver.method, "auto|direct|cg")
      ->transform(CLI::CheckedTransformer(solvers, CLI::ignore_case))
      ->option_text("METHOD");
  run.add_option("--cg-tol", o.solver.rel_tolerance, "CG relative residual tolerance")->capture_default_str();
  const std::map<std::string, FilterKind> filters{
      {"distance", FilterKind::Distance}, {"helmholtz", FilterKind::Helmholtz}, {"none", FilterKind::None}};
  run.add_option("--filter", o.filter, "distance|helmholtz|none")
      ->transform(CLI::CheckedTransformer(filters, CLI::ignore_case))
      ->option_text("KIND");
  run.add_option("--chunk-rows", o.chunk_rows, "rows per distance-filter block")->capture_default_str();
  run.add_option("--max-iters", o.max_iters, "iteration cap")->capture_default_str();
  run.add_option("--change-tol", o.change_tol, "stop when max density change falls below this")
      ->capture_default_str();
  run.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  run.add_option("--write-every", cfg.write_every, "VTK snapshot interval (0: final only)")->capture_default_str();
  run.add_option("--threads", cfg.threads, "worker threads (default: TOPO_THREADS, then runtime default)");
}

int run_commands(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SIMP topology optimization with optimality-criteria updates"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::map<std::string, CLI::Option*> set;
  CLI::App* run = app.add_subcommand("run", "optimize a catalog problem");
  add_run_options(*run, cfg, set);
  CLI::App* list = app.add_subcommand("problems", "list catalog problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (list->parsed()) {
    for (const auto& name : problem_names()) fmt::print(out, "{:<14} {}\n", name, get_problem(name).description);
    return 0;
  }

  try {
    const ProblemSpec spec = get_problem(cfg.problem, cfg.dims);
    if (set["volfrac"]->count() == 0) cfg.options.params.volfrac = spec.defaults.volfrac;
    if (set["penal"]->count() == 0) cfg.options.params.penal = spec.defaults.penal;
    if (set["rmin"]->count() == 0) cfg.options.rmin = spec.defaults.rmin;
    cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n\n" << run->help();
    return 2;
  }

  const int threads = cfg.threads > 0 ? cfg.threads : threads_from_environment();
  if (threads > 0) set_thread_count(threads);
  try {
    execute(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_commands(argc, argv, out, err);
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace topo
