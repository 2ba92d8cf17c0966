// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "topo/errors.hpp"
#include "topo/filter.hpp"
#include "topo/optimizer.hpp"
#include "topo/problems.hpp"

using namespace topo;

namespace {

// Collects sub-check failures for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<void(Check&)> body;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void fem_correctness(Check& c) {
  oracle::Gen gen(101);
  for (auto dims : {StructuredDims{4, 4, 0, Diagonal::Alternating}, StructuredDims{2, 2, 2}}) {
    const Mesh m = generate_structured_mesh(dims);
    const int dim = m.dim();
    double A[3][3], b[3];
    for (int i = 0; i < 3; ++i) {
      b[i] = gen.uniform(-1, 1);
      for (int j = 0; j < 3; ++j) A[i][j] = gen.uniform(-1, 1);
    }
    auto exact = [&](const Point& x, int k) {
      double s = b[k];
      for (int j = 0; j < dim; ++j) s += A[k][j] * x[j];
      return s;
    };
    const auto [lo, hi] = m.bounding_box();
    std::vector<DirichletBC> bcs;
    for (std::size_t n = 0; n < m.num_nodes(); ++n) {
      bool boundary = false;
      for (int k = 0; k < dim; ++k) boundary |= near(m.node(n)[k], lo[k]) || near(m.node(n)[k], hi[k]);
      if (!boundary) continue;
      DirichletBC bc;
      bc.nodes = {static_cast<Index>(n)};
      for (int k = 0; k < dim; ++k) bc.value[k] = exact(m.node(n), k);
      bcs.push_back(bc);
    }
    const auto sys = assemble_system(m, DensityField::uniform(m.num_cells(), 1.0), 3.0, Material{}, bcs, LoadCase{});
    const auto u = solve(sys.K, sys.F, SolverConfig{});
    double err = 0.0;
    for (std::size_t n = 0; n < m.num_nodes(); ++n)
      for (int k = 0; k < dim; ++k) err = std::max(err, std::abs(u[n * dim + k] - exact(m.node(n), k)));
    c.expect(err <= 1e-10, fmt::format("patch test {}D error {:.3e}", dim, err));
    c.note(fmt::format("patch {}D err {:.1e}", dim, err));
  }

  auto compare = [&](int dim, const std::vector<Point>& v, const std::string& label) {
    const auto K = element_stiffness(dim, v, Material{});
    const auto R = oracle::element_stiffness(dim, {v.begin(), v.end()}, 1.0, 0.3);
    double err = 0.0;
    for (int i = 0; i < K.rows(); ++i)
      for (int j = 0; j < K.cols(); ++j) err = std::max(err, std::abs(K(i, j) - R[i][j]));
    c.expect(err <= 1e-12, fmt::format("{} stiffness vs quadrature oracle {:.3e}", label, err));
    c.note(fmt::format("{} Ke err {:.1e}", label, err));
  };
  compare(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, "unit triangle");
  compare(3, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, "unit tet");
}

void energy_identity(Check& c) {
  const Model model = testutil::cantilever_model(8, 4);
  oracle::Gen gen(202);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = gen.vector(model.mesh.num_cells(), 0.1, 1.0);
    const auto sys = assemble_system(model.mesh, DensityField{d}, 3.0, Material{}, model.supports, model.loads[0]);
    const auto u = solve(sys.K, sys.F, SolverConfig{});
    const auto U = element_strain_energies(model.mesh, u, Material{});
    double f = 0.0;
    for (std::size_t e = 0; e < d.size(); ++e) f += std::pow(d[e], 3.0) * U[e];
    const double half = 0.5 * dot(sys.F, u);
    worst = std::max(worst, std::abs(f - half) / std::abs(half));
  }
  c.expect(worst <= 1e-8, fmt::format("energy identity worst relative gap {:.3e}", worst));
  c.note(fmt::format("worst rel gap {:.1e} over 20 trials", worst));
}

void solver_oracle(Check& c) {
  const Model model = testutil::cantilever_model(60, 20);
  oracle::Gen gen(303);
  const auto sys = assemble_system(model.mesh, DensityField{gen.vector(model.mesh.num_cells(), 0.1, 1.0)}, 3.0,
                                   Material{}, model.supports, model.loads[0]);
  SolverConfig direct, cg;
  direct.method = SolverMethod::Direct;
  cg.method = SolverMethod::CG;
  cg.rel_tolerance = 1e-10;
  SolveStats st;
  const auto ud = solve(sys.K, sys.F, direct);
  const auto uc = solve(sys.K, sys.F, cg, &st);
  const double diff = testutil::rel_inf_diff(uc, ud);
  c.expect(diff <= 1e-8, fmt::format("CG vs direct relative inf-norm {:.3e}", diff));
  c.note(fmt::format("rel diff {:.1e}, CG iterations {}", diff, st.iterations));
}

void filter_oracle(Check& c) {
  const std::vector<std::pair<StructuredDims, double>> cases{{{8, 4, 0, Diagonal::Alternating}, 2.0},
                                                             {{6, 4, 2}, 1.5}};
  for (const auto& [dims, rmin] : cases) {
    const Mesh m = generate_structured_mesh(dims);
    const auto& mid = m.cell_midpoints();
    const auto W = oracle::filter_weights({mid.begin(), mid.end()}, rmin);
    for (std::size_t chunk : {1u, 7u, 64u}) {
      const auto op = build_distance_filter(mid, rmin, chunk);
      double err = 0.0;
      for (std::size_t a = 0; a < mid.size(); ++a)
        for (std::size_t b = 0; b < mid.size(); ++b) err = std::max(err, std::abs(op.weights.at(a, b) - W[a][b]));
      c.expect(err <= 1e-12, fmt::format("{}D chunk {} weight error {:.3e}", m.dim(), chunk, err));
    }
    const auto op = build_distance_filter(mid, rmin);
    const std::vector<double> d(m.num_cells(), 0.37), s(m.num_cells(), -1.75);
    double dist_err = 0.0, helm_err = 0.0;
    for (double v : apply_sensitivity_filter(op, d, s)) dist_err = std::max(dist_err, std::abs(v + 1.75));
    for (double v : helmholtz_filter(m, rmin, s)) helm_err = std::max(helm_err, std::abs(v + 1.75));
    c.expect(dist_err <= 1e-12, fmt::format("{}D distance filter constant error {:.3e}", m.dim(), dist_err));
    c.expect(helm_err <= 1e-8 * 1.75, fmt::format("{}D Helmholtz constant error {:.3e}", m.dim(), helm_err));
    c.note(fmt::format("{}D const err dist {:.0e} helm {:.0e}", m.dim(), dist_err, helm_err));
  }
}

void sensitivity_check(Check& c) {
  const Model model = testutil::cantilever_model(8, 4);
  StructuralAnalysis analysis(model, Material{}, SolverConfig{});
  oracle::Gen gen(505);
  const auto d = gen.vector(model.mesh.num_cells(), 0.1, 1.0);
  const auto ev = analysis.evaluate(d, 3.0);
  // The frozen-energy difference is +p d^(p-1) U, the negated sensitivity.
  const auto fd = testutil::frozen_energy_fd(model.mesh, ev.displacements[0], d, 3.0, 1e-6);
  double worst = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e)
    worst = std::max(worst, std::abs(ev.sensitivity[e] + fd[e]) / std::abs(fd[e]));
  c.expect(worst <= 1e-5, fmt::format("finite-difference worst relative error {:.3e}", worst));

  // Sign check against the true compliance derivative, state re-solved.
  std::vector<std::size_t> cells;
  for (std::size_t e = 0; e < d.size(); e += 7) cells.push_back(e);
  const auto rfd = testutil::resolved_fd(analysis, d, 3.0, 1e-4, cells);
  double worst_resolved = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    worst_resolved = std::max(worst_resolved, std::abs(ev.sensitivity[cells[i]] - rfd[i]) / std::abs(rfd[i]));
  c.expect(worst_resolved <= 1e-5, fmt::format("re-solved finite-difference worst relative error {:.3e}", worst_resolved));
  c.note(fmt::format("worst rel err frozen {:.1e} re-solved {:.1e}", worst, worst_resolved));
}

// Bounds, move limit and volume on every iteration of a run.
struct InvariantMonitor {
  const Model& model;
  const OCParams& params;
  std::vector<double> previous;
  double worst_volume = 0.0;
  double worst_move = 0.0;
  bool bounds_ok = true;

  InvariantMonitor(const Model& m, const OCParams& p) : model(m), params(p), previous(initial_density(m, p)) {}

  void operator()(const OptimizationState& s) {
    const auto& d = s.density.values;
    std::vector<char> pinned(d.size(), 0);
    for (Index cell : model.passive.cells) pinned[cell] = 1;
    for (std::size_t e = 0; e < d.size(); ++e) {
      bounds_ok &= d[e] >= params.d_min && d[e] <= 1.0;
      if (!pinned[e]) worst_move = std::max(worst_move, std::abs(d[e] - previous[e]) - params.move);
    }
    worst_volume = std::max(worst_volume, std::abs(volume_fraction(d, model.mesh.cell_volumes()) - params.volfrac));
    previous = d;
  }

  void report(Check& c, const std::string& label) const {
    c.expect(bounds_ok, label + ": density left [d_min, 1]");
    c.expect(worst_move <= 1e-12, fmt::format("{}: move limit exceeded by {:.3e}", label, worst_move));
    c.expect(worst_volume <= 1e-3, fmt::format("{}: volume off target by {:.3e}", label, worst_volume));
  }
};

void oc_bisection(Check& c) {
  OCParams p;
  const auto r = oc_update(std::vector<double>{0.5, 0.5}, std::vector<double>{-4, -1}, std::vector<double>{1, 1}, p);
  c.expect(std::abs(r.density[0] - 2.0 / 3.0) <= 1e-3 && std::abs(r.density[1] - 1.0 / 3.0) <= 1e-3,
           fmt::format("two-element case gave ({}, {})", r.density[0], r.density[1]));
  const auto u = oc_update(std::vector<double>(10, 0.5), std::vector<double>(10, -3.0), std::vector<double>(10, 1.0), p);
  double fixed_err = 0.0;
  for (double v : u.density) fixed_err = std::max(fixed_err, std::abs(v - 0.5));
  c.expect(fixed_err <= 1e-3, fmt::format("uniform fixed point moved by {:.3e}", fixed_err));

  for (const auto& name : problem_names()) {
    const auto defaults = get_problem(name);
    const auto spec = get_problem(name, {8, 4, defaults.dim() == 3 ? std::optional<int>(2) : std::nullopt});
    const Model model = build_model(spec, 1e-3);
    RunOptions opt;
    opt.params.volfrac = spec.defaults.volfrac;
    opt.params.penal = spec.defaults.penal;
    opt.rmin = spec.defaults.rmin;
    InvariantMonitor monitor(model, opt.params);
    opt.observer = std::ref(monitor);
    const auto state = run_optimization(model, opt);
    monitor.report(c, name);
    c.note(fmt::format("{} {} it", name, state.iteration));
  }
}

double binary_fraction(const std::vector<double>& d, double d_min) {
  std::size_t binary = 0;
  for (double v : d) binary += std::abs(v - d_min) <= 0.1 || std::abs(v - 1.0) <= 0.1;
  return static_cast<double>(binary) / d.size();
}

void headline_run(Check& c) {
  const auto spec = get_problem("cantilever2d", {180, 60, std::nullopt});
  const Model model = build_model(spec, 1e-3);
  RunOptions opt;
  opt.params.volfrac = 0.5;
  opt.params.penal = 3.0;
  opt.rmin = 2.0;
  opt.max_iters = 100;
  InvariantMonitor monitor(model, opt.params);
  opt.observer = std::ref(monitor);
  const auto s = run_optimization(model, opt);
  const double vf = s.history.back().volume_fraction;
  const double ratio = s.objective / s.history.front().objective;
  const double bin = binary_fraction(s.density.values, opt.params.d_min);
  c.expect(s.converged, fmt::format("not converged within 100 iterations (change {:.4f} at iteration {})", s.change,
                                    s.iteration));
  c.expect(std::abs(vf - 0.5) <= 1e-3, fmt::format("final volume fraction {}", vf));
  c.expect(ratio < 0.5, fmt::format("objective ratio final/first {:.4f}", ratio));
  c.expect(bin >= 0.7, fmt::format("binary fraction {:.3f}", bin));
  monitor.report(c, "cantilever2d");
  c.note(fmt::format("it {} change {:.4f} vol {:.5f} f1 {:.2f} f {:.2f} binary {:.3f}", s.iteration, s.change, vf,
                     s.history.front().objective, s.objective, bin));
}

void run_3d(Check& c, int nelx, int nely, int nelz, double budget, const std::string& label) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = get_problem("cantilever3d", {nelx, nely, nelz});
  const Model model = build_model(spec, 1e-3);
  RunOptions opt;
  opt.params.volfrac = 0.3;
  opt.params.penal = 3.0;
  opt.rmin = 1.5;
  InvariantMonitor monitor(model, opt.params);
  opt.observer = std::ref(monitor);
  const auto s = run_optimization(model, opt);
  const double elapsed = seconds_since(t0);
  const double vf = s.history.back().volume_fraction;
  monitor.report(c, label);
  c.expect(std::abs(vf - 0.3) <= 1e-3, fmt::format("{}: final volume fraction {}", label, vf));
  c.expect(s.objective < s.history.front().objective, label + ": objective did not decrease");
  c.expect(elapsed <= budget, fmt::format("{}: {:.1f}s over the {:.0f}s budget", label, elapsed, budget));
  c.note(fmt::format("{} it {} vol {:.5f} f1 {:.2f} f {:.2f} {:.1f}s", label, s.iteration, vf,
                     s.history.front().objective, s.objective, elapsed));
}

void three_d(Check& c) {
  run_3d(c, 24, 8, 4, 120.0, "24x8x4");
  run_3d(c, 60, 20, 4, 1800.0, "60x20x4");
}

void extensions(Check& c) {
  {
    const Model model = build_model(get_problem("passive2d"), 1e-3);
    RunOptions opt;
    opt.rmin = 3.0;
    std::size_t bad = 0;
    int iterations = 0;
    opt.observer = [&](const OptimizationState& s) {
      ++iterations;
      for (Index cell : model.passive.cells) bad += s.density.values[cell] != 0.001;
    };
    run_optimization(model, opt);
    c.expect(bad == 0, fmt::format("passive2d: {} hole-cell values differ from 0.001", bad));
    c.note(fmt::format("passive2d {} hole cells x {} it", model.passive.cells.size(), iterations));
  }
  {
    const Model multi = build_model(get_problem("multiload2d"), 1e-3);
    oracle::Gen gen(909);
    const auto d = gen.vector(multi.mesh.num_cells(), 0.1, 1.0);
    StructuralAnalysis both(multi, Material{}, SolverConfig{});
    const double f = both.evaluate(d, 3.0).objective;
    double parts = 0.0;
    for (const auto& load : multi.loads) {
      const Model single{multi.mesh, multi.supports, {load}, {}};
      StructuralAnalysis a(single, Material{}, SolverConfig{});
      parts += a.evaluate(d, 3.0).objective;
    }
    const double gap = std::abs(f - parts) / std::abs(parts);
    c.expect(gap <= 1e-10, fmt::format("multiload2d: objective vs per-case sum relative gap {:.3e}", gap));
    c.note(fmt::format("multiload gap {:.1e}", gap));
  }
  {
    const auto spec = get_problem("propped2d");
    const Model model = build_model(spec, 1e-3);
    StructuralAnalysis a(model, Material{}, SolverConfig{});
    oracle::Gen gen(910);
    const auto ev = a.evaluate(gen.vector(model.mesh.num_cells(), 0.1, 1.0), 3.0);
    const auto& bc = model.supports.back();
    const Point& x = model.mesh.node(bc.nodes[0]);
    const double uy = ev.displacements[0][bc.nodes[0] * 2 + 1];
    double scale = 0.0;
    for (double v : ev.displacements[0]) scale = std::max(scale, std::abs(v));
    c.expect(near(x[0], spec.dims.nelx) && near(x[1], 0.0), "propped2d: prop node not at (nelx, 0)");
    c.expect(std::abs(uy) <= 1e-10 * scale, fmt::format("propped2d: u_y at prop {:.3e}", uy));
    c.note(fmt::format("prop u_y {:.1e} (max |u| {:.1e})", uy, scale));
  }
}

void memory_discipline(Check& c) {
  const Mesh m = generate_structured_mesh(100, 100);
  FilterBuildStats stats;
  const auto op = build_distance_filter(m.cell_midpoints(), 2.0, 512, &stats);
  const std::size_t n = m.num_cells();
  c.expect(n == 20000, fmt::format("mesh has {} cells", n));
  c.expect(stats.peak_transient_entries <= 512 * n,
           fmt::format("peak transient {} > {}", stats.peak_transient_entries, 512 * n));
  c.expect(stats.peak_transient_entries < n * n, "a dense N x N block was formed");
  c.note(fmt::format("peak {} entries ({} chunks), nnz {}", stats.peak_transient_entries, stats.chunks,
                     op.weights.nonzeros()));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "FEM correctness (patch test, element oracle)", 1.0, fem_correctness},
      {2, "Energy identity on 8x4 cantilever", 5.0, energy_identity},
      {3, "CG vs direct on 60x20 cantilever", 10.0, solver_oracle},
      {4, "Chunked filter vs naive oracle, constant preservation", 10.0, filter_oracle},
      {5, "Sensitivity vs finite differences", 5.0, sensitivity_check},
      {6, "OC/bisection cases and catalog invariants", 30.0, oc_bisection},
      {7, "Headline 180x60 cantilever run", 600.0, headline_run},
      {8, "3D cantilever runs", 1920.0, three_d},
      {9, "Passive, multi-load and propped extensions", 60.0, extensions},
      {10, "Filter memory discipline on 100x100", 60.0, memory_discipline},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(t0);
    if (elapsed > cr.budget_seconds)
      check.failures.push_back(fmt::format("took {:.1f}s, budget {:.0f}s", elapsed, cr.budget_seconds));
    const bool ok = check.failures.empty();
    failed += !ok;
    std::string detail;
    for (const auto& n : check.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s criterion %2d: %s (%.2fs) [%s]\n", ok ? "PASS" : "FAIL", cr.id, cr.title.c_str(), elapsed,
                detail.c_str());
    for (const auto& f : check.failures) std::printf("      - %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
