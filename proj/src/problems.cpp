#include "topo/problems.hpp"

#include <fmt/format.h>

#include "topo/errors.hpp"

namespace topo {

namespace {

bool at_xmin(const Point& x, const Box& b) { return near(x[0], b.lo[0]); }
bool at_xmax(const Point& x, const Box& b) { return near(x[0], b.hi[0]); }

// Right edge, lowest two length units.
bool lower_tip(const Point& x, const Box& b) { return at_xmax(x, b) && x[1] <= b.lo[1] + 2.0 + kCoordTol; }
// Right edge, highest two length units.
bool upper_tip(const Point& x, const Box& b) { return at_xmax(x, b) && x[1] >= b.hi[1] - 2.0 - kCoordTol; }

SupportSpec clamp_left() { return {SupportSpec::Kind::Facets, at_xmin, {}, {true, true, true}}; }

ProblemSpec cantilever2d() {
  ProblemSpec p;
  p.name = "cantilever2d";
  p.description = "cantilever clamped at x=0, downward traction on the lower 2 units of the free end";
  p.dims = {180, 60, 0, Diagonal::Alternating};
  p.supports = {clamp_left()};
  p.loads = {{lower_tip, {0.0, -1.0, 0.0}}};
  p.defaults = {0.5, 3.0, 2.0};
  return p;
}

ProblemSpec propped2d() {
  ProblemSpec p = cantilever2d();
  p.name = "propped2d";
  p.description = "cantilever2d with a roller prop (u_y = 0) at the bottom of the free end";
  p.supports.push_back({SupportSpec::Kind::Pointwise, {},
                        [](const Box& b) { return Point{b.hi[0], b.lo[1], 0.0}; },
                        {false, true, false}});
  p.defaults.rmin = 3.0;
  return p;
}

ProblemSpec multiload2d() {
  ProblemSpec p = cantilever2d();
  p.name = "multiload2d";
  p.description = "cantilever with two load cases: down on the lower tip, up on the upper tip";
  p.loads = {{lower_tip, {0.0, -1.0, 0.0}}, {upper_tip, {0.0, 1.0, 0.0}}};
  p.defaults.rmin = 3.0;
  return p;
}

ProblemSpec passive2d() {
  ProblemSpec p = cantilever2d();
  p.name = "passive2d";
  p.description = "cantilever2d with a circular void at (L/3, H/2), radius H/4";
  p.passive = {{[](const Point& x, const Box& b) {
                  const double x0 = b.lo[0] + b.extent(0) / 3.0;
                  const double y0 = b.lo[1] + b.extent(1) / 2.0;
                  const double r = b.extent(1) / 4.0;
                  return (x[0] - x0) * (x[0] - x0) + (x[1] - y0) * (x[1] - y0) <= r * r;
                },
                PassiveSpec::Fill::Void}};
  p.defaults.rmin = 3.0;
  return p;
}

ProblemSpec cantilever3d() {
  ProblemSpec p;
  p.name = "cantilever3d";
  p.description = "3D cantilever clamped at x=0, downward traction on the y<=2 band of the free end";
  p.dims = {60, 20, 4, Diagonal::Right};
  p.supports = {clamp_left()};
  p.loads = {{lower_tip, {0.0, -1.0, 0.0}}};
  p.defaults = {0.3, 3.0, 1.5};
  return p;
}

// Desk-scale bridge: solid deck slab on top, downward traction on the middle
// half of the deck surface, abutments on the lower half of both end faces.
// Proportions are illustrative.
ProblemSpec bridge3d_mini() {
  ProblemSpec p;
  p.name = "bridge3d_mini";
  p.description = "small bridge: passive solid deck, distributed deck load, supports on both end faces";
  p.dims = {32, 8, 8, Diagonal::Right};
  p.supports = {{SupportSpec::Kind::Facets,
                 [](const Point& x, const Box& b) {
                   return (at_xmin(x, b) || at_xmax(x, b)) && x[1] <= b.lo[1] + b.extent(1) / 2.0 + kCoordTol;
                 },
                 {},
                 {true, true, true}}};
  p.loads = {{[](const Point& x, const Box& b) {
                return near(x[1], b.hi[1]) && x[0] >= b.lo[0] + b.extent(0) / 4.0 - kCoordTol &&
                       x[0] <= b.hi[0] - b.extent(0) / 4.0 + kCoordTol;
              },
              {0.0, -1.0, 0.0}}};
  p.passive = {{[](const Point& x, const Box& b) { return x[1] >= b.hi[1] - 1.0; }, PassiveSpec::Fill::Solid}};
  p.defaults = {0.3, 3.0, 1.5};
  return p;
}

using Factory = ProblemSpec (*)();

const std::vector<std::pair<std::string, Factory>>& catalog() {
  static const std::vector<std::pair<std::string, Factory>> entries = {
      {"cantilever2d", cantilever2d}, {"propped2d", propped2d},       {"multiload2d", multiload2d},
      {"passive2d", passive2d},       {"cantilever3d", cantilever3d}, {"bridge3d_mini", bridge3d_mini},
  };
  return entries;
}

}  // namespace

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, factory] : catalog()) out.push_back(name);
    return out;
  }();
  return names;
}

ProblemSpec get_problem(const std::string& name, const DimOverrides& overrides) {
  for (const auto& [entry, factory] : catalog()) {
    if (entry != name) continue;
    ProblemSpec spec = factory();
    if (overrides.nelx) spec.dims.nelx = *overrides.nelx;
    if (overrides.nely) spec.dims.nely = *overrides.nely;
    if (overrides.nelz) {
      if (spec.dims.nelz == 0) throw InvalidArgument(fmt::format("{} is a 2D problem; nelz is not accepted", name));
      if (*overrides.nelz < 1) throw InvalidArgument("nelz must be >= 1");
      spec.dims.nelz = *overrides.nelz;
    }
    if (spec.dims.nelx < 1 || spec.dims.nely < 1) throw InvalidArgument("nelx and nely must be >= 1");
    return spec;
  }
  throw CatalogError(fmt::format("unknown problem '{}'; valid names: {}", name, fmt::join(problem_names(), ", ")));
}

Model build_model(const ProblemSpec& spec, double d_min) {
  if (spec.supports.empty() || spec.loads.empty())
    throw InvalidArgument(fmt::format("problem '{}' needs at least one support and one load", spec.name));

  Mesh mesh = spec.mesh_file ? load_mesh_file(*spec.mesh_file).mesh : generate_structured_mesh(spec.dims);
  const auto [lo, hi] = mesh.bounding_box();
  const Box box{lo, hi};

  Model model{std::move(mesh), {}, {}, {}};
  const Mesh& m = model.mesh;

  for (std::size_t i = 0; i < spec.supports.size(); ++i) {
    const auto& s = spec.supports[i];
    if (s.kind == SupportSpec::Kind::Pointwise) {
      model.supports.push_back(DirichletBC::pointwise(m, s.location(box), s.components));
      continue;
    }
    const auto marker = mark_entities(m, EntityKind::Facet, [&](const Point& x) { return s.region(x, box); }, 1);
    if (marker.count(1) == 0)
      throw InvalidArgument(fmt::format("support {} of '{}' selects no boundary facet", i, spec.name));
    model.supports.push_back(DirichletBC::on_facets(m, marker, 1, s.components));
  }

  for (std::size_t i = 0; i < spec.loads.size(); ++i) {
    const auto& l = spec.loads[i];
    const auto marker = mark_entities(m, EntityKind::Facet, [&](const Point& x) { return l.region(x, box); }, 1);
    if (marker.count(1) == 0)
      throw InvalidArgument(fmt::format("load {} of '{}' selects no boundary facet", i, spec.name));
    model.loads.push_back(LoadCase::on_facets(marker, 1, l.traction));
  }

  for (const auto& region : spec.passive) {
    const auto marker = mark_entities(m, EntityKind::Cell, [&](const Point& x) { return region.region(x, box); }, 1);
    const double value = region.fill == PassiveSpec::Fill::Void ? d_min : 1.0;
    for (Index c : marker.where_equal(1)) {
      model.passive.cells.push_back(c);
      model.passive.values.push_back(value);
    }
  }
  return model;
}

OptimizationState run_problem(const ProblemSpec& spec, const RunOptions& options) {
  const Model model = build_model(spec, options.params.d_min);
  return run_optimization(model, options);
}

}  // namespace topo
