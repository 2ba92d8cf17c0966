#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topo/mesh.hpp"
#include "topo/optimizer.hpp"

namespace topo {

/// Axis-aligned extent of a mesh; problem regions are written relative to it
/// so the same definition applies to generated and imported meshes.
struct Box {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};

  double extent(int axis) const { return hi[axis] - lo[axis]; }
};

using RegionPredicate = std::function<bool(const Point&, const Box&)>;

struct SupportSpec {
  enum class Kind { Facets, Pointwise };
  Kind kind = Kind::Facets;
  RegionPredicate region;                      // Facets
  std::function<Point(const Box&)> location;   // Pointwise
  std::array<bool, 3> components{true, true, true};
};

struct LoadSpec {
  RegionPredicate region;
  Point traction{0, 0, 0};
};

struct PassiveSpec {
  enum class Fill { Void, Solid };
  RegionPredicate region;  // evaluated at cell midpoints
  Fill fill = Fill::Void;
};

struct ProblemDefaults {
  double volfrac = 0.5;
  double penal = 3.0;
  double rmin = 2.0;
};

struct ProblemSpec {
  std::string name;
  std::string description;
  StructuredDims dims;
  std::optional<std::filesystem::path> mesh_file;
  std::vector<SupportSpec> supports;
  std::vector<LoadSpec> loads;
  std::vector<PassiveSpec> passive;
  ProblemDefaults defaults;

  int dim() const { return dims.dim(); }
};

struct DimOverrides {
  std::optional<int> nelx;
  std::optional<int> nely;
  std::optional<int> nelz;
};

/// Names accepted by get_problem, in catalog order.
const std::vector<std::string>& problem_names();

/// Throws CatalogError listing the valid names for an unknown `name`.
ProblemSpec get_problem(const std::string& name, const DimOverrides& overrides = {});

/// Meshes the spec and resolves its regions. Throws InvalidArgument when a
/// support or load selects nothing.
Model build_model(const ProblemSpec& spec, double d_min);

OptimizationState run_problem(const ProblemSpec& spec, const RunOptions& options);

}  // namespace topo
