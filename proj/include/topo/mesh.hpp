#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topo {

using Index = std::int32_t;

/// Coordinates in lattice units. 2D meshes keep z = 0.
using Point = std::array<double, 3>;

using PointPredicate = std::function<bool(const Point&)>;

/// Absolute tolerance for coordinate comparisons, in lattice units.
inline constexpr double kCoordTol = 1e-9;

inline bool near(double a, double b, double tol = kCoordTol) {
  return (a > b ? a - b : b - a) <= tol;
}

/// How each unit square of a structured 2D mesh is cut into two triangles.
enum class Diagonal { Right, Left, Alternating };

/// Lattice dimensions of a structured mesh (nelz == 0 in 2D).
struct StructuredDims {
  int nelx = 0;
  int nely = 0;
  int nelz = 0;
  Diagonal diagonal = Diagonal::Right;

  int dim() const { return nelz > 0 ? 3 : 2; }
};

/// Conforming simplex mesh: triangles in 2D, tetrahedra in 3D.
///
/// Cells are stored flat with stride dim+1 and are reoriented on construction
/// so that every signed volume is positive. Boundary facets are the facets
/// referenced by exactly one cell. Immutable after construction.
class Mesh {
 public:
  Mesh(int dim, std::vector<Point> nodes, std::vector<Index> cells,
       std::optional<StructuredDims> structured = std::nullopt);

  int dim() const { return dim_; }
  int nodes_per_cell() const { return dim_ + 1; }
  int nodes_per_facet() const { return dim_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_cells() const { return cell_volumes_.size(); }
  std::size_t num_boundary_facets() const { return facet_cells_.size(); }
  std::size_t num_dofs() const { return num_nodes() * static_cast<std::size_t>(dim_); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }

  std::span<const Index> cell(std::size_t c) const {
    return {cells_.data() + c * nodes_per_cell(), static_cast<std::size_t>(nodes_per_cell())};
  }
  const std::vector<Index>& cell_connectivity() const { return cells_; }

  /// Owning cell of boundary facet f.
  Index facet_cell(std::size_t f) const { return facet_cells_[f]; }
  std::span<const Index> facet(std::size_t f) const {
    return {facets_.data() + f * nodes_per_facet(), static_cast<std::size_t>(nodes_per_facet())};
  }
  /// Length (2D) or area (3D) of boundary facet f.
  double facet_measure(std::size_t f) const;

  const std::vector<double>& cell_volumes() const { return cell_volumes_; }
  const std::vector<Point>& cell_midpoints() const { return cell_midpoints_; }
  double total_volume() const;

  const std::optional<StructuredDims>& structured() const { return structured_; }

  /// Axis-aligned bounding box of the node set.
  std::pair<Point, Point> bounding_box() const;

 private:
  void orient_cells();
  void compute_geometry();
  void extract_boundary_facets();

  int dim_;
  std::vector<Point> nodes_;
  std::vector<Index> cells_;
  std::vector<Index> facets_;
  std::vector<Index> facet_cells_;
  std::vector<double> cell_volumes_;
  std::vector<Point> cell_midpoints_;
  std::optional<StructuredDims> structured_;
};

/// Signed measure of a simplex (area in 2D, volume in 3D).
double simplex_signed_volume(int dim, std::span<const Point> vertices);

/// Structured mesh on [0,nelx]x[0,nely](x[0,nelz]) with unit lattice spacing.
/// 2D squares split into two triangles along `diagonal`; 3D cubes split into
/// six tetrahedra around the (0,0,0)-(1,1,1) diagonal.
Mesh generate_structured_mesh(int nelx, int nely, std::optional<int> nelz = std::nullopt,
                              Diagonal diagonal = Diagonal::Right);
Mesh generate_structured_mesh(const StructuredDims& dims);

enum class EntityKind { Cell, Facet };

/// Integer tag per cell or per boundary facet; unmarked entities carry 0.
struct EntityMarker {
  EntityKind kind = EntityKind::Cell;
  std::vector<int> tags;

  static EntityMarker empty(const Mesh& mesh, EntityKind kind);

  std::vector<Index> where_equal(int tag) const;
  std::size_t count(int tag) const;
};

/// Tags entities selected by `predicate`: a boundary facet when all of its
/// vertices satisfy it, a cell when its midpoint does. Existing tags on
/// unselected entities are kept when `into` is given.
EntityMarker mark_entities(const Mesh& mesh, EntityKind kind, const PointPredicate& predicate,
                           int tag);
void mark_entities(const Mesh& mesh, const PointPredicate& predicate, int tag,
                   EntityMarker& into);

/// Native ASCII mesh format:
///
///   topomesh v1 <dim>
///   nodes <count>
///   <x> <y> [<z>]            one row per node
///   cells <count>
///   <i0> <i1> <i2> [<i3>]    one row per cell, 0-based node indices
///   marker <cell|facet> <tag> <count>
///   <entity indices...>      whitespace separated, 0-based
///
/// Facet indices refer to the boundary facet ordering of the loaded mesh.
struct MeshFile {
  Mesh mesh;
  std::vector<EntityMarker> markers;
};

MeshFile load_mesh_file(const std::filesystem::path& path);
MeshFile parse_mesh(std::istream& in);
void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh,
                     std::span<const EntityMarker> markers = {});
void write_mesh(std::ostream& out, const Mesh& mesh, std::span<const EntityMarker> markers = {});

}  // namespace topo
