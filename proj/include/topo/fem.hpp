#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topo/mesh.hpp"
#include "topo/sparse.hpp"

namespace topo {

/// Isotropic linear-elastic material. In 2D the Lamé constants are used as-is
/// (plane strain) unless `plane_stress` is set, in which case lambda is
/// replaced by 2*lambda*mu/(lambda+2*mu).
struct Material {
  double young_modulus = 1.0;
  double poisson_ratio = 0.3;
  bool plane_stress = false;

  void validate() const;
  double lame_mu() const;
  double lame_lambda() const;
  /// Lambda entering the constitutive law for a `dim`-dimensional model.
  double effective_lambda(int dim) const;
};

/// Per-cell SIMP design variable with lower bound d_min.
struct DensityField {
  std::vector<double> values;
  double d_min = 1e-3;

  static DensityField uniform(std::size_t cells, double value, double d_min = 1e-3);
  /// Throws InvalidArgument unless 0 < d_min <= d_e <= 1 for every cell.
  void validate() const;
  std::size_t size() const { return values.size(); }
};

/// Prescribed displacement on a node set. Components not flagged in
/// `constrained` stay free.
struct DirichletBC {
  std::vector<Index> nodes;
  std::array<bool, 3> constrained{true, true, true};
  std::array<double, 3> value{0.0, 0.0, 0.0};

  /// All nodes of the boundary facets carrying `tag`.
  static DirichletBC on_facets(const Mesh& mesh, const EntityMarker& marker, int tag,
                               std::array<bool, 3> constrained = {true, true, true},
                               std::array<double, 3> value = {0.0, 0.0, 0.0});
  /// The single node nearest to `point`, which must lie within `tol`.
  static DirichletBC pointwise(const Mesh& mesh, const Point& point,
                               std::array<bool, 3> constrained,
                               std::array<double, 3> value = {0.0, 0.0, 0.0},
                               double tol = kCoordTol);
};

/// Constant traction on a set of boundary facets.
struct LoadCase {
  std::vector<Index> facets;
  Point traction{0.0, 0.0, 0.0};

  static LoadCase on_facets(const EntityMarker& marker, int tag, const Point& traction);
};

/// Dof-level view of a Dirichlet set; dof = node * dim + component.
struct Constraints {
  std::vector<char> fixed;
  std::vector<double> values;

  std::size_t count() const;
};

Constraints collect_constraints(const Mesh& mesh, std::span<const DirichletBC> bcs);

using ElementMatrix = Eigen::MatrixXd;

/// Gradients of the barycentric shape functions, one row per vertex.
/// Throws SingularElement when |volume| <= 1e-14.
Eigen::MatrixXd shape_gradients(int dim, std::span<const Point> vertices, double* volume = nullptr);

/// Constant-strain simplex stiffness, (dim+1)*dim square, dof order
/// (vertex0.x, vertex0.y[, vertex0.z], vertex1.x, ...).
ElementMatrix element_stiffness(int dim, std::span<const Point> vertices, const Material& material);

/// Assembles K(d) = sum_e d_e^p K_e against a fixed sparsity pattern. Element
/// matrices and scatter positions are computed once; each assemble() call is a
/// serial pass in cell order, so results are bitwise reproducible.
class StiffnessAssembler {
 public:
  StiffnessAssembler(const Mesh& mesh, const Material& material);

  SparseMatrix assemble(std::span<const double> density, double penal) const;
  SparseMatrix assemble_unpenalized() const;

  const Mesh& mesh() const { return *mesh_; }
  const Material& material() const { return material_; }

 private:
  const Mesh* mesh_;
  Material material_;
  SparseMatrix pattern_;
  std::size_t block_ = 0;
  std::vector<double> element_values_;  // per cell, block_*block_ row-major
  std::vector<std::size_t> scatter_;    // value slot per element entry
};

/// Consistent nodal forces of a constant traction (facet resultant split
/// equally among facet vertices). Warns on stderr when the load set is empty.
std::vector<double> assemble_load(const Mesh& mesh, const LoadCase& load);

/// Symmetric elimination: constrained rows and columns are zeroed, the
/// diagonal set to 1, the right-hand sides lifted by the prescribed values and
/// their constrained entries overwritten with those values.
void apply_constraints(SparseMatrix& K, std::span<std::vector<double>> loads,
                       const Constraints& constraints);

struct LinearSystem {
  SparseMatrix K;
  std::vector<double> F;
};

LinearSystem assemble_system(const Mesh& mesh, const DensityField& density, double penal,
                             const Material& material, std::span<const DirichletBC> bcs,
                             const LoadCase& load);

/// U_e = V_e * (lambda/2 tr(eps)^2 + mu tr(eps^2)) for the constant strain of
/// each cell, without density scaling.
std::vector<double> element_strain_energies(const Mesh& mesh, std::span<const double> displacement,
                                            const Material& material);

}  // namespace topo
