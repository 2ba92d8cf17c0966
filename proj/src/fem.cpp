#include "topo/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "topo/errors.hpp"

namespace topo {

void Material::validate() const {
  if (!(young_modulus > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
    throw InvalidArgument("Poisson ratio must lie in (-1, 0.5)");
}

double Material::lame_mu() const { return young_modulus / (2.0 * (1.0 + poisson_ratio)); }

double Material::lame_lambda() const {
  return young_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
}

double Material::effective_lambda(int dim) const {
  const double lambda = lame_lambda();
  if (dim == 2 && plane_stress) {
    const double mu = lame_mu();
    return 2.0 * lambda * mu / (lambda + 2.0 * mu);
  }
  return lambda;
}

DensityField DensityField::uniform(std::size_t cells, double value, double d_min) {
  return DensityField{std::vector<double>(cells, value), d_min};
}

void DensityField::validate() const {
  if (!(d_min > 0.0)) throw InvalidArgument("d_min must be positive");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= d_min && values[i] <= 1.0))
      throw InvalidArgument(fmt::format("density {} of cell {} outside [{}, 1]", values[i], i, d_min));
  }
}

DirichletBC DirichletBC::on_facets(const Mesh& mesh, const EntityMarker& marker, int tag,
                                   std::array<bool, 3> constrained, std::array<double, 3> value) {
  if (marker.kind != EntityKind::Facet) throw InvalidArgument("Dirichlet marker must be a facet marker");
  std::vector<Index> nodes;
  for (Index f : marker.where_equal(tag)) {
    const auto ids = mesh.facet(static_cast<std::size_t>(f));
    nodes.insert(nodes.end(), ids.begin(), ids.end());
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return DirichletBC{std::move(nodes), constrained, value};
}

DirichletBC DirichletBC::pointwise(const Mesh& mesh, const Point& point,
                                   std::array<bool, 3> constrained, std::array<double, 3> value,
                                   double tol) {
  double best = std::numeric_limits<double>::infinity();
  Index best_node = -1;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const Point& p = mesh.node(i);
    const double d = std::hypot(p[0] - point[0], p[1] - point[1], p[2] - point[2]);
    if (d < best) {
      best = d;
      best_node = static_cast<Index>(i);
    }
  }
  if (best_node < 0 || best > tol)
    throw InvalidArgument(fmt::format("no mesh node within {} of ({}, {}, {})", tol, point[0],
                                      point[1], point[2]));
  return DirichletBC{{best_node}, constrained, value};
}

LoadCase LoadCase::on_facets(const EntityMarker& marker, int tag, const Point& traction) {
  if (marker.kind != EntityKind::Facet) throw InvalidArgument("load marker must be a facet marker");
  return LoadCase{marker.where_equal(tag), traction};
}

std::size_t Constraints::count() const {
  return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), char{1}));
}

Constraints collect_constraints(const Mesh& mesh, std::span<const DirichletBC> bcs) {
  const int dim = mesh.dim();
  Constraints c;
  c.fixed.assign(mesh.num_dofs(), 0);
  c.values.assign(mesh.num_dofs(), 0.0);
  for (const auto& bc : bcs) {
    for (Index node : bc.nodes) {
      if (node < 0 || static_cast<std::size_t>(node) >= mesh.num_nodes())
        throw InvalidArgument(fmt::format("Dirichlet node {} does not exist", node));
      for (int k = 0; k < dim; ++k) {
        if (!bc.constrained[k]) continue;
        const std::size_t dof = static_cast<std::size_t>(node) * dim + k;
        c.fixed[dof] = 1;
        c.values[dof] = bc.value[k];
      }
    }
  }
  return c;
}

Eigen::MatrixXd shape_gradients(int dim, std::span<const Point> v, double* volume) {
  Eigen::MatrixXd J(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int d = 0; d < dim; ++d) J(d, k) = v[k + 1][d] - v[0][d];
  const double vol = J.determinant() / (dim == 2 ? 2.0 : 6.0);
  if (std::abs(vol) <= 1e-14) throw SingularElement("degenerate simplex (zero volume)");
  if (volume) *volume = std::abs(vol);
  // Barycentric gradients: rows 1..dim are the rows of J^{-1}.
  const Eigen::MatrixXd Jinv = J.inverse();
  Eigen::MatrixXd grads(dim + 1, dim);
  for (int k = 0; k < dim; ++k) grads.row(k + 1) = Jinv.row(k);
  grads.row(0) = -Jinv.colwise().sum();
  return grads;
}

namespace {

// Strain-displacement matrix in Voigt order: 2D [xx, yy, xy], 3D
// [xx, yy, zz, yz, xz, xy], engineering shear.
Eigen::MatrixXd strain_matrix(int dim, const Eigen::MatrixXd& grads) {
  const int nv = dim + 1;
  const int nvoigt = dim == 2 ? 3 : 6;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nvoigt, nv * dim);
  for (int a = 0; a < nv; ++a) {
    const double gx = grads(a, 0), gy = grads(a, 1);
    const int c = a * dim;
    if (dim == 2) {
      B(0, c) = gx;
      B(1, c + 1) = gy;
      B(2, c) = gy;
      B(2, c + 1) = gx;
    } else {
      const double gz = grads(a, 2);
      B(0, c) = gx;
      B(1, c + 1) = gy;
      B(2, c + 2) = gz;
      B(3, c + 1) = gz;
      B(3, c + 2) = gy;
      B(4, c) = gz;
      B(4, c + 2) = gx;
      B(5, c) = gy;
      B(5, c + 1) = gx;
    }
  }
  return B;
}

Eigen::MatrixXd constitutive_matrix(int dim, double lambda, double mu) {
  const int n = dim == 2 ? 3 : 6;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) D(i, j) = lambda;
    D(i, i) = lambda + 2.0 * mu;
  }
  for (int i = dim; i < n; ++i) D(i, i) = mu;
  return D;
}

std::array<Point, 4> cell_vertices(const Mesh& mesh, std::size_t c) {
  std::array<Point, 4> v{};
  const auto ids = mesh.cell(c);
  for (std::size_t k = 0; k < ids.size(); ++k) v[k] = mesh.node(ids[k]);
  return v;
}

}  // namespace

ElementMatrix element_stiffness(int dim, std::span<const Point> vertices, const Material& material) {
  double volume = 0.0;
  const Eigen::MatrixXd grads = shape_gradients(dim, vertices, &volume);
  const Eigen::MatrixXd B = strain_matrix(dim, grads);
  const Eigen::MatrixXd D = constitutive_matrix(dim, material.effective_lambda(dim), material.lame_mu());
  ElementMatrix K = volume * (B.transpose() * D * B);
  // Symmetrize away rounding from the triple product.
  return 0.5 * (K + K.transpose());
}

StiffnessAssembler::StiffnessAssembler(const Mesh& mesh, const Material& material)
    : mesh_(&mesh), material_(material) {
  material_.validate();
  const int dim = mesh.dim();
  const std::size_t nv = static_cast<std::size_t>(dim + 1);
  block_ = nv * dim;
  const std::size_t ncells = mesh.num_cells();

  std::vector<Triplet> triplets;
  triplets.reserve(ncells * block_ * block_);
  element_values_.resize(ncells * block_ * block_);
  std::vector<Index> dofs(block_);
  for (std::size_t c = 0; c < ncells; ++c) {
    const auto verts = cell_vertices(mesh, c);
    const ElementMatrix Ke = element_stiffness(dim, {verts.data(), nv}, material_);
    const auto ids = mesh.cell(c);
    for (std::size_t a = 0; a < nv; ++a)
      for (int k = 0; k < dim; ++k) dofs[a * dim + k] = ids[a] * dim + k;
    for (std::size_t i = 0; i < block_; ++i) {
      for (std::size_t j = 0; j < block_; ++j) {
        element_values_[(c * block_ + i) * block_ + j] = Ke(i, j);
        triplets.push_back({dofs[i], dofs[j], 0.0});
      }
    }
  }
  pattern_ = SparseMatrix::from_triplets(mesh.num_dofs(), std::move(triplets));

  scatter_.resize(element_values_.size());
  for (std::size_t c = 0; c < ncells; ++c) {
    const auto ids = mesh.cell(c);
    for (std::size_t a = 0; a < nv; ++a)
      for (int k = 0; k < dim; ++k) dofs[a * dim + k] = ids[a] * dim + k;
    for (std::size_t i = 0; i < block_; ++i)
      for (std::size_t j = 0; j < block_; ++j)
        scatter_[(c * block_ + i) * block_ + j] =
            static_cast<std::size_t>(pattern_.find(dofs[i], dofs[j]));
  }
}

SparseMatrix StiffnessAssembler::assemble(std::span<const double> density, double penal) const {
  const std::size_t ncells = mesh_->num_cells();
  if (density.size() != ncells)
    throw InvalidArgument(fmt::format("density has {} entries, mesh has {} cells", density.size(), ncells));
  if (!(penal >= 1.0)) throw InvalidArgument("penalization exponent must be >= 1");
  SparseMatrix K = pattern_;
  auto& values = K.values();
  std::fill(values.begin(), values.end(), 0.0);
  const std::size_t bb = block_ * block_;
  for (std::size_t c = 0; c < ncells; ++c) {
    const double scale = std::pow(density[c], penal);
    const double* ke = element_values_.data() + c * bb;
    const std::size_t* slot = scatter_.data() + c * bb;
    for (std::size_t k = 0; k < bb; ++k) values[slot[k]] += scale * ke[k];
  }
  return K;
}

SparseMatrix StiffnessAssembler::assemble_unpenalized() const {
  const std::vector<double> ones(mesh_->num_cells(), 1.0);
  return assemble(ones, 1.0);
}

std::vector<double> assemble_load(const Mesh& mesh, const LoadCase& load) {
  const int dim = mesh.dim();
  std::vector<double> F(mesh.num_dofs(), 0.0);
  if (load.facets.empty()) {
    fmt::print(stderr, "warning: load case selects no boundary facets; load vector is zero\n");
    return F;
  }
  for (Index f : load.facets) {
    if (f < 0 || static_cast<std::size_t>(f) >= mesh.num_boundary_facets())
      throw InvalidArgument(fmt::format("load facet {} does not exist", f));
    const double share = mesh.facet_measure(static_cast<std::size_t>(f)) / mesh.nodes_per_facet();
    for (Index n : mesh.facet(static_cast<std::size_t>(f)))
      for (int k = 0; k < dim; ++k) F[static_cast<std::size_t>(n) * dim + k] += share * load.traction[k];
  }
  return F;
}

void apply_constraints(SparseMatrix& K, std::span<std::vector<double>> loads,
                       const Constraints& constraints) {
  const std::size_t n = K.rows();
  if (constraints.fixed.size() != n) throw InvalidArgument("constraint set does not match matrix size");
  for (auto& F : loads)
    if (F.size() != n) throw InvalidArgument("load vector does not match matrix size");

  const auto& offsets = K.row_offsets();
  const auto& cols = K.col_indices();
  auto& values = K.values();
  for (std::size_t r = 0; r < n; ++r) {
    if (constraints.fixed[r]) {
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k)
        values[k] = static_cast<std::size_t>(cols[k]) == r ? 1.0 : 0.0;
      continue;
    }
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const auto c = static_cast<std::size_t>(cols[k]);
      if (!constraints.fixed[c]) continue;
      const double ubar = constraints.values[c];
      if (ubar != 0.0)
        for (auto& F : loads) F[r] -= values[k] * ubar;
      values[k] = 0.0;
    }
  }
  for (auto& F : loads)
    for (std::size_t r = 0; r < n; ++r)
      if (constraints.fixed[r]) F[r] = constraints.values[r];
}

LinearSystem assemble_system(const Mesh& mesh, const DensityField& density, double penal,
                             const Material& material, std::span<const DirichletBC> bcs,
                             const LoadCase& load) {
  if (density.size() != mesh.num_cells())
    throw InvalidArgument(fmt::format("density has {} entries, mesh has {} cells", density.size(),
                                      mesh.num_cells()));
  const StiffnessAssembler assembler(mesh, material);
  LinearSystem sys{assembler.assemble(density.values, penal), assemble_load(mesh, load)};
  apply_constraints(sys.K, {&sys.F, 1}, collect_constraints(mesh, bcs));
  return sys;
}

std::vector<double> element_strain_energies(const Mesh& mesh, std::span<const double> u,
                                            const Material& material) {
  const int dim = mesh.dim();
  if (u.size() != mesh.num_dofs())
    throw InvalidArgument(fmt::format("displacement has {} entries, expected {}", u.size(), mesh.num_dofs()));
  const double lambda = material.effective_lambda(dim);
  const double mu = material.lame_mu();
  const std::size_t nv = static_cast<std::size_t>(dim + 1);
  const auto ncells = static_cast<std::ptrdiff_t>(mesh.num_cells());
  std::vector<double> energy(mesh.num_cells());
  for (double v : mesh.cell_volumes())
    if (std::abs(v) <= 1e-14) throw SingularElement("degenerate simplex (zero volume)");

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ncells; ++c) {
    const auto verts = cell_vertices(mesh, static_cast<std::size_t>(c));
    double volume = 0.0;
    const Eigen::MatrixXd grads = shape_gradients(dim, {verts.data(), nv}, &volume);
    const auto ids = mesh.cell(static_cast<std::size_t>(c));
    // Displacement gradient H_ij = du_i/dx_j.
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (std::size_t a = 0; a < nv; ++a)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) H(i, j) += u[static_cast<std::size_t>(ids[a]) * dim + i] * grads(a, j);
    const Eigen::Matrix3d eps = 0.5 * (H + H.transpose());
    const double tr = eps.trace();
    energy[c] = volume * (0.5 * lambda * tr * tr + mu * (eps * eps).trace());
  }
  return energy;
}

}  // namespace topo
