#include "topo/filter.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "topo/errors.hpp"
#include "topo/fem.hpp"

namespace topo {

FilterOperator build_distance_filter(std::span<const Point> midpoints, double rmin,
                                     std::size_t chunk_rows, FilterBuildStats* stats) {
  if (!(rmin > 0.0)) throw InvalidArgument("filter radius rmin must be positive");
  if (chunk_rows < 1) throw InvalidArgument("chunk_rows must be >= 1");

  const std::size_t n = midpoints.size();
  const std::size_t chunk = std::min(chunk_rows, std::max<std::size_t>(n, 1));
  std::vector<double> block(chunk * n);
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<Index> cols;
  std::vector<double> values;
  std::vector<std::size_t> counts(chunk);
  FilterBuildStats local;
  local.peak_transient_entries = block.size();

  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t rows = std::min(chunk, n - begin);
    ++local.chunks;

    // Distance block for rows [begin, begin + rows), then the weight threshold.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
      const Point& a = midpoints[begin + i];
      double* row = block.data() + static_cast<std::size_t>(i) * n;
      std::size_t count = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const double dx = a[0] - midpoints[b][0];
        const double dy = a[1] - midpoints[b][1];
        const double dz = a[2] - midpoints[b][2];
        const double w = rmin - std::sqrt(dx * dx + dy * dy + dz * dz);
        row[b] = w > 0.0 ? w : 0.0;
        count += w > 0.0;
      }
      counts[i] = count;
    }

    const std::size_t base = cols.size();
    for (std::size_t i = 0; i < rows; ++i) offsets[begin + i + 1] = offsets[begin + i] + counts[i];
    cols.resize(base + offsets[begin + rows] - offsets[begin]);
    values.resize(cols.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
      const double* row = block.data() + static_cast<std::size_t>(i) * n;
      std::size_t k = offsets[begin + i];
      for (std::size_t b = 0; b < n; ++b) {
        if (row[b] > 0.0) {
          cols[k] = static_cast<Index>(b);
          values[k] = row[b];
          ++k;
        }
      }
    }
  }

  FilterOperator op{SparseMatrix(n, std::move(offsets), std::move(cols), std::move(values)), {}, rmin};
  op.row_sums = op.weights.row_sums();
  if (stats) *stats = local;
  return op;
}

std::vector<double> apply_sensitivity_filter(const FilterOperator& op, std::span<const double> density,
                                             std::span<const double> sensitivity) {
  const std::size_t n = op.size();
  if (density.size() != n || sensitivity.size() != n)
    throw InvalidArgument(fmt::format("filter expects {} cells, got density {} / sensitivity {}", n,
                                      density.size(), sensitivity.size()));
  std::vector<double> weighted(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (density[i] == 0.0) throw InvalidArgument(fmt::format("zero density in cell {}: division by zero", i));
    weighted[i] = density[i] * sensitivity[i];
  }
  std::vector<double> out = op.weights.multiply(weighted);
  for (std::size_t i = 0; i < n; ++i) out[i] /= density[i] * op.row_sums[i];
  return out;
}

double helmholtz_length(double rmin) { return rmin / (2.0 * std::sqrt(3.0)); }

HelmholtzFilter::HelmholtzFilter(const Mesh& mesh, double length, SolverConfig solver)
    : mesh_(&mesh), length_(length), solver_(solver) {
  if (!(length >= 0.0)) throw InvalidArgument("Helmholtz length must be non-negative");
  const int dim = mesh.dim();
  const std::size_t nv = static_cast<std::size_t>(dim + 1);
  const double r2 = length * length;
  const double mass_scale = 1.0 / static_cast<double>((dim + 1) * (dim + 2));

  std::vector<Triplet> triplets;
  triplets.reserve(mesh.num_cells() * nv * nv);
  std::array<Point, 4> v{};
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto ids = mesh.cell(c);
    for (std::size_t k = 0; k < nv; ++k) v[k] = mesh.node(ids[k]);
    double volume = 0.0;
    const Eigen::MatrixXd G = shape_gradients(dim, {v.data(), nv}, &volume);
    const Eigen::MatrixXd stiff = volume * (G * G.transpose());
    for (std::size_t i = 0; i < nv; ++i) {
      for (std::size_t j = 0; j < nv; ++j) {
        const double mass = volume * mass_scale * (i == j ? 2.0 : 1.0);
        triplets.push_back({ids[i], ids[j], r2 * stiff(i, j) + mass});
      }
    }
  }
  system_ = SparseMatrix::from_triplets(mesh.num_nodes(), std::move(triplets));
}

std::vector<double> HelmholtzFilter::project_to_nodes(std::span<const double> cell_values) const {
  if (cell_values.size() != mesh_->num_cells())
    throw InvalidArgument("Helmholtz input must have one value per cell");
  const auto nv = static_cast<std::size_t>(mesh_->nodes_per_cell());
  std::vector<double> rhs(mesh_->num_nodes(), 0.0);
  const auto& volumes = mesh_->cell_volumes();
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    const double share = volumes[c] * cell_values[c] / static_cast<double>(nv);
    for (Index n : mesh_->cell(c)) rhs[n] += share;
  }
  return rhs;
}

std::vector<double> HelmholtzFilter::nodal_to_cells(std::span<const double> nodal) const {
  const auto nv = static_cast<std::size_t>(mesh_->nodes_per_cell());
  std::vector<double> out(mesh_->num_cells(), 0.0);
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    double sum = 0.0;
    for (Index n : mesh_->cell(c)) sum += nodal[n];
    out[c] = sum / static_cast<double>(nv);
  }
  return out;
}

std::vector<double> HelmholtzFilter::apply(std::span<const double> cell_values) {
  const std::vector<double> rhs = project_to_nodes(cell_values);
  const std::vector<double> nodal =
      factored_ ? solver_.resolve(system_, rhs) : solver_.solve(system_, rhs);
  factored_ = true;
  return nodal_to_cells(nodal);
}

std::vector<double> helmholtz_filter(const Mesh& mesh, double rmin, std::span<const double> cell_values,
                                     const SolverConfig& solver) {
  if (!(rmin > 0.0)) throw InvalidArgument("filter radius rmin must be positive");
  HelmholtzFilter filter(mesh, helmholtz_length(rmin), solver);
  return filter.apply(cell_values);
}

}  // namespace topo
