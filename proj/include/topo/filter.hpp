#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "topo/linsolve.hpp"
#include "topo/mesh.hpp"
#include "topo/sparse.hpp"

namespace topo {

/// Sparse weight matrix W_ab = max(0, rmin - |x_a - x_b|) over cell
/// midpoints, with its row sums. W is symmetric with W_aa = rmin.
struct FilterOperator {
  SparseMatrix weights;
  std::vector<double> row_sums;
  double rmin = 0.0;

  std::size_t size() const { return row_sums.size(); }
};

struct FilterBuildStats {
  std::size_t chunks = 0;
  /// Largest distance block held at once, in entries (<= chunk_rows * N).
  std::size_t peak_transient_entries = 0;
};

inline constexpr std::size_t kDefaultChunkRows = 1024;

/// Builds W chunk by chunk: each pass evaluates a dense chunk_rows x N block
/// of pairwise distances, thresholds it, and keeps only entries inside rmin.
/// The full N x N matrix is never formed.
FilterOperator build_distance_filter(std::span<const Point> midpoints, double rmin,
                                     std::size_t chunk_rows = kDefaultChunkRows,
                                     FilterBuildStats* stats = nullptr);

/// s_hat_a = sum_b W_ab d_b s_b / (d_a * sum_b W_ab).
std::vector<double> apply_sensitivity_filter(const FilterOperator& op, std::span<const double> density,
                                             std::span<const double> sensitivity);

/// Helmholtz length R matching a distance-filter radius: rmin / (2 sqrt 3).
double helmholtz_length(double rmin);

/// PDE filter (-R^2 Laplace + 1) y = x with natural boundary conditions on
/// the P1 space. Cell data enter through the consistent load T x with
/// T_{n,e} = integral of N_n over cell e; results return to cells as the
/// nodal mean (the P1 value at the centroid). The system is factored once and
/// reused by every apply().
class HelmholtzFilter {
 public:
  HelmholtzFilter(const Mesh& mesh, double length, SolverConfig solver = {});

  std::vector<double> apply(std::span<const double> cell_values);

  double length() const { return length_; }
  const SparseMatrix& system() const { return system_; }
  /// Nodal right-hand side T x for a cell field.
  std::vector<double> project_to_nodes(std::span<const double> cell_values) const;
  std::vector<double> nodal_to_cells(std::span<const double> nodal) const;

 private:
  const Mesh* mesh_;
  double length_;
  SparseMatrix system_;
  LinearSolver solver_;
  bool factored_ = false;
};

/// One-shot Helmholtz smoothing of a cell field with R = helmholtz_length(rmin).
std::vector<double> helmholtz_filter(const Mesh& mesh, double rmin, std::span<const double> cell_values,
                                     const SolverConfig& solver = {});

}  // namespace topo
