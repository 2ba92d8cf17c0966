#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topo/mesh.hpp"

namespace topo {

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Square matrix in compressed-row storage with sorted, unique column
/// indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<Index> cols,
               std::vector<double> values);

  /// Sums duplicate entries.
  static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return n_; }
  std::size_t nonzeros() const { return cols_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return offsets_; }
  const std::vector<Index>& col_indices() const { return cols_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::span<const Index> row_cols(std::size_t r) const {
    return {cols_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  /// Position of (r, c) in values(), or -1 when structurally zero.
  std::ptrdiff_t find(std::size_t r, std::size_t c) const;
  double at(std::size_t r, std::size_t c) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;

  std::vector<double> diagonal() const;
  std::vector<double> row_sums() const;
  double norm_inf() const;
  /// max |A_ij - A_ji| over stored entries (missing mirror counts as zero).
  double symmetry_defect() const;

  SparseMatrix scaled(double factor) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Index> cols_;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace topo
