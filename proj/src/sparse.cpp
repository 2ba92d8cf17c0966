#include "topo/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "topo/errors.hpp"

namespace topo {

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                           std::vector<Index> cols, std::vector<double> values)
    : n_(n), offsets_(std::move(row_offsets)), cols_(std::move(cols)), values_(std::move(values)) {
  if (offsets_.size() != n_ + 1 || offsets_.front() != 0 || offsets_.back() != cols_.size() ||
      cols_.size() != values_.size())
    throw InvalidArgument("inconsistent compressed-row arrays");
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<Index> cols;
  std::vector<double> values;
  cols.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size();) {
    const auto& t = triplets[i];
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n)
      throw InvalidArgument("triplet index out of range");
    double sum = 0.0;
    std::size_t j = i;
    for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j)
      sum += triplets[j].value;
    cols.push_back(t.col);
    values.push_back(sum);
    ++offsets[t.row + 1];
    i = j;
  }
  for (std::size_t r = 0; r < n; ++r) offsets[r + 1] += offsets[r];
  return SparseMatrix(n, std::move(offsets), std::move(cols), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<Index> cols(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<Index>(i);
  return SparseMatrix(n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

std::ptrdiff_t SparseMatrix::find(std::size_t r, std::size_t c) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[r]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[r + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<Index>(c));
  if (it == end || *it != static_cast<Index>(c)) return -1;
  return it - cols_.begin();
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto k = find(r, c);
  return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw InvalidArgument("matrix-vector size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(n_);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += values_[k] * x[cols_[k]];
    y[r] = sum;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) d[r] = at(r, r);
  return d;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) s[r] += values_[k];
  return s;
}

double SparseMatrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t r = 0; r < n_; ++r) {
    double sum = 0.0;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += std::abs(values_[k]);
    best = std::max(best, sum);
  }
  return best;
}

double SparseMatrix::symmetry_defect() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      worst = std::max(worst, std::abs(values_[k] - at(static_cast<std::size_t>(cols_[k]), r)));
  return worst;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace topo
