#include "topo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "topo/errors.hpp"

namespace topo {

namespace {

// Local vertex triples of the four tetrahedron faces, and pairs for triangles.
constexpr int kTriFacets[3][2] = {{1, 2}, {2, 0}, {0, 1}};
constexpr int kTetFacets[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

}  // namespace

double simplex_signed_volume(int dim, std::span<const Point> v) {
  if (dim == 2) {
    const double ax = v[1][0] - v[0][0], ay = v[1][1] - v[0][1];
    const double bx = v[2][0] - v[0][0], by = v[2][1] - v[0][1];
    return 0.5 * (ax * by - ay * bx);
  }
  const double a[3] = {v[1][0] - v[0][0], v[1][1] - v[0][1], v[1][2] - v[0][2]};
  const double b[3] = {v[2][0] - v[0][0], v[2][1] - v[0][1], v[2][2] - v[0][2]};
  const double c[3] = {v[3][0] - v[0][0], v[3][1] - v[0][1], v[3][2] - v[0][2]};
  const double det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                     a[2] * (b[0] * c[1] - b[1] * c[0]);
  return det / 6.0;
}

Mesh::Mesh(int dim, std::vector<Point> nodes, std::vector<Index> cells,
           std::optional<StructuredDims> structured)
    : dim_(dim), nodes_(std::move(nodes)), cells_(std::move(cells)), structured_(structured) {
  if (dim_ != 2 && dim_ != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
  const auto npc = static_cast<std::size_t>(nodes_per_cell());
  if (cells_.size() % npc != 0) throw InvalidArgument("cell connectivity length is not a multiple of dim+1");
  for (Index i : cells_) {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size())
      throw InvalidArgument("cell references node " + std::to_string(i) + " out of range");
  }
  if (dim_ == 2) {
    for (auto& p : nodes_) p[2] = 0.0;
  }
  orient_cells();
  compute_geometry();
  extract_boundary_facets();
}

void Mesh::orient_cells() {
  const auto npc = static_cast<std::size_t>(nodes_per_cell());
  const std::size_t n = cells_.size() / npc;
  std::array<Point, 4> v{};
  for (std::size_t c = 0; c < n; ++c) {
    Index* ids = cells_.data() + c * npc;
    for (std::size_t k = 0; k < npc; ++k) v[k] = nodes_[ids[k]];
    if (simplex_signed_volume(dim_, {v.data(), npc}) < 0.0) std::swap(ids[0], ids[1]);
  }
}

void Mesh::compute_geometry() {
  const auto npc = static_cast<std::size_t>(nodes_per_cell());
  const std::size_t n = cells_.size() / npc;
  cell_volumes_.resize(n);
  cell_midpoints_.resize(n);
  std::array<Point, 4> v{};
  for (std::size_t c = 0; c < n; ++c) {
    Point mid{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < npc; ++k) {
      v[k] = nodes_[cells_[c * npc + k]];
      for (int d = 0; d < 3; ++d) mid[d] += v[k][d];
    }
    for (double& x : mid) x /= static_cast<double>(npc);
    cell_midpoints_[c] = mid;
    cell_volumes_[c] = simplex_signed_volume(dim_, {v.data(), npc});
    double h = 0.0;
    for (std::size_t k = 1; k < npc; ++k)
      for (int d = 0; d < 3; ++d) h = std::max(h, std::abs(v[k][d] - v[0][d]));
    if (!(cell_volumes_[c] > 1e-12 * std::pow(h, dim_)))
      throw SingularElement("cell " + std::to_string(c) + " has zero volume");
  }
}

void Mesh::extract_boundary_facets() {
  const auto npc = static_cast<std::size_t>(nodes_per_cell());
  const auto npf = static_cast<std::size_t>(nodes_per_facet());
  const std::size_t n = num_cells();

  struct Entry {
    std::array<Index, 3> key;
    Index cell;
    int local;
  };
  std::vector<Entry> entries;
  entries.reserve(n * npc);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t f = 0; f < npc; ++f) {
      Entry e{{-1, -1, -1}, static_cast<Index>(c), static_cast<int>(f)};
      for (std::size_t k = 0; k < npf; ++k) {
        const int local = dim_ == 2 ? kTriFacets[f][k] : kTetFacets[f][k];
        e.key[k] = cells_[c * npc + local];
      }
      std::sort(e.key.begin(), e.key.begin() + npf);
      entries.push_back(e);
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.cell < b.cell;
  });

  // Keep the owning cell's local vertex order so outward orientation survives.
  std::vector<std::pair<Index, int>> boundary;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i == 1) boundary.emplace_back(entries[i].cell, entries[i].local);
    if (j - i > 2) throw InvalidArgument("non-manifold mesh: facet shared by more than two cells");
    i = j;
  }
  std::sort(boundary.begin(), boundary.end());
  facet_cells_.reserve(boundary.size());
  facets_.reserve(boundary.size() * npf);
  for (auto [c, f] : boundary) {
    facet_cells_.push_back(c);
    for (std::size_t k = 0; k < npf; ++k) {
      const int local = dim_ == 2 ? kTriFacets[f][k] : kTetFacets[f][k];
      facets_.push_back(cells_[static_cast<std::size_t>(c) * npc + local]);
    }
  }
}

double Mesh::facet_measure(std::size_t f) const {
  const auto ids = facet(f);
  const Point& a = nodes_[ids[0]];
  const Point& b = nodes_[ids[1]];
  if (dim_ == 2) return std::hypot(b[0] - a[0], b[1] - a[1]);
  const Point& c = nodes_[ids[2]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double n[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return 0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

double Mesh::total_volume() const {
  double sum = 0.0;
  for (double v : cell_volumes_) sum += v;
  return sum;
}

std::pair<Point, Point> Mesh::bounding_box() const {
  Point lo{0, 0, 0}, hi{0, 0, 0};
  if (nodes_.empty()) return {lo, hi};
  lo = hi = nodes_.front();
  for (const auto& p : nodes_) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  return {lo, hi};
}

Mesh generate_structured_mesh(int nelx, int nely, std::optional<int> nelz, Diagonal diagonal) {
  if (nelx < 1 || nely < 1) throw InvalidArgument("nelx and nely must be >= 1");
  if (nelz && *nelz < 1) throw InvalidArgument("nelz must be >= 1");

  std::vector<Point> nodes;
  std::vector<Index> cells;

  if (!nelz) {
    const int nx = nelx + 1;
    nodes.reserve(static_cast<std::size_t>(nx) * (nely + 1));
    for (int iy = 0; iy <= nely; ++iy)
      for (int ix = 0; ix <= nelx; ++ix) nodes.push_back({double(ix), double(iy), 0.0});
    cells.reserve(static_cast<std::size_t>(nelx) * nely * 6);
    for (int iy = 0; iy < nely; ++iy) {
      for (int ix = 0; ix < nelx; ++ix) {
        const Index v0 = iy * nx + ix, v1 = v0 + 1, v2 = v0 + nx, v3 = v2 + 1;
        bool right = diagonal == Diagonal::Right;
        if (diagonal == Diagonal::Alternating) right = (ix + iy) % 2 == 0;
        if (right) {
          // diagonal v0-v3
          cells.insert(cells.end(), {v0, v1, v3, v0, v3, v2});
        } else {
          // diagonal v1-v2
          cells.insert(cells.end(), {v0, v1, v2, v1, v3, v2});
        }
      }
    }
    return Mesh(2, std::move(nodes), std::move(cells), StructuredDims{nelx, nely, 0, diagonal});
  }

  const int nz = *nelz;
  const int nx = nelx + 1, ny = nely + 1;
  nodes.reserve(static_cast<std::size_t>(nx) * ny * (nz + 1));
  for (int iz = 0; iz <= nz; ++iz)
    for (int iy = 0; iy <= nely; ++iy)
      for (int ix = 0; ix <= nelx; ++ix) nodes.push_back({double(ix), double(iy), double(iz)});

  // Kuhn split: one tetrahedron per axis permutation, all sharing the main
  // diagonal. Corner bit 0 = +x, bit 1 = +y, bit 2 = +z.
  constexpr int kPaths[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
                                {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};
  cells.reserve(static_cast<std::size_t>(nelx) * nely * nz * 24);
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < nely; ++iy) {
      for (int ix = 0; ix < nelx; ++ix) {
        Index corner[8];
        for (int b = 0; b < 8; ++b) {
          const int cx = ix + (b & 1), cy = iy + ((b >> 1) & 1), cz = iz + ((b >> 2) & 1);
          corner[b] = (cz * ny + cy) * nx + cx;
        }
        for (const auto& path : kPaths)
          for (int k : path) cells.push_back(corner[k]);
      }
    }
  }
  return Mesh(3, std::move(nodes), std::move(cells), StructuredDims{nelx, nely, nz, diagonal});
}

Mesh generate_structured_mesh(const StructuredDims& dims) {
  return generate_structured_mesh(dims.nelx, dims.nely,
                                  dims.nelz > 0 ? std::optional<int>(dims.nelz) : std::nullopt,
                                  dims.diagonal);
}

EntityMarker EntityMarker::empty(const Mesh& mesh, EntityKind kind) {
  EntityMarker m;
  m.kind = kind;
  m.tags.assign(kind == EntityKind::Cell ? mesh.num_cells() : mesh.num_boundary_facets(), 0);
  return m;
}

std::vector<Index> EntityMarker::where_equal(int tag) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == tag) out.push_back(static_cast<Index>(i));
  return out;
}

std::size_t EntityMarker::count(int tag) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
}

void mark_entities(const Mesh& mesh, const PointPredicate& predicate, int tag, EntityMarker& into) {
  if (tag < 0) throw InvalidArgument("entity tags must be non-negative");
  if (into.kind == EntityKind::Cell) {
    into.tags.resize(mesh.num_cells(), 0);
    const auto& mids = mesh.cell_midpoints();
    for (std::size_t c = 0; c < mids.size(); ++c)
      if (predicate(mids[c])) into.tags[c] = tag;
    return;
  }
  into.tags.resize(mesh.num_boundary_facets(), 0);
  for (std::size_t f = 0; f < mesh.num_boundary_facets(); ++f) {
    const auto ids = mesh.facet(f);
    const bool all = std::all_of(ids.begin(), ids.end(),
                                 [&](Index n) { return predicate(mesh.node(n)); });
    if (all) into.tags[f] = tag;
  }
}

EntityMarker mark_entities(const Mesh& mesh, EntityKind kind, const PointPredicate& predicate,
                           int tag) {
  EntityMarker m = EntityMarker::empty(mesh, kind);
  mark_entities(mesh, predicate, tag, m);
  return m;
}

}  // namespace topo
