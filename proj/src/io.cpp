#include "topo/io.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "topo/errors.hpp"

namespace topo {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const double> density) {
  if (density.size() != mesh.num_cells())
    throw InvalidArgument(fmt::format("density has {} entries, mesh has {} cells", density.size(), mesh.num_cells()));
  const std::size_t npc = static_cast<std::size_t>(mesh.nodes_per_cell());
  const int cell_type = mesh.dim() == 2 ? 5 : 10;

  fmt::print(out, "# vtk DataFile Version 3.0\ntopology optimization density\nASCII\n");
  fmt::print(out, "DATASET UNSTRUCTURED_GRID\nPOINTS {} double\n", mesh.num_nodes());
  for (const auto& p : mesh.nodes()) fmt::print(out, "{} {} {}\n", p[0], p[1], p[2]);
  fmt::print(out, "CELLS {} {}\n", mesh.num_cells(), mesh.num_cells() * (npc + 1));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) fmt::print(out, "{} {}\n", npc, fmt::join(mesh.cell(c), " "));
  fmt::print(out, "CELL_TYPES {}\n", mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) fmt::print(out, "{}\n", cell_type);
  fmt::print(out, "CELL_DATA {}\nSCALARS density double 1\nLOOKUP_TABLE default\n", mesh.num_cells());
  for (double d : density) fmt::print(out, "{}\n", d);
}

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, std::span<const double> density) {
  auto out = open_for_write(path);
  write_vtk(out, mesh, density);
  check_written(out, path);
}

std::vector<unsigned char> density_image_pixels(const Mesh& mesh, std::span<const double> density) {
  const auto& grid = mesh.structured();
  if (!grid || grid->dim() != 2 || mesh.num_cells() != 2u * grid->nelx * grid->nely)
    throw UnsupportedElement("density image needs a structured 2D mesh");
  if (density.size() != mesh.num_cells()) throw InvalidArgument("density does not match the mesh");
  const int nx = grid->nelx, ny = grid->nely;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t square = static_cast<std::size_t>(iy) * nx + ix;
      const double mean = 0.5 * (density[2 * square] + density[2 * square + 1]);
      const double gray = std::floor(255.0 * (1.0 - std::clamp(mean, 0.0, 1.0)));
      pixels[static_cast<std::size_t>(ny - 1 - iy) * nx + ix] = static_cast<unsigned char>(gray);
    }
  }
  return pixels;
}

void write_density_image(std::ostream& out, const Mesh& mesh, std::span<const double> density) {
  const auto pixels = density_image_pixels(mesh, density);
  fmt::print(out, "P5\n{} {}\n255\n", mesh.structured()->nelx, mesh.structured()->nely);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_density_image(const std::filesystem::path& path, const Mesh& mesh, std::span<const double> density) {
  auto out = open_for_write(path, std::ios::out | std::ios::binary);
  write_density_image(out, mesh, density);
  check_written(out, path);
}

std::string format_history_row(const IterationRecord& r) {
  return fmt::format("{},{},{},{}", r.iteration, r.objective, r.volume_fraction, r.change);
}

void write_history_csv(std::ostream& out, std::span<const IterationRecord> history) {
  fmt::print(out, "iter,objective,volfrac,change\n");
  for (const auto& r : history) fmt::print(out, "{}\n", format_history_row(r));
}

void write_history_csv(const std::filesystem::path& path, std::span<const IterationRecord> history) {
  auto out = open_for_write(path);
  write_history_csv(out, history);
  check_written(out, path);
}

}  // namespace topo
