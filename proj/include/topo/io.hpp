#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "topo/mesh.hpp"
#include "topo/optimizer.hpp"

namespace topo {

/// Legacy ASCII VTK unstructured grid with a `density` cell scalar
/// (VTK_TRIANGLE = 5, VTK_TETRA = 10).
void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const double> density);
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, std::span<const double> density);

/// Binary PGM (P5), one pixel per unit square of a structured 2D mesh,
/// gray = floor(255 * (1 - mean density of the square's two triangles)).
/// Row 0 of the image is the top of the domain.
void write_density_image(std::ostream& out, const Mesh& mesh, std::span<const double> density);
void write_density_image(const std::filesystem::path& path, const Mesh& mesh, std::span<const double> density);

/// Gray levels write_density_image would emit, row-major from the top.
std::vector<unsigned char> density_image_pixels(const Mesh& mesh, std::span<const double> density);

/// `iter,objective,volfrac,change` with one row per history record.
void write_history_csv(std::ostream& out, std::span<const IterationRecord> history);
void write_history_csv(const std::filesystem::path& path, std::span<const IterationRecord> history);
std::string format_history_row(const IterationRecord& record);

}  // namespace topo
