#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "topo/optimizer.hpp"
#include "topo/problems.hpp"

namespace topo {

struct RunConfig {
  std::string problem = "cantilever2d";
  DimOverrides dims;
  std::optional<std::filesystem::path> mesh_file;
  RunOptions options;
  std::filesystem::path out_dir = "out";
  /// Write density_XXXX.vtk every k iterations; 0 writes only the final design.
  int write_every = 0;
  /// 0 keeps the runtime default.
  int threads = 0;

  void validate() const;
};

/// Entry point of the `topo` executable. Returns 0 on convergence or when
/// max_iters is reached, 1 on a runtime failure, 2 on bad usage.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

/// Runs a parsed configuration, writing history.csv, VTK snapshots and the
/// 2D density image into cfg.out_dir. The per-iteration log goes to `log`.
OptimizationState execute(const RunConfig& cfg, std::ostream& log);

}  // namespace topo
