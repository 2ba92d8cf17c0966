#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "topo/fem.hpp"
#include "topo/filter.hpp"
#include "topo/linsolve.hpp"
#include "topo/mesh.hpp"

namespace topo {

/// Optimality-criteria parameters. Defaults: m = 0.2, eta = 0.5, d_min =
/// 0.001, multiplier bracket [0, 1e5] bisected to width 1e-4.
struct OCParams {
  double volfrac = 0.5;
  double penal = 3.0;
  double move = 0.2;
  double damping = 0.5;
  double d_min = 1e-3;
  double bisect_lo = 0.0;
  double bisect_hi = 1e5;
  double bisect_tol = 1e-4;
  /// Measure the volume constraint by cell count instead of cell volume.
  bool count_volume = false;

  void validate() const;
};

/// Cells whose density is pinned (d_min for holes, 1 for solid regions).
struct PassiveSet {
  std::vector<Index> cells;
  std::vector<double> values;

  bool empty() const { return cells.empty(); }
  void validate(std::size_t num_cells, double d_min) const;
  void apply(std::span<double> density) const;
};

struct SensitivityResult {
  double objective = 0.0;
  std::vector<double> sensitivity;
};

/// objective = sum_e d_e^p U_e, sensitivity_e = -p d_e^(p-1) U_e.
SensitivityResult compute_sensitivities(std::span<const double> density, double penal,
                                        std::span<const double> energies);

/// Derivative of the volume constraint: cell volumes, or ones when the
/// constraint counts cells.
std::vector<double> volume_gradient(const Mesh& mesh, bool count_volume);

struct OcResult {
  std::vector<double> density;
  double multiplier = 0.0;
  int bisection_steps = 0;
};

/// One OC step: d_new = clamp(d * B^eta, max(d_min, d - m), min(1, d + m)) with
/// B_e = -s_e / (lambda V_e), lambda found by bisection on the volume
/// constraint. Passive cells are pinned inside every trial, so the returned
/// density meets the constraint with them in place.
OcResult oc_update(std::span<const double> density, std::span<const double> sensitivity,
                   std::span<const double> volumes, const OCParams& params,
                   const PassiveSet& passive = {});

/// sum_e V_e d_e / sum_e V_e.
double volume_fraction(std::span<const double> density, std::span<const double> volumes);

/// Mesh plus resolved supports, load cases and passive cells.
struct Model {
  Mesh mesh;
  std::vector<DirichletBC> supports;
  std::vector<LoadCase> loads;
  PassiveSet passive;
};

struct Evaluation {
  double objective = 0.0;
  std::vector<double> load_objectives;
  std::vector<double> sensitivity;
  std::vector<std::vector<double>> displacements;
};

/// Repeated structural analyses of one model: assembly, constraint
/// elimination and solves for every load case. Displacements of the previous
/// call seed the next CG solve.
class StructuralAnalysis {
 public:
  StructuralAnalysis(const Model& model, const Material& material, const SolverConfig& solver);

  /// Objective and raw sensitivities summed over all load cases.
  Evaluation evaluate(std::span<const double> density, double penal);

  const std::vector<std::vector<double>>& load_vectors() const { return loads_; }
  const Constraints& constraints() const { return constraints_; }
  /// Constrained stiffness of the last evaluate() call.
  const SparseMatrix& last_stiffness() const { return K_; }

 private:
  const Model* model_;
  Material material_;
  StiffnessAssembler assembler_;
  Constraints constraints_;
  std::vector<std::vector<double>> loads_;
  LinearSolver solver_;
  SparseMatrix K_;
  std::vector<std::vector<double>> previous_;
};

enum class FilterKind { Distance, Helmholtz, None };

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double volume_fraction = 0.0;
  double change = 0.0;
};

struct OptimizationState {
  int iteration = 0;
  DensityField density;
  double objective = 0.0;
  double change = 0.0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

struct RunOptions {
  OCParams params;
  Material material;
  SolverConfig solver;
  FilterKind filter = FilterKind::Distance;
  double rmin = 2.0;
  std::size_t chunk_rows = kDefaultChunkRows;
  int max_iters = 100;
  double change_tol = 0.01;
  /// Called after every density update.
  std::function<void(const OptimizationState&)> observer;

  void validate() const;
};

/// Initial design: non-passive cells share the volume left after the passive
/// cells, so the starting density meets the constraint.
std::vector<double> initial_density(const Model& model, const OCParams& params);

/// Solve, evaluate, filter, OC-update until the density change drops below
/// change_tol or max_iters is reached.
OptimizationState run_optimization(const Model& model, const RunOptions& options);

}  // namespace topo
