#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "topo/sparse.hpp"

namespace topo {

enum class SolverMethod { Auto, Direct, CG };
enum class Preconditioner { Jacobi, None };

/// `Auto` picks the direct factorization up to `direct_max_dofs` unknowns and
/// Jacobi-preconditioned CG above.
struct SolverConfig {
  SolverMethod method = SolverMethod::Auto;
  double rel_tolerance = 1e-8;
  std::size_t max_iterations = 20000;
  Preconditioner preconditioner = Preconditioner::Jacobi;
  std::size_t direct_max_dofs = 200000;

  void validate() const;
  SolverMethod resolve(std::size_t dofs) const;
};

struct SolveStats {
  SolverMethod method = SolverMethod::Direct;
  std::size_t iterations = 0;
  /// ||K u - F||_2 / ||F||_2 at exit.
  double relative_residual = 0.0;
  /// CG only: relative residual before the first and after every iteration.
  std::vector<double> residual_history;
  /// CG only: 1/2 u'Ku - F'u alongside residual_history. CG minimizes the
  /// K-norm of the error, so this is the quantity that decreases monotonically.
  std::vector<double> energy_history;
};

/// Solver bound to one sparsity pattern. The direct path keeps its symbolic
/// analysis between calls, so repeated solves on matrices that share a
/// pattern (the optimization loop) only refactorize. Not thread-safe.
class LinearSolver {
 public:
  explicit LinearSolver(SolverConfig config = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Solves K u = F. `initial_guess` seeds CG (ignored by the direct path).
  std::vector<double> solve(const SparseMatrix& K, std::span<const double> F,
                            std::span<const double> initial_guess = {}, SolveStats* stats = nullptr);

  /// Reuses the factorization of the last solve() for another right-hand side.
  std::vector<double> resolve(const SparseMatrix& K, std::span<const double> F,
                              std::span<const double> initial_guess = {}, SolveStats* stats = nullptr);

  const SolverConfig& config() const { return config_; }

 private:
  struct DirectState;

  std::vector<double> solve_direct(const SparseMatrix& K, std::span<const double> F, bool refactor,
                                   SolveStats* stats);

  SolverConfig config_;
  std::unique_ptr<DirectState> direct_;
};

std::vector<double> solve(const SparseMatrix& K, std::span<const double> F, const SolverConfig& config,
                          SolveStats* stats = nullptr);

/// Preconditioned conjugate gradients. Throws IterationLimit carrying the final
/// relative residual when the tolerance is not met in max_iterations.
std::vector<double> conjugate_gradient(const SparseMatrix& K, std::span<const double> F,
                                       const SolverConfig& config,
                                       std::span<const double> initial_guess = {},
                                       SolveStats* stats = nullptr);

}  // namespace topo
