#include "topo/linsolve.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "topo/errors.hpp"

namespace topo {

IterationLimit::IterationLimit(std::size_t iterations, double relative_residual)
    : Error("conjugate gradients did not converge in " + std::to_string(iterations) +
            " iterations (relative residual " + std::to_string(relative_residual) + ")"),
      iterations_(iterations),
      residual_(relative_residual) {}

void SolverConfig::validate() const {
  if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0))
    throw InvalidArgument("solver rel_tolerance must lie in (0, 1)");
  if (max_iterations < 1) throw InvalidArgument("solver max_iterations must be >= 1");
}

SolverMethod SolverConfig::resolve(std::size_t dofs) const {
  if (method != SolverMethod::Auto) return method;
  return dofs <= direct_max_dofs ? SolverMethod::Direct : SolverMethod::CG;
}

namespace {

double relative_residual(const SparseMatrix& K, std::span<const double> u, std::span<const double> F,
                         std::vector<double>& r) {
  K.multiply(u, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = F[i] - r[i];
  const double fn = norm2(F);
  return fn > 0.0 ? norm2(r) / fn : norm2(r);
}

}  // namespace

std::vector<double> conjugate_gradient(const SparseMatrix& K, std::span<const double> F,
                                       const SolverConfig& config,
                                       std::span<const double> initial_guess, SolveStats* stats) {
  config.validate();
  const std::size_t n = K.rows();
  if (F.size() != n) throw InvalidArgument("right-hand side does not match matrix size");

  std::vector<double> u(n, 0.0);
  if (initial_guess.size() == n) u.assign(initial_guess.begin(), initial_guess.end());

  std::vector<double> inv_diag(n, 1.0);
  if (config.preconditioner == Preconditioner::Jacobi) {
    const auto diag = K.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(diag[i] > 0.0)) throw SingularMatrix("non-positive diagonal entry in SPD system");
      inv_diag[i] = 1.0 / diag[i];
    }
  }

  const double fnorm = norm2(F);
  if (stats) {
    stats->method = SolverMethod::CG;
    stats->residual_history.clear();
    stats->energy_history.clear();
  }
  if (fnorm == 0.0) {
    std::fill(u.begin(), u.end(), 0.0);
    if (stats) {
      stats->iterations = 0;
      stats->relative_residual = 0.0;
      stats->residual_history.push_back(0.0);
      stats->energy_history.push_back(0.0);
    }
    return u;
  }

  std::vector<double> r(n), z(n), p(n), Kp(n);
  double rel = 0.0;
  // With r = F - K u, 1/2 u'Ku - F'u = -1/2 u'(F + r).
  auto record = [&] {
    if (!stats) return;
    stats->residual_history.push_back(rel);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e -= 0.5 * u[i] * (F[i] + r[i]);
    stats->energy_history.push_back(e);
  };
  rel = relative_residual(K, u, F, r);
  record();

  std::size_t it = 0;
  while (rel > config.rel_tolerance && it < config.max_iterations) {
    // (Re)start from the true residual r = F - K u.
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (it < config.max_iterations) {
      K.multiply(p, Kp);
      const double pKp = dot(p, Kp);
      if (!(pKp > 0.0)) throw SingularMatrix("matrix is not positive definite (p'Kp <= 0)");
      const double alpha = rz / pKp;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += alpha * p[i];
        r[i] -= alpha * Kp[i];
      }
      ++it;
      rel = norm2(r) / fnorm;
      record();
      if (rel <= config.rel_tolerance) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // The recursive residual can drift from the true one; confirm before exit.
    rel = relative_residual(K, u, F, r);
  }

  if (stats) {
    stats->iterations = it;
    stats->relative_residual = rel;
  }
  if (rel > config.rel_tolerance) throw IterationLimit(it, rel);
  return u;
}

struct LinearSolver::DirectState {
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SimplicialLLT<Matrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  std::vector<int> outer;
  std::vector<Index> inner;
  std::size_t n = 0;
  bool analyzed = false;
  bool factorized = false;
};

LinearSolver::LinearSolver(SolverConfig config) : config_(config) { config_.validate(); }
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::vector<double> LinearSolver::solve_direct(const SparseMatrix& K, std::span<const double> F,
                                               bool refactor, SolveStats* stats) {
  const std::size_t n = K.rows();
  if (!direct_) direct_ = std::make_unique<DirectState>();
  auto& st = *direct_;

  // A symmetric CSR matrix is its own CSC representation.
  const bool same_pattern =
      st.analyzed && st.n == n && st.inner == K.col_indices() &&
      std::equal(st.outer.begin(), st.outer.end(), K.row_offsets().begin(), K.row_offsets().end(),
                 [](int a, std::size_t b) { return static_cast<std::size_t>(a) == b; });
  if (!same_pattern) {
    st.outer.assign(K.row_offsets().begin(), K.row_offsets().end());
    st.inner = K.col_indices();
    st.n = n;
    st.analyzed = false;
    st.factorized = false;
    refactor = true;
  }
  const Eigen::Map<const DirectState::Matrix> A(static_cast<int>(n), static_cast<int>(n),
                                                static_cast<int>(K.nonzeros()), st.outer.data(),
                                                K.col_indices().data(), K.values().data());
  if (!st.analyzed) {
    st.llt.analyzePattern(A);
    st.analyzed = true;
  }
  if (refactor || !st.factorized) {
    st.llt.factorize(A);
    if (st.llt.info() != Eigen::Success) {
      st.factorized = false;
      throw SingularMatrix("sparse Cholesky factorization failed (matrix not SPD)");
    }
    st.factorized = true;
  }

  const Eigen::Map<const Eigen::VectorXd> b(F.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd x = st.llt.solve(b);
  std::vector<double> u(x.data(), x.data() + n);

  // Iterative refinement against the original operator.
  std::vector<double> r(n);
  double rel = relative_residual(K, u, F, r);
  for (int pass = 0; pass < 3 && rel > 1e-12; ++pass) {
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd dx = st.llt.solve(rv);
    for (std::size_t i = 0; i < n; ++i) u[i] += dx[static_cast<Eigen::Index>(i)];
    rel = relative_residual(K, u, F, r);
  }
  if (!std::isfinite(rel) || rel > 1e-10)
    throw SingularMatrix("direct solve residual " + std::to_string(rel) + " exceeds 1e-10");
  if (stats) {
    stats->method = SolverMethod::Direct;
    stats->iterations = 1;
    stats->relative_residual = rel;
    stats->residual_history.clear();
    stats->energy_history.clear();
  }
  return u;
}

std::vector<double> LinearSolver::solve(const SparseMatrix& K, std::span<const double> F,
                                        std::span<const double> initial_guess, SolveStats* stats) {
  if (F.size() != K.rows()) throw InvalidArgument("right-hand side does not match matrix size");
  if (config_.resolve(K.rows()) == SolverMethod::Direct) return solve_direct(K, F, true, stats);
  return conjugate_gradient(K, F, config_, initial_guess, stats);
}

std::vector<double> LinearSolver::resolve(const SparseMatrix& K, std::span<const double> F,
                                          std::span<const double> initial_guess, SolveStats* stats) {
  if (F.size() != K.rows()) throw InvalidArgument("right-hand side does not match matrix size");
  if (config_.resolve(K.rows()) == SolverMethod::Direct) return solve_direct(K, F, false, stats);
  return conjugate_gradient(K, F, config_, initial_guess, stats);
}

std::vector<double> solve(const SparseMatrix& K, std::span<const double> F, const SolverConfig& config,
                          SolveStats* stats) {
  LinearSolver solver(config);
  return solver.solve(K, F, {}, stats);
}

}  // namespace topo
