#pragma once

#include <string>
#include <vector>

#include "pbsolv/errors.hpp"
#include "pbsolv/sparse.hpp"

namespace pbsolv {

enum class Preconditioner { jacobi, ilu, none };

struct SolverConfig {
  double rel_tolerance = 1e-8;
  std::int64_t max_iterations = 0; // 0 -> 10 * n_unknowns
  Preconditioner precond = Preconditioner::jacobi;
};

struct SolveDiagnostics {
  std::int64_t iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

struct SolveResult {
  std::vector<double> x;
  SolveDiagnostics diagnostics;
};

Preconditioner parse_preconditioner(const std::string& name);
std::string preconditioner_name(Preconditioner p);

// Non-convergence carries the best iterate seen plus the residual history.
class SolverFailure : public Error {
public:
  SolverFailure(const std::string& what, SolveResult best)
      : Error(ErrorKind::solver, what), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

private:
  SolveResult best_;
};

// Preconditioned BiCGSTAB. Throws SolverFailure on breakdown or when
// max_iterations is exceeded. Deterministic: fixed reduction order,
// no threading.
SolveResult solve(const SparseSystem& system, const SolverConfig& config);

// Divides every row and its right-hand side by the row's diagonal so that
// rows of very different scale contribute comparably to the residual norm.
// The solution is unchanged.
void equilibrate_rows(SparseSystem& system);

} // namespace pbsolv
