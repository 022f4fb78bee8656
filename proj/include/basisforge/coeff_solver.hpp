#pragma once

// Coefficient subproblem  min_A ||X - Phi A||_F^2 + lambda R(A)  (optionally
// plus eta Tr(A L A^T)) by proximal gradient / FISTA.

#include "basisforge/geometry.hpp"
#include "basisforge/types.hpp"

#include <vector>

namespace basisforge {

enum class StepRule { Fixed, Backtracking };

struct SolverOptions {
  int maxInnerIters = 1000;
  double tol = 1e-10;  // relative objective change
  bool acceleration = true;
  StepRule stepRule = StepRule::Fixed;

  void validate() const;
};

/// Proximal map of step * lambda * R evaluated at v.
Vector prox(const Vector& v, const CoeffPenalty& p, double step);
/// Column-wise prox on a coefficient matrix.
Matrix prox_columns(const Matrix& v, const CoeffPenalty& p, double step);

/// Gradient of ||X - Phi A||_F^2 + eta Tr(A L A^T) with respect to A.
/// `graph` may be null when eta == 0.
Matrix coeff_smooth_gradient(const Matrix& x, const Matrix& phi, const Matrix& a,
                             const GraphLaplacian* graph = nullptr, double eta = 0.0);

struct CoeffSolveReport {
  int maxIterations = 0;        // over columns (or the joint solve)
  long unconvergedColumns = 0;  // columns that hit maxInnerIters
};

/// Per-column proximal gradient. Columns are independent and run through
/// parallel_for; results do not depend on the thread count. `warm` (m x N)
/// seeds the iterates; zero otherwise.
Matrix solve_coeffs(const Matrix& x, const Matrix& phi, const CoeffPenalty& p,
                    const SolverOptions& opts, const Matrix* warm = nullptr,
                    CoeffSolveReport* report = nullptr);
CoefficientMatrix solve_coeffs(const DataMatrix& x, const Basis& phi, const CoeffPenalty& p,
                               const SolverOptions& opts);

/// Joint proximal gradient over all columns with the graph coupling
/// eta Tr(A L A^T) in the smooth part.
Matrix solve_coeffs_manifold(const Matrix& x, const Matrix& phi, const CoeffPenalty& p,
                             const GraphLaplacian& graph, double eta, const SolverOptions& opts,
                             const Matrix* warm = nullptr, CoeffSolveReport* report = nullptr);
CoefficientMatrix solve_coeffs_manifold(const DataMatrix& x, const Basis& phi, const CoeffPenalty& p,
                                        const GraphLaplacian& graph, double eta,
                                        const SolverOptions& opts);

/// Objective trace of a single-column solve, for inspecting inner descent.
std::vector<double> coeff_column_trace(const Vector& x, const Matrix& phi, const CoeffPenalty& p,
                                       const SolverOptions& opts);

}  // namespace basisforge
