#pragma once

// Basis subproblem  min_Phi ||X - Phi A||_F^2 + mu Omega(Phi), followed by
// atom normalization and the optional coherence cap.

#include "basisforge/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace basisforge {

struct BasisUpdate {
  Matrix raw;                      // unconstrained minimizer, before normalization
  bool minNormFallback = false;    // singular system solved in the minimum-norm sense
  int gradientSteps = 0;           // Orthogonality kind only
};

/// Solves the basis subproblem for the penalty kind in `p`:
///  - Frobenius: X A^T (A A^T + mu I)^{-1}
///  - Smoothness / LinearOperator: Phi (A A^T) + mu G^T G Phi = X A^T, solved
///    exactly in the joint eigenbasis of the two symmetric factors
///  - Orthogonality: gradient descent with backtracking on the quartic
///    objective starting from `current` (required for this kind)
BasisUpdate update_basis(const Matrix& x, const Matrix& a, const BasisPenalty& p,
                         const Matrix* current = nullptr);

/// Subproblem objective ||X - Phi A||_F^2 + mu Omega(Phi).
double basis_subproblem_objective(const Matrix& x, const Matrix& a, const Matrix& phi,
                                  const BasisPenalty& p);

/// Where replacement atoms come from when a column vanishes.
struct ReplacementPolicy {
  const Matrix* data = nullptr;    // X; when null, random Gaussian atoms are used
  const Matrix* coeffs = nullptr;  // A, used with data to rank samples by residual
  std::uint64_t seed = 0;
};

struct NormalizedBasis {
  Matrix values;                   // unit-norm columns
  std::vector<Index> replaced;     // atoms that were dead and got replaced
  std::vector<double> scales;      // original column norms (0 for replaced atoms)
};

/// phi_k <- phi_k / ||phi_k|| for every column with norm >= 1e-12. Dead
/// columns are replaced by the normalized data column with the largest
/// residual ||x_i - Phi a_i|| not already used (ties to the lower index), or
/// by a seeded Gaussian direction when no data is supplied.
NormalizedBasis normalize_atoms(const Matrix& raw, const ReplacementPolicy& policy = {});

struct CoherenceResult {
  Matrix values;
  bool converged = false;
  bool welchInfeasible = false;  // delta below the Welch bound for m > d
  int passes = 0;
  double coherence = 0.0;        // achieved mutual coherence
};

/// Repeatedly takes the most coherent pair, moves both atoms symmetrically
/// away from each other until |phi_k^T phi_l| == delta, and renormalizes,
/// for at most maxPasses passes.
CoherenceResult enforce_coherence(const Matrix& phi, double delta, int maxPasses = 1000,
                                  std::uint64_t seed = 0);

/// Lower bound on the coherence of m unit vectors in R^d (0 when m <= d).
double welch_bound(Index d, Index m);

}  // namespace basisforge
