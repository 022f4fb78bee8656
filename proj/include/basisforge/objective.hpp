#pragma once

// Evaluation of the DVBL objective and its individual terms:
//   ||X - Phi A||_F^2 + lambda R(A) + eta Tr(A L A^T) + mu Omega(Phi)

#include "basisforge/geometry.hpp"
#include "basisforge/types.hpp"

namespace basisforge {

/// ||X - Phi A||_F^2.
double reconstruction_error(const Matrix& x, const Matrix& phi, const Matrix& a);
double reconstruction_error(const DataMatrix& x, const Basis& phi, const CoefficientMatrix& a);

/// lambda * sum_i R(alpha_i) for the penalty kind in `p`.
double coeff_penalty_value(const Matrix& a, const CoeffPenalty& p);
double coeff_penalty_value(const CoefficientMatrix& a, const CoeffPenalty& p);

/// mu * Omega(Phi). Accepts unnormalized matrices so the value can be taken
/// at the intermediate of a basis update.
double basis_penalty_value(const Matrix& phi, const BasisPenalty& p);
double basis_penalty_value(const Basis& phi, const BasisPenalty& p);

struct ObjectiveTerms {
  double reconstruction = 0.0;
  double coeffPenalty = 0.0;
  double graph = 0.0;  // already multiplied by eta
  double basisPenalty = 0.0;

  double total() const { return reconstruction + coeffPenalty + graph + basisPenalty; }
};

/// All four terms. `graph` must be non-null iff cfg.graphWeight > 0
/// (ConfigError otherwise).
ObjectiveTerms objective_terms(const Matrix& x, const Matrix& phi, const Matrix& a,
                               const DvblConfig& cfg, const GraphLaplacian* graph);

double total_objective(const DataMatrix& x, const Basis& phi, const CoefficientMatrix& a,
                       const DvblConfig& cfg, const GraphLaplacian* graph = nullptr);

}  // namespace basisforge
