#pragma once

// Small numerical helpers shared across modules.

#include "basisforge/types.hpp"

#include <functional>
#include <random>

namespace basisforge {

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed start vector (deterministic). Returns the final
/// Rayleigh quotient, which never exceeds the true value.
double power_iteration_max_eig(const Matrix& sym, int iters = 50);

/// Exact spectral radius max |lambda_i(A)| of a square matrix.
double spectral_radius(const Matrix& a);

/// Largest singular value (spectral norm).
double spectral_norm(const Matrix& a);

/// i.i.d. standard normal entries drawn column by column.
Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng);

/// Columns scaled to unit norm; columns with norm below `tiny` are left as is.
Matrix unit_columns(const Matrix& m, double tiny = 1e-12);

/// Worker count used by parallel_for. Defaults to 1; values < 1 are clamped.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n) across num_threads() workers with a static
/// contiguous partition. Bodies must only write to disjoint state.
void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace basisforge
