#pragma once

// Identifiability and approximation instruments: mutual coherence, the
// coherence-based sparsity bound, the best rank-m error, synthetic
// generative models, and signed-permutation matching of bases.

#include "basisforge/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace basisforge {

struct Coherence {
  double value = 0.0;
  bool singleAtom = false;  // m == 1: value is 0 by convention
};

/// max_{k != l} |phi_k^T phi_l|.
Coherence mutual_coherence(const Matrix& phi);
Coherence mutual_coherence(const Basis& phi);

/// 1/2 (1 + 1/mu). Sparsity s qualifies iff s < bound. mu == 0 returns
/// +infinity (orthonormal case).
double uniqueness_bound(double mu);

/// Largest integer sparsity strictly below the bound (-1 when unbounded).
long max_unique_sparsity(double mu);

/// sum_{j > m} sigma_j(X)^2.
double best_rank_error(const Matrix& x, Index m);
double best_rank_error(const DataMatrix& x, Index m);

struct SparseModel {
  Matrix x;          // d x N
  Matrix phiStar;    // d x m, unit-norm columns
  Matrix alphaStar;  // m x N, s nonzeros per column
};

/// x_i = Phi* alpha_i* + eps_i with Gaussian atoms (normalized), uniformly
/// random size-s supports, Gaussian nonzeros and Gaussian noise.
SparseModel synth_sparse_model(Index d, Index m, Index n, Index s, double noiseStd, std::uint64_t seed);

struct LinearSystemModel {
  Matrix x;          // d x T
  Matrix phiStar;    // d x m
  Matrix zStar;      // m x T
  Matrix aStar;      // m x m, spectral radius rho
};

/// z_{t+1} = A* z_t, x_t = Phi* z_t + eps_t. A* = Q blockdiag(rho R(theta_j)) Q^T
/// with a random orthogonal Q, so every eigenvalue has modulus rho.
LinearSystemModel synth_linear_system(Index d, Index m, Index t, double rho, double noiseStd,
                                      std::uint64_t seed);

struct AtomMatch {
  Index learned = 0;
  Index truth = 0;
  int sign = 1;
  double absCorrelation = 0.0;
};

struct RecoveryReport {
  std::vector<AtomMatch> matching;  // one entry per matched pair, min(m, m*)
  double meanAbsCorrelation = 0.0;
  std::optional<double> supportRecoveryRate;

  double fraction_above(double threshold) const;
};

/// Maximum-weight assignment of learned to true atoms on |PhiHat^T PhiStar|.
/// When codes for both sides are given, also reports the fraction of samples
/// whose support (|a| > supportTol), mapped through the matching, equals the
/// true support.
RecoveryReport match_bases(const Matrix& phiHat, const Matrix& phiStar, const Matrix* aHat = nullptr,
                           const Matrix* aStar = nullptr, double supportTol = 1e-6);

/// Exact maximum-weight assignment (rows to distinct columns) on a
/// rectangular weight matrix with rows <= cols. Returns the column for each row.
std::vector<Index> max_weight_assignment(const Matrix& weights);

}  // namespace basisforge
