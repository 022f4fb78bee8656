#pragma once

// Shared domain types. Samples are columns throughout: X is d x N with
// column i holding observation x_i, and a coefficient matrix is m x N with
// column i holding the code of x_i.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <vector>

namespace basisforge {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// d x N observations. Entries are finite and both dimensions are >= 1.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// d x m atoms with unit Euclidean norm columns (checked to kNormTolerance).
class Basis {
 public:
  static constexpr double kNormTolerance = 1e-9;

  explicit Basis(Matrix values);

  Index dim() const { return values_.rows(); }
  Index atoms() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// m x N codes; also used for latent state trajectories (m x T).
class CoefficientMatrix {
 public:
  explicit CoefficientMatrix(Matrix values);

  Index atoms() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

enum class CoeffPenaltyKind { L1, SquaredL2, GroupL2 };

/// lambda * sum_i R(alpha_i). `groups` partitions the atom indices and is
/// required iff kind == GroupL2.
struct CoeffPenalty {
  CoeffPenaltyKind kind = CoeffPenaltyKind::L1;
  double weight = 0.0;
  std::vector<std::vector<Index>> groups;

  static CoeffPenalty l1(double weight) { return {CoeffPenaltyKind::L1, weight, {}}; }
  static CoeffPenalty squared_l2(double weight) { return {CoeffPenaltyKind::SquaredL2, weight, {}}; }
  static CoeffPenalty group_l2(double weight, std::vector<std::vector<Index>> groups) {
    return {CoeffPenaltyKind::GroupL2, weight, std::move(groups)};
  }

  // Throws ConfigError if the weight is negative or the partition is missing
  // or does not cover 0..atoms-1 exactly once.
  void validate(Index atoms) const;
};

/// Discrete-gradient layout used by the smoothness penalty. gridRows == 0
/// means a 1-D forward-difference chain over the d entries of an atom;
/// otherwise atoms are gridRows x gridCols images stored column-major.
struct SmoothnessStencil {
  Index gridRows = 0;
  Index gridCols = 0;
};

enum class BasisPenaltyKind { Frobenius, Smoothness, Orthogonality, LinearOperator };

/// mu * Omega(Phi).
struct BasisPenalty {
  BasisPenaltyKind kind = BasisPenaltyKind::Frobenius;
  double weight = 0.0;
  std::optional<SmoothnessStencil> stencil;
  std::optional<SparseMatrix> op;

  static BasisPenalty frobenius(double weight) { return {BasisPenaltyKind::Frobenius, weight, {}, {}}; }
  static BasisPenalty smoothness(double weight, SmoothnessStencil s = {}) {
    return {BasisPenaltyKind::Smoothness, weight, s, {}};
  }
  static BasisPenalty orthogonality(double weight) {
    return {BasisPenaltyKind::Orthogonality, weight, {}, {}};
  }
  static BasisPenalty linear_operator(double weight, SparseMatrix op) {
    return {BasisPenaltyKind::LinearOperator, weight, {}, std::move(op)};
  }

  void validate(Index dim) const;

  // The linear map G whose squared action sum_k ||G phi_k||^2 the penalty
  // measures: the difference stencil for Smoothness, the operator for
  // LinearOperator. Only valid for those two kinds.
  SparseMatrix quadratic_operator(Index dim) const;
};

/// Forward-difference operator for the given stencil on vectors of length dim.
SparseMatrix difference_operator(Index dim, const SmoothnessStencil& stencil);

struct DvblConfig {
  Index atoms = 1;
  CoeffPenalty coeffPenalty;
  BasisPenalty basisPenalty;
  double graphWeight = 0.0;  // eta
  double dynWeight = 0.0;    // beta
  double opWeight = 0.0;     // nu
  int maxIters = 100;
  double stopEps = 1e-6;
  std::uint64_t seed = 0;
  std::optional<double> coherenceCap;

  void validate() const;
};

}  // namespace basisforge
