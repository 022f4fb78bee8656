#include "basisforge/types.hpp"

#include "basisforge/error.hpp"

#include <string>

namespace basisforge {

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw InputError("data matrix must be nonempty");
  if (!values_.allFinite()) throw InputError("data matrix contains non-finite entries");
}

Basis::Basis(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw InputError("basis must be nonempty");
  for (Index k = 0; k < values_.cols(); ++k) {
    const double n = values_.col(k).norm();
    if (!(std::abs(n - 1.0) <= kNormTolerance))
      throw InputError("basis atom " + std::to_string(k) + " has norm " + std::to_string(n) +
                       ", expected 1");
  }
}

CoefficientMatrix::CoefficientMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InputError("coefficient matrix contains non-finite entries");
}

void CoeffPenalty::validate(Index atoms) const {
  if (!(weight >= 0.0)) throw ConfigError("coefficient penalty weight must be >= 0");
  if (kind != CoeffPenaltyKind::GroupL2) return;
  if (groups.empty()) throw ConfigError("group-l2 penalty requires a group partition");
  std::vector<int> seen(static_cast<std::size_t>(atoms), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("group-l2 partition contains an empty group");
    for (Index k : g) {
      if (k < 0 || k >= atoms)
        throw ConfigError("group index " + std::to_string(k) + " out of range");
      if (seen[static_cast<std::size_t>(k)]++)
        throw ConfigError("group index " + std::to_string(k) + " appears more than once");
    }
  }
  for (Index k = 0; k < atoms; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      throw ConfigError("group partition does not cover atom " + std::to_string(k));
}

void BasisPenalty::validate(Index dim) const {
  if (!(weight >= 0.0)) throw ConfigError("basis penalty weight must be >= 0");
  const bool wantStencil = kind == BasisPenaltyKind::Smoothness;
  const bool wantOp = kind == BasisPenaltyKind::LinearOperator;
  if (wantStencil != stencil.has_value())
    throw ConfigError("smoothness stencil must be given iff the penalty kind is smoothness");
  if (wantOp != op.has_value())
    throw ConfigError("linear operator must be given iff the penalty kind is linear_operator");
  if (stencil && stencil->gridRows > 0 && stencil->gridRows * stencil->gridCols != dim)
    throw ShapeError("smoothness grid " + std::to_string(stencil->gridRows) + "x" +
                     std::to_string(stencil->gridCols) + " does not match atom dimension " +
                     std::to_string(dim));
  if (op && op->cols() != dim)
    throw ShapeError("penalty operator has " + std::to_string(op->cols()) +
                     " columns, atom dimension is " + std::to_string(dim));
}

SparseMatrix difference_operator(Index dim, const SmoothnessStencil& stencil) {
  std::vector<Eigen::Triplet<double>> trip;
  Index row = 0;
  if (stencil.gridRows <= 0) {
    for (Index i = 0; i + 1 < dim; ++i, ++row) {
      trip.emplace_back(row, i, -1.0);
      trip.emplace_back(row, i + 1, 1.0);
    }
  } else {
    const Index r = stencil.gridRows, c = stencil.gridCols;
    auto at = [r](Index i, Index j) { return i + j * r; };
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i + 1 < r; ++i, ++row) {
        trip.emplace_back(row, at(i, j), -1.0);
        trip.emplace_back(row, at(i + 1, j), 1.0);
      }
    for (Index j = 0; j + 1 < c; ++j)
      for (Index i = 0; i < r; ++i, ++row) {
        trip.emplace_back(row, at(i, j), -1.0);
        trip.emplace_back(row, at(i, j + 1), 1.0);
      }
  }
  SparseMatrix g(row, dim);
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

SparseMatrix BasisPenalty::quadratic_operator(Index dim) const {
  if (kind == BasisPenaltyKind::Smoothness) return difference_operator(dim, stencil.value_or(SmoothnessStencil{}));
  if (kind == BasisPenaltyKind::LinearOperator) return *op;
  throw ConfigError("penalty kind has no quadratic operator");
}

void DvblConfig::validate() const {
  if (atoms < 1) throw ConfigError("atom count m must be >= 1");
  coeffPenalty.validate(atoms);
  if (!(basisPenalty.weight >= 0.0)) throw ConfigError("basis penalty weight must be >= 0");
  if (!(graphWeight >= 0.0)) throw ConfigError("graph weight must be >= 0");
  if (!(dynWeight >= 0.0)) throw ConfigError("dynamics weight must be >= 0");
  if (!(opWeight >= 0.0)) throw ConfigError("operator weight must be >= 0");
  if (maxIters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(stopEps > 0.0)) throw ConfigError("stop_eps must be > 0");
  if (coherenceCap && !(*coherenceCap >= 0.0 && *coherenceCap <= 1.0))
    throw ConfigError("coherence cap must lie in [0, 1]");
}

}  // namespace basisforge
