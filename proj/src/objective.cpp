#include "basisforge/objective.hpp"

#include "basisforge/error.hpp"

namespace basisforge {

namespace {

void check_factor_shapes(const Matrix& x, const Matrix& phi, const Matrix& a) {
  if (phi.rows() != x.rows()) throw_shape("basis", x.rows(), phi.cols(), phi.rows(), phi.cols());
  if (a.rows() != phi.cols() || a.cols() != x.cols())
    throw_shape("coefficients", phi.cols(), x.cols(), a.rows(), a.cols());
}

}  // namespace

double reconstruction_error(const Matrix& x, const Matrix& phi, const Matrix& a) {
  check_factor_shapes(x, phi, a);
  return (x - phi * a).squaredNorm();
}

double reconstruction_error(const DataMatrix& x, const Basis& phi, const CoefficientMatrix& a) {
  return reconstruction_error(x.values(), phi.values(), a.values());
}

double coeff_penalty_value(const Matrix& a, const CoeffPenalty& p) {
  p.validate(a.rows());
  if (p.weight == 0.0) return 0.0;
  double sum = 0.0;
  switch (p.kind) {
    case CoeffPenaltyKind::L1:
      sum = a.cwiseAbs().sum();
      break;
    case CoeffPenaltyKind::SquaredL2:
      sum = a.squaredNorm();
      break;
    case CoeffPenaltyKind::GroupL2:
      for (Index i = 0; i < a.cols(); ++i)
        for (const auto& g : p.groups) {
          double s2 = 0.0;
          for (Index k : g) s2 += a(k, i) * a(k, i);
          sum += std::sqrt(s2);
        }
      break;
  }
  return p.weight * sum;
}

double coeff_penalty_value(const CoefficientMatrix& a, const CoeffPenalty& p) {
  return coeff_penalty_value(a.values(), p);
}

double basis_penalty_value(const Matrix& phi, const BasisPenalty& p) {
  p.validate(phi.rows());
  if (p.weight == 0.0) return 0.0;
  switch (p.kind) {
    case BasisPenaltyKind::Frobenius:
      return p.weight * phi.squaredNorm();
    case BasisPenaltyKind::Orthogonality: {
      const Matrix gram = phi.transpose() * phi;
      return p.weight * (gram - Matrix::Identity(gram.rows(), gram.cols())).squaredNorm();
    }
    case BasisPenaltyKind::Smoothness:
    case BasisPenaltyKind::LinearOperator: {
      const SparseMatrix g = p.quadratic_operator(phi.rows());
      return p.weight * Matrix(g * phi).squaredNorm();
    }
  }
  return 0.0;
}

double basis_penalty_value(const Basis& phi, const BasisPenalty& p) {
  return basis_penalty_value(phi.values(), p);
}

ObjectiveTerms objective_terms(const Matrix& x, const Matrix& phi, const Matrix& a,
                               const DvblConfig& cfg, const GraphLaplacian* graph) {
  if (cfg.graphWeight > 0.0 && graph == nullptr)
    throw ConfigError("graph weight eta > 0 requires a graph Laplacian");
  ObjectiveTerms t;
  t.reconstruction = reconstruction_error(x, phi, a);
  t.coeffPenalty = coeff_penalty_value(a, cfg.coeffPenalty);
  if (cfg.graphWeight > 0.0) t.graph = cfg.graphWeight * graph_penalty(a, *graph);
  t.basisPenalty = basis_penalty_value(phi, cfg.basisPenalty);
  return t;
}

double total_objective(const DataMatrix& x, const Basis& phi, const CoefficientMatrix& a,
                       const DvblConfig& cfg, const GraphLaplacian* graph) {
  return objective_terms(x.values(), phi.values(), a.values(), cfg, graph).total();
}

}  // namespace basisforge
