#include "basisforge/coeff_solver.hpp"

#include "basisforge/detail/prox_gradient.hpp"
#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"

#include <algorithm>
#include <atomic>

namespace basisforge {

void SolverOptions::validate() const {
  if (maxInnerIters < 1) throw ConfigError("solver max_inner_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("solver tolerance must be > 0");
}

namespace {

double column_penalty(const Vector& a, const CoeffPenalty& p) {
  if (p.weight == 0.0) return 0.0;
  switch (p.kind) {
    case CoeffPenaltyKind::L1:
      return p.weight * a.cwiseAbs().sum();
    case CoeffPenaltyKind::SquaredL2:
      return p.weight * a.squaredNorm();
    case CoeffPenaltyKind::GroupL2: {
      double s = 0.0;
      for (const auto& g : p.groups) {
        double s2 = 0.0;
        for (Index k : g) s2 += a[k] * a[k];
        s += std::sqrt(s2);
      }
      return p.weight * s;
    }
  }
  return 0.0;
}

// f(a) = ||x - Phi a||^2 expanded through the Gram matrix.
struct ColumnProblem {
  const Matrix& gram;
  Vector rhs;  // Phi^T x
  double xx;   // ||x||^2
  const CoeffPenalty& penaltyDesc;

  double smooth(const Vector& a) const { return xx - 2.0 * rhs.dot(a) + a.dot(gram * a); }
  Vector gradient(const Vector& a) const { return 2.0 * (gram * a - rhs); }
  double penalty(const Vector& a) const { return column_penalty(a, penaltyDesc); }
  Vector prox(const Vector& v, double step) const { return basisforge::prox(v, penaltyDesc, step); }
};

struct ManifoldProblem {
  const Matrix& x;
  const Matrix& phi;
  const GraphLaplacian& graph;
  double eta;
  const CoeffPenalty& penaltyDesc;

  double smooth(const Matrix& a) const {
    double v = (x - phi * a).squaredNorm();
    if (eta > 0.0) v += eta * graph_penalty(a, graph);
    return v;
  }
  Matrix gradient(const Matrix& a) const { return coeff_smooth_gradient(x, phi, a, &graph, eta); }
  double penalty(const Matrix& a) const { return coeff_penalty_value(a, penaltyDesc); }
  Matrix prox(const Matrix& v, double step) const { return prox_columns(v, penaltyDesc, step); }
};

detail::ProxSettings settings_from(const SolverOptions& o, double lipschitz) {
  detail::ProxSettings s;
  s.maxIters = o.maxInnerIters;
  s.tol = o.tol;
  s.accelerate = o.acceleration;
  s.backtracking = o.stepRule == StepRule::Backtracking;
  s.lipschitz = lipschitz;
  return s;
}

void check_shapes(const Matrix& x, const Matrix& phi) {
  if (phi.rows() != x.rows()) throw_shape("basis", x.rows(), phi.cols(), phi.rows(), phi.cols());
}

}  // namespace

Vector prox(const Vector& v, const CoeffPenalty& p, double step) {
  if (!(step > 0.0)) throw ConfigError("prox step must be > 0");
  const double thr = step * p.weight;
  if (thr == 0.0) return v;
  Vector out = v;
  switch (p.kind) {
    case CoeffPenaltyKind::L1:
      for (Index j = 0; j < v.size(); ++j) {
        const double mag = std::abs(v[j]) - thr;
        // |v_j| exactly at the threshold maps to 0
        out[j] = mag > 0.0 ? std::copysign(mag, v[j]) : 0.0;
      }
      break;
    case CoeffPenaltyKind::SquaredL2:
      out = v / (1.0 + 2.0 * thr);
      break;
    case CoeffPenaltyKind::GroupL2:
      for (const auto& g : p.groups) {
        double n2 = 0.0;
        for (Index k : g) n2 += v[k] * v[k];
        const double n = std::sqrt(n2);
        const double scale = n > thr ? 1.0 - thr / n : 0.0;
        for (Index k : g) out[k] = scale * v[k];
      }
      break;
  }
  return out;
}

Matrix prox_columns(const Matrix& v, const CoeffPenalty& p, double step) {
  if (!(step > 0.0)) throw ConfigError("prox step must be > 0");
  if (step * p.weight == 0.0) return v;
  Matrix out(v.rows(), v.cols());
  for (Index i = 0; i < v.cols(); ++i) out.col(i) = prox(Vector(v.col(i)), p, step);
  return out;
}

Matrix coeff_smooth_gradient(const Matrix& x, const Matrix& phi, const Matrix& a,
                             const GraphLaplacian* graph, double eta) {
  Matrix g = 2.0 * phi.transpose() * (phi * a - x);
  if (eta > 0.0) {
    if (!graph) throw ConfigError("graph gradient requested without a Laplacian");
    g += 2.0 * eta * (a * graph->laplacian());
  }
  return g;
}

Matrix solve_coeffs(const Matrix& x, const Matrix& phi, const CoeffPenalty& p,
                    const SolverOptions& opts, const Matrix* warm, CoeffSolveReport* report) {
  check_shapes(x, phi);
  opts.validate();
  p.validate(phi.cols());
  const Index m = phi.cols(), n = x.cols();
  if (warm && (warm->rows() != m || warm->cols() != n))
    throw_shape("warm start", m, n, warm->rows(), warm->cols());

  const Matrix gram = phi.transpose() * phi;
  const Matrix rhs = phi.transpose() * x;
  const double lip = 2.0 * power_iteration_max_eig(gram);
  Matrix a(m, n);
  if (lip == 0.0) {
    // Phi == 0: the smooth part is constant, the penalty minimizer is 0.
    a.setZero();
    return a;
  }
  const auto settings = settings_from(opts, lip);

  std::vector<int> iters(static_cast<std::size_t>(n), 0);
  std::vector<char> converged(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](Index i) {
    ColumnProblem pb{gram, rhs.col(i), x.col(i).squaredNorm(), p};
    auto s = settings;
    s.iterationTag = static_cast<long>(i);
    Vector start = warm ? Vector(warm->col(i)) : Vector::Zero(m);
    auto out = detail::run_prox_gradient(pb, std::move(start), s);
    a.col(i) = out.x;
    iters[static_cast<std::size_t>(i)] = out.iterations;
    converged[static_cast<std::size_t>(i)] = out.converged;
  });
  if (report) {
    report->maxIterations = iters.empty() ? 0 : *std::max_element(iters.begin(), iters.end());
    report->unconvergedColumns = std::count(converged.begin(), converged.end(), 0);
  }
  return a;
}

CoefficientMatrix solve_coeffs(const DataMatrix& x, const Basis& phi, const CoeffPenalty& p,
                               const SolverOptions& opts) {
  return CoefficientMatrix(solve_coeffs(x.values(), phi.values(), p, opts));
}

Matrix solve_coeffs_manifold(const Matrix& x, const Matrix& phi, const CoeffPenalty& p,
                             const GraphLaplacian& graph, double eta, const SolverOptions& opts,
                             const Matrix* warm, CoeffSolveReport* report) {
  check_shapes(x, phi);
  opts.validate();
  p.validate(phi.cols());
  if (!(eta >= 0.0)) throw ConfigError("graph weight eta must be >= 0");
  if (graph.n() != x.cols()) throw_shape("graph Laplacian", x.cols(), x.cols(), graph.n(), graph.n());
  const SparseMatrix& lap = graph.laplacian();
  if (SparseMatrix(lap - SparseMatrix(lap.transpose())).norm() != 0.0)
    throw InputError("graph Laplacian is not symmetric");
  const Index m = phi.cols(), n = x.cols();
  if (warm && (warm->rows() != m || warm->cols() != n))
    throw_shape("warm start", m, n, warm->rows(), warm->cols());

  const Matrix gram = phi.transpose() * phi;
  const double lip = 2.0 * power_iteration_max_eig(gram) + 2.0 * eta * graph.eigen_upper_bound();
  if (lip == 0.0) return Matrix::Zero(m, n);
  ManifoldProblem pb{x, phi, graph, eta, p};
  auto out = detail::run_prox_gradient(pb, warm ? Matrix(*warm) : Matrix(Matrix::Zero(m, n)),
                                       settings_from(opts, lip));
  if (report) {
    report->maxIterations = out.iterations;
    report->unconvergedColumns = out.converged ? 0 : n;
  }
  return out.x;
}

CoefficientMatrix solve_coeffs_manifold(const DataMatrix& x, const Basis& phi, const CoeffPenalty& p,
                                        const GraphLaplacian& graph, double eta,
                                        const SolverOptions& opts) {
  return CoefficientMatrix(solve_coeffs_manifold(x.values(), phi.values(), p, graph, eta, opts));
}

std::vector<double> coeff_column_trace(const Vector& x, const Matrix& phi, const CoeffPenalty& p,
                                       const SolverOptions& opts) {
  if (phi.rows() != x.size()) throw_shape("basis", x.size(), phi.cols(), phi.rows(), phi.cols());
  opts.validate();
  const Matrix gram = phi.transpose() * phi;
  ColumnProblem pb{gram, phi.transpose() * x, x.squaredNorm(), p};
  std::vector<double> trace;
  detail::run_prox_gradient(pb, Vector(Vector::Zero(phi.cols())),
                            settings_from(opts, 2.0 * power_iteration_max_eig(gram)), &trace);
  return trace;
}

}  // namespace basisforge
