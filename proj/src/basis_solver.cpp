#include "basisforge/basis_solver.hpp"

#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>

namespace basisforge {

namespace {

constexpr double kDeadAtom = 1e-12;

// Relative eigenvalue floor below which a system is treated as singular.
constexpr double kSingularRel = 1e-12;

BasisUpdate solve_frobenius(const Matrix& x, const Matrix& a, double mu) {
  const Index m = a.rows();
  BasisUpdate out;
  Matrix gram = a * a.transpose();
  const Matrix rhs = a * x.transpose();  // (X A^T)^T
  if (mu > 0.0) {
    gram.diagonal().array() += mu;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() == Eigen::Success) {
      out.raw = llt.solve(rhs).transpose();
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() > kSingularRel * top && top > 0.0) {
    out.raw = Eigen::LDLT<Matrix>(gram).solve(rhs).transpose();
    return out;
  }
  // Rank-deficient A A^T with mu == 0: minimum-norm solution of A^T Phi^T = X^T.
  out.minNormFallback = true;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.transpose());
  out.raw = cod.solve(x.transpose()).transpose();
  if (out.raw.cols() != m) out.raw.conservativeResize(x.rows(), m);
  return out;
}

// Phi S + mu Q Phi = R with S = A A^T (m x m) and Q = G^T G (d x d), both
// symmetric PSD. In the eigenbases S = U diag(s) U^T, Q = V diag(q) V^T the
// system decouples entrywise.
BasisUpdate solve_operator_penalty(const Matrix& x, const Matrix& a, const BasisPenalty& p) {
  BasisUpdate out;
  const SparseMatrix g = p.quadratic_operator(x.rows());
  const Matrix q = Matrix(g.transpose() * g);
  const Matrix s = a * a.transpose();
  const Matrix r = x * a.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s), eq(q);
  const Matrix rt = eq.eigenvectors().transpose() * r * es.eigenvectors();
  Matrix psi(rt.rows(), rt.cols());
  double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(),
                          p.weight * eq.eigenvalues().cwiseAbs().maxCoeff());
  if (scale == 0.0) scale = 1.0;
  for (Index j = 0; j < psi.cols(); ++j)
    for (Index i = 0; i < psi.rows(); ++i) {
      const double denom = es.eigenvalues()[j] + p.weight * eq.eigenvalues()[i];
      if (denom > kSingularRel * scale) {
        psi(i, j) = rt(i, j) / denom;
      } else {
        psi(i, j) = 0.0;
        out.minNormFallback = true;
      }
    }
  out.raw = eq.eigenvectors() * psi * es.eigenvectors().transpose();
  return out;
}

BasisUpdate solve_orthogonality(const Matrix& x, const Matrix& a, double mu, const Matrix& start) {
  BasisUpdate out;
  const Index m = a.rows();
  const Matrix aat = a * a.transpose();
  const Matrix xat = x * a.transpose();
  const Matrix eye = Matrix::Identity(m, m);
  auto objective = [&](const Matrix& phi) {
    return (x - phi * a).squaredNorm() + mu * (phi.transpose() * phi - eye).squaredNorm();
  };
  auto gradient = [&](const Matrix& phi) -> Matrix {
    return 2.0 * (phi * aat - xat) + 4.0 * mu * phi * (phi.transpose() * phi - eye);
  };
  Matrix phi = start;
  double f = objective(phi);
  double step = 1.0 / std::max(1e-12, 2.0 * power_iteration_max_eig(aat) + 12.0 * mu);
  constexpr int kMaxSteps = 500;
  for (int it = 0; it < kMaxSteps; ++it) {
    const Matrix g = gradient(phi);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;
    Matrix cand;
    double fc = 0.0;
    int halvings = 0;
    for (;; ++halvings) {
      cand = phi - step * g;
      fc = objective(cand);
      if (fc <= f - 0.5 * step * g2) break;
      if (halvings >= 60) break;
      step *= 0.5;
    }
    if (!(fc <= f)) break;
    const double decrease = f - fc;
    phi = std::move(cand);
    f = fc;
    ++out.gradientSteps;
    if (halvings == 0) step *= 1.5;
    if (decrease <= 1e-8 * (1.0 + f)) break;
  }
  out.raw = std::move(phi);
  return out;
}

}  // namespace

BasisUpdate update_basis(const Matrix& x, const Matrix& a, const BasisPenalty& p, const Matrix* current) {
  if (a.cols() != x.cols()) throw_shape("coefficients", a.rows(), x.cols(), a.rows(), a.cols());
  p.validate(x.rows());
  switch (p.kind) {
    case BasisPenaltyKind::Frobenius:
      return solve_frobenius(x, a, p.weight);
    case BasisPenaltyKind::Smoothness:
    case BasisPenaltyKind::LinearOperator:
      return solve_operator_penalty(x, a, p);
    case BasisPenaltyKind::Orthogonality: {
      if (p.weight == 0.0) return solve_frobenius(x, a, 0.0);
      if (!current) throw ConfigError("orthogonality basis update needs the current basis");
      if (current->rows() != x.rows() || current->cols() != a.rows())
        throw_shape("current basis", x.rows(), a.rows(), current->rows(), current->cols());
      // Start from whichever of the current basis and the unpenalized least
      // squares solution scores better on the subproblem.
      const Matrix ls = solve_frobenius(x, a, 0.0).raw;
      const bool useLs = basis_subproblem_objective(x, a, ls, p) < basis_subproblem_objective(x, a, *current, p);
      return solve_orthogonality(x, a, p.weight, useLs ? ls : *current);
    }
  }
  throw ConfigError("unknown basis penalty kind");
}

double basis_subproblem_objective(const Matrix& x, const Matrix& a, const Matrix& phi, const BasisPenalty& p) {
  return reconstruction_error(x, phi, a) + basis_penalty_value(phi, p);
}

NormalizedBasis normalize_atoms(const Matrix& raw, const ReplacementPolicy& policy) {
  NormalizedBasis out;
  out.values = raw;
  out.scales.assign(static_cast<std::size_t>(raw.cols()), 0.0);
  std::vector<Index> dead;
  for (Index k = 0; k < raw.cols(); ++k) {
    const double n = raw.col(k).norm();
    if (n >= kDeadAtom) {
      out.values.col(k) /= n;
      out.scales[static_cast<std::size_t>(k)] = n;
    } else {
      dead.push_back(k);
    }
  }
  if (dead.empty()) return out;

  std::vector<Index> order;
  if (policy.data) {
    const Matrix& x = *policy.data;
    if (x.rows() != raw.rows()) throw_shape("replacement data", raw.rows(), x.cols(), x.rows(), x.cols());
    Vector resid = x.colwise().norm().transpose();
    if (policy.coeffs) {
      if (policy.coeffs->rows() != raw.cols() || policy.coeffs->cols() != x.cols())
        throw_shape("replacement coefficients", raw.cols(), x.cols(), policy.coeffs->rows(),
                    policy.coeffs->cols());
      resid = (x - raw * *policy.coeffs).colwise().norm().transpose();
    }
    order.resize(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return resid[i] > resid[j]; });
    order.erase(std::remove_if(order.begin(), order.end(),
                               [&](Index i) { return x.col(i).norm() < kDeadAtom; }),
                order.end());
  }
  std::mt19937_64 rng(policy.seed);
  std::size_t next = 0;
  for (Index k : dead) {
    if (next < order.size()) {
      const Index i = order[next++];
      out.values.col(k) = policy.data->col(i).normalized();
    } else {
      Vector v;
      do {
        v = gaussian_matrix(raw.rows(), 1, rng).col(0);
      } while (v.norm() < kDeadAtom);
      out.values.col(k) = v.normalized();
    }
    out.replaced.push_back(k);
  }
  return out;
}

double welch_bound(Index d, Index m) {
  if (m <= d || m < 2) return 0.0;
  return std::sqrt(static_cast<double>(m - d) / static_cast<double>(d * (m - 1)));
}

CoherenceResult enforce_coherence(const Matrix& phi, double delta, int maxPasses, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("coherence cap must lie in [0, 1]");
  CoherenceResult out;
  out.values = phi;
  const Index d = phi.rows(), m = phi.cols();
  out.welchInfeasible = delta < welch_bound(d, m);
  std::mt19937_64 rng(seed);
  constexpr double kSlack = 1e-9;

  auto most_coherent = [&](Index& bk, Index& bl) {
    const Matrix gram = out.values.transpose() * out.values;
    double best = -1.0;
    for (Index l = 0; l < m; ++l)
      for (Index k = 0; k < l; ++k)
        if (std::abs(gram(k, l)) > best) {
          best = std::abs(gram(k, l));
          bk = k;
          bl = l;
        }
    return m < 2 ? 0.0 : best;
  };

  Index k = 0, l = 0;
  double worst = most_coherent(k, l);
  while (worst > delta + kSlack && out.passes < maxPasses) {
    ++out.passes;
    Vector u = out.values.col(k), v = out.values.col(l);
    const double c = u.dot(v);
    const double sgn = c >= 0.0 ? 1.0 : -1.0;
    if (1.0 - std::abs(c) < 1e-12) {
      // Parallel pair: rebuild v at the target angle from u.
      Vector w;
      do {
        w = gaussian_matrix(d, 1, rng).col(0);
        w -= w.dot(u) * u;
      } while (w.norm() < 1e-8);
      w.normalize();
      v = sgn * delta * u + std::sqrt(1.0 - delta * delta) * w;
    } else {
      // u' = u - tau v, v' = v - tau u with normalized inner product sgn*delta:
      // tau^2 a - 2 tau (1 - sgn delta c) + a = 0, a = c - sgn delta.
      const double aq = c - sgn * delta;
      const double bq = 1.0 - sgn * delta * c;
      const double disc = std::max(0.0, bq * bq - aq * aq);
      const double tau = aq / (bq + std::sqrt(disc));
      const Vector u2 = u - tau * v, v2 = v - tau * u;
      u = u2.normalized();
      v = v2.normalized();
    }
    out.values.col(k) = u;
    out.values.col(l) = v;
    worst = most_coherent(k, l);
  }
  out.coherence = std::max(0.0, worst);
  out.converged = worst <= delta + 1e-6;
  return out;
}

}  // namespace basisforge
