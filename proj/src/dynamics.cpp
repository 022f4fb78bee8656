#include "basisforge/dynamics.hpp"

#include "basisforge/basis_solver.hpp"
#include "basisforge/detail/prox_gradient.hpp"
#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>

namespace basisforge {

LatentOperator::LatentOperator(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw ShapeError("latent operator must be square");
  if (!a_.allFinite()) throw InputError("latent operator contains non-finite entries");
  rho_ = basisforge::spectral_radius(a_);
}

Trajectory::Trajectory(Matrix states) : z_(std::move(states)) {
  if (z_.cols() < 1) throw InputError("trajectory must contain at least one state");
  if (!z_.allFinite()) throw NumericError("trajectory contains non-finite states", -1);
}

double operator_objective(const Trajectory& z, const Matrix& a, double nu) {
  return (z.plus() - a * z.minus()).squaredNorm() + nu * a.squaredNorm();
}

OperatorUpdate update_operator(const Trajectory& z, double nu) {
  if (z.length() < 2) throw InputError("operator update needs at least two states");
  if (!(nu >= 0.0)) throw ConfigError("operator weight nu must be >= 0");
  const Matrix zm = z.minus(), zp = z.plus();
  Matrix gram = zm * zm.transpose();
  gram.diagonal().array() += nu;
  const Matrix rhs = zm * zp.transpose();  // (Z_+ Z_-^T)^T
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (top > 0.0 && es.eigenvalues().minCoeff() > 1e-12 * top) {
    Matrix a = Eigen::LLT<Matrix>(gram).solve(rhs).transpose();
    return {LatentOperator(std::move(a)), false};
  }
  // nu == 0 with singular Z_- Z_-^T: minimum-norm solution of Z_-^T A^T = Z_+^T.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(zm.transpose());
  Matrix a = cod.solve(zp.transpose()).transpose();
  return {LatentOperator(std::move(a)), true};
}

LatentOperator project_stable(const LatentOperator& op, double rhoMax) {
  if (!(rhoMax > 0.0 && rhoMax <= 1.0)) throw ConfigError("rho_max must lie in (0, 1]");
  if (op.spectral_radius() <= rhoMax) return op;
  return LatentOperator(op.matrix() * (rhoMax / op.spectral_radius()));
}

Matrix forecast(const Vector& z0, const LatentOperator& op, const Matrix& phi, Index horizon) {
  if (horizon < 1) throw InputError("forecast horizon must be >= 1");
  if (z0.size() != op.dim() || phi.cols() != op.dim())
    throw ShapeError("forecast: state, operator and basis dimensions disagree");
  Matrix out(phi.rows(), horizon);
  Vector z = z0;
  for (Index t = 0; t < horizon; ++t) {
    out.col(t) = phi * z;
    z = op.matrix() * z;
  }
  return out;
}

double trajectory_objective(const Matrix& x, const Matrix& phi, const Matrix& aop, const Matrix& z,
                            double beta, const CoeffPenalty& p) {
  double v = (x - phi * z).squaredNorm() + coeff_penalty_value(z, p);
  if (beta > 0.0 && z.cols() > 1) {
    const Index t = z.cols();
    v += beta * (z.rightCols(t - 1) - aop * z.leftCols(t - 1)).squaredNorm();
  }
  return v;
}

Matrix trajectory_smooth_gradient(const Matrix& x, const Matrix& phi, const Matrix& aop, const Matrix& z,
                                  double beta) {
  Matrix g = 2.0 * phi.transpose() * (phi * z - x);
  const Index t = z.cols();
  if (beta > 0.0 && t > 1) {
    const Matrix r = z.rightCols(t - 1) - aop * z.leftCols(t - 1);
    g.rightCols(t - 1) += 2.0 * beta * r;
    g.leftCols(t - 1) -= 2.0 * beta * aop.transpose() * r;
  }
  return g;
}

namespace {

struct TrajectoryProblem {
  const Matrix& x;
  const Matrix& phi;
  const Matrix& aop;
  double beta;
  const CoeffPenalty& penaltyDesc;

  double smooth(const Matrix& z) const {
    double v = (x - phi * z).squaredNorm();
    const Index t = z.cols();
    if (beta > 0.0 && t > 1) v += beta * (z.rightCols(t - 1) - aop * z.leftCols(t - 1)).squaredNorm();
    return v;
  }
  Matrix gradient(const Matrix& z) const { return trajectory_smooth_gradient(x, phi, aop, z, beta); }
  double penalty(const Matrix& z) const { return coeff_penalty_value(z, penaltyDesc); }
  Matrix prox(const Matrix& v, double step) const { return prox_columns(v, penaltyDesc, step); }
};

// Exact minimizer when the penalty is quadratic: block-tridiagonal system
// with diagonal blocks Phi^T Phi + w I + beta (A^T A [t<T] + I [t>1]) and
// off-diagonal blocks -beta A^T (above) / -beta A (below).
bool solve_quadratic_trajectory(const Matrix& x, const Matrix& phi, const Matrix& aop, double beta,
                                double ridge, Matrix& z) {
  const Index m = phi.cols(), t = x.cols();
  const Matrix gram = phi.transpose() * phi;
  const Matrix ata = aop.transpose() * aop;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * m * m * t));
  for (Index s = 0; s < t; ++s) {
    Matrix blk = gram;
    blk.diagonal().array() += ridge;
    if (s + 1 < t) blk += beta * ata;
    if (s > 0) blk.diagonal().array() += beta;
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < m; ++i) {
        if (blk(i, j) != 0.0) trip.emplace_back(s * m + i, s * m + j, blk(i, j));
        if (s + 1 < t && aop(j, i) != 0.0) {
          trip.emplace_back(s * m + i, (s + 1) * m + j, -beta * aop(j, i));  // -beta A^T
          trip.emplace_back((s + 1) * m + j, s * m + i, -beta * aop(j, i));  // -beta A
        }
      }
  }
  SparseMatrix h(m * t, m * t);
  h.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(h);
  if (ldlt.info() != Eigen::Success) return false;
  const Matrix rhs = phi.transpose() * x;
  const Vector sol = ldlt.solve(Eigen::Map<const Vector>(rhs.data(), rhs.size()));
  if (ldlt.info() != Eigen::Success || !sol.allFinite()) return false;
  if (ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().cwiseAbs().maxCoeff()) return false;
  z = Eigen::Map<const Matrix>(sol.data(), m, t);
  return true;
}

}  // namespace

Trajectory infer_states(const DataMatrix& xseq, const Matrix& phi, const LatentOperator& op, double beta,
                        const CoeffPenalty& p, const SolverOptions& opts, const Matrix* warm) {
  if (!(beta >= 0.0)) throw ConfigError("dynamics weight beta must be >= 0");
  const Matrix& x = xseq.values();
  if (phi.rows() != x.rows()) throw_shape("basis", x.rows(), phi.cols(), phi.rows(), phi.cols());
  if (op.dim() != phi.cols()) throw_shape("latent operator", phi.cols(), phi.cols(), op.dim(), op.dim());
  opts.validate();
  p.validate(phi.cols());
  const Index m = phi.cols(), t = x.cols();
  if (warm && (warm->rows() != m || warm->cols() != t)) throw_shape("warm start", m, t, warm->rows(), warm->cols());

  // Without coupling the problem separates into the per-column coefficient problem.
  if (beta == 0.0 || t == 1) return Trajectory(solve_coeffs(x, phi, p, opts, warm));

  const bool quadratic = p.weight == 0.0 || p.kind == CoeffPenaltyKind::SquaredL2;
  if (quadratic) {
    Matrix z;
    if (solve_quadratic_trajectory(x, phi, op.matrix(), beta, p.weight, z)) {
      // Keep the warm start if rounding left the exact solve no better.
      if (warm && trajectory_objective(x, phi, op.matrix(), *warm, beta, p) <
                      trajectory_objective(x, phi, op.matrix(), z, beta, p))
        return Trajectory(*warm);
      return Trajectory(std::move(z));
    }
  }
  const double opNorm = spectral_norm(op.matrix());
  const double lip = 2.0 * power_iteration_max_eig(phi.transpose() * phi) + 2.0 * beta * (1.0 + opNorm) * (1.0 + opNorm);
  detail::ProxSettings s;
  s.maxIters = opts.maxInnerIters;
  s.tol = opts.tol;
  s.accelerate = opts.acceleration;
  s.backtracking = opts.stepRule == StepRule::Backtracking;
  s.lipschitz = lip > 0.0 ? lip : 1.0;
  TrajectoryProblem pb{x, phi, op.matrix(), beta, p};
  auto out = detail::run_prox_gradient(pb, warm ? Matrix(*warm) : Matrix(Matrix::Zero(m, t)), s);
  return Trajectory(std::move(out.x));
}

DynamicTerms dynamic_objective(const Matrix& x, const Matrix& phi, const Matrix& z, const Matrix& aop,
                               const DvblConfig& cfg) {
  DynamicTerms d;
  d.reconstruction = reconstruction_error(x, phi, z);
  d.coeffPenalty = coeff_penalty_value(z, cfg.coeffPenalty);
  const Index t = z.cols();
  if (cfg.dynWeight > 0.0 && t > 1)
    d.dynamics = cfg.dynWeight * (z.rightCols(t - 1) - aop * z.leftCols(t - 1)).squaredNorm();
  d.basisPenalty = basis_penalty_value(phi, cfg.basisPenalty);
  d.operatorPenalty = cfg.opWeight * aop.squaredNorm();
  return d;
}

double one_step_forecast_error(const Matrix& xseq, const Matrix& phi, const Matrix& z, const Matrix& aop) {
  const Index t = xseq.cols();
  if (t < 2) throw InputError("one-step forecast error needs at least two time steps");
  const Matrix pred = phi * aop * z.leftCols(t - 1);
  const double denom = xseq.rightCols(t - 1).norm();
  const double num = (xseq.rightCols(t - 1) - pred).norm();
  return denom > 0.0 ? num / denom : num;
}

namespace {

// Minimizer over A of beta ||Z_+ - A Z_-||^2 + nu ||A||^2.
LatentOperator operator_block_step(const Trajectory& z, const DvblConfig& cfg) {
  if (cfg.dynWeight > 0.0) return update_operator(z, cfg.opWeight / cfg.dynWeight).op;
  if (cfg.opWeight > 0.0) return LatentOperator::zero(z.dim());
  return update_operator(z, 0.0).op;
}

}  // namespace

DynamicFitResult fit_dynamic(const DataMatrix& xd, const DvblConfig& cfg, const DynamicOptions& opts) {
  cfg.validate();
  cfg.basisPenalty.validate(xd.rows());
  opts.train.solver.validate();
  if (xd.cols() < 2) throw InputError("dynamic fit needs at least two time steps");
  if (cfg.graphWeight > 0.0) throw ConfigError("graph regularization is not available for dynamic fits");
  if (opts.rhoMax && !(*opts.rhoMax > 0.0 && *opts.rhoMax <= 1.0)) throw ConfigError("rho_max must lie in (0, 1]");

  const Matrix& x = xd.values();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  Matrix phi = opts.train.initialBasis ? Basis(*opts.train.initialBasis).values()
                                       : init_basis(xd, cfg.atoms, {opts.train.init, cfg.seed}).values();
  if (phi.rows() != x.rows() || phi.cols() != cfg.atoms)
    throw_shape("initial basis", x.rows(), cfg.atoms, phi.rows(), phi.cols());
  if (cfg.coherenceCap)
    phi = enforce_coherence(phi, *cfg.coherenceCap, opts.train.coherencePasses, cfg.seed).values;

  auto stabilize = [&](LatentOperator op) { return opts.rhoMax ? project_stable(op, *opts.rhoMax) : op; };
  auto solver_at = [&](int t) {
    SolverOptions so = opts.train.solver;
    so.tol = inner_tolerance(opts.train, t);
    return so;
  };

  TrainLog log;
  auto record = [&](int t, const DynamicTerms& terms, const LatentOperator& op, int dead, bool rejected) {
    IterationRecord r;
    r.iteration = t;
    r.objective = terms.total();
    r.reconstruction = terms.reconstruction;
    r.coeffPenalty = terms.coeffPenalty;
    r.basisPenalty = terms.basisPenalty;
    r.dynamics = terms.dynamics;
    r.operatorPenalty = terms.operatorPenalty;
    r.wallTime = elapsed();
    r.deadAtomReplacements = dead;
    r.basisRejected = rejected;
    r.spectralRadius = op.spectral_radius();
    log.records.push_back(r);
  };

  Matrix z;
  LatentOperator op = LatentOperator::zero(cfg.atoms);
  DynamicTerms current;
  int t = 0;
  try {
    z = solve_coeffs(x, phi, cfg.coeffPenalty, solver_at(0));
    op = stabilize(operator_block_step(Trajectory(z), cfg));
    current = dynamic_objective(x, phi, z, op.matrix(), cfg);
    record(0, current, op, 0, false);
    log.stopReason = "max_iters";

    for (t = 1; t <= cfg.maxIters; ++t) {
      const double previous = current.total();

      // states
      Matrix zNew = infer_states(xd, phi, op, cfg.dynWeight, cfg.coeffPenalty, solver_at(t), &z).states();
      DynamicTerms afterStates = dynamic_objective(x, phi, zNew, op.matrix(), cfg);
      if (afterStates.total() <= current.total()) {
        z = std::move(zNew);
        current = afterStates;
      }

      // basis
      const BasisUpdate upd = update_basis(x, z, cfg.basisPenalty, &phi);
      NormalizedBasis nb = normalize_atoms(upd.raw, {&x, &z, cfg.seed + static_cast<std::uint64_t>(t)});
      Matrix candidate = std::move(nb.values);
      if (cfg.coherenceCap)
        candidate = enforce_coherence(candidate, *cfg.coherenceCap, opts.train.coherencePasses, cfg.seed + t).values;
      const DynamicTerms plain = dynamic_objective(x, candidate, z, op.matrix(), cfg);
      bool useScaled = false;
      Matrix zScaled, opScaled;
      DynamicTerms scaled;
      if (nb.replaced.empty()) {
        // Z -> D Z, A -> D A D^{-1} leaves Phi Z unchanged and maps the
        // transition residual R to D R.
        const Vector dvec = Eigen::Map<const Vector>(nb.scales.data(), static_cast<Index>(nb.scales.size()));
        zScaled = dvec.asDiagonal() * z;
        opScaled = dvec.asDiagonal() * op.matrix() * dvec.cwiseInverse().asDiagonal();
        scaled = dynamic_objective(x, candidate, zScaled, opScaled, cfg);
        useScaled = scaled.total() < plain.total() && (!opts.rhoMax || spectral_radius(opScaled) <= *opts.rhoMax + 1e-9);
      }
      const DynamicTerms& best = useScaled ? scaled : plain;
      bool rejected = true;
      if (best.total() <= current.total()) {
        phi = std::move(candidate);
        if (useScaled) {
          z = std::move(zScaled);
          op = LatentOperator(std::move(opScaled));
        }
        current = best;
        rejected = false;
      }

      // operator
      LatentOperator opNew = stabilize(operator_block_step(Trajectory(z), cfg));
      DynamicTerms afterOp = dynamic_objective(x, phi, z, opNew.matrix(), cfg);
      if (afterOp.total() <= current.total()) {
        op = std::move(opNew);
        current = afterOp;
      }

      record(t, current, op, static_cast<int>(nb.replaced.size()), rejected);
      const double change = std::abs(current.total() - previous) / (1.0 + previous);
      if (change < cfg.stopEps) {
        log.stopReason = "tolerance";
        break;
      }
      if (opts.train.wallTimeCap > 0.0 && elapsed() > opts.train.wallTimeCap) {
        log.stopReason = "wall_time";
        break;
      }
    }
  } catch (const NumericError& e) {
    throw FitAborted(e.detail(), t, log);
  }
  return DynamicFitResult{Basis(std::move(phi)), Trajectory(std::move(z)), std::move(op), std::move(log)};
}

}  // namespace basisforge
