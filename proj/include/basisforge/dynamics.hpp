#pragma once

// Basis learning with a latent linear evolution z_{t+1} ~ A z_t:
//   sum_t ||x_t - Phi z_t||^2 + beta sum_t ||z_{t+1} - A z_t||^2
//     + lambda sum_t R(z_t) + mu Omega(Phi) + nu ||A||_F^2

#include "basisforge/coeff_solver.hpp"
#include "basisforge/trainer.hpp"
#include "basisforge/types.hpp"

#include <optional>

namespace basisforge {

/// m x m latent evolution operator with its spectral radius cached.
class LatentOperator {
 public:
  explicit LatentOperator(Matrix a);
  static LatentOperator zero(Index m) { return LatentOperator(Matrix::Zero(m, m)); }

  Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  double spectral_radius() const { return rho_; }

 private:
  Matrix a_;
  double rho_;
};

/// m x T state block; columns are time steps.
class Trajectory {
 public:
  explicit Trajectory(Matrix states);

  Index dim() const { return z_.rows(); }
  Index length() const { return z_.cols(); }
  const Matrix& states() const { return z_; }
  /// Columns 0..T-2 and 1..T-1.
  auto minus() const { return z_.leftCols(z_.cols() - 1); }
  auto plus() const { return z_.rightCols(z_.cols() - 1); }

 private:
  Matrix z_;
};

struct OperatorUpdate {
  LatentOperator op;
  bool minNormFallback = false;  // nu == 0 with a singular Z_- Z_-^T
};

/// Ridge solution Z_+ Z_-^T (Z_- Z_-^T + nu I)^{-1} of
/// min_A ||Z_+ - A Z_-||_F^2 + nu ||A||_F^2.
OperatorUpdate update_operator(const Trajectory& z, double nu);

/// ||Z_+ - A Z_-||_F^2 + nu ||A||_F^2.
double operator_objective(const Trajectory& z, const Matrix& a, double nu);

/// Rescales A by rhoMax / rho(A) when rho(A) > rhoMax.
LatentOperator project_stable(const LatentOperator& op, double rhoMax);

/// Columns Phi z_1, ..., Phi z_h with z_1 = z0 and z_{t+1} = A z_t.
Matrix forecast(const Vector& z0, const LatentOperator& op, const Matrix& phi, Index horizon);

/// Trajectory objective (the part that depends on the states).
double trajectory_objective(const Matrix& x, const Matrix& phi, const Matrix& aop, const Matrix& z,
                            double beta, const CoeffPenalty& p);
/// Gradient of its smooth part with respect to Z.
Matrix trajectory_smooth_gradient(const Matrix& x, const Matrix& phi, const Matrix& aop,
                                  const Matrix& z, double beta);

/// Minimizes the trajectory objective over all states jointly. Smooth
/// penalties (lambda == 0 or SquaredL2) are solved exactly through the
/// block-tridiagonal normal equations; otherwise accelerated proximal
/// gradient is used, warm-started from `warm` when given.
Trajectory infer_states(const DataMatrix& xseq, const Matrix& phi, const LatentOperator& op,
                        double beta, const CoeffPenalty& p, const SolverOptions& opts,
                        const Matrix* warm = nullptr);

struct DynamicTerms {
  double reconstruction = 0.0;
  double coeffPenalty = 0.0;
  double dynamics = 0.0;
  double basisPenalty = 0.0;
  double operatorPenalty = 0.0;
  double total() const { return reconstruction + coeffPenalty + dynamics + basisPenalty + operatorPenalty; }
};

DynamicTerms dynamic_objective(const Matrix& x, const Matrix& phi, const Matrix& z, const Matrix& aop,
                               const DvblConfig& cfg);

struct DynamicOptions {
  TrainOptions train{};
  std::optional<double> rhoMax;  // stability projection after each operator update
};

struct DynamicFitResult {
  Basis basis;
  Trajectory states;
  LatentOperator op;
  TrainLog log;
};

/// Alternates states -> basis (+normalization) -> operator. Each block
/// update is kept only if it does not raise the full objective.
DynamicFitResult fit_dynamic(const DataMatrix& xseq, const DvblConfig& cfg, const DynamicOptions& opts = {});

/// ||X_+ - Phi A Z_-||_F / ||X_+||_F: relative one-step prediction error on
/// the training sequence.
double one_step_forecast_error(const Matrix& xseq, const Matrix& phi, const Matrix& z, const Matrix& aop);

}  // namespace basisforge
