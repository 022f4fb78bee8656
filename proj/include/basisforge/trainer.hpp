#pragma once

// Alternating minimization over coefficients and basis with atom
// normalization, optional coherence cap, and a per-iteration descent log.

#include "basisforge/coeff_solver.hpp"
#include "basisforge/error.hpp"
#include "basisforge/geometry.hpp"
#include "basisforge/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace basisforge {

enum class InitKind { RandomGaussianNormalized, DataColumns, SvdTopM };

struct InitStrategy {
  InitKind kind = InitKind::DataColumns;
  std::uint64_t seed = 0;
};

/// d x m starting basis with unit-norm columns. DataColumns draws m distinct
/// nonzero columns of X; SvdTopM takes the leading left singular vectors and
/// pads with random atoms beyond the numerical rank.
Basis init_basis(const DataMatrix& x, Index m, const InitStrategy& s);

struct IterationRecord {
  int iteration = 0;  // 0 = initial coefficient solve
  double objective = 0.0;
  double reconstruction = 0.0;
  double coeffPenalty = 0.0;
  double graph = 0.0;
  double basisPenalty = 0.0;
  double dynamics = 0.0;  // beta * transition term (dynamic fits only)
  double operatorPenalty = 0.0;  // nu * ||A||_F^2 (dynamic fits only)
  double wallTime = 0.0;  // seconds since the fit started
  int deadAtomReplacements = 0;
  bool basisRejected = false;
  double spectralRadius = -1.0;  // latent operator (dynamic fits only)
};

struct TrainLog {
  std::vector<IterationRecord> records;
  std::string stopReason;  // "tolerance", "max_iters", "wall_time"
};

struct TrainOptions {
  InitKind init = InitKind::DataColumns;
  SolverOptions solver{};     // solver.tol is the floor of the inner tolerance schedule
  double innerTolStart = 1e-4;  // halved every outer iteration down to solver.tol
  double wallTimeCap = 0.0;     // seconds; 0 disables
  int coherencePasses = 1000;
  const Matrix* initialBasis = nullptr;  // overrides `init` when set
};

struct FitResult {
  Basis basis;
  CoefficientMatrix coeffs;
  TrainLog log;
};

/// Thrown when a subsolver fails mid-fit; keeps the log up to the failure.
class FitAborted : public NumericError {
 public:
  FitAborted(const std::string& what, long iteration, TrainLog partial)
      : NumericError(what, iteration), partial_(std::move(partial)) {}
  const TrainLog& partial_log() const { return partial_; }

 private:
  TrainLog partial_;
};

/// Inner tolerance used at outer iteration t.
double inner_tolerance(const TrainOptions& o, int t);

/// Runs the alternating loop until the relative objective change drops
/// below cfg.stopEps or cfg.maxIters iterations elapse. A coefficient or
/// basis update that would raise the full objective is rejected, so the
/// logged objective never increases. `graph` is required iff eta > 0.
FitResult fit(const DataMatrix& x, const DvblConfig& cfg, const GraphLaplacian* graph = nullptr,
              const TrainOptions& opts = {});

}  // namespace basisforge
