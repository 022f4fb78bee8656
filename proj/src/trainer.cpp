#include "basisforge/trainer.hpp"

#include "basisforge/basis_solver.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace basisforge {

Basis init_basis(const DataMatrix& x, Index m, const InitStrategy& s) {
  if (m < 1) throw InputError("atom count must be >= 1");
  const Index d = x.rows(), n = x.cols();
  std::mt19937_64 rng(s.seed);
  auto random_unit = [&](Index cols) {
    Matrix g = gaussian_matrix(d, cols, rng);
    for (Index k = 0; k < cols; ++k)
      while (g.col(k).norm() < 1e-12) g.col(k) = gaussian_matrix(d, 1, rng).col(0);
    return unit_columns(g);
  };

  switch (s.kind) {
    case InitKind::RandomGaussianNormalized:
      return Basis(random_unit(m));
    case InitKind::DataColumns: {
      if (m > n) throw InputError("data-column initialization needs m <= N");
      std::vector<Index> nonzero;
      for (Index i = 0; i < n; ++i)
        if (x.values().col(i).stableNorm() >= 1e-12) nonzero.push_back(i);
      if (static_cast<Index>(nonzero.size()) < m)
        throw InputError("data-column initialization needs m nonzero columns");
      std::shuffle(nonzero.begin(), nonzero.end(), rng);
      Matrix phi(d, m);
      for (Index k = 0; k < m; ++k) phi.col(k) = x.values().col(nonzero[static_cast<std::size_t>(k)]).stableNormalized();
      return Basis(phi);
    }
    case InitKind::SvdTopM: {
      Eigen::BDCSVD<Matrix> svd(x.values(), Eigen::ComputeThinU);
      const Vector& sv = svd.singularValues();
      const double tol = sv.size() ? sv[0] * 1e-12 * static_cast<double>(std::max(d, n)) : 0.0;
      Index rank = 0;
      while (rank < sv.size() && sv[rank] > tol) ++rank;
      const Index take = std::min(rank, m);
      Matrix phi(d, m);
      phi.leftCols(take) = svd.matrixU().leftCols(take);
      if (take < m) phi.rightCols(m - take) = random_unit(m - take);
      return Basis(unit_columns(phi));
    }
  }
  throw ConfigError("unknown initialization strategy");
}

double inner_tolerance(const TrainOptions& o, int t) {
  return std::max(o.solver.tol, o.innerTolStart * std::pow(0.5, t));
}

FitResult fit(const DataMatrix& xd, const DvblConfig& cfg, const GraphLaplacian* graph,
              const TrainOptions& opts) {
  cfg.validate();
  opts.solver.validate();
  cfg.basisPenalty.validate(xd.rows());
  if (cfg.graphWeight > 0.0 && !graph) throw ConfigError("graph weight eta > 0 requires a graph Laplacian");
  if (graph && graph->n() != xd.cols())
    throw_shape("graph Laplacian", xd.cols(), xd.cols(), graph->n(), graph->n());

  const Matrix& x = xd.values();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  Matrix phi;
  if (opts.initialBasis) {
    phi = Basis(*opts.initialBasis).values();
    if (phi.rows() != xd.rows() || phi.cols() != cfg.atoms)
      throw_shape("initial basis", xd.rows(), cfg.atoms, phi.rows(), phi.cols());
  } else {
    phi = init_basis(xd, cfg.atoms, {opts.init, cfg.seed}).values();
  }
  if (cfg.coherenceCap) phi = enforce_coherence(phi, *cfg.coherenceCap, opts.coherencePasses, cfg.seed).values;

  const bool manifold = cfg.graphWeight > 0.0;
  auto coeff_step = [&](const Matrix& basis, const Matrix* warm, int t) {
    SolverOptions so = opts.solver;
    so.tol = inner_tolerance(opts, t);
    if (manifold) return solve_coeffs_manifold(x, basis, cfg.coeffPenalty, *graph, cfg.graphWeight, so, warm);
    return solve_coeffs(x, basis, cfg.coeffPenalty, so, warm);
  };
  auto terms_of = [&](const Matrix& basis, const Matrix& a) { return objective_terms(x, basis, a, cfg, graph); };

  TrainLog log;
  auto record = [&](int t, const ObjectiveTerms& terms, int dead, bool rejected) {
    IterationRecord r;
    r.iteration = t;
    r.objective = terms.total();
    r.reconstruction = terms.reconstruction;
    r.coeffPenalty = terms.coeffPenalty;
    r.graph = terms.graph;
    r.basisPenalty = terms.basisPenalty;
    r.wallTime = elapsed();
    r.deadAtomReplacements = dead;
    r.basisRejected = rejected;
    log.records.push_back(r);
  };

  Matrix a;
  ObjectiveTerms current;
  int t = 0;
  try {
    a = coeff_step(phi, nullptr, 0);
    current = terms_of(phi, a);
    record(0, current, 0, false);
    log.stopReason = "max_iters";

    for (t = 1; t <= cfg.maxIters; ++t) {
      const double previous = current.total();

      Matrix aNew = coeff_step(phi, &a, t);
      ObjectiveTerms afterCoeff = terms_of(phi, aNew);
      if (afterCoeff.total() <= current.total()) {
        a = std::move(aNew);
        current = afterCoeff;
      }

      const BasisUpdate upd = update_basis(x, a, cfg.basisPenalty, &phi);
      NormalizedBasis nb = normalize_atoms(upd.raw, {&x, &a, cfg.seed + static_cast<std::uint64_t>(t)});
      Matrix candidate = std::move(nb.values);
      if (cfg.coherenceCap)
        candidate = enforce_coherence(candidate, *cfg.coherenceCap, opts.coherencePasses, cfg.seed + t).values;

      // Normalization alone rescales Phi A; also score the variant that moves
      // the atom scales into the coefficient rows and keep the better one.
      Matrix aScaled = a;
      for (Index k = 0; k < a.rows(); ++k) aScaled.row(k) *= nb.scales[static_cast<std::size_t>(k)];
      const ObjectiveTerms plain = terms_of(candidate, a);
      const ObjectiveTerms scaled = terms_of(candidate, aScaled);
      const bool useScaled = scaled.total() < plain.total();
      const ObjectiveTerms& best = useScaled ? scaled : plain;

      bool rejected = true;
      if (best.total() <= current.total()) {
        phi = std::move(candidate);
        if (useScaled) a = std::move(aScaled);
        current = best;
        rejected = false;
      }
      record(t, current, static_cast<int>(nb.replaced.size()), rejected);

      const double change = std::abs(current.total() - previous) / (1.0 + previous);
      if (change < cfg.stopEps) {
        log.stopReason = "tolerance";
        break;
      }
      if (opts.wallTimeCap > 0.0 && elapsed() > opts.wallTimeCap) {
        log.stopReason = "wall_time";
        break;
      }
    }
  } catch (const NumericError& e) {
    throw FitAborted(e.detail(), t, log);
  }
  return FitResult{Basis(std::move(phi)), CoefficientMatrix(std::move(a)), std::move(log)};
}

}  // namespace basisforge
