#include "basisforge/diagnostics.hpp"
#include "basisforge/dynamics.hpp"
#include "basisforge/linalg.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace basisforge;

TEST_CASE("latent operator and trajectory views") {
  Matrix a(2, 2);
  a << 0, 2, -2, 0;  // eigenvalues +-2i
  CHECK(LatentOperator(a).spectral_radius() == doctest::Approx(2.0));
  const Matrix z = oracle::gaussian(3, 5, 1);
  const Trajectory t(z);
  CHECK(Matrix(t.minus()) == z.leftCols(4));
  CHECK(Matrix(t.plus()) == z.rightCols(4));
  CHECK_THROWS(Trajectory(Matrix(3, 0)));
}

TEST_CASE("update_operator closed forms") {
  // m = 1, Z- = (1), Z+ = (2)
  Matrix pair(1, 2);
  pair << 1, 2;
  CHECK(update_operator(Trajectory(pair), 0.0).op.matrix()(0, 0) == doctest::Approx(2.0));
  CHECK(update_operator(Trajectory(pair), 0.5).op.matrix()(0, 0) == doctest::Approx(2.0 / 1.5));

  Matrix seq(1, 6);
  seq << 1, 2, 4, 8, 16, 32;
  CHECK(update_operator(Trajectory(seq), 0.0).op.matrix()(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("update_operator matches gradient descent and the normal equations") {
  const Trajectory z(oracle::gaussian(4, 30, 2));
  const double nu = 0.2;
  const auto up = update_operator(z, nu);
  const Matrix zm = z.minus(), zp = z.plus();
  const Matrix resid = up.op.matrix() * (zm * zm.transpose() + nu * Matrix::Identity(4, 4)) - zp * zm.transpose();
  CHECK(resid.norm() <= 1e-8 * (zp * zm.transpose()).norm());

  const Matrix gram = zm * zm.transpose();
  const double lip = 2.0 * (gram.eigenvalues().cwiseAbs().maxCoeff() + nu);
  Matrix a = Matrix::Zero(4, 4);
  for (int i = 0; i < 50000; ++i) a -= (-2.0 * (zp - a * zm) * zm.transpose() + 2.0 * nu * a) / lip;
  CHECK(std::abs(operator_objective(z, up.op.matrix(), nu) - operator_objective(z, a, nu)) <= 1e-8);

  for (int k = 0; k < 30; ++k) {
    Matrix d = oracle::gaussian(4, 4, 100 + k);
    d *= 1e-3 / d.norm();
    CHECK(operator_objective(z, up.op.matrix() + d, nu) >= operator_objective(z, up.op.matrix(), nu));
  }
}

TEST_CASE("singular Gram without ridge uses the minimum-norm solution") {
  Matrix z = oracle::gaussian(3, 10, 3);
  z.row(2).setZero();
  const auto up = update_operator(Trajectory(z), 0.0);
  CHECK(up.minNormFallback);
  CHECK(up.op.matrix().col(2).norm() < 1e-12);
}

TEST_CASE("project_stable") {
  CHECK(project_stable(LatentOperator(2.0 * Matrix::Identity(3, 3)), 1.0).matrix().isApprox(Matrix::Identity(3, 3)));
  const Matrix small = 0.5 * Matrix::Identity(2, 2);
  CHECK(project_stable(LatentOperator(small), 0.9).matrix() == small);
  for (int k = 0; k < 10; ++k) {
    const auto p = project_stable(LatentOperator(oracle::gaussian(5, 5, 10 + k)), 0.8);
    CHECK(p.spectral_radius() <= 0.8 + 1e-6);
    CHECK(spectral_radius(p.matrix()) <= 0.8 + 1e-6);
  }
}

TEST_CASE("forecast") {
  const Matrix phi = oracle::unit_gaussian(5, 3, 20);
  const Vector z0 = oracle::gaussian(3, 1, 21).col(0);
  const Matrix same = forecast(z0, LatentOperator(Matrix::Identity(3, 3)), phi, 4);
  for (Index t = 0; t < 4; ++t) CHECK((same.col(t) - phi * z0).norm() < 1e-14);
  const Matrix zero = forecast(z0, LatentOperator::zero(3), phi, 3);
  CHECK((zero.col(0) - phi * z0).norm() < 1e-14);
  CHECK(zero.rightCols(2).norm() == 0.0);
  const Matrix a = oracle::gaussian(3, 3, 22);
  const Matrix f = forecast(z0, LatentOperator(a), phi, 3);
  CHECK((f.col(2) - phi * a * a * z0).norm() < 1e-12);
}

TEST_CASE("trajectory gradient matches finite differences") {
  const Matrix x = oracle::gaussian(5, 7, 30), phi = oracle::unit_gaussian(5, 3, 31);
  const Matrix a = oracle::gaussian(3, 3, 32), z = oracle::gaussian(3, 7, 33);
  const auto p = CoeffPenalty::l1(0.0);
  auto f = [&](const Matrix& v) { return trajectory_objective(x, phi, a, v, 0.6, p); };
  CHECK(oracle::relative_error(trajectory_smooth_gradient(x, phi, a, z, 0.6), oracle::central_difference(f, z)) < 1e-5);
}

TEST_CASE("infer_states") {
  const Matrix x = oracle::gaussian(6, 12, 40), phi = oracle::unit_gaussian(6, 3, 41);
  SolverOptions o;
  o.maxInnerIters = 20000;
  o.tol = 1e-15;

  SUBCASE("no coupling agrees with the per-column solve") {
    for (const auto& p : {CoeffPenalty::l1(0.1), CoeffPenalty::squared_l2(0.1)}) {
      const auto t = infer_states(DataMatrix(x), phi, LatentOperator(oracle::gaussian(3, 3, 42)), 0.0, p, o);
      const Matrix cols = solve_coeffs(x, phi, p, o);
      const Matrix zero = Matrix::Zero(3, 3);
      CHECK(std::abs(trajectory_objective(x, phi, zero, t.states(), 0.0, p) -
                     trajectory_objective(x, phi, zero, cols, 0.0, p)) < 1e-8);
    }
  }
  SUBCASE("strong coupling with the identity makes states constant") {
    const auto t = infer_states(DataMatrix(x), phi, LatentOperator(Matrix::Identity(3, 3)), 1e9, CoeffPenalty::l1(0.0), o);
    for (Index k = 0; k + 1 < 12; ++k) CHECK((t.states().col(k + 1) - t.states().col(k)).norm() <= 1e-4);
  }
  SUBCASE("smooth penalty solution is stationary") {
    const LatentOperator op(0.5 * oracle::gaussian(3, 3, 43));
    const auto t = infer_states(DataMatrix(x), phi, op, 0.7, CoeffPenalty::squared_l2(0.05), o);
    const Matrix g = trajectory_smooth_gradient(x, phi, op.matrix(), t.states(), 0.7) + 0.1 * t.states();
    CHECK(g.norm() < 1e-8 * (1.0 + x.norm()));
  }
  SUBCASE("l1 solution beats a coordinate-wise oracle perturbation") {
    const LatentOperator op(0.5 * oracle::gaussian(3, 3, 44));
    const auto p = CoeffPenalty::l1(0.2);
    const auto t = infer_states(DataMatrix(x), phi, op, 0.7, p, o);
    const double best = trajectory_objective(x, phi, op.matrix(), t.states(), 0.7, p);
    for (int k = 0; k < 40; ++k) {
      Matrix d = oracle::gaussian(3, 12, 200 + k);
      d *= 1e-4 / d.norm();
      CHECK(trajectory_objective(x, phi, op.matrix(), t.states() + d, 0.7, p) >= best - 1e-12);
    }
  }
}

TEST_CASE("fit_dynamic on a planted linear system") {
  const auto sys = synth_linear_system(16, 4, 200, 0.95, 0.0, 5);
  DvblConfig cfg;
  cfg.atoms = 4;
  cfg.coeffPenalty = CoeffPenalty::l1(0.0);
  cfg.dynWeight = 0.1;
  cfg.maxIters = 200;
  cfg.stopEps = 1e-12;
  DynamicOptions o;
  o.rhoMax = 1.0;
  const auto r = fit_dynamic(DataMatrix(sys.x), cfg, o);
  const auto& recs = r.log.records;
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i].objective <= recs[i - 1].objective + 1e-10);
  for (const auto& rec : recs) {
    CHECK(rec.spectralRadius <= 1.0 + 1e-6);
    CHECK(rec.objective == doctest::Approx(rec.reconstruction + rec.coeffPenalty + rec.dynamics + rec.basisPenalty +
                                           rec.operatorPenalty));
  }
  CHECK(recs.back().objective <= 1e-4 * recs.front().objective);
  CHECK(one_step_forecast_error(sys.x, r.basis.values(), r.states.states(), r.op.matrix()) <= 1e-6);
  CHECK(r.op.spectral_radius() == doctest::Approx(0.95).epsilon(1e-4));
}

TEST_CASE("dynamic fit with dynamics switched off tracks the static fit") {
  const auto sm = synth_sparse_model(8, 3, 40, 3, 0.01, 6);
  DvblConfig cfg;
  cfg.atoms = 3;
  cfg.coeffPenalty = CoeffPenalty::squared_l2(0.05);
  cfg.maxIters = 15;
  cfg.stopEps = 1e-300;
  DynamicOptions o;
  o.train.innerTolStart = 1e-15;
  o.train.solver.tol = 1e-15;
  o.train.solver.maxInnerIters = 20000;
  const auto dyn = fit_dynamic(DataMatrix(sm.x), cfg, o);
  const auto stat = fit(DataMatrix(sm.x), cfg, nullptr, o.train);
  REQUIRE(dyn.log.records.size() == stat.log.records.size());
  for (std::size_t i = 0; i < dyn.log.records.size(); ++i)
    CHECK(std::abs(dyn.log.records[i].objective - stat.log.records[i].objective) <= 1e-8);
}

TEST_CASE("one-step forecast error definition") {
  const auto sys = synth_linear_system(6, 2, 30, 0.9, 0.0, 7);
  CHECK(one_step_forecast_error(sys.x, sys.phiStar, sys.zStar, sys.aStar) < 1e-12);
  CHECK(one_step_forecast_error(sys.x, sys.phiStar, sys.zStar, Matrix::Zero(2, 2)) == doctest::Approx(1.0));
}
