#include "basisforge/coeff_solver.hpp"
#include "basisforge/error.hpp"
#include "basisforge/objective.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace basisforge;

namespace {

double lasso_objective(const Matrix& x, const Matrix& phi, const Matrix& a, double lam) {
  return (x - phi * a).squaredNorm() + lam * a.cwiseAbs().sum();
}

SolverOptions tight() {
  SolverOptions o;
  o.maxInnerIters = 20000;
  o.tol = 1e-15;
  return o;
}

}  // namespace

TEST_CASE("proximal maps") {
  Vector v(1);
  v << 3.0;
  CHECK(prox(v, CoeffPenalty::l1(1.0), 1.0)(0) == 2.0);
  v << -0.5;
  CHECK(prox(v, CoeffPenalty::l1(1.0), 1.0)(0) == 0.0);
  v << 1.0;
  CHECK(prox(v, CoeffPenalty::l1(1.0), 1.0)(0) == 0.0);  // exactly at the kink

  const Vector r = oracle::gaussian(5, 1, 1).col(0);
  CHECK(prox(r, CoeffPenalty::l1(0.0), 0.3) == r);
  CHECK(prox(r, CoeffPenalty::squared_l2(0.0), 0.3) == r);
  CHECK((prox(r, CoeffPenalty::squared_l2(2.0), 0.25) - r / 2.0).norm() < 1e-15);

  Vector g(4);
  g << 3, 4, 0.1, 0.1;
  const Vector out = prox(g, CoeffPenalty::group_l2(1.0, {{0, 1}, {2, 3}}), 1.0);
  CHECK(out(0) == doctest::Approx(3.0 * 0.8));
  CHECK(out(1) == doctest::Approx(4.0 * 0.8));
  CHECK(out(2) == 0.0);
  CHECK(out(3) == 0.0);
  CHECK_THROWS_AS(prox(g, CoeffPenalty::l1(1.0), 0.0), ConfigError);
}

TEST_CASE("prox is the minimizer of the proximal objective") {
  // brute-force check along random directions around the returned point
  const Vector v = oracle::gaussian(4, 1, 2).col(0);
  const std::vector<CoeffPenalty> kinds = {CoeffPenalty::l1(0.8), CoeffPenalty::squared_l2(0.8),
                                           CoeffPenalty::group_l2(0.8, {{0, 1}, {2, 3}})};
  for (const auto& p : kinds) {
    const Vector u = prox(v, p, 0.5);
    auto f = [&](const Vector& w) { return 0.5 * (w - v).squaredNorm() + 0.5 * coeff_penalty_value(Matrix(w), p); };
    for (int k = 0; k < 50; ++k) {
      const Vector d = 1e-4 * oracle::gaussian(4, 1, 100 + k).col(0);
      CHECK(f(u + d) >= f(u) - 1e-14);
    }
  }
}

TEST_CASE("solve_coeffs closed forms with an identity basis") {
  const Matrix x = oracle::gaussian(4, 6, 3);
  const Matrix eye = Matrix::Identity(4, 4);
  const Matrix ls = solve_coeffs(x, eye, CoeffPenalty::l1(0.0), tight());
  CHECK((ls - x).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix a = solve_coeffs(x, eye, CoeffPenalty::l1(0.6), tight());
  for (Index i = 0; i < 4; ++i)
    for (Index n = 0; n < 6; ++n) CHECK(a(i, n) == doctest::Approx(oracle::soft(x(i, n), 0.3)).epsilon(1e-10));
}

TEST_CASE("solve_coeffs matches a coordinate-descent oracle") {
  const Matrix phi = oracle::unit_gaussian(6, 4, 4);
  const Matrix x = oracle::gaussian(6, 10, 5);
  for (StepRule rule : {StepRule::Fixed, StepRule::Backtracking})
    for (bool accel : {true, false}) {
      SolverOptions o = tight();
      o.stepRule = rule;
      o.acceleration = accel;
      const Matrix a = solve_coeffs(x, phi, CoeffPenalty::l1(0.1), o);
      for (Index n = 0; n < x.cols(); ++n) {
        const Vector ref = oracle::lasso_cd(x.col(n), phi, 0.1);
        const double got = lasso_objective(x.col(n), phi, a.col(n), 0.1);
        const double want = lasso_objective(x.col(n), phi, ref, 0.1);
        CHECK(got <= want + 1e-6);
      }
    }
}

TEST_CASE("solve_coeffs reports and validates") {
  const Matrix phi = oracle::unit_gaussian(6, 4, 6);
  const Matrix x = oracle::gaussian(6, 5, 7);
  SolverOptions o;
  o.maxInnerIters = 2;
  o.tol = 1e-15;
  CoeffSolveReport rep;
  solve_coeffs(x, phi, CoeffPenalty::l1(0.01), o, nullptr, &rep);
  CHECK(rep.maxIterations == 2);
  CHECK(rep.unconvergedColumns > 0);

  o.maxInnerIters = 0;
  CHECK_THROWS_AS(solve_coeffs(x, phi, CoeffPenalty::l1(0.1), o), ConfigError);
  CHECK_THROWS_AS(solve_coeffs(Matrix(x.topRows(5)), phi, CoeffPenalty::l1(0.1), tight()), ShapeError);
}

TEST_CASE("plain proximal gradient descends monotonically") {
  const Matrix phi = oracle::unit_gaussian(8, 6, 8);
  const Vector x = oracle::gaussian(8, 1, 9).col(0);
  SolverOptions o;
  o.acceleration = false;
  o.maxInnerIters = 300;
  o.tol = 1e-15;
  for (const auto& p : {CoeffPenalty::l1(0.2), CoeffPenalty::squared_l2(0.2), CoeffPenalty::group_l2(0.2, {{0, 1, 2}, {3, 4, 5}})}) {
    const auto trace = coeff_column_trace(x, phi, p, o);
    REQUIRE(trace.size() > 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-10);
  }
}

TEST_CASE("returned solution is a fixed point") {
  const Matrix phi = oracle::unit_gaussian(6, 4, 10);
  const Vector x = oracle::gaussian(6, 1, 11).col(0);
  SolverOptions o;
  o.tol = 1e-10;
  const auto p = CoeffPenalty::l1(0.15);
  const Vector a = solve_coeffs(Matrix(x), phi, p, o).col(0);
  const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(phi.transpose() * phi).eigenvalues().maxCoeff();
  const Vector grad = coeff_smooth_gradient(Matrix(x), phi, Matrix(a)).col(0);
  const Vector next = prox(a - grad / lip, p, 1.0 / lip);
  const double before = lasso_objective(x, phi, a, 0.15), after = lasso_objective(x, phi, next, 0.15);
  CHECK(std::abs(before - after) <= o.tol * (1.0 + before));
}

TEST_CASE("smooth gradient matches finite differences") {
  const Matrix x = oracle::gaussian(5, 6, 12);
  const Matrix phi = oracle::gaussian(5, 4, 13);
  const Matrix a = oracle::gaussian(4, 6, 14);
  Matrix w = Matrix::Zero(6, 6);
  w(0, 3) = w(3, 0) = 1.0;
  w(1, 2) = w(2, 1) = 0.5;
  w(4, 5) = w(5, 4) = 2.0;
  const auto g = GraphLaplacian::from_weights(w.sparseView());
  auto f = [&](const Matrix& v) { return (x - phi * v).squaredNorm() + 0.7 * graph_penalty(v, g); };
  const Matrix fd = oracle::central_difference(f, a);
  CHECK(oracle::relative_error(coeff_smooth_gradient(x, phi, a, &g, 0.7), fd) < 1e-5);
  auto f0 = [&](const Matrix& v) { return (x - phi * v).squaredNorm(); };
  CHECK(oracle::relative_error(coeff_smooth_gradient(x, phi, a), oracle::central_difference(f0, a)) < 1e-5);
}

TEST_CASE("manifold solve") {
  const Matrix phi = oracle::unit_gaussian(6, 4, 15);
  const Matrix x = oracle::gaussian(6, 8, 16);
  Matrix w = Matrix::Zero(8, 8);
  for (Index i = 0; i + 1 < 8; ++i) w(i, i + 1) = w(i + 1, i) = 1.0;
  const auto g = GraphLaplacian::from_weights(w.sparseView());
  const auto p = CoeffPenalty::l1(0.1);

  SUBCASE("zero coupling agrees with the per-column solve") {
    const Matrix joint = solve_coeffs_manifold(x, phi, p, g, 0.0, tight());
    const Matrix cols = solve_coeffs(x, phi, p, tight());
    CHECK(std::abs(lasso_objective(x, phi, joint, 0.1) - lasso_objective(x, phi, cols, 0.1)) < 1e-9);
  }

  SUBCASE("identical samples joined by a strong edge get equal codes") {
    Matrix x2 = x;
    x2.col(1) = x2.col(0);
    Matrix w2 = Matrix::Zero(8, 8);
    w2(0, 1) = w2(1, 0) = 50.0;
    const auto g2 = GraphLaplacian::from_weights(w2.sparseView());
    const Matrix a = solve_coeffs_manifold(x2, phi, p, g2, 1.0, tight());
    CHECK((a.col(0) - a.col(1)).norm() < 1e-6);
  }

  SUBCASE("matches a slow plain proximal-gradient oracle on the joint objective") {
    const double eta = 0.5;
    auto obj = [&](const Matrix& a) { return lasso_objective(x, phi, a, 0.1) + eta * graph_penalty(a, g); };
    const Matrix a = solve_coeffs_manifold(x, phi, p, g, eta, tight());
    // independent loop: fixed step, no acceleration, many iterations
    const double lip = 2.0 * (phi.transpose() * phi).eigenvalues().cwiseAbs().maxCoeff() +
                       2.0 * eta * g.eigen_upper_bound();
    Matrix ref = Matrix::Zero(4, 8);
    for (int it = 0; it < 100000; ++it) {
      const Matrix grad = -2.0 * phi.transpose() * (x - phi * ref) + 2.0 * eta * ref * Matrix(g.laplacian());
      Matrix v = ref - grad / lip;
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = oracle::soft(v.data()[i], 0.1 / lip);
      ref = v;
    }
    CHECK(obj(a) <= obj(ref) + 1e-6);
  }
}
