#include "basisforge/diagnostics.hpp"
#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace basisforge;

TEST_CASE("mutual coherence") {
  CHECK(mutual_coherence(Matrix::Identity(4, 4)).value == 0.0);
  Matrix dup = oracle::unit_gaussian(5, 3, 1);
  dup.col(1) = -dup.col(0);
  CHECK(mutual_coherence(dup).value == doctest::Approx(1.0));
  const auto single = mutual_coherence(Matrix(Vector::Unit(3, 0)));
  CHECK(single.singleAtom);
  CHECK(single.value == 0.0);

  const Matrix phi = oracle::unit_gaussian(8, 12, 2);
  double brute = 0.0;
  for (Index k = 0; k < 12; ++k)
    for (Index l = 0; l < 12; ++l)
      if (k != l) brute = std::max(brute, std::abs(phi.col(k).dot(phi.col(l))));
  CHECK(std::abs(mutual_coherence(phi).value - brute) <= 1e-12);

  // signed permutations leave it unchanged
  Matrix moved = phi;
  moved.col(0).swap(moved.col(7));
  moved.col(3) *= -1.0;
  CHECK(mutual_coherence(moved).value == doctest::Approx(mutual_coherence(phi).value).epsilon(1e-15));
}

TEST_CASE("uniqueness bound") {
  CHECK(uniqueness_bound(0.5) == 1.5);
  CHECK(max_unique_sparsity(0.5) == 1);
  CHECK(uniqueness_bound(0.1) == doctest::Approx(5.5));
  CHECK(max_unique_sparsity(0.1) == 5);
  CHECK(uniqueness_bound(1.0) == 1.0);
  CHECK(max_unique_sparsity(1.0) == 0);
  CHECK(std::isinf(uniqueness_bound(0.0)));
  CHECK(max_unique_sparsity(0.0) == -1);
  CHECK(max_unique_sparsity(1.0 / 3.0) == 1);  // bound exactly 2: s must be strictly below
  CHECK_THROWS_AS(uniqueness_bound(-0.1), InputError);
  CHECK_THROWS_AS(uniqueness_bound(1.5), InputError);
}

TEST_CASE("best rank error") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  CHECK(best_rank_error(d, 1) == doctest::Approx(5.0));
  CHECK(best_rank_error(d, 3) == doctest::Approx(0.0));
  CHECK(best_rank_error(d, 7) == 0.0);

  const Matrix x = oracle::gaussian(10, 30, 3);
  const Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix x4 = svd.matrixU().leftCols(4) * svd.singularValues().head(4).asDiagonal() *
                    svd.matrixV().leftCols(4).transpose();
  const double want = (x - x4).squaredNorm();
  CHECK(std::abs(best_rank_error(x, 4) - want) <= 1e-9 * want);
  double prev = INFINITY;
  for (Index m = 0; m <= 10; ++m) {
    const double e = best_rank_error(x, m);
    CHECK(e <= prev);
    prev = e;
  }
  CHECK(prev <= 1e-20);
}

TEST_CASE("synthetic sparse model") {
  const auto a = synth_sparse_model(10, 6, 40, 2, 0.0, 4);
  for (Index k = 0; k < 6; ++k) CHECK(a.phiStar.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (Index n = 0; n < 40; ++n) {
    CHECK((a.alphaStar.col(n).array() != 0.0).count() == 2);
    CHECK((a.x.col(n) - a.phiStar * a.alphaStar.col(n)).norm() <= 1e-14);
  }
  const auto b = synth_sparse_model(10, 6, 40, 2, 0.0, 4);
  CHECK(a.x == b.x);
  CHECK(a.phiStar == b.phiStar);

  const auto noise = synth_sparse_model(10, 6, 40, 0, 0.5, 5);
  CHECK(noise.alphaStar.norm() == 0.0);
  CHECK(noise.x.norm() > 0.0);
  CHECK_THROWS_AS(synth_sparse_model(10, 3, 5, 4, 0.0, 1), InputError);
}

TEST_CASE("synthetic linear system") {
  const auto sys = synth_linear_system(12, 5, 50, 0.9, 0.0, 6);
  CHECK(spectral_radius(sys.aStar) == doctest::Approx(0.9).epsilon(1e-10));
  const Eigen::EigenSolver<Matrix> es(sys.aStar);
  for (Index i = 0; i < 5; ++i) CHECK(std::abs(es.eigenvalues()(i)) == doctest::Approx(0.9).epsilon(1e-10));
  for (Index t = 0; t + 1 < 50; ++t) CHECK((sys.zStar.col(t + 1) - sys.aStar * sys.zStar.col(t)).norm() <= 1e-12);
  CHECK((sys.x - sys.phiStar * sys.zStar).norm() <= 1e-12);
  CHECK_THROWS(synth_linear_system(12, 5, 1, 0.9, 0.0, 6));
}

TEST_CASE("max weight assignment agrees with exhaustive search") {
  for (int trial = 0; trial < 30; ++trial) {
    const Index rows = 1 + trial % 6, cols = rows + trial % 3;
    const Matrix w = oracle::gaussian(rows, cols, 100 + trial).cwiseAbs();
    const auto got = max_weight_assignment(w);
    double gotTotal = 0.0;
    std::set<Index> used;
    for (Index r = 0; r < rows; ++r) {
      gotTotal += w(r, got[r]);
      used.insert(got[r]);
    }
    CHECK(static_cast<Index>(used.size()) == rows);
    std::vector<Index> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double s = 0.0;
      for (Index r = 0; r < rows; ++r) s += w(r, perm[r]);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(gotTotal >= 0.999 * best);
    CHECK(gotTotal == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("match_bases") {
  const Matrix truth = oracle::unit_gaussian(10, 5, 7);
  Matrix learned(10, 5);
  const std::vector<Index> order = {3, 0, 4, 1, 2};
  for (Index k = 0; k < 5; ++k) learned.col(k) = (k % 2 ? -1.0 : 1.0) * truth.col(order[k]);
  const auto rep = match_bases(learned, truth);
  CHECK(std::abs(rep.meanAbsCorrelation - 1.0) <= 1e-12);
  for (const auto& m : rep.matching) {
    CHECK(m.truth == order[m.learned]);
    CHECK(m.sign == (m.learned % 2 ? -1 : 1));
  }
  CHECK(rep.fraction_above(0.99) == 1.0);
  CHECK_FALSE(rep.supportRecoveryRate.has_value());

  // atoms confined to orthogonal coordinate blocks
  Matrix left = Matrix::Zero(6, 3), right = Matrix::Zero(6, 3);
  left.topRows(3) = Eigen::HouseholderQR<Matrix>(oracle::gaussian(3, 3, 8)).householderQ();
  right.bottomRows(3) = Eigen::HouseholderQR<Matrix>(oracle::gaussian(3, 3, 9)).householderQ();
  CHECK(match_bases(left, right).meanAbsCorrelation <= 1e-12);

  CHECK_THROWS_AS(match_bases(Matrix(truth.topRows(9)), truth), ShapeError);
}

TEST_CASE("support recovery through the matching") {
  const auto sm = synth_sparse_model(8, 4, 30, 2, 0.0, 10);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 1, 3, 0, 2;
  const Matrix phiHat = sm.phiStar * perm;
  const Matrix aHat = perm.transpose() * sm.alphaStar;
  const auto rep = match_bases(phiHat, sm.phiStar, &aHat, &sm.alphaStar);
  REQUIRE(rep.supportRecoveryRate.has_value());
  CHECK(*rep.supportRecoveryRate == 1.0);

  Matrix wrong = aHat;
  wrong.col(0).setZero();
  wrong(0, 0) = 1.0;
  wrong(1, 0) = 1.0;
  const auto partial = match_bases(phiHat, sm.phiStar, &wrong, &sm.alphaStar);
  CHECK(*partial.supportRecoveryRate < 1.0);
}

TEST_CASE("rectangular matching covers the smaller side") {
  const Matrix truth = oracle::unit_gaussian(9, 6, 11);
  const Matrix learned = truth.leftCols(4);
  const auto rep = match_bases(learned, truth);
  CHECK(rep.matching.size() == 4);
  CHECK(rep.meanAbsCorrelation == doctest::Approx(1.0));
  const auto rev = match_bases(truth, learned);
  CHECK(rev.matching.size() == 4);
  CHECK(rev.meanAbsCorrelation == doctest::Approx(1.0));
}
