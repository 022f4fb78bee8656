#include "basisforge/diagnostics.hpp"

#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace basisforge {

Coherence mutual_coherence(const Matrix& phi) {
  Coherence c;
  if (phi.cols() < 2) {
    c.singleAtom = true;
    return c;
  }
  const Matrix gram = phi.transpose() * phi;
  for (Index l = 1; l < gram.cols(); ++l)
    for (Index k = 0; k < l; ++k) c.value = std::max(c.value, std::abs(gram(k, l)));
  return c;
}

Coherence mutual_coherence(const Basis& phi) { return mutual_coherence(phi.values()); }

double uniqueness_bound(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0 + 1e-12)) throw InputError("coherence must lie in [0, 1]");
  if (mu == 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * (1.0 + 1.0 / mu);
}

long max_unique_sparsity(double mu) {
  const double b = uniqueness_bound(mu);
  if (std::isinf(b)) return -1;
  return static_cast<long>(std::ceil(b)) - 1;
}

double best_rank_error(const Matrix& x, Index m) {
  if (m < 0) throw InputError("rank must be >= 0");
  Eigen::BDCSVD<Matrix> svd(x);
  const Vector& sv = svd.singularValues();
  double tail = 0.0;
  for (Index j = m; j < sv.size(); ++j) tail += sv[j] * sv[j];
  return tail;
}

double best_rank_error(const DataMatrix& x, Index m) { return best_rank_error(x.values(), m); }

SparseModel synth_sparse_model(Index d, Index m, Index n, Index s, double noiseStd, std::uint64_t seed) {
  if (d < 1 || m < 1 || n < 1) throw InputError("synthetic model dimensions must be >= 1");
  if (s < 0 || s > m) throw InputError("sparsity s must satisfy 0 <= s <= m");
  if (!(noiseStd >= 0.0)) throw InputError("noise standard deviation must be >= 0");
  std::mt19937_64 rng(seed);
  SparseModel out;
  Matrix g = gaussian_matrix(d, m, rng);
  out.phiStar = unit_columns(g);
  out.alphaStar = Matrix::Zero(m, n);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Index> idx(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    std::iota(idx.begin(), idx.end(), Index{0});
    // partial Fisher-Yates: first s entries form a uniform random subset
    for (Index j = 0; j < s; ++j) {
      std::uniform_int_distribution<Index> pick(j, m - 1);
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    for (Index j = 0; j < s; ++j) out.alphaStar(idx[static_cast<std::size_t>(j)], i) = nd(rng);
  }
  out.x = out.phiStar * out.alphaStar;
  if (noiseStd > 0.0) out.x += noiseStd * gaussian_matrix(d, n, rng);
  return out;
}

LinearSystemModel synth_linear_system(Index d, Index m, Index t, double rho, double noiseStd,
                                      std::uint64_t seed) {
  if (d < 1 || m < 1 || t < 2) throw InputError("linear system needs d, m >= 1 and T >= 2");
  if (!(rho >= 0.0)) throw InputError("spectral radius must be >= 0");
  if (!(noiseStd >= 0.0)) throw InputError("noise standard deviation must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.2, 1.2);
  LinearSystemModel out;
  out.phiStar = unit_columns(gaussian_matrix(d, m, rng));
  Matrix core = Matrix::Zero(m, m);
  for (Index j = 0; j + 1 < m; j += 2) {
    const double th = angle(rng);
    core(j, j) = rho * std::cos(th);
    core(j, j + 1) = -rho * std::sin(th);
    core(j + 1, j) = rho * std::sin(th);
    core(j + 1, j + 1) = rho * std::cos(th);
  }
  if (m % 2 == 1) core(m - 1, m - 1) = rho;
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(m, m, rng));
  const Matrix q = qr.householderQ();
  out.aStar = q * core * q.transpose();
  out.zStar.resize(m, t);
  out.zStar.col(0) = gaussian_matrix(m, 1, rng).col(0);
  for (Index s = 1; s < t; ++s) out.zStar.col(s) = out.aStar * out.zStar.col(s - 1);
  out.x = out.phiStar * out.zStar;
  if (noiseStd > 0.0) out.x += noiseStd * gaussian_matrix(d, t, rng);
  return out;
}

double RecoveryReport::fraction_above(double threshold) const {
  if (matching.empty()) return 0.0;
  const auto hits = std::count_if(matching.begin(), matching.end(),
                                  [&](const AtomMatch& m) { return m.absCorrelation >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(matching.size());
}

std::vector<Index> max_weight_assignment(const Matrix& w) {
  // Hungarian method with potentials on cost = max(w) - w (rows <= cols).
  const Index n = w.rows(), m = w.cols();
  if (n > m) throw InputError("assignment needs rows <= cols");
  if (n == 0) return {};
  const double top = w.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  auto cost = [&](Index i, Index j) { return top - w(i - 1, j - 1); };
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assign(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0) assign[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assign;
}

RecoveryReport match_bases(const Matrix& phiHat, const Matrix& phiStar, const Matrix* aHat, const Matrix* aStar,
                           double supportTol) {
  if (phiHat.rows() != phiStar.rows())
    throw ShapeError("match_bases: learned and reference bases have different ambient dimension");
  const Matrix corr = phiHat.transpose() * phiStar;  // learned x true
  const Matrix absCorr = corr.cwiseAbs();
  RecoveryReport rep;
  const bool learnedRows = phiHat.cols() <= phiStar.cols();
  const std::vector<Index> assign = max_weight_assignment(learnedRows ? absCorr : Matrix(absCorr.transpose()));
  for (std::size_t r = 0; r < assign.size(); ++r) {
    AtomMatch am;
    am.learned = learnedRows ? static_cast<Index>(r) : assign[r];
    am.truth = learnedRows ? assign[r] : static_cast<Index>(r);
    const double c = corr(am.learned, am.truth);
    am.sign = c < 0.0 ? -1 : 1;
    am.absCorrelation = std::min(1.0, std::abs(c));
    rep.matching.push_back(am);
  }
  std::sort(rep.matching.begin(), rep.matching.end(),
            [](const AtomMatch& a, const AtomMatch& b) { return a.learned < b.learned; });
  double sum = 0.0;
  for (const auto& m : rep.matching) sum += m.absCorrelation;
  rep.meanAbsCorrelation = rep.matching.empty() ? 0.0 : sum / static_cast<double>(rep.matching.size());

  if (aHat && aStar) {
    if (aHat->rows() != phiHat.cols() || aStar->rows() != phiStar.cols() || aHat->cols() != aStar->cols())
      throw ShapeError("match_bases: coefficient shapes do not match the bases");
    std::vector<Index> toTruth(static_cast<std::size_t>(phiHat.cols()), -1);
    for (const auto& m : rep.matching) toTruth[static_cast<std::size_t>(m.learned)] = m.truth;
    Index hits = 0;
    for (Index i = 0; i < aStar->cols(); ++i) {
      std::set<Index> truth, learned;
      bool unmatched = false;
      for (Index j = 0; j < aStar->rows(); ++j)
        if (std::abs((*aStar)(j, i)) > supportTol) truth.insert(j);
      for (Index k = 0; k < aHat->rows(); ++k)
        if (std::abs((*aHat)(k, i)) > supportTol) {
          const Index j = toTruth[static_cast<std::size_t>(k)];
          if (j < 0) unmatched = true;
          learned.insert(j);
        }
      if (!unmatched && truth == learned) ++hits;
    }
    rep.supportRecoveryRate = aStar->cols() ? static_cast<double>(hits) / static_cast<double>(aStar->cols()) : 0.0;
  }
  return rep;
}

}  // namespace basisforge
