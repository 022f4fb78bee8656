#include "basisforge/linalg.hpp"

#include "basisforge/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace basisforge {

namespace {
std::atomic<int> g_threads{1};
}

double power_iteration_max_eig(const Matrix& sym, int iters) {
  const Index n = sym.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.37 * std::sin(1.0 + 2.3 * static_cast<double>(i));
  v.normalize();
  double rq = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = sym * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    rq = v.dot(w);
    v = w / nw;
  }
  return std::max(rq, v.dot(sym * v));
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("spectral radius requires a square matrix");
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

Matrix unit_columns(const Matrix& m, double tiny) {
  Matrix out = m;
  for (Index k = 0; k < out.cols(); ++k) {
    const double n = out.col(k).norm();
    if (n >= tiny) out.col(k) /= n;
  }
  return out;
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

void parallel_for(Index n, const std::function<void(Index)>& body) {
  const int workers = static_cast<int>(std::min<Index>(num_threads(), n));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (Index i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace basisforge
