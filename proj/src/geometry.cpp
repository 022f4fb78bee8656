#include "basisforge/geometry.hpp"

#include "basisforge/error.hpp"
#include "basisforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace basisforge {

GraphLaplacian GraphLaplacian::from_weights(SparseMatrix w) {
  if (w.rows() != w.cols()) throw InputError("graph weight matrix must be square");
  w.makeCompressed();
  const SparseMatrix wt = w.transpose();
  if ((w - wt).norm() != 0.0) throw InputError("graph weight matrix is not symmetric");
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw InputError("graph weights must be finite and nonnegative");
      if (it.row() == it.col() && it.value() != 0.0)
        throw InputError("graph weight matrix must have a zero diagonal");
    }
  GraphLaplacian g;
  g.weights_ = w;
  g.degrees_ = Vector::Zero(w.rows());
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it) g.degrees_[it.row()] += it.value();
  SparseMatrix d(w.rows(), w.cols());
  d.reserve(Eigen::VectorXi::Constant(w.cols(), 1));
  for (Index i = 0; i < w.rows(); ++i) d.insert(i, i) = g.degrees_[i];
  g.laplacian_ = d - w;
  g.laplacian_.makeCompressed();
  return g;
}

GraphLaplacian build_knn_graph(const DataMatrix& x, Index k, KernelScale scale) {
  const Index n = x.cols();
  if (k < 1 || k >= n) throw InputError("k-NN graph requires 1 <= k < N");
  const Matrix& xs = x.values();

  // Per query point: indices and squared distances of its k nearest others.
  std::vector<std::vector<std::pair<double, Index>>> nbrs(static_cast<std::size_t>(n));
  parallel_for(n, [&](Index i) {
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j)
      if (j != i) cand.emplace_back((xs.col(i) - xs.col(j)).squaredNorm(), j);
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    cand.resize(static_cast<std::size_t>(k));
    nbrs[static_cast<std::size_t>(i)] = std::move(cand);
  });

  double sigma = 0.0;
  if (const auto* fixed = std::get_if<FixedScale>(&scale)) {
    if (!(fixed->sigma > 0.0)) throw ConfigError("kernel scale sigma must be > 0");
    sigma = fixed->sigma;
  } else {
    std::vector<double> dists;
    for (const auto& row : nbrs)
      for (const auto& [d2, j] : row) dists.push_back(std::sqrt(d2));
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double med = *mid;
    if (dists.size() % 2 == 0) {
      const double lower = *std::max_element(dists.begin(), mid);
      med = 0.5 * (med + lower);
    }
    sigma = med;
  }

  std::map<std::pair<Index, Index>, double> edges;
  for (Index i = 0; i < n; ++i)
    for (const auto& [d2, j] : nbrs[static_cast<std::size_t>(i)]) {
      const double w = sigma > 0.0 ? std::exp(-d2 / (sigma * sigma)) : 1.0;
      const auto key = std::minmax(i, j);
      auto [it, inserted] = edges.emplace(key, w);
      if (!inserted) it->second = std::max(it->second, w);
    }
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [key, w] : edges) {
    trip.emplace_back(key.first, key.second, w);
    trip.emplace_back(key.second, key.first, w);
  }
  SparseMatrix wm(n, n);
  wm.setFromTriplets(trip.begin(), trip.end());
  return GraphLaplacian::from_weights(std::move(wm));
}

double graph_penalty(const Matrix& a, const GraphLaplacian& g) {
  if (a.cols() != g.n()) throw_shape("graph_penalty", a.rows(), g.n(), a.rows(), a.cols());
  // Tr(A L A^T) = sum_{r} a_r L a_r^T over coefficient rows.
  const Matrix al = a * g.laplacian();
  return al.cwiseProduct(a).sum();
}

double graph_penalty(const CoefficientMatrix& a, const GraphLaplacian& g) {
  return graph_penalty(a.values(), g);
}

void write_edge_list(std::ostream& os, const GraphLaplacian& g) {
  const SparseMatrix& w = g.weights();
  std::vector<std::tuple<Index, Index, double>> rows;
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it)
      if (it.row() < it.col()) rows.emplace_back(it.row(), it.col(), it.value());
  std::sort(rows.begin(), rows.end());
  os << std::setprecision(17);
  for (const auto& [i, j, v] : rows) os << i << ',' << j << ',' << v << '\n';
}

GraphLaplacian read_edge_list(std::istream& is, Index n) {
  std::vector<Eigen::Triplet<double>> trip;
  std::map<std::pair<Index, Index>, int> seen;
  std::string line;
  long lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    long i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w)) throw InputError("edge list line " + std::to_string(lineNo) + " is malformed");
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw InputError("edge list line " + std::to_string(lineNo) + " has an invalid node pair");
    if (seen[std::minmax<Index>(i, j)]++)
      throw InputError("edge list line " + std::to_string(lineNo) + " repeats an edge");
    trip.emplace_back(i, j, w);
    trip.emplace_back(j, i, w);
  }
  SparseMatrix wm(n, n);
  wm.setFromTriplets(trip.begin(), trip.end());
  return GraphLaplacian::from_weights(std::move(wm));
}

}  // namespace basisforge
