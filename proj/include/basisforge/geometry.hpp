#pragma once

// Sample-similarity graphs and the coefficient-roughness penalty Tr(A L A^T).

#include "basisforge/types.hpp"

#include <iosfwd>
#include <variant>

namespace basisforge {

/// Symmetric nonnegative weights W with zero diagonal, degrees D = rowsum(W),
/// and L = D - W.
class GraphLaplacian {
 public:
  /// Validates W (square, exactly symmetric, nonnegative, zero diagonal) and
  /// assembles D and L. Throws InputError otherwise.
  static GraphLaplacian from_weights(SparseMatrix weights);

  Index n() const { return weights_.rows(); }
  const SparseMatrix& weights() const { return weights_; }
  const SparseMatrix& laplacian() const { return laplacian_; }
  const Vector& degrees() const { return degrees_; }

  /// Upper bound on the largest eigenvalue of L (twice the maximum degree).
  double eigen_upper_bound() const { return 2.0 * (degrees_.size() ? degrees_.maxCoeff() : 0.0); }

 private:
  GraphLaplacian() = default;
  SparseMatrix weights_;
  SparseMatrix laplacian_;
  Vector degrees_;
};

struct MedianScale {};
struct FixedScale {
  double sigma;
};
using KernelScale = std::variant<MedianScale, FixedScale>;

/// Symmetric k-nearest-neighbour graph on the columns of X with Gaussian
/// weights exp(-||x_i - x_j||^2 / sigma^2). The directed relation is
/// symmetrized by elementwise max. Ties in distance go to the lower index.
/// MedianScale uses the median of all k-NN distances as sigma (weights fall
/// back to 1 when that median is zero).
GraphLaplacian build_knn_graph(const DataMatrix& x, Index k, KernelScale scale = MedianScale{});

/// Tr(A L A^T).
double graph_penalty(const Matrix& a, const GraphLaplacian& g);
double graph_penalty(const CoefficientMatrix& a, const GraphLaplacian& g);

/// Upper-triangle edge list "i,j,weight" (0-based), one edge per line.
void write_edge_list(std::ostream& os, const GraphLaplacian& g);
/// Reads the edge list format above into a graph over n nodes. Each edge is
/// mirrored; listing both (i,j) and (j,i) is an error.
GraphLaplacian read_edge_list(std::istream& is, Index n);

}  // namespace basisforge
