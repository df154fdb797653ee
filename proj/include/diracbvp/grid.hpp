#pragma once

#include <Eigen/Dense>

namespace diracbvp {

/// Collocation data on [0, T]: Chebyshev-Lobatto nodes (ascending), exact
/// quadrature weights for polynomials up to degree n-1, and the barycentric
/// differentiation matrix. With drop_left the t = 0 node is omitted (used at
/// coordinate singularities).
struct Grid {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // plain dt quadrature
  Eigen::MatrixXd diff;
  double length = 1.0;

  int size() const { return static_cast<int>(nodes.size()); }
};

Grid make_grid(int n, double length, bool drop_left);

/// Row of barycentric interpolation weights evaluating a nodal function at x.
Eigen::RowVectorXd interpolation_row(const Grid& g, double x);

}  // namespace diracbvp
