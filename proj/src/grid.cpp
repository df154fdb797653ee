#include "diracbvp/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace diracbvp {

namespace {

// Barycentric weights in sign/log form to avoid overflow at larger n.
struct BaryWeights {
  Eigen::VectorXd logmag;
  Eigen::VectorXd sign;
};

BaryWeights bary_weights(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  BaryWeights w{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
  for (int i = 0; i < n; ++i) {
    double lm = 0.0, s = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = x(i) - x(j);
      lm -= std::log(std::abs(d));
      if (d < 0) s = -s;
    }
    w.logmag(i) = lm;
    w.sign(i) = s;
  }
  return w;
}

double ratio(const BaryWeights& w, int j, int i) {
  return w.sign(j) * w.sign(i) * std::exp(w.logmag(j) - w.logmag(i));
}

double cheb_t(int k, double u) { return std::cos(k * std::acos(std::clamp(u, -1.0, 1.0))); }

}  // namespace

Grid make_grid(int n, double length, bool drop_left) {
  if (n < 4) throw std::invalid_argument("grid too coarse");
  if (!(length > 0)) throw std::invalid_argument("grid length must be > 0");
  std::vector<double> pts;
  if (drop_left) {
    // Chebyshev-Radau family: endpoint t = length kept, apex excluded
    for (int j = n - 1; j >= 0; --j)
      pts.push_back(0.5 * length *
                    (1.0 + std::cos(2.0 * M_PI * j / (2 * n - 1))));
  } else {
    for (int j = 0; j < n; ++j)
      pts.push_back(0.5 * length * (1.0 - std::cos(M_PI * j / (n - 1))));
  }

  Grid g;
  g.length = length;
  g.nodes = Eigen::Map<Eigen::VectorXd>(pts.data(), pts.size());

  const auto bw = bary_weights(g.nodes);
  g.diff = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      g.diff(i, j) = ratio(bw, j, i) / (g.nodes(i) - g.nodes(j));
      rowsum += g.diff(i, j);
    }
    g.diff(i, i) = -rowsum;  // exact on constants by construction
  }

  // Quadrature weights: solve V^T q = Chebyshev moments of dt on [0, length].
  Eigen::MatrixXd vt(n, n);
  Eigen::VectorXd moments(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i)
      vt(k, i) = cheb_t(k, 2.0 * g.nodes(i) / length - 1.0);
    moments(k) = (k % 2 == 0) ? length / (1.0 - double(k) * k) : 0.0;
  }
  g.weights = vt.colPivHouseholderQr().solve(moments);
  return g;
}

Eigen::RowVectorXd interpolation_row(const Grid& g, double x) {
  const int n = g.size();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (x == g.nodes(i)) {
      row(i) = 1.0;
      return row;
    }
  const auto bw = bary_weights(g.nodes);
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    row(i) = ratio(bw, i, 0) / (x - g.nodes(i));
    denom += row(i);
  }
  return row / denom;
}

}  // namespace diracbvp
