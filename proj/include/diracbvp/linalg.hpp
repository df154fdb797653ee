#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

#include "json.hpp"

namespace diracbvp {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using cxd = std::complex<double>;

inline Mat projector(const Mat& onb) { return onb * onb.adjoint(); }

/// Frobenius distance between the orthogonal projectors spanned by two
/// orthonormal column sets. Basis independent.
inline double projector_distance(const Mat& a, const Mat& b) {
  return (projector(a) - projector(b)).norm();
}

/// Orthonormal basis of the column span, rank decided against tol * sigma_max.
inline Mat orthonormal_columns(const Mat& m, double tol = 1e-12) {
  if (m.cols() == 0 || m.rows() == 0) return Mat(m.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Mat(m.rows(), 0);
  int r = 0;
  while (r < s.size() && s(r) > tol * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of the null space of m (right singular vectors below
/// tol * sigma_max).
inline Mat nullspace(const Mat& m, double tol = 1e-10) {
  if (m.rows() == 0) {
    return Mat::Identity(m.cols(), m.cols());
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int r = 0;
  while (r < s.size() && s(r) > tol * (smax > 0 ? smax : 1.0)) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

/// Orthonormal basis of span(a) ∩ orthocomplement(span(b)); both inputs
/// orthonormal column sets.
inline Mat complement_within(const Mat& a, const Mat& b, double tol = 1e-10) {
  Mat residual = a - projector(b) * a;
  return orthonormal_columns(residual, tol);
}

// JSON encoding of complex matrices: row-major list of [re, im] pairs plus
// explicit dimensions.
inline nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      data.push_back({m(i, j).real(), m(i, j).imag()});
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Mat matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("matrix json: data length mismatch");
  Mat m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj, ++k)
      m(i, jj) = cxd(data[k][0].get<double>(), data[k][1].get<double>());
  return m;
}

}  // namespace diracbvp
