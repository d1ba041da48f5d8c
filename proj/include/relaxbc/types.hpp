#pragma once

#include <Eigen/Dense>
#include <complex>

namespace relaxbc {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Scale used by relative tolerances: max(1, ||a||_F).
inline double tolerance_scale(const Mat& a) {
  return std::max(1.0, a.size() ? a.norm() : 0.0);
}
inline double tolerance_scale(const CMat& a) {
  return std::max(1.0, a.size() ? a.norm() : 0.0);
}

}  // namespace relaxbc
