#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>

#include "relaxbc/error.hpp"
#include "relaxbc/types.hpp"

// Internal finite-volume helpers shared by the equilibrium and relaxation
// solvers: second-order MUSCL fluxes, minmod-limited in the characteristic
// variables of a constant symmetric flux matrix.

namespace relaxbc {
namespace detail {

struct CharBasis {
  Mat v;  // orthonormal eigenvectors
  Vec lam, lam_plus, lam_minus;
  double radius = 0.0;
};

inline CharBasis char_basis(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) fail(Err::NumericalFailure, "eigensolver failed");
  CharBasis cb;
  cb.v = es.eigenvectors();
  cb.lam = es.eigenvalues();
  cb.lam_plus = cb.lam.cwiseMax(0.0);
  cb.lam_minus = cb.lam.cwiseMin(0.0);
  cb.radius = cb.lam.size() ? cb.lam.cwiseAbs().maxCoeff() : 0.0;
  return cb;
}

inline double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

// Adds -A du/dx1 to `rate`.  Field layout: k x (nx1 + 1) * nx2 with column
// i2 * (nx1 + 1) + i1.  Zero-gradient ghosts at both ends (so the inflow node
// sees only its outgoing characteristics; the caller overwrites it with the
// boundary condition afterwards).
inline void add_rate_x1(const CharBasis& cb, const Mat& field, Index nx1, Index nx2,
                        double dx1, Mat& rate) {
  const Index k = field.rows();
  Mat c(k, nx1 + 1), sig(k, nx1 + 1), flux(k, nx1 + 2);
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index off = i2 * (nx1 + 1);
    c.noalias() = cb.v.transpose() * field.middleCols(off, nx1 + 1);
    for (Index j = 0; j < k; ++j) {
      sig(j, 0) = 0.0;
      sig(j, nx1) = 0.0;
      for (Index i = 1; i < nx1; ++i)
        sig(j, i) = minmod(c(j, i) - c(j, i - 1), c(j, i + 1) - c(j, i));
      // interface fluxes; ghosts replicate the end values with zero slope
      flux(j, 0) = cb.lam(j) * c(j, 0);
      flux(j, nx1 + 1) = cb.lam(j) * c(j, nx1);
      for (Index i = 0; i < nx1; ++i)
        flux(j, i + 1) = cb.lam_plus(j) * (c(j, i) + 0.5 * sig(j, i)) +
                         cb.lam_minus(j) * (c(j, i + 1) - 0.5 * sig(j, i + 1));
    }
    rate.middleCols(off, nx1 + 1).noalias() -=
        cb.v * ((flux.rightCols(nx1 + 1) - flux.leftCols(nx1 + 1)) / dx1);
  }
}

// Adds -A du/dx2 to `rate`, periodic in x2.
inline void add_rate_x2(const CharBasis& cb, const Mat& field, Index nx1, Index nx2,
                        double dx2, Mat& rate) {
  const Index k = field.rows();
  Mat c(k, nx2), sig(k, nx2), flux(k, nx2);  // flux(., i2) is the i2 - 1/2 face
  for (Index i1 = 0; i1 <= nx1; ++i1) {
    for (Index i2 = 0; i2 < nx2; ++i2) c.col(i2) = cb.v.transpose() * field.col(i2 * (nx1 + 1) + i1);
    for (Index j = 0; j < k; ++j) {
      for (Index i2 = 0; i2 < nx2; ++i2) {
        const Index im = (i2 + nx2 - 1) % nx2, ip = (i2 + 1) % nx2;
        sig(j, i2) = minmod(c(j, i2) - c(j, im), c(j, ip) - c(j, i2));
      }
      for (Index i2 = 0; i2 < nx2; ++i2) {
        const Index im = (i2 + nx2 - 1) % nx2;
        flux(j, i2) = cb.lam_plus(j) * (c(j, im) + 0.5 * sig(j, im)) +
                      cb.lam_minus(j) * (c(j, i2) - 0.5 * sig(j, i2));
      }
    }
    for (Index i2 = 0; i2 < nx2; ++i2)
      rate.col(i2 * (nx1 + 1) + i1).noalias() -=
          cb.v * ((flux.col((i2 + 1) % nx2) - flux.col(i2)) / dx2);
  }
}

// squared L2 norm: trapezoid weight in x1, plain sum in the periodic direction
inline double grid_l2sq(const Mat& field, double dx1, Index nx1, Index nx2, double dx2) {
  double acc = 0.0;
  for (Index i2 = 0; i2 < nx2; ++i2)
    for (Index i1 = 0; i1 <= nx1; ++i1) {
      const double w = (i1 == 0 || i1 == nx1) ? 0.5 : 1.0;
      acc += w * field.col(i2 * (nx1 + 1) + i1).squaredNorm();
    }
  return acc * dx1 * dx2;
}

// linear interpolation of a column-sampled uniform profile; zero beyond the end
inline Vec interp_profile(const Mat& f, const Vec& grid, Index offset, double at) {
  const Index count = grid.size();
  if (at >= grid(count - 1)) return Vec::Zero(f.rows());
  const double h = grid(1) - grid(0);
  const Index cell = std::min<Index>(static_cast<Index>(at / h), count - 2);
  const double frac = (at - grid(cell)) / h;
  return (1.0 - frac) * f.col(offset + cell) + frac * f.col(offset + cell + 1);
}

// one-sided second order at the ends, centered inside; layer-grid layout
// k x (nz + 1) * nx2 with column i2 * (nz + 1) + i
inline Mat profile_derivative(const Mat& f, Index nz, Index nx2, double dz) {
  Mat out(f.rows(), f.cols());
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index off = i2 * (nz + 1);
    const auto col = [&](Index i) { return f.col(off + i); };
    out.col(off) = (-3.0 * col(0) + 4.0 * col(1) - col(2)) / (2.0 * dz);
    for (Index i = 1; i < nz; ++i) out.col(off + i) = (col(i + 1) - col(i - 1)) / (2.0 * dz);
    out.col(off + nz) = (3.0 * col(nz) - 4.0 * col(nz - 1) + col(nz - 2)) / (2.0 * dz);
  }
  return out;
}

}  // namespace detail
}  // namespace relaxbc
