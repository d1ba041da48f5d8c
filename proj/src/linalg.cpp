#include "relaxbc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

// Swaps the adjacent diagonal entries t(k,k) and t(k+1,k+1) of an upper
// triangular matrix by a unitary similarity, accumulating it into q.
void swap_triangular_pair(CMat& t, CMat& q, Index k) {
  const Complex a = t(k, k);
  const Complex c = t(k + 1, k + 1);
  const Complex b = t(k, k + 1);
  // First column of the rotation is the normalized eigenvector (b, c - a)
  // of the 2x2 block for the eigenvalue c.
  const double nrm = std::sqrt(std::norm(b) + std::norm(c - a));
  if (nrm == 0.0) return;  // equal eigenvalues, nothing to move
  const Complex g11 = b / nrm;
  const Complex g21 = (c - a) / nrm;
  CMat g(2, 2);
  g << g11, -std::conj(g21), g21, std::conj(g11);
  t.middleRows(k, 2) = g.adjoint() * t.middleRows(k, 2);
  t.middleCols(k, 2) = t.middleCols(k, 2) * g;
  q.middleCols(k, 2) = q.middleCols(k, 2) * g;
  t(k + 1, k) = Complex(0, 0);
}

bool is_stable(const Complex& lambda) { return lambda.real() < 0.0; }

}  // namespace

SpectralSplit symmetric_eigensplit(const Mat& a, double zero_tol, double sym_tol) {
  if (a.rows() != a.cols()) fail(Err::DimensionMismatch, "eigensplit of a non-square matrix");
  SpectralSplit out;
  if (a.rows() == 0) {
    out.p_plus = out.p_zero = out.p_minus = Mat(0, 0);
    out.lam_plus = out.lam_minus = Vec(0);
    return out;
  }
  const double asym = (a - a.transpose()).norm();
  if (asym > sym_tol * tolerance_scale(a))
    fail(Err::NotSymmetric, "matrix is not symmetric (defect " + std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) fail(Err::NumericalFailure, "symmetric eigensolver failed");
  const Vec& lam = es.eigenvalues();
  const double thr = zero_tol * std::max(1.0, lam.cwiseAbs().maxCoeff());
  out.zero_threshold = thr;

  std::vector<Index> plus, zero, minus;
  for (Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i)) <= thr)
      zero.push_back(i);
    else if (lam(i) > 0)
      plus.push_back(i);
    else
      minus.push_back(i);
  }
  auto gather = [&](const std::vector<Index>& idx, Mat& p, Vec* l) {
    p.resize(a.rows(), static_cast<Index>(idx.size()));
    if (l) l->resize(static_cast<Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) {
      p.col(static_cast<Index>(j)) = es.eigenvectors().col(idx[j]);
      if (l) (*l)(static_cast<Index>(j)) = lam(idx[j]);
    }
  };
  gather(plus, out.p_plus, &out.lam_plus);
  gather(zero, out.p_zero, nullptr);
  gather(minus, out.p_minus, &out.lam_minus);
  return out;
}

InertiaCount inertia(const Mat& a, double zero_tol) {
  SpectralSplit s = symmetric_eigensplit(a, zero_tol);
  return {s.p_plus.cols(), s.p_zero.cols(), s.p_minus.cols()};
}

OrderedSchur stable_ordered_schur(const CMat& m, double split_tol) {
  if (m.rows() != m.cols()) fail(Err::DimensionMismatch, "Schur form of a non-square matrix");
  const Index n = m.rows();
  OrderedSchur out;
  if (n == 0) {
    out.q = out.t = CMat(0, 0);
    out.n_stable = 0;
    return out;
  }
  Eigen::ComplexSchur<CMat> schur(m, /*computeU=*/true);
  if (schur.info() != Eigen::Success) fail(Err::NumericalFailure, "complex Schur iteration failed");
  out.q = schur.matrixU();
  out.t = schur.matrixT();

  const double gap = split_tol * tolerance_scale(m);
  for (Index i = 0; i < n; ++i)
    if (std::abs(out.t(i, i).real()) <= gap)
      fail(Err::SplitAmbiguous,
           "eigenvalue with |Re| = " + std::to_string(std::abs(out.t(i, i).real())) +
               " inside the splitting margin");

  // Bubble the stable eigenvalues to the leading positions.
  bool moved = true;
  while (moved) {
    moved = false;
    for (Index k = 0; k + 1 < n; ++k) {
      if (!is_stable(out.t(k, k)) && is_stable(out.t(k + 1, k + 1))) {
        swap_triangular_pair(out.t, out.q, k);
        moved = true;
      }
    }
  }
  out.n_stable = 0;
  while (out.n_stable < n && is_stable(out.t(out.n_stable, out.n_stable))) ++out.n_stable;
  return out;
}

StableSubspace stable_invariant_subspace(const CMat& m, double split_tol) {
  OrderedSchur os = stable_ordered_schur(m, split_tol);
  StableSubspace out;
  out.basis = os.q.leftCols(os.n_stable);
  out.restricted_map = os.t.topLeftCorner(os.n_stable, os.n_stable);
  out.residual = os.n_stable ? (m * out.basis - out.basis * out.restricted_map).norm() : 0.0;
  return out;
}

namespace {

// Real ordered Schur for matrices with a real spectrum.  The real Schur form
// must come out with 1x1 diagonal blocks only.
struct RealOrderedSchur {
  Mat q, t;
  Index n_stable;
};

RealOrderedSchur real_stable_ordered_schur(const Mat& m, double split_tol) {
  if (m.rows() != m.cols()) fail(Err::DimensionMismatch, "Schur form of a non-square matrix");
  const Index n = m.rows();
  RealOrderedSchur out;
  if (n == 0) {
    out.q = out.t = Mat(0, 0);
    out.n_stable = 0;
    return out;
  }
  Eigen::RealSchur<Mat> schur(m, /*computeU=*/true);
  if (schur.info() != Eigen::Success) fail(Err::NumericalFailure, "real Schur iteration failed");
  out.q = schur.matrixU();
  out.t = schur.matrixT();

  const double gap = split_tol * tolerance_scale(m);
  for (Index i = 0; i + 1 < n; ++i)
    if (std::abs(out.t(i + 1, i)) > gap)
      fail(Err::SplitAmbiguous, "complex eigenvalue pair in a matrix expected to have real spectrum");
  for (Index i = 0; i < n; ++i)
    if (std::abs(out.t(i, i)) <= gap)
      fail(Err::SplitAmbiguous, "eigenvalue inside the splitting margin");

  bool moved = true;
  while (moved) {
    moved = false;
    for (Index k = 0; k + 1 < n; ++k) {
      if (out.t(k, k) >= 0.0 && out.t(k + 1, k + 1) < 0.0) {
        const double a = out.t(k, k);
        const double c = out.t(k + 1, k + 1);
        const double b = out.t(k, k + 1);
        const double nrm = std::hypot(b, c - a);
        if (nrm == 0.0) continue;
        Mat g(2, 2);
        g << b / nrm, -(c - a) / nrm, (c - a) / nrm, b / nrm;
        out.t.middleRows(k, 2) = g.transpose() * out.t.middleRows(k, 2);
        out.t.middleCols(k, 2) = out.t.middleCols(k, 2) * g;
        out.q.middleCols(k, 2) = out.q.middleCols(k, 2) * g;
        out.t(k + 1, k) = 0.0;
        moved = true;
      }
    }
  }
  out.n_stable = 0;
  while (out.n_stable < n && out.t(out.n_stable, out.n_stable) < 0.0) ++out.n_stable;
  return out;
}

}  // namespace

StableSubspace stable_invariant_subspace(const Mat& m, double split_tol) {
  RealOrderedSchur os = real_stable_ordered_schur(m, split_tol);
  StableSubspace out;
  Mat basis = os.q.leftCols(os.n_stable);
  Mat restricted = os.t.topLeftCorner(os.n_stable, os.n_stable);
  out.residual = os.n_stable ? (m * basis - basis * restricted).norm() : 0.0;
  out.basis = basis.cast<Complex>();
  out.restricted_map = restricted.cast<Complex>();
  return out;
}

Mat real_stable_basis(const Mat& m, double split_tol) {
  RealOrderedSchur os = real_stable_ordered_schur(m, split_tol);
  return os.q.leftCols(os.n_stable);
}

Mat real_unstable_basis(const Mat& m, double split_tol) {
  if (m.size() == 0) return Mat(m.rows(), 0);
  RealOrderedSchur os = real_stable_ordered_schur(Mat(-m), split_tol);
  return os.q.leftCols(os.n_stable);
}

CMat stable_sqrt(const CMat& x, double tol) {
  if (x.rows() != x.cols()) fail(Err::DimensionMismatch, "square root of a non-square matrix");
  const Index n = x.rows();
  if (n == 0) return CMat(0, 0);
  Eigen::ComplexSchur<CMat> schur(x, /*computeU=*/true);
  if (schur.info() != Eigen::Success) fail(Err::NumericalFailure, "complex Schur iteration failed");
  const CMat& q = schur.matrixU();
  CMat t = schur.matrixT();

  const double thr = tol * tolerance_scale(x);
  for (Index i = 0; i < n; ++i) {
    const Complex lam = t(i, i);
    if (std::abs(lam.imag()) <= thr && lam.real() <= thr)
      fail(Err::NegativeRealEigenvalue,
           "eigenvalue on the closed negative real axis; stable square root undefined");
  }

  // Upper triangular principal square root by the standard recurrence.
  CMat r = CMat::Zero(n, n);
  for (Index i = 0; i < n; ++i) r(i, i) = std::sqrt(t(i, i));
  for (Index j = 1; j < n; ++j) {
    for (Index i = j - 1; i >= 0; --i) {
      Complex s = t(i, j);
      for (Index k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
      r(i, j) = s / (r(i, i) + r(j, j));
    }
  }
  return -(q * r * q.adjoint());
}

namespace {

template <typename MatrixT>
void require_stable_spectrum(const MatrixT& m) {
  Eigen::ComplexSchur<CMat> schur(m.template cast<Complex>(), /*computeU=*/false);
  if (schur.info() != Eigen::Success) fail(Err::NumericalFailure, "complex Schur iteration failed");
  for (Index i = 0; i < m.rows(); ++i)
    if (schur.matrixT()(i, i).real() >= 0.0)
      fail(Err::NotStable, "propagation map has an eigenvalue with Re >= 0");
}

}  // namespace

CVec propagate(const CMat& stable_map, double y, const CVec& v) {
  if (stable_map.rows() != stable_map.cols() || stable_map.cols() != v.size())
    fail(Err::DimensionMismatch, "propagate: incompatible shapes");
  if (y < 0) fail(Err::NumericalFailure, "propagate: negative layer coordinate");
  if (v.size() == 0) return v;
  require_stable_spectrum(stable_map);
  return CMat(y * stable_map).exp() * v;
}

Vec propagate(const Mat& stable_map, double y, const Vec& v) {
  if (stable_map.rows() != stable_map.cols() || stable_map.cols() != v.size())
    fail(Err::DimensionMismatch, "propagate: incompatible shapes");
  if (y < 0) fail(Err::NumericalFailure, "propagate: negative layer coordinate");
  if (v.size() == 0) return v;
  require_stable_spectrum(stable_map);
  return Mat(y * stable_map).exp() * v;
}

Mat orthonormal_complement(const Mat& k) {
  const Index rows = k.rows();
  if (k.cols() == 0) return Mat::Identity(rows, rows);
  Eigen::HouseholderQR<Mat> qr(k);
  Mat q = qr.householderQ();
  return q.rightCols(rows - k.cols());
}

Mat left_nullspace_rows(const Mat& y, Index expected_rows, double rank_tol) {
  const Index p = y.rows();
  Index rank = 0;
  Mat u;
  if (y.cols() == 0 || p == 0) {
    u = Mat::Identity(p, p);
  } else {
    Eigen::JacobiSVD<Mat> svd(y, Eigen::ComputeFullU);
    const double thr = rank_tol * std::max(1.0, svd.singularValues()(0));
    for (Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > thr) ++rank;
    u = svd.matrixU();
  }
  const Index dim = p - rank;
  if (expected_rows >= 0 && dim != expected_rows)
    fail(Err::DegenerateNullSpace, "left null space has dimension " + std::to_string(dim) +
                                       ", expected " + std::to_string(expected_rows));
  return u.rightCols(dim).transpose();
}

double subspace_angle(const CMat& a, const CMat& b) {
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  Eigen::HouseholderQR<CMat> qa(a), qb(b);
  CMat ua = CMat(qa.householderQ()).leftCols(a.cols());
  CMat ub = CMat(qb.householderQ()).leftCols(b.cols());
  // sine formulation: accurate for nearly identical spans, where the cosine
  // version loses half the digits
  CMat resid = ub - ua * (ua.adjoint() * ub);
  Eigen::JacobiSVD<CMat> svd(resid);
  return std::asin(std::min(1.0, svd.singularValues().maxCoeff()));
}

Index rank_svd(const Mat& a, double rank_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const double thr = rank_tol * std::max(1.0, svd.singularValues()(0));
  Index rank = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thr) ++rank;
  return rank;
}

}  // namespace relaxbc
