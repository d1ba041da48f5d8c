#include "relaxbc/reduced_bc.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

Mat require_invertible(const Mat& m, const char* label) {
  if (m.rows() != m.cols()) fail(Err::DimensionMismatch, label);
  if (m.rows() == 0) return m;
  Eigen::JacobiSVD<Mat> svd(m);
  if (svd.singularValues().minCoeff() <=
      1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
    fail(Err::GkcViolatedAtReference,
         std::string(label) + " is numerically singular");
  return m;
}

}  // namespace

CMat limit_stable_basis(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                        const LayerAlgebra& la, Complex xi, const Vec& omega) {
  const Index n = sys.n, r = sys.r;
  const Index n1p = sig.n1_plus, n1o = sig.n1_zero;
  const Index nw = sig.n_plus - n1o - n1p;

  const LimitBlocks blocks = limit_blocks(sys, sig, la, xi, omega);
  const StableSubspace outer = stable_invariant_subspace(blocks.first);
  if (outer.basis.cols() != n1p)
    fail(Err::StableCountMismatch,
         "outer symbol has " + std::to_string(outer.basis.cols()) +
             " stable modes, expected " + std::to_string(n1p));
  const Mat r2 = real_stable_basis(la.eps_generator);
  if (r2.cols() != nw)
    fail(Err::StableCountMismatch,
         "eps-layer generator has " + std::to_string(r2.cols()) +
             " decaying modes, expected " + std::to_string(nw));

  const CMat p1c = sig.p1.cast<Complex>();
  const CMat p0c = sig.p0.cast<Complex>();
  CMat basis = CMat::Zero(n, sig.n_plus);
  basis.block(0, 0, n - r, n1p) =
      (p1c - p0c * blocks.zero_mode_resolvent * blocks.c01) * outer.basis;
  basis.block(0, n1p, n - r, n1o) = p0c;
  basis.block(0, n1p + n1o, n - r, nw) = (la.eps_lift * r2).cast<Complex>();
  basis.block(n - r, n1p + n1o, r, nw) = (la.coupling_comp * r2).cast<Complex>();
  return basis;
}

ReducedBoundary build_reduced_boundary(const NormalizedSystem& sys,
                                       const CharacteristicSignature& sig,
                                       const LayerAlgebra& la,
                                       double det_threshold, double sigma_tol) {
  const Index n1p = sig.n1_plus, n1o = sig.n1_zero;
  const Index nw = sig.n_plus - n1o - n1p;
  const Vec omega0 = Vec::Zero(sys.d - 1);

  // Stiff-limit determinant ratio at the reference frequency.
  {
    const CMat basis = limit_stable_basis(sys, sig, la, Complex(1, 0), omega0);
    Eigen::HouseholderQR<CMat> qr(basis);
    const CMat q = CMat(qr.householderQ()).leftCols(sig.n_plus);
    Eigen::HouseholderQR<Mat> bqr(sys.b.transpose());
    const Mat brows = Mat(bqr.householderQ() * Mat::Identity(sys.n, sys.b.rows())).transpose();
    const double ratio = std::abs((brows.cast<Complex>() * q).determinant());
    if (!(ratio > det_threshold))
      fail(Err::GkcViolatedAtReference,
           "stiff-limit determinant ratio " + std::to_string(ratio) +
               " at the reference frequency");
  }

  ReducedBoundary red;
  red.r11_stable = real_stable_basis(Mat((-sig.lambda1.cwiseInverse()).asDiagonal()));
  if (red.r11_stable.cols() != n1p)
    fail(Err::StableCountMismatch, "outer symbol stable count at the reference frequency");
  red.r2_stable = real_stable_basis(la.eps_generator);
  if (red.r2_stable.cols() != nw)
    fail(Err::StableCountMismatch, "eps-layer decaying mode count");
  red.r2_left_unstable = real_unstable_basis(la.eps_generator.transpose()).transpose();

  const Mat bu = sys.b_u(), bv = sys.b_v();
  const Mat layer_cols = bu * la.eps_lift + bv * la.coupling_comp;  // all eps-layer modes
  red.y_outer = bu * sig.p1 * red.r11_stable;
  red.y_zero = bu * sig.p0;
  red.y_layer = layer_cols * red.r2_stable;

  const auto hcat = [](const Mat& a, const Mat& b) {
    Mat out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a;
    out.rightCols(b.cols()) = b;
    return out;
  };
  red.rows_outer = left_nullspace_rows(hcat(red.y_zero, red.y_layer), n1p);
  red.rows_zero = left_nullspace_rows(hcat(red.y_outer, red.y_layer), n1o);
  red.rows_layer = left_nullspace_rows(hcat(red.y_outer, red.y_zero), nw);

  red.ukc_ratio = std::abs((red.rows_outer * red.y_outer).determinant());
  if (!(red.ukc_ratio > det_threshold))
    fail(Err::GkcViolatedAtReference,
         "reduced boundary determinant " + std::to_string(red.ukc_ratio));

  red.solve_zero =
      require_invertible(red.rows_zero * red.y_zero, "zero-mode trace system")
          .partialPivLu()
          .solve(red.rows_zero);
  red.solve_layer =
      require_invertible(red.rows_layer * red.y_layer, "eps-layer trace system")
          .partialPivLu()
          .solve(red.rows_layer);

  // Full trace/decay solvability certificate: unknowns are the incoming outer
  // amplitudes, the zero-mode amplitudes and all eps-layer amplitudes, with
  // the growing layer modes pinned to zero by the left-unstable rows.
  {
    const Index nl = la.layer_dim();
    const Index rows = sig.n_plus + (nl - nw);
    const Index cols = n1p + n1o + nl;
    Mat coupling = Mat::Zero(rows, cols);
    coupling.block(0, 0, sig.n_plus, n1p) = red.y_outer;
    coupling.block(0, n1p, sig.n_plus, n1o) = red.y_zero;
    coupling.block(0, n1p + n1o, sig.n_plus, nl) = layer_cols;
    coupling.block(sig.n_plus, n1p + n1o, nl - nw, nl) = red.r2_left_unstable;
    if (rows != cols)
      fail(Err::DimensionMismatch, "trace/decay coupling matrix is not square");
    red.coupling_matrix = coupling;
    if (rows > 0) {
      Eigen::JacobiSVD<Mat> svd(coupling);
      red.coupling_sigma_min = svd.singularValues().minCoeff();
    } else {
      red.coupling_sigma_min = std::numeric_limits<double>::infinity();
    }
    if (!(red.coupling_sigma_min > sigma_tol))
      fail(Err::CouplingSingular,
           "coupling matrix sigma_min " + std::to_string(red.coupling_sigma_min));
  }
  return red;
}

UkcSweep sweep_ukc(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                   const ReducedBoundary& red, const KreissGrid& grid) {
  const Index np1 = sig.p1.cols();
  const Index n1o = sig.n1_zero;
  const Index dtan = sys.d - 1;
  const Mat lhs = red.rows_outer * sys.b_u() * sig.p1;
  const CMat lam_inv =
      Mat(sig.lambda1.cwiseInverse().asDiagonal()).cast<Complex>();

  std::vector<Vec> omegas;
  if (dtan == 0) {
    omegas.emplace_back(Vec(0));
  } else {
    std::vector<Index> pos(dtan, 0);
    const Index count = static_cast<Index>(grid.omega_axis.size());
    while (true) {
      Vec w(dtan);
      for (Index k = 0; k < dtan; ++k) w(k) = grid.omega_axis[pos[k]];
      omegas.push_back(w);
      Index k = 0;
      while (k < dtan && ++pos[k] == count) pos[k++] = 0;
      if (k == dtan) break;
    }
  }

  UkcSweep out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (double re : grid.re_xi) {
    for (double im : grid.im_xi) {
      const Complex xi(re, im);
      for (const Vec& w : omegas) {
        CMat c = CMat::Zero(sys.n - sys.r, sys.n - sys.r);
        for (Index j = 0; j < dtan; ++j)
          c += Complex(0.0, w(j)) * sys.a11(j + 1).cast<Complex>();
        const CMat p1c = sig.p1.cast<Complex>();
        const CMat p0c = sig.p0.cast<Complex>();
        const CMat c11 = p1c.adjoint() * c * p1c;
        const CMat c10 = p1c.adjoint() * c * p0c;
        const CMat c01 = p0c.adjoint() * c * p1c;
        const CMat c00 = p0c.adjoint() * c * p0c;
        CMat inner = xi * CMat::Identity(np1, np1) + c11;
        if (n1o > 0) {
          const CMat m00 = xi * CMat::Identity(n1o, n1o) + c00;
          inner -= c10 * m00.partialPivLu().solve(c01);
        }
        const CMat m1 = -lam_inv * inner;

        StableSubspace sub;
        try {
          sub = stable_invariant_subspace(m1);
        } catch (const Error& err) {
          if (err.kind() == Err::SplitAmbiguous) {
            ++out.skipped;
            continue;
          }
          throw;
        }
        if (sub.basis.cols() != sig.n1_plus)
          fail(Err::StableCountMismatch,
               "outer symbol has " + std::to_string(sub.basis.cols()) +
                   " stable modes at a sweep point, expected " +
                   std::to_string(sig.n1_plus));
        const double ratio = std::abs((lhs.cast<Complex>() * sub.basis).determinant());
        ++out.evaluated;
        if (ratio < out.min_ratio) {
          out.min_ratio = ratio;
          out.argmin = FrequencyPoint{xi, w, 0.0};
        }
      }
    }
  }
  if (out.evaluated == 0)
    fail(Err::NumericalFailure, "no evaluable points in the ukc sweep");
  return out;
}

}  // namespace relaxbc
