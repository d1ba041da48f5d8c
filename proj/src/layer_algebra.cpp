#include "relaxbc/layer_algebra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

constexpr double kCongruenceTol = 1e-10;

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

void require_congruence(const Mat& got, const Mat& want, const Mat& scale_ref,
                        const char* label) {
  const double err = (got - want).norm();
  if (err > kCongruenceTol * tolerance_scale(scale_ref))
    fail(Err::NumericalFailure,
         std::string(label) + " congruence defect " + std::to_string(err));
}

}  // namespace

LayerAlgebra build_layer_algebra(const NormalizedSystem& sys, const CharacteristicSignature& sig) {
  const Index n = sys.n, r = sys.r;
  const Index n1o = sig.n1_zero;
  const Index nfree = n - r - n1o;  // nonzero modes of A_11

  const Mat a11 = sys.a11(0), a12 = sys.a12(0), a22 = sys.a22(0);
  const Mat& p1 = sig.p1;
  const Mat& p0 = sig.p0;
  const Vec lam_inv = sig.lambda1.cwiseInverse();

  LayerAlgebra la;
  la.coupling = a12.transpose() * p0;  // r x n1o
  {
    Eigen::JacobiSVD<Mat> svd(la.coupling);
    const Index cols = la.coupling.cols();
    const double smax = cols ? svd.singularValues().maxCoeff() : 0.0;
    const double smin = cols ? svd.singularValues().minCoeff() : 0.0;
    if (cols > 0 && smin <= 1e-10 * std::max(1.0, smax))
      fail(Err::RankDeficientK, "zero-mode coupling block is rank deficient");
  }
  la.coupling_comp = orthonormal_complement(la.coupling);

  const Mat p1_lift = p1 * lam_inv.asDiagonal() * p1.transpose();  // P1 Lambda1^{-1} P1^T
  la.schur = sym(a22 - a12.transpose() * p1_lift * a12);

  const Mat& k = la.coupling;
  const Mat& kt = la.coupling_comp;
  const Mat ktk = k.transpose() * k;
  const Mat ksk = k.transpose() * sys.s * k;
  const Mat kskt = k.transpose() * sys.s * kt;
  const Mat ktskt = kt.transpose() * sys.s * kt;
  const Mat ktak = kt.transpose() * la.schur * k;
  const Mat ktakt = kt.transpose() * la.schur * kt;
  const Mat kakt = k.transpose() * la.schur * kt;

  Eigen::PartialPivLU<Mat> ktk_lu(ktk);
  Eigen::PartialPivLU<Mat> ktskt_lu(ktskt);

  la.parabolic = sym(k.transpose() * sys.s.partialPivLu().solve(k));
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(la.parabolic);
    if (n1o > 0 && es.eigenvalues().maxCoeff() >= 0)
      fail(Err::NotDefinite, "parabolic coefficient is not negative definite");
  }

  // sqrt_pair = (K^T K)^{-1} [K^T S K - (K^T S Kt)(Kt^T S Kt)^{-1}(Kt^T S K)]
  Mat s_capped = ksk;
  if (kt.cols() > 0) s_capped -= kskt * ktskt_lu.solve(kskt.transpose());
  la.sqrt_pair = ktk_lu.solve(s_capped);
  la.layer_gram = sym(-la.sqrt_pair * ktk.inverse());
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(la.layer_gram);
    if (n1o > 0 && es.eigenvalues().minCoeff() <= 0)
      fail(Err::NotDefinite, "sqrt-scale weight is not positive definite");
  }

  // eps_generator = (Kt^T A Kt)^{-1} (Kt^T S Kt).  Its negative eigenvalue
  // count equals the positive inertia of Kt^T A Kt and must match the
  // signature bookkeeping n+ - n1o - n1+.
  {
    const Index want_minus = sig.n_plus - sig.n1_zero - sig.n1_plus;
    const InertiaCount in = kt.cols() ? inertia(sym(ktakt)) : InertiaCount{};
    if (kt.cols() > 0 && in.n_zero != 0)
      fail(Err::InertiaMismatch, "eps-layer block Kt^T A Kt is numerically singular");
    if (in.n_plus != want_minus)
      fail(Err::InertiaMismatch,
           "eps-layer generator has " + std::to_string(in.n_plus) +
               " negative eigenvalues, expected " + std::to_string(want_minus));
    la.eps_generator =
        kt.cols() > 0 ? Mat(ktakt.partialPivLu().solve(ktskt)) : Mat(0, 0);
  }

  // eps_lift = -P1 L^{-1} P1^T A12 Kt + P0 (K^T K)^{-1} [(K^T S Kt)(Kt^T S Kt)^{-1}(Kt^T A Kt) - (K^T A Kt)]
  {
    Mat second = Mat::Zero(n1o, kt.cols());
    if (kt.cols() > 0) second = ktk_lu.solve(kskt * ktskt_lu.solve(ktakt) - kakt);
    la.eps_lift = -p1_lift * a12 * kt + p0 * second;
  }

  // Congruence matrices and their verification against A_1.
  const Mat a1 = sys.a[0];
  {
    la.congruence_t = Mat::Zero(n, n);
    la.congruence_t.topLeftCorner(n - r, nfree) = p1;
    la.congruence_t.block(0, nfree, n - r, n1o) = p0;
    la.congruence_t.topRightCorner(n - r, r) = -p1_lift * a12;
    la.congruence_t.bottomRightCorner(r, r) = Mat::Identity(r, r);

    Mat want = Mat::Zero(n, n);
    want.topLeftCorner(nfree, nfree) = Mat(sig.lambda1.asDiagonal());
    want.block(nfree, nfree + n1o, n1o, r) = k.transpose();
    want.block(nfree + n1o, nfree, r, n1o) = k;
    want.bottomRightCorner(r, r) = la.schur;
    require_congruence(la.congruence_t.transpose() * a1 * la.congruence_t, want, a1,
                       "three-block");
  }
  {
    la.congruence_l = Mat::Zero(n, n);
    la.congruence_l.topLeftCorner(n - r, nfree) = p1;
    la.congruence_l.block(0, nfree, n - r, n1o) = p0;
    la.congruence_l.block(0, nfree + n1o, n - r, n1o) = -p1_lift * a12 * k;
    la.congruence_l.topRightCorner(n - r, kt.cols()) =
        -p1_lift * a12 * kt - p0 * ktk_lu.solve(kakt);
    la.congruence_l.block(n - r, nfree + n1o, r, n1o) = k;
    la.congruence_l.bottomRightCorner(r, kt.cols()) = kt;

    Mat want = Mat::Zero(n, n);
    want.topLeftCorner(nfree, nfree) = Mat(sig.lambda1.asDiagonal());
    want.block(nfree, nfree + n1o, n1o, n1o) = ktk;
    want.block(nfree + n1o, nfree, n1o, n1o) = ktk;
    want.block(nfree + n1o, nfree + n1o, n1o, n1o) = k.transpose() * la.schur * k;
    want.bottomRightCorner(kt.cols(), kt.cols()) = ktakt;
    require_congruence(la.congruence_l.transpose() * a1 * la.congruence_l, want, a1,
                       "four-block");
  }

  {
    Mat pair(r, r);
    pair.leftCols(n1o) = k;
    pair.rightCols(kt.cols()) = kt;
    Eigen::JacobiSVD<Mat> svd(pair);
    la.cond_coupling_pair =
        svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();
  }
  return la;
}

InertiaCount bordered_inertia_check(const LayerAlgebra& la) {
  const Index n1o = la.n1_zero();
  const Mat ktk = la.coupling.transpose() * la.coupling;
  Mat bordered = Mat::Zero(2 * n1o, 2 * n1o);
  bordered.topRightCorner(n1o, n1o) = ktk;
  bordered.bottomLeftCorner(n1o, n1o) = ktk;
  bordered.bottomRightCorner(n1o, n1o) =
      la.coupling.transpose() * la.schur * la.coupling;
  const InertiaCount in = inertia(sym(bordered));
  if (in.n_plus != n1o || in.n_minus != n1o || in.n_zero != 0)
    fail(Err::InertiaMismatch, "bordered block inertia is (" + std::to_string(in.n_plus) + ", " +
                                   std::to_string(in.n_zero) + ", " + std::to_string(in.n_minus) +
                                   "), expected (" + std::to_string(n1o) + ", 0, " +
                                   std::to_string(n1o) + ")");
  return in;
}

LimitBlocks limit_blocks(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                         const LayerAlgebra& la, Complex xi, const Vec& omega) {
  if (xi.real() <= 0) fail(Err::NumericalFailure, "limit blocks need Re xi > 0");
  if (omega.size() != sys.d - 1)
    fail(Err::DimensionMismatch, "omega must have d - 1 components");

  const Index nfree = sig.p1.cols();
  const Index n1o = sig.n1_zero;
  CMat c = CMat::Zero(sys.n - sys.r, sys.n - sys.r);
  for (Index j = 1; j < sys.d; ++j)
    c += Complex(0, omega(j - 1)) * sys.a11(j).cast<Complex>();

  const CMat p1c = sig.p1.cast<Complex>();
  const CMat p0c = sig.p0.cast<Complex>();
  const CMat c11 = p1c.adjoint() * c * p1c;
  const CMat c00 = p0c.adjoint() * c * p0c;
  const CMat c10 = p1c.adjoint() * c * p0c;
  const CMat c01 = p0c.adjoint() * c * p1c;

  const CMat zm = xi * CMat::Identity(n1o, n1o) + c00;
  Eigen::PartialPivLU<CMat> zm_lu(zm);
  // xi I + C_00 is invertible for Re xi > 0 (C_00 is skew hermitian); a
  // singular solve here indicates corrupted inputs.
  if (n1o > 0 && !(zm_lu.rcond() > 0))
    fail(Err::SingularFrequencyBlock, "zero-mode block xi I + C_00 is singular");

  LimitBlocks out;
  const CVec lam_inv_c = sig.lambda1.cwiseInverse().cast<Complex>();
  CMat inner = xi * CMat::Identity(nfree, nfree) + c11;
  if (n1o > 0) inner -= c10 * zm_lu.solve(c01);
  out.first = -(lam_inv_c.asDiagonal() * inner);
  const Mat ktk = la.coupling.transpose() * la.coupling;
  out.second = -ktk.cast<Complex>().partialPivLu().solve(zm);
  out.zero_mode_resolvent = zm_lu.solve(CMat::Identity(n1o, n1o));
  out.c01 = c01;
  return out;
}

CMat stable_limit_basis_12(const LayerAlgebra& la, const LimitBlocks& blocks) {
  const Index n1o = la.n1_zero();
  const CMat product = la.sqrt_pair.cast<Complex>() * blocks.second;

  // Cross-check against layer_gram [xi I + C_00]: same product through an
  // independently assembled route.
  if (n1o > 0) {
    const Mat ktk = la.coupling.transpose() * la.coupling;
    const CMat zm = -ktk.cast<Complex>() * blocks.second;  // = xi I + C_00
    const CMat alt = la.layer_gram.cast<Complex>() * zm;
    if ((product - alt).norm() > 1e-10 * tolerance_scale(product))
      fail(Err::NumericalFailure, "sqrt-pair product disagrees with the layer-gram route");
  }

  const CMat root = stable_sqrt(product);
  CMat basis(2 * n1o, n1o);
  basis.topRows(n1o) = CMat::Identity(n1o, n1o);
  basis.bottomRows(n1o) = la.sqrt_pair.cast<Complex>().partialPivLu().solve(root);
  return basis;
}

}  // namespace relaxbc
