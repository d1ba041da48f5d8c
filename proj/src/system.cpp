#include "relaxbc/system.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

constexpr double kSymTol = 1e-10;   // symmetry defects, relative
constexpr double kRankTol = 1e-10;  // rank decisions, relative

struct Sqrts {
  Mat half, inv_half;  // a0^{1/2}, a0^{-1/2}
};

Sqrts spd_sqrt(const Mat& a0) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a0 + a0.transpose()));
  if (es.info() != Eigen::Success) fail(Err::NumericalFailure, "symmetrizer eigensolver failed");
  if (es.eigenvalues().minCoeff() <= 0)
    fail(Err::NotDefinite, "symmetrizer is not positive definite");
  Vec rt = es.eigenvalues().cwiseSqrt();
  return {es.eigenvectors() * rt.asDiagonal() * es.eigenvectors().transpose(),
          es.eigenvectors() * rt.cwiseInverse().asDiagonal() * es.eigenvectors().transpose()};
}

double sym_defect(const Mat& m) {
  return m.size() ? (m - m.transpose()).norm() / tolerance_scale(m) : 0.0;
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks)
    os << (c.passed ? "  pass  " : "  FAIL  ") << c.name << "  (" << c.message << ")\n";
  return os.str();
}

ValidationReport validate_structural_stability(const RelaxationSystem& sys) {
  const Index n = sys.n, r = sys.r, d = sys.d;
  if (d < 1 || n < 1 || r < 1 || r > n)
    fail(Err::DimensionMismatch, "need d >= 1 and 1 <= r <= n");
  if (static_cast<Index>(sys.a.size()) != d)
    fail(Err::DimensionMismatch, "expected one coefficient matrix per space dimension");
  for (const Mat& aj : sys.a)
    if (aj.rows() != n || aj.cols() != n)
      fail(Err::DimensionMismatch, "coefficient matrix is not n x n");
  if (sys.q.rows() != n || sys.q.cols() != n) fail(Err::DimensionMismatch, "Q is not n x n");
  if (sys.a0.rows() != n || sys.a0.cols() != n)
    fail(Err::DimensionMismatch, "symmetrizer is not n x n");
  if (sys.b.size() && sys.b.cols() != n) fail(Err::DimensionMismatch, "B must have n columns");

  ValidationReport rep;
  auto add = [&rep](const std::string& name, bool ok, double res, const std::string& msg) {
    rep.checks.push_back({name, ok, res, msg});
  };

  // Symmetrizer positive definite.
  Eigen::SelfAdjointEigenSolver<Mat> esa0(0.5 * (sys.a0 + sys.a0.transpose()));
  const double a0_sym = sym_defect(sys.a0);
  const bool a0_spd = a0_sym <= kSymTol && esa0.info() == Eigen::Success &&
                      esa0.eigenvalues().minCoeff() > 0;
  add("symmetrizer-spd", a0_spd, a0_spd ? esa0.eigenvalues().minCoeff() : a0_sym,
      "min eigenvalue of a0");

  // Condition (ii): every a0 A_j symmetric.
  double worst = 0.0;
  for (const Mat& aj : sys.a) worst = std::max(worst, sym_defect(sys.a0 * aj));
  add("symmetrizer-flux", worst <= kSymTol, worst, "max relative defect of a0*A_j");

  // Condition (i): Q similar to diag(0, S) with S invertible.
  const Index rank_q = rank_svd(sys.q, kRankTol);
  const Index rank_q2 = rank_svd(sys.q * sys.q, kRankTol);
  add("source-rank", rank_q == r && rank_q2 == r,
      static_cast<double>(rank_q),
      "rank Q = " + std::to_string(rank_q) + ", rank Q^2 = " + std::to_string(rank_q2) +
          ", declared r = " + std::to_string(r));

  // a0 Q = Q^T a0 (symmetrizability of the source).
  const Mat a0q = sys.a0 * sys.q;
  const double q_sym = sym_defect(a0q);
  add("source-symmetrizable", q_sym <= kSymTol, q_sym, "relative defect of a0*Q");

  // Condition (iii): dissipation.  a0 Q + Q^T a0 negative semidefinite and
  // negative definite on the orthogonal complement of ker Q.
  {
    const Mat g = a0q + a0q.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> esg(0.5 * (g + g.transpose()));
    const double gmax = esg.eigenvalues().maxCoeff();
    const bool semidef = gmax <= kSymTol * tolerance_scale(g);
    double transverse = 0.0;
    bool transverse_ok = false;
    Eigen::JacobiSVD<Mat> svd(sys.q, Eigen::ComputeFullV);
    const double thr = kRankTol * std::max(1.0, svd.singularValues()(0));
    Index rank = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > thr) ++rank;
    if (rank >= 1) {
      const Mat c = svd.matrixV().leftCols(rank);  // complement of ker Q
      Eigen::SelfAdjointEigenSolver<Mat> est(c.transpose() * g * c);
      transverse = est.eigenvalues().maxCoeff();
      transverse_ok = transverse < 0;
    }
    add("dissipation", semidef && transverse_ok, std::max(gmax, transverse),
        "max eigenvalue of a0*Q + Q^T*a0 overall and transverse to ker Q");
  }

  // A_1 invertible.
  {
    Eigen::JacobiSVD<Mat> svd(sys.a[0]);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    add("a1-invertible", smin > kRankTol * std::max(1.0, smax), smin, "min singular value of A_1");
  }

  // Boundary matrix: n_plus rows, full row rank.  n_plus comes from the
  // normalized coefficient, i.e. the inertia of a0^{1/2} A_1 a0^{-1/2},
  // which equals the inertia of the congruent symmetric matrix a0 A_1.
  if (a0_spd) {
    InertiaCount in = inertia(0.5 * (sys.a0 * sys.a[0] + (sys.a0 * sys.a[0]).transpose()));
    const Index n_plus = in.n_plus;
    bool ok = sys.b.rows() == n_plus;
    double smin = 0.0;
    if (ok && n_plus > 0) {
      Eigen::JacobiSVD<Mat> svd(sys.b);
      smin = svd.singularValues().minCoeff();
      ok = smin > kRankTol * std::max(1.0, svd.singularValues().maxCoeff());
    }
    add("boundary-rank", ok, smin,
        "B has " + std::to_string(sys.b.rows()) + " rows, n_plus = " + std::to_string(n_plus));
  } else {
    add("boundary-rank", false, 0.0, "skipped: symmetrizer not positive definite");
  }

  return rep;
}

Mat NormalizedSystem::q() const {
  Mat out = Mat::Zero(n, n);
  out.bottomRightCorner(r, r) = s;
  return out;
}

namespace {

bool already_normalized(const RelaxationSystem& sys, double* smax) {
  const Index n = sys.n, r = sys.r;
  if ((sys.a0 - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-14) return false;
  const double scale = tolerance_scale(sys.q);
  if (sys.q.topRows(n - r).cwiseAbs().maxCoeff() > 1e-13 * scale) return false;
  if (sys.q.bottomLeftCorner(r, n - r).cwiseAbs().maxCoeff() > 1e-13 * scale) return false;
  const Mat s = sys.q.bottomRightCorner(r, r);
  if (sym_defect(s) > 1e-13) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  *smax = es.eigenvalues().maxCoeff();
  return *smax < 0;
}

}  // namespace

NormalizedSystem normalize(const RelaxationSystem& sys, double zero_tol) {
  ValidationReport rep = validate_structural_stability(sys);
  if (!rep.all_passed())
    fail(Err::NotValidated, "structural stability checks failed:\n" + rep.summary());

  const Index n = sys.n, r = sys.r;
  NormalizedSystem out;
  out.d = sys.d;
  out.n = n;
  out.r = r;

  double smax = 0.0;
  if (already_normalized(sys, &smax)) {
    out.a = sys.a;
    for (Mat& aj : out.a) aj = 0.5 * (aj + aj.transpose()).eval();
    out.s = 0.5 * (sys.q.bottomRightCorner(r, r) + sys.q.bottomRightCorner(r, r).transpose());
    out.b = sys.b;
    out.to_norm = out.from_norm = Mat::Identity(n, n);
    return out;
  }

  const Sqrts rt = spd_sqrt(sys.a0);

  // Conjugated source a0^{1/2} Q a0^{-1/2} is symmetric under a0 Q = Q^T a0.
  Mat qh = rt.half * sys.q * rt.inv_half;
  qh = 0.5 * (qh + qh.transpose()).eval();
  SpectralSplit qs = symmetric_eigensplit(qh, zero_tol);
  if (qs.p_zero.cols() != n - r)
    fail(Err::NotValidated, "kernel of the conjugated source has dimension " +
                                std::to_string(qs.p_zero.cols()) + ", expected " +
                                std::to_string(n - r));
  Mat z(n, n);
  z << qs.p_zero, qs.p_plus, qs.p_minus;

  out.a.reserve(sys.a.size());
  for (const Mat& aj : sys.a) {
    Mat t = z.transpose() * rt.inv_half * (sys.a0 * aj) * rt.inv_half * z;
    out.a.push_back(0.5 * (t + t.transpose()));
  }
  Mat s = z.rightCols(r).transpose() * qh * z.rightCols(r);
  out.s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> ess(out.s);
  if (ess.eigenvalues().maxCoeff() >= 0)
    fail(Err::NotValidated, "normalized source block is not negative definite");
  out.b = sys.b * rt.inv_half * z;
  out.to_norm = z.transpose() * rt.half;
  out.from_norm = rt.inv_half * z;
  return out;
}

CharacteristicSignature classify(const NormalizedSystem& sys, double zero_tol) {
  const Index n = sys.n, r = sys.r;
  if (n == r) fail(Err::NotTypeII, "no equilibrium variables (r = n)");

  CharacteristicSignature sig;
  {
    SpectralSplit sa1 = symmetric_eigensplit(sys.a[0], zero_tol);
    if (sa1.p_zero.cols() != 0)
      fail(Err::SingularA1, "A_1 has a zero eigenvalue within tolerance");
    sig.n_plus = sa1.p_plus.cols();
  }
  if (sys.b.rows() != sig.n_plus)
    fail(Err::DimensionMismatch, "B has " + std::to_string(sys.b.rows()) + " rows, expected n_plus = " +
                                     std::to_string(sig.n_plus));

  sig.split = symmetric_eigensplit(sys.a11(0), zero_tol);
  sig.n1_plus = sig.split.p_plus.cols();
  sig.n1_zero = sig.split.p_zero.cols();
  if (sig.n1_zero == 0)
    fail(Err::NotTypeII, "A_11 is nonsingular; the boundary is not characteristic of type II");
  if (sig.n1_zero > r)
    fail(Err::RankDeficientK,
         "zero-speed multiplicity " + std::to_string(sig.n1_zero) + " exceeds rank r = " +
             std::to_string(r) + " of the source");

  const Index n1_minus = sig.split.p_minus.cols();
  sig.p1.resize(n - r, sig.n1_plus + n1_minus);
  sig.p1 << sig.split.p_plus, sig.split.p_minus;
  sig.lambda1.resize(sig.n1_plus + n1_minus);
  sig.lambda1 << sig.split.lam_plus, sig.split.lam_minus;
  sig.p0 = sig.split.p_zero;
  return sig;
}

ValidationReport check_compatibility(const NormalizedSystem& sys, const Mat& u0_at_inflow,
                                     const Mat& b_at_t0, double tol) {
  if (u0_at_inflow.rows() != sys.n - sys.r || b_at_t0.rows() != sys.b.rows() ||
      u0_at_inflow.cols() != b_at_t0.cols())
    fail(Err::DimensionMismatch, "compatibility data has wrong shape");
  const Mat mismatch = sys.b_u() * u0_at_inflow - b_at_t0;
  const double worst = mismatch.size() ? mismatch.cwiseAbs().maxCoeff() : 0.0;
  const double scale = std::max(1.0, b_at_t0.size() ? b_at_t0.cwiseAbs().maxCoeff() : 0.0);
  ValidationReport rep;
  rep.checks.push_back({"compatibility", worst <= tol * scale, worst,
                        "max | B (u0,0) - b(0) | over sampled boundary grid"});
  return rep;
}

}  // namespace relaxbc
