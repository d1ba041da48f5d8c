#include "relaxbc/kreiss.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> out(count);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, count == 1 ? llo : llo + (lhi - llo) * i / (count - 1));
  return out;
}

std::vector<double> log_symmetric(double lo, double hi, int per_side) {
  std::vector<double> mags = logspace(lo, hi, per_side);
  std::vector<double> out;
  out.reserve(2 * per_side + 1);
  for (auto it = mags.rbegin(); it != mags.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  for (double m : mags) out.push_back(m);
  return out;
}

}  // namespace

CMat symbol_matrix(const NormalizedSystem& sys, const FrequencyPoint& pt) {
  if (pt.omega.size() != sys.d - 1)
    fail(Err::DimensionMismatch, "omega must have d - 1 components");
  CMat rhs = -pt.xi * CMat::Identity(sys.n, sys.n);
  rhs += pt.eta * sys.q().cast<Complex>();
  for (Index j = 1; j < sys.d; ++j)
    rhs -= Complex(0, pt.omega(j - 1)) * sys.a[j].cast<Complex>();
  return sys.a[0].cast<Complex>().partialPivLu().solve(rhs);
}

CMat stable_symbol_basis(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                         const FrequencyPoint& pt, double split_tol) {
  const StableSubspace sub = stable_invariant_subspace(symbol_matrix(sys, pt), split_tol);
  if (sub.basis.cols() != sig.n_plus)
    fail(Err::StableCountMismatch,
         "symbol has " + std::to_string(sub.basis.cols()) +
             " stable eigenvalues, expected " + std::to_string(sig.n_plus));
  return sub.basis;
}

double boundary_determinant(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                            const FrequencyPoint& pt) {
  const CMat basis = stable_symbol_basis(sys, sig, pt);
  // orthonormalize the boundary rows so the ratio is the product of principal
  // angle cosines between span(b^T) and the stable subspace, independent of
  // how the rows of b happen to be scaled
  Eigen::HouseholderQR<Mat> qr(sys.b.transpose());
  const Mat q1 = qr.householderQ() * Mat::Identity(sys.n, sys.b.rows());
  return std::abs((q1.transpose().cast<Complex>() * basis).determinant());
}

KreissGrid default_kreiss_grid() {
  KreissGrid g;
  g.re_xi = logspace(1e-2, 1e2, 21);
  g.im_xi = log_symmetric(1e-2, 1e2, 10);
  g.eta = logspace(1e-2, 1e4, 12);
  g.eta.insert(g.eta.begin(), 0.0);
  g.omega_axis = log_symmetric(1e-2, 1e2, 4);
  return g;
}

KreissReport certify_kreiss(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                            const KreissGrid& grid, double threshold) {
  KreissReport report;
  report.threshold = threshold;
  report.min_ratio = std::numeric_limits<double>::infinity();

  const Index tdims = sys.d - 1;
  std::vector<Index> widx(tdims, 0);
  const Index omega_count = static_cast<Index>(grid.omega_axis.size());

  for (double re : grid.re_xi) {
    for (double im : grid.im_xi) {
      for (double eta : grid.eta) {
        // odometer over the tangential frequency axes
        std::fill(widx.begin(), widx.end(), 0);
        while (true) {
          FrequencyPoint pt;
          pt.xi = Complex(re, im);
          pt.eta = eta;
          pt.omega = Vec(tdims);
          for (Index k = 0; k < tdims; ++k) pt.omega(k) = grid.omega_axis[widx[k]];

          try {
            const double ratio = boundary_determinant(sys, sig, pt);
            ++report.evaluated;
            if (ratio < report.min_ratio) {
              report.min_ratio = ratio;
              report.argmin = pt;
            }
          } catch (const Error& e) {
            if (e.kind() != Err::SplitAmbiguous) throw;
            ++report.skipped;
          }

          Index k = 0;
          for (; k < tdims; ++k) {
            if (++widx[k] < omega_count) break;
            widx[k] = 0;
          }
          if (tdims == 0 || k == tdims) break;
        }
      }
    }
  }

  if (report.evaluated == 0)
    fail(Err::NumericalFailure, "no frequency point could be evaluated");
  report.passed = report.min_ratio > threshold;
  return report;
}

}  // namespace relaxbc
