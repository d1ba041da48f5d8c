#pragma once

#include <string>
#include <vector>

#include "relaxbc/linalg.hpp"
#include "relaxbc/types.hpp"

namespace relaxbc {

/// User-supplied relaxation system
///   U_t + sum_j A_j U_{x_j} = Q U / eps   on  x_1 > 0,
///   B U(t, 0, xhat) = b(t, xhat),
/// with an explicit symmetrizer a0 (identity when omitted in the input).
struct RelaxationSystem {
  Index d = 1;  // spatial dimension (A_1 is the boundary-normal coefficient)
  Index n = 0;  // state dimension
  Index r = 0;  // rank of Q (size of the damped block)
  std::vector<Mat> a;
  Mat q;
  Mat a0;
  Mat b;
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;  // check-specific magnitude (see message)
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  std::string summary() const;
};

/// Checks the admissibility set for the supplied system: Q similar to
/// diag(0, S) with S invertible (rank Q = rank Q^2 = r), a0 symmetric positive
/// definite with every a0 A_j symmetric, a0 Q = Q^T a0, the dissipation bound
/// (a0 Q + Q^T a0 negative semidefinite and negative definite transverse to
/// ker Q), A_1 invertible, and B of full row rank n_plus.
/// Throws DimensionMismatch only for structurally unusable inputs.
ValidationReport validate_structural_stability(const RelaxationSystem& sys);

/// System in normalized coordinates V = to_norm * U: all coefficients
/// symmetric, the source block diagonal diag(0, s) with s symmetric negative
/// definite, boundary matrix transformed accordingly.
struct NormalizedSystem {
  Index d = 1, n = 0, r = 0;
  std::vector<Mat> a;
  Mat s;        // r x r, symmetric negative definite
  Mat b;        // n_plus x n
  Mat to_norm, from_norm;

  Mat a11(Index j = 0) const { return a[j].topLeftCorner(n - r, n - r); }
  Mat a12(Index j = 0) const { return a[j].topRightCorner(n - r, r); }
  Mat a22(Index j = 0) const { return a[j].bottomRightCorner(r, r); }
  Mat b_u() const { return b.leftCols(n - r); }
  Mat b_v() const { return b.rightCols(r); }
  Mat q() const;
};

/// Normalizes a validated system: conjugates by a0^{1/2}, then rotates so the
/// kernel of the (now symmetric) source matrix occupies the leading n - r
/// coordinates.  Already-normalized systems are returned unchanged.
/// Throws NotValidated when validate_structural_stability does not pass.
NormalizedSystem normalize(const RelaxationSystem& sys, double zero_tol = 1e-9);

/// Boundary signature of the normalized system.  P_1 carries the nonzero
/// eigenvectors of A_11 ordered positive-then-negative, P_0 the kernel.
struct CharacteristicSignature {
  Index n_plus = 0;   // positive eigenvalues of A_1
  Index n1_plus = 0;  // positive eigenvalues of A_11
  Index n1_zero = 0;  // zero eigenvalues of A_11 (>= 1 for type II)
  Mat p1;             // (n-r) x (n-r-n1_zero)
  Mat p0;             // (n-r) x n1_zero
  Vec lambda1;        // nonzero eigenvalues of A_11, positive first
  SpectralSplit split;
};

/// Classifies the boundary.  Throws SingularA1 when A_1 is singular,
/// NotTypeII when A_11 is nonsingular, DimensionMismatch when B does not have
/// n_plus rows, RankDeficientK when n1_zero exceeds r.
CharacteristicSignature classify(const NormalizedSystem& sys, double zero_tol = 1e-9);

/// Verifies B (u0, 0)^T = b(0, xhat) columnwise on sampled boundary data
/// (normalized frame).  u0_at_inflow is (n-r) x m, b_at_t0 is n_plus x m.
ValidationReport check_compatibility(const NormalizedSystem& sys, const Mat& u0_at_inflow,
                                     const Mat& b_at_t0, double tol = 1e-10);

}  // namespace relaxbc
