#pragma once

#include "relaxbc/types.hpp"

namespace relaxbc {

/// Orthonormal eigenvector split of a real symmetric matrix by eigenvalue
/// sign.  Eigenvalues with |lambda| <= zero_tol * max(1, max|lambda|) are
/// classified as zero.  Columns keep the ascending order of the underlying
/// symmetric eigensolver inside each group.
struct SpectralSplit {
  Mat p_plus;    //  eigenvectors with lambda > 0
  Mat p_zero;    //  eigenvectors with lambda = 0 (within tolerance)
  Mat p_minus;   //  eigenvectors with lambda < 0
  Vec lam_plus;
  Vec lam_minus;
  double zero_threshold = 0.0;
};

SpectralSplit symmetric_eigensplit(const Mat& a, double zero_tol = 1e-9,
                                   double sym_tol = 1e-12);

/// Signature (n_plus, n_zero, n_minus) of a real symmetric matrix.
struct InertiaCount {
  Index n_plus = 0;
  Index n_zero = 0;
  Index n_minus = 0;
};

InertiaCount inertia(const Mat& a, double zero_tol = 1e-9);

/// Complex Schur form with the stable eigenvalues (Re < 0) ordered first.
struct OrderedSchur {
  CMat q;          //  unitary
  CMat t;          //  upper triangular, stable diagonal entries first
  Index n_stable;  //  number of eigenvalues with Re < 0
};

/// Schur form of m with eigenvalues reordered stable-first.  Throws
/// SplitAmbiguous when an eigenvalue has |Re| <= split_tol * max(1, ||m||).
OrderedSchur stable_ordered_schur(const CMat& m, double split_tol = 1e-9);

/// Orthonormal basis of the stable (Re lambda < 0) invariant subspace
/// together with the restricted map basis^* m basis and the residual
/// ||m basis - basis restricted||.
struct StableSubspace {
  CMat basis;
  CMat restricted_map;
  double residual = 0.0;
};

StableSubspace stable_invariant_subspace(const CMat& m, double split_tol = 1e-9);

/// Real variant for matrices known to have a real spectrum (quasi-triangular
/// real Schur with 1x1 blocks only).  Throws SplitAmbiguous if a complex
/// conjugate pair is encountered.
StableSubspace stable_invariant_subspace(const Mat& m, double split_tol = 1e-9);
Mat real_stable_basis(const Mat& m, double split_tol = 1e-9);
Mat real_unstable_basis(const Mat& m, double split_tol = 1e-9);

/// Stable square root: the unique S0 with S0^2 = x and Re lambda(S0) < 0.
/// Requires x invertible with no eigenvalue on the closed negative real axis
/// (throws NegativeRealEigenvalue otherwise).  Computed from the Schur form
/// by the triangular square-root recurrence, negating the principal branch.
CMat stable_sqrt(const CMat& x, double tol = 1e-9);

/// exp(y * stable_map) * v for y >= 0.  stable_map must have all eigenvalues
/// in the open left half plane (throws NotStable otherwise).
CVec propagate(const CMat& stable_map, double y, const CVec& v);
Vec propagate(const Mat& stable_map, double y, const Vec& v);

/// Orthonormal basis of the orthogonal complement of range(k) in R^rows.
Mat orthonormal_complement(const Mat& k);

/// Orthonormal rows spanning the left null space of y; throws
/// DegenerateNullSpace when its dimension differs from expected_rows (pass -1
/// to skip the check).
Mat left_nullspace_rows(const Mat& y, Index expected_rows = -1,
                        double rank_tol = 1e-10);

/// Largest principal angle (radians) between the column spans of a and b.
double subspace_angle(const CMat& a, const CMat& b);

Index rank_svd(const Mat& a, double rank_tol = 1e-10);

}  // namespace relaxbc
