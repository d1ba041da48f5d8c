#pragma once

#include "relaxbc/layer_algebra.hpp"
#include "relaxbc/kreiss.hpp"

namespace relaxbc {

/// Reduced boundary matrices obtained at the reference frequency xi = 1,
/// omega = 0.  The boundary data splits against the three trace blocks
///   y_outer = B_u P_1 R11,   y_zero = B_u P_0,   y_layer = (B_u N + B_v Kt) R2,
/// where R11 spans the stable modes of the outer symbol (n1_plus columns) and
/// R2 the decaying eps-layer modes (n_plus - n1_zero - n1_plus columns).
/// rows_outer annihilates (y_zero, y_layer); rows_zero annihilates
/// (y_outer, y_layer); rows_layer annihilates (y_outer, y_zero).  All three
/// have orthonormal rows.
struct ReducedBoundary {
  Mat y_outer, y_zero, y_layer;

  Mat rows_outer;  // n1_plus x n_plus: boundary condition for the outer solution
  Mat rows_zero;   // n1_zero x n_plus: extracts the sqrt-scale layer amplitude
  Mat rows_layer;  // (n_plus - n1_zero - n1_plus) x n_plus: eps-layer amplitude

  Mat r11_stable;   // stable modes of the outer symbol at the reference point
  Mat r2_stable;    // decaying modes of the eps-layer generator
  Mat r2_left_unstable;  // left rows spanning the growing modes

  // Solve operators for the traces: amplitude = solve * (b - B_u outer_trace).
  Mat solve_zero;   // (rows_zero  y_zero )^{-1} rows_zero
  Mat solve_layer;  // (rows_layer y_layer)^{-1} rows_layer

  Mat coupling_matrix;  // full trace/decay system of Theorem-type solvability
  double coupling_sigma_min = 0.0;
  double ukc_ratio = 0.0;  // |det(rows_outer y_outer)|
};

/// Stable subspace of the symbol in the stiff limit eta -> infinity, assembled
/// from the outer, sqrt-scale and eps-layer blocks (n x n_plus).  Used to
/// cross-check the finite-eta symbol subspaces and to certify the limit
/// determinant ratio.
CMat limit_stable_basis(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                        const LayerAlgebra& la, Complex xi, const Vec& omega);

/// Builds the reduced boundary matrices.  Throws GkcViolatedAtReference when
/// the determinant ratio at the reference frequency or the ukc ratio falls at
/// or below det_threshold, DegenerateNullSpace when a null-space dimension is
/// off, CouplingSingular when the coupling matrix has sigma_min <= sigma_tol.
ReducedBoundary build_reduced_boundary(const NormalizedSystem& sys,
                                       const CharacteristicSignature& sig,
                                       const LayerAlgebra& la,
                                       double det_threshold = 1e-6,
                                       double sigma_tol = 1e-8);

struct UkcSweep {
  double min_ratio = 0.0;
  FrequencyPoint argmin;
  Index evaluated = 0;
  Index skipped = 0;  // ambiguous stable/unstable splits of the outer symbol
};

/// Samples |det(B_o B_u P_1 R^S)| over the (xi, omega) part of the grid, with
/// R^S an orthonormal stable basis of the outer symbol
///   M_1(xi, omega) = -Lambda_1^{-1} ([xi I + C11] - C10 [xi I + C00]^{-1} C01),
/// C_kl = P_k^* (i sum_{j>=2} omega_j A_j11) P_l.  This is the uniform Kreiss
/// condition of the equilibrium problem; the reference point value equals
/// ReducedBoundary::ukc_ratio.
UkcSweep sweep_ukc(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                   const ReducedBoundary& red, const KreissGrid& grid);

}  // namespace relaxbc
