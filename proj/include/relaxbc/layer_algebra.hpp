#pragma once

#include "relaxbc/system.hpp"

namespace relaxbc {

/// Matrices of the boundary-layer algebra derived from the normalized blocks
/// of A_1 and the source block s.  All congruence identities are verified at
/// construction time (relative tolerance 1e-10).
struct LayerAlgebra {
  Mat coupling;        // A_12^T P_0, r x n1_zero, full column rank
  Mat coupling_comp;   // orthonormal basis of range(coupling)^perp, r x (r - n1_zero)
  Mat schur;           // A_22 - A_12^T P_1 Lambda_1^{-1} P_1^T A_12, symmetric
  Mat eps_lift;        // u-part of the eps-layer profile per unit layer amplitude
  Mat congruence_t;    // brings A_1 to the bordered three-block form
  Mat congruence_l;    // brings A_1 to the decoupled four-block form
  Mat sqrt_pair;       // n1_zero x n1_zero factor pairing with the zero-mode symbol
  Mat eps_generator;   // (r - n1_zero) generator of the eps-layer profile ODE
  Mat layer_gram;      // symmetric positive definite; certifies the sqrt-scale spectrum
  Mat parabolic;       // P_0^T A_12 s^{-1} A_12^T P_0, symmetric negative definite
  double cond_coupling_pair = 0.0;  // condition number of [coupling, coupling_comp]

  Index n1_zero() const { return coupling.cols(); }
  Index layer_dim() const { return coupling_comp.cols(); }  // r - n1_zero
};

/// Builds all layer matrices and verifies, against the normalized A_1:
///   congruence_t^T A_1 congruence_t = [[Lambda_1,0,0],[0,0,K^T],[0,K,A]]
///   congruence_l^T A_1 congruence_l = blkdiag(Lambda_1, [[0,K^T K],[K^T K, K^T A K]], Kt^T A Kt)
/// plus definiteness of parabolic/layer_gram and the eps-generator inertia
/// (exactly n_plus - n1_zero - n1_plus negative eigenvalues).
LayerAlgebra build_layer_algebra(const NormalizedSystem& sys, const CharacteristicSignature& sig);

/// Inertia of the bordered block [[0, K^T K],[K^T K, K^T A K]]; throws
/// InertiaMismatch unless it is (n1_zero, 0, n1_zero).
InertiaCount bordered_inertia_check(const LayerAlgebra& la);

/// Frequency-dependent reduced blocks at Laplace variable xi (Re xi > 0) and
/// tangential frequency omega (size d-1):
///   first:  -Lambda_1^{-1} ([xi I + C_11] - C_10 [xi I + C_00]^{-1} C_01)
///   second: -(K^T K)^{-1} [xi I + C_00]
/// where C(omega) = i sum_j omega_j A_{j,11} and C_kl = P_k^* C P_l.
struct LimitBlocks {
  CMat first;   // acts on the incoming/outgoing nonzero modes
  CMat second;  // acts on the zero modes
  CMat zero_mode_resolvent;  // [xi I + C_00]^{-1}
  CMat c01;
};

LimitBlocks limit_blocks(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                         const LayerAlgebra& la, Complex xi, const Vec& omega);

/// Stable basis [I; sqrt_pair^{-1} S0] of the sqrt-scale block
/// [[0, sqrt_pair],[second, 0]], where S0 is the stable square root of
/// sqrt_pair * second = layer_gram [xi I + C_00].  The product identity is
/// asserted to 1e-10 before taking the root.
CMat stable_limit_basis_12(const LayerAlgebra& la, const LimitBlocks& blocks);

}  // namespace relaxbc
