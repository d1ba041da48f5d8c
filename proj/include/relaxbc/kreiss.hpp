#pragma once

#include <vector>

#include "relaxbc/system.hpp"

namespace relaxbc {

/// One frequency point of the boundary symbol.  eta is the relaxation weight
/// (eta = 0 recovers the frozen hyperbolic symbol, large eta approaches the
/// stiff limit).
struct FrequencyPoint {
  Complex xi;   // Laplace variable, Re xi > 0
  Vec omega;    // tangential frequency, size d - 1
  double eta = 0.0;
};

/// Symbol M(xi, omega, eta) = A_1^{-1} (eta Q - xi I - i sum_{j>=2} omega_j A_j)
/// in the normalized frame.
CMat symbol_matrix(const NormalizedSystem& sys, const FrequencyPoint& pt);

/// Orthonormal basis of the stable invariant subspace of the symbol.  Throws
/// StableCountMismatch when its dimension is not n_plus.
CMat stable_symbol_basis(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                         const FrequencyPoint& pt, double split_tol = 1e-9);

/// Determinant ratio |det(B R)| with R the orthonormal stable basis.  The
/// value is independent of the orthonormal basis choice.
double boundary_determinant(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                            const FrequencyPoint& pt);

/// Sampling grid for the uniform Kreiss certification.  Frequencies are taken
/// as the product of the listed one-dimensional sets; im_xi and omega use the
/// log-symmetric magnitudes (negated copy, zero, positive copy).
struct KreissGrid {
  std::vector<double> re_xi;
  std::vector<double> im_xi;      // signed values, includes 0
  std::vector<double> eta;        // includes 0
  std::vector<double> omega_axis; // signed values per tangential dimension
};

KreissGrid default_kreiss_grid();

struct KreissReport {
  double min_ratio = 0.0;
  FrequencyPoint argmin;
  Index evaluated = 0;
  Index skipped = 0;  // points where the stable/unstable split was ambiguous
  double threshold = 0.0;
  bool passed = false;
};

/// Grid certification of the uniform Kreiss determinant lower bound.  Points
/// where the symbol spectrum cannot be split reliably are skipped and counted;
/// a stable count different from n_plus at any evaluated point throws
/// StableCountMismatch.
KreissReport certify_kreiss(const NormalizedSystem& sys, const CharacteristicSignature& sig,
                            const KreissGrid& grid, double threshold = 1e-6);

}  // namespace relaxbc
