#pragma once

#include <vector>

#include "relaxbc/expansion.hpp"

namespace relaxbc {

/// Stiff solve of the full system on the shared time grid.  Strang split per
/// step: exact half source exp(S dt / 2 eps) on the fast block, second-order
/// MUSCL transport, second half source, and the boundary condition
/// B U(t, 0) = b(t) imposed as the last operation (outgoing characteristics
/// of A_1 kept, incoming amplitudes solved from the precomputed B Phi_+
/// factorization).  Initial data is (u0, 0).
struct RelaxationField {
  Vec x1, x2;
  std::vector<Mat> slices;     // n x (nx1 + 1) * nx2 at the slice steps
  std::vector<double> energy;  // squared L2 norm per step
  double bc_defect = 0.0;      // max over steps of ||B U(t, 0) - b(t)||
};

RelaxationField solve_relaxation(const Pipeline& pipe, const RunConfig& cfg,
                                 const TimeGrid& tg, double eps);

}  // namespace relaxbc
