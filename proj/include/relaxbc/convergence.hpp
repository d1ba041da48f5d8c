#pragma once

#include <vector>

#include "relaxbc/expansion.hpp"
#include "relaxbc/relaxation.hpp"

namespace relaxbc {

/// Sup over the stored slices of the L2(x) norms of the composed state's
/// equation residual, split by block.  Only analytically nonvanishing terms
/// are evaluated -- the construction cancels the singular orders exactly, so
/// differencing the composed field would only measure scheme truncation.
/// First block: the sqrt(eps)-weighted corrector drift (plus the suppressed
/// layer source when it is not coupled).  Second block: the equilibrium drift
/// A12^* d(ubar)/dx1 plus the layer-scale derivative terms.
struct ResidualNorms {
  double first_block = 0.0;
  double second_block = 0.0;
};

ResidualNorms compute_residual(const ExpansionComposite& comp);

struct EpsRecord {
  double eps = 0.0;
  double final_error = 0.0;  // L2 distance of the two solves at t_max
  double sup_error = 0.0;    // max over the stored slices
  double bc_defect = 0.0;
  double identity_defect = 0.0;
  ResidualNorms residual;
};

struct ConvergenceReport {
  std::vector<EpsRecord> records;  // epsilons in decreasing order
  double slope = 0.0;              // least-squares d log(final_error) / d log(eps)
  bool monotone = false;           // final errors strictly decrease with eps
  double scale = 0.0;              // L2 norm of the stiff solve at t_max, smallest eps
};

ConvergenceReport run_convergence(const RelaxationSystem& sys, const RunConfig& cfg,
                                  LayerSource src = LayerSource::Coupled);

}  // namespace relaxbc
