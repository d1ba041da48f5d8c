#pragma once

#include <vector>

#include "relaxbc/config.hpp"
#include "relaxbc/layer_algebra.hpp"
#include "relaxbc/reduced_bc.hpp"
#include "relaxbc/system.hpp"

namespace relaxbc {

/// Where the sqrt-scale equations take the epsilon-layer source G: evaluated
/// at y = z / sqrt(eps) (the physically matched choice) or suppressed.
enum class LayerSource { Coupled, Zero };

/// Frozen per-system artifacts shared by every solver stage.
struct Pipeline {
  NormalizedSystem norm;
  CharacteristicSignature sig;
  LayerAlgebra la;
  ReducedBoundary red;
};

/// validate + normalize + classify + layer algebra + reduced boundary.
Pipeline build_pipeline(const RelaxationSystem& sys);

/// Shared master time grid, dt = cfl / sum_j rho(A_j)/dx_j, adjusted so an
/// integer number of steps lands exactly on t_max.  slice_steps are the
/// stored field times (first = 0, last = nt); interior slices keep their
/// step neighbors for time differencing.
struct TimeGrid {
  double dt = 0.0;
  Index nt = 0;
  std::vector<Index> slice_steps;
  double time(Index step) const { return dt * step; }
};

TimeGrid make_time_grid(const NormalizedSystem& sys, const GridSpec& grid,
                        Index n_slices = 9);

/// Derived layer-grid extents (config values of 0 request these).
double derived_y_max(const Pipeline& pipe, const GridSpec& grid);
double derived_z_max(const Pipeline& pipe, const GridSpec& grid);

/// Equilibrium field: first-order characteristic upwind for
///   ubar_t + A11 ubar_x1 + sum_j Aj11 ubar_xj = 0,
/// incoming characteristics from the reduced boundary condition
/// B_o B_u ubar(t, 0) = B_o b(t), outgoing and zero-speed modes free.
/// Fields are (n - r) x (nx1 + 1) * nx2, column index i2 * (nx1 + 1) + i1.
struct EquilibriumField {
  Vec x1;                    // nx1 + 1 nodes on [0, x1_max]
  Vec x2;                    // nx2 nodes (d = 2; a single 0 for d = 1)
  std::vector<Mat> slices;   // one per slice step
  std::vector<Mat> slices_prev, slices_next;  // step neighbors (empty at ends)
  Mat trace;                 // (n - r) x (nt + 1) * nx2 boundary values
  std::vector<double> energy;  // squared L2 norm per step
};

EquilibriumField solve_equilibrium(const Pipeline& pipe, const RunConfig& cfg,
                                   const TimeGrid& tg);

/// Boundary traces of the layer amplitudes, solved per time step from
/// d(t) = b(t) - B_u ubar(t, 0):  mu1 = solve_zero d,  ws = solve_layer d.
/// reconstruction_defect = max_t ||d - Y2 mu1 - Y3 ws||.
struct TraceSet {
  Mat mu1;  // n1_zero x (nt + 1) * nx2
  Mat ws;   // nw x (nt + 1) * nx2
  Mat ws_dot;  // centered time derivative of ws
  double reconstruction_defect = 0.0;
};

TraceSet solve_boundary_traces(const Pipeline& pipe, const RunConfig& cfg,
                               const TimeGrid& tg, const EquilibriumField& ubar);

/// Epsilon-independent part of the expansion.
struct ExpansionBase {
  Pipeline pipe;
  RunConfig cfg;
  TimeGrid tg;
  EquilibriumField ubar;
  TraceSet traces;
  Vec y, z;          // layer grids: ny + 1 nodes on [0, y_max], nz + 1 on [0, z_max]
  Mat m4s;           // stable restriction of the epsilon-layer generator
  double gamma = 0;  // slowest stable decay rate of m4s
};

ExpansionBase build_expansion_base(const RelaxationSystem& sys, const RunConfig& cfg);

/// w(t, y) = R2s exp(y m4s) ws(t); exact evaluation, no y interpolation.
Mat eps_layer_profile(const ExpansionBase& base, double y);  // layer_dim x nw factor

/// Sqrt-scale (heat) field m = P0^* mu1 on the z grid:
///   m_t + D m_zz + sum_j (P0^* Aj11 P0) m_xj = P0^* G,
/// Crank-Nicolson in (t, z), Dirichlet trace at z = 0, zero at z_max, zero
/// initial data.  G is the epsilon-layer source sampled per LayerSource.
struct SqrtLayerField {
  Vec z;
  std::vector<Mat> m;  // per slice: n1_zero x (nz + 1) * nx2
  std::vector<Mat> m_prev, m_next;
};

SqrtLayerField solve_sqrt_layer(const ExpansionBase& base, double eps, LayerSource src);

/// Correctors on the z grid per slice:
///   nu2 = S^{-1} K m_z   (one-sided second-order differences at the ends),
///   P1^* mu2 = -Lambda1^{-1} [P1^* A12 S^{-1} K m_z
///                             - sum_j P1^* Aj11 P0 int_z^{zmax} m_xj
///                             + int_z^{zmax} P1^* G],
/// tail integrals by trapezoid, P0^* mu2 = 0 gauge.
struct Correctors {
  std::vector<Mat> nu2;  // r x (nz + 1) * nx2
  std::vector<Mat> mu2;  // (n - r) x (nz + 1) * nx2
  std::vector<Mat> nu2_prev, nu2_next, mu2_prev, mu2_next;
};

/// The composed three-scale approximation for one epsilon.
struct ExpansionComposite {
  const ExpansionBase* base = nullptr;
  double epsilon = 0.0;
  LayerSource source = LayerSource::Coupled;
  SqrtLayerField heat;
  Correctors corr;
};

ExpansionComposite build_composite(const ExpansionBase& base, double eps, LayerSource src);

/// U_eps at slice `slice` on the physical grid: n x (nx1 + 1) * nx2 rows
/// (u; v).  z-profiles are interpolated linearly (monotone), the eps-layer is
/// evaluated exactly per node.
Mat compose_state(const ExpansionComposite& comp, Index slice);

/// max_t ||B U_eps(t, 0) - b(t) - sqrt(eps) (B_u mu2 + B_v nu2)(t, 0)||,
/// which the construction keeps at rounding level.
double boundary_identity_defect(const ExpansionComposite& comp);

}  // namespace relaxbc
