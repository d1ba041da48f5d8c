#pragma once

#include <string>
#include <vector>

#include "relaxbc/system.hpp"
#include "relaxbc/types.hpp"

namespace relaxbc {

/// Discretization parameters for the expansion and relaxation solvers.
/// y_max / z_max equal to zero request the derived defaults
///   y_max = -log(tol_layer) / gamma   (gamma: slowest stable decay of the
///                                      epsilon-layer generator)
///   z_max = max(6 sqrt(t_max ||D||), 10)   (D: parabolic block)
struct GridSpec {
  double x1_max = 2.0;
  Index nx = 2000;
  double x2_max = 1.0;  // tangential period, d = 2 only
  Index nx2 = 32;       // tangential cells, d = 2 only
  double t_max = 0.5;
  double cfl = 0.45;
  double y_max = 0.0;
  double z_max = 0.0;
  Index ny = 240;
  Index nz = 200;
  double tol_layer = 1e-10;
};

enum class SpaceProfile { Zero, Bump };
enum class TimeProfile { Zero, Sin2Ramp };

/// Named data profiles.  The initial condition and boundary data are
///   u0(x) = shape(x1) cos(2 pi k2 x2 / x2_max) * u0_weights,
///   b(t)  = ramp(t) * bc_weights,
/// with shape a Gaussian bump and ramp a sin^2 switch-on that saturates at 1
/// after bc_period.  Both vanish at t = 0 / far from the support, so the
/// boundary data is compatible whenever the bump stays away from x1 = 0.
struct DataSpec {
  SpaceProfile u0 = SpaceProfile::Zero;
  double u0_center = 1.0;
  double u0_width = 0.15;
  Index u0_k2 = 0;  // tangential wavenumber, d = 2 only
  Vec u0_weights;   // length n - r (empty: zeros)
  TimeProfile bc = TimeProfile::Zero;
  double bc_period = 0.5;
  Vec bc_weights;  // length rows(b) (empty: zeros)
};

struct RunConfig {
  RelaxationSystem sys;
  GridSpec grid;
  DataSpec data;
  std::vector<double> eps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
};

/// Parses the sectioned key = value text format.  Matrices are row-major with
/// ';' between rows.  Throws Err::Parse for malformed text and Err::Schema
/// with every violation listed when the values do not form a usable config.
RunConfig parse_config(const std::string& text);

/// parse_config applied to the contents of the file at path.
RunConfig load_config(const std::string& path);

/// Serializes cfg such that parse_config(print_config(cfg)) reproduces every
/// field exactly (17 significant digits).
std::string print_config(const RunConfig& cfg);

/// Scalar shape factors of the data profiles.
double space_shape(const DataSpec& data, double x1);
double time_ramp(const DataSpec& data, double t);

/// Full data samples: u0 is (n - r) x 1 at (x1, x2), b is rows(b) x 1 at t.
Vec initial_state(const RunConfig& cfg, double x1, double x2 = 0.0);
Vec boundary_data(const RunConfig& cfg, double t);

}  // namespace relaxbc
