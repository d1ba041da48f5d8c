#include "relaxbc/relaxation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <set>

#include "relaxbc/error.hpp"
#include "transport.hpp"

namespace relaxbc {

RelaxationField solve_relaxation(const Pipeline& pipe, const RunConfig& cfg,
                                 const TimeGrid& tg, double eps) {
  const NormalizedSystem& sys = pipe.norm;
  const Index n = sys.n, r = sys.r;
  const Index nx1 = cfg.grid.nx;
  const Index nx2 = sys.d == 2 ? cfg.grid.nx2 : 1;
  const double dx1 = cfg.grid.x1_max / nx1;
  const double dx2 = sys.d == 2 ? cfg.grid.x2_max / nx2 : 1.0;
  const Index cols = (nx1 + 1) * nx2;
  const auto idx = [nx1](Index i1, Index i2) { return i2 * (nx1 + 1) + i1; };

  RelaxationField out;
  out.x1 = Vec::LinSpaced(nx1 + 1, 0.0, cfg.grid.x1_max);
  out.x2 = sys.d == 2 ? Vec(Vec::LinSpaced(nx2, 0.0, cfg.grid.x2_max * (1.0 - 1.0 / nx2)))
                      : Vec(Vec::Zero(1));

  Mat u = Mat::Zero(n, cols);
  for (Index i2 = 0; i2 < nx2; ++i2)
    for (Index i1 = 0; i1 <= nx1; ++i1)
      u.col(idx(i1, i2)).head(n - r) = initial_state(cfg, out.x1(i1), out.x2(i2));

  const detail::CharBasis cb1 = detail::char_basis(sys.a[0]);
  const detail::CharBasis cb2 = sys.d == 2 ? detail::char_basis(sys.a[1]) : detail::CharBasis{};

  // exact half source on the fast block
  const Mat ehalf = ((0.5 * tg.dt / eps) * sys.s).exp();

  // incoming characteristics of A_1 and the boundary solve
  Index n_plus = 0;
  for (Index i = 0; i < n; ++i)
    if (cb1.lam(i) > 1e-12 * cb1.radius) ++n_plus;
  if (n_plus != sys.b.rows())
    fail(Err::NumericalFailure, "incoming characteristic count does not match B");
  const Mat phi_p = cb1.v.rightCols(n_plus);
  const Mat bp = sys.b * phi_p;
  {
    Eigen::JacobiSVD<Mat> svd(bp);
    if (svd.singularValues().minCoeff() <=
        1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
      fail(Err::BoundarySolveSingular, "B is singular on the incoming characteristics");
  }
  const Eigen::PartialPivLU<Mat> bp_lu(bp);

  const auto apply_bc = [&](Mat& f, double t) {
    const Vec b = boundary_data(cfg, t);
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Index c = idx(0, i2);
      const Vec rest = f.col(c) - phi_p * (phi_p.transpose() * f.col(c));
      f.col(c) = rest + phi_p * bp_lu.solve(Vec(b - sys.b * rest));
    }
  };
  const auto rate = [&](const Mat& f, Mat& dest) {
    dest.setZero();
    detail::add_rate_x1(cb1, f, nx1, nx2, dx1, dest);
    if (sys.d == 2) detail::add_rate_x2(cb2, f, nx1, nx2, dx2, dest);
  };

  std::set<Index> keep(tg.slice_steps.begin(), tg.slice_steps.end());
  out.energy.assign(tg.nt + 1, 0.0);
  out.energy[0] = detail::grid_l2sq(u, dx1, nx1, nx2, dx2);
  if (keep.count(0)) out.slices.push_back(u);

  Mat k1(n, cols), k2(n, cols), us(n, cols);
  for (Index step = 1; step <= tg.nt; ++step) {
    const double t_new = tg.time(step);

    u.bottomRows(r) = ehalf * u.bottomRows(r);
    rate(u, k1);
    us = u + tg.dt * k1;
    apply_bc(us, t_new);
    rate(us, k2);
    u = 0.5 * (u + us + tg.dt * k2);
    u.bottomRows(r) = ehalf * u.bottomRows(r);
    apply_bc(u, t_new);

    const Vec b = boundary_data(cfg, t_new);
    for (Index i2 = 0; i2 < nx2; ++i2)
      out.bc_defect = std::max(out.bc_defect, (sys.b * u.col(idx(0, i2)) - b).norm());

    out.energy[step] = detail::grid_l2sq(u, dx1, nx1, nx2, dx2);
    if (!std::isfinite(out.energy[step]) ||
        out.energy[step] > 1e12 * (out.energy[0] + 1.0))
      fail(Err::UnstableStep, "relaxation solve diverged at step " + std::to_string(step));
    if (keep.count(step)) out.slices.push_back(u);
  }
  return out;
}

}  // namespace relaxbc
