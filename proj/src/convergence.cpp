#include "relaxbc/convergence.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "relaxbc/error.hpp"
#include "transport.hpp"

namespace relaxbc {

namespace {

// centered when both neighbors are stored, one-sided at the sweep ends
Mat slice_time_derivative(const Mat& prev, const Mat& cur, const Mat& next, double dt) {
  if (prev.size() && next.size()) return (next - prev) / (2.0 * dt);
  if (next.size()) return (next - cur) / dt;
  return (cur - prev) / dt;
}

// periodic centered x2 derivative of a layer-grid field
Mat layer_dx2(const Mat& f, Index nz, Index nx2, double dx2) {
  Mat out(f.rows(), f.cols());
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index ip = (i2 + 1) % nx2, im = (i2 + nx2 - 1) % nx2;
    for (Index i = 0; i <= nz; ++i)
      out.col(i2 * (nz + 1) + i) =
          (f.col(ip * (nz + 1) + i) - f.col(im * (nz + 1) + i)) / (2.0 * dx2);
  }
  return out;
}

// periodic centered x2 derivative of a physical-grid field
Mat phys_dx2(const Mat& f, Index nx1, Index nx2, double dx2) {
  Mat out(f.rows(), f.cols());
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index ip = (i2 + 1) % nx2, im = (i2 + nx2 - 1) % nx2;
    for (Index i1 = 0; i1 <= nx1; ++i1)
      out.col(i2 * (nx1 + 1) + i1) =
          (f.col(ip * (nx1 + 1) + i1) - f.col(im * (nx1 + 1) + i1)) / (2.0 * dx2);
  }
  return out;
}

}  // namespace

ResidualNorms compute_residual(const ExpansionComposite& comp) {
  const ExpansionBase& base = *comp.base;
  const NormalizedSystem& sys = base.pipe.norm;
  const Index nx1 = base.ubar.x1.size() - 1;
  const Index nx2 = base.ubar.x2.size();
  const Index nz = base.z.size() - 1;
  const double dx1 = base.ubar.x1(1) - base.ubar.x1(0);
  const double dx2 = nx2 > 1 ? base.ubar.x2(1) - base.ubar.x2(0) : 1.0;
  const double dz = base.z(1) - base.z(0);
  const double sq = std::sqrt(comp.epsilon);

  const Mat a12t = sys.a12(0).transpose();
  const Mat a22 = sys.a22(0);
  const Mat& p0 = base.pipe.sig.p0;
  const Mat& r2s = base.pipe.red.r2_stable;
  const Index nw = r2s.cols();

  // eps-layer factors per unit ws_dot and per unit dws/dx2
  Mat fac_u_dot, fac_u_tan, fac_v_dot, fac_v_tan, estep;
  if (nw > 0) {
    const Mat& lift = base.pipe.la.eps_lift;
    const Mat& kt = base.pipe.la.coupling_comp;
    fac_u_dot = lift * r2s;
    fac_v_dot = kt * r2s;
    if (sys.d == 2) {
      fac_u_tan = (sys.a11(1) * lift + sys.a12(1) * kt) * r2s;
      fac_v_tan = (sys.a12(1).transpose() * lift + sys.a22(1) * kt) * r2s;
    }
    estep = ((dx1 / comp.epsilon) * base.m4s).exp();
  }
  const bool suppressed_source = comp.source == LayerSource::Zero && nw > 0;

  ResidualNorms out;
  const Index ns = static_cast<Index>(base.tg.slice_steps.size());
  for (Index s = 0; s < ns; ++s) {
    const Index step = base.tg.slice_steps[s];

    const Mat dtmu2 = slice_time_derivative(comp.corr.mu2_prev[s], comp.corr.mu2[s],
                                            comp.corr.mu2_next[s], base.tg.dt);
    const Mat dtnu2 = slice_time_derivative(comp.corr.nu2_prev[s], comp.corr.nu2[s],
                                            comp.corr.nu2_next[s], base.tg.dt);

    Mat r1z = dtmu2;
    Mat r2z = a12t * detail::profile_derivative(comp.corr.mu2[s], nz, nx2, dz) +
              a22 * detail::profile_derivative(comp.corr.nu2[s], nz, nx2, dz) + sq * dtnu2;
    if (sys.d == 2) {
      const Mat mu2_t = layer_dx2(comp.corr.mu2[s], nz, nx2, dx2);
      const Mat nu2_t = layer_dx2(comp.corr.nu2[s], nz, nx2, dx2);
      r1z += sys.a11(1) * mu2_t + sys.a12(1) * nu2_t;
      r2z += sys.a12(1).transpose() * p0 * layer_dx2(comp.heat.m[s], nz, nx2, dx2) +
             sq * (sys.a22(1) * nu2_t);
    }
    r1z *= sq;

    Mat r2x = a12t * detail::profile_derivative(base.ubar.slices[s], nx1, nx2, dx1);
    if (sys.d == 2)
      r2x += sys.a12(1).transpose() * phys_dx2(base.ubar.slices[s], nx1, nx2, dx2);

    Mat wsdot(nw, nx2), wstan = Mat::Zero(nw, nx2);
    if (nw > 0) {
      for (Index i2 = 0; i2 < nx2; ++i2)
        wsdot.col(i2) = base.traces.ws_dot.col(step * nx2 + i2);
      if (nx2 > 1)
        for (Index i2 = 0; i2 < nx2; ++i2) {
          const Index ip = (i2 + 1) % nx2, im = (i2 + nx2 - 1) % nx2;
          wstan.col(i2) = (base.traces.ws.col(step * nx2 + ip) -
                           base.traces.ws.col(step * nx2 + im)) /
                          (2.0 * dx2);
        }
    }

    double acc1 = 0.0, acc2 = 0.0;
    Mat efac = nw > 0 ? Mat(Mat::Identity(nw, nw)) : Mat();
    for (Index i1 = 0; i1 <= nx1; ++i1) {
      const double z_at = base.ubar.x1(i1) / sq;
      const double w = (i1 == 0 || i1 == nx1) ? 0.5 : 1.0;
      Mat mu_dot, mu_tan, mv_dot, mv_tan;
      if (nw > 0) {
        mv_dot = fac_v_dot * efac;
        if (sys.d == 2) mv_tan = fac_v_tan * efac;
        if (suppressed_source) {
          mu_dot = fac_u_dot * efac;
          if (sys.d == 2) mu_tan = fac_u_tan * efac;
        }
      }
      for (Index i2 = 0; i2 < nx2; ++i2) {
        const Index zoff = i2 * (nz + 1);
        Vec r1v = detail::interp_profile(r1z, base.z, zoff, z_at);
        if (suppressed_source) {
          r1v += mu_dot * wsdot.col(i2);
          if (sys.d == 2) r1v += mu_tan * wstan.col(i2);
        }
        Vec r2v = r2x.col(i2 * (nx1 + 1) + i1) +
                  detail::interp_profile(r2z, base.z, zoff, z_at);
        if (nw > 0) {
          r2v += mv_dot * wsdot.col(i2);
          if (sys.d == 2) r2v += mv_tan * wstan.col(i2);
        }
        acc1 += w * r1v.squaredNorm();
        acc2 += w * r2v.squaredNorm();
      }
      if (nw > 0) efac = efac * estep;
    }
    out.first_block = std::max(out.first_block, std::sqrt(acc1 * dx1 * dx2));
    out.second_block = std::max(out.second_block, std::sqrt(acc2 * dx1 * dx2));
  }
  return out;
}

ConvergenceReport run_convergence(const RelaxationSystem& sys, const RunConfig& cfg,
                                  LayerSource src) {
  const ExpansionBase base = build_expansion_base(sys, cfg);
  const GridSpec& g = base.cfg.grid;
  const Index nx1 = g.nx;
  const Index nx2 = base.pipe.norm.d == 2 ? g.nx2 : 1;
  const double dx1 = g.x1_max / nx1;
  const double dx2 = base.pipe.norm.d == 2 ? g.x2_max / nx2 : 1.0;

  std::vector<double> eps = cfg.eps;
  std::sort(eps.begin(), eps.end(), std::greater<double>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  ConvergenceReport rep;
  const Index ns = static_cast<Index>(base.tg.slice_steps.size());
  for (double e : eps) {
    const ExpansionComposite comp = build_composite(base, e, src);
    const RelaxationField relax = solve_relaxation(base.pipe, base.cfg, base.tg, e);

    EpsRecord rec;
    rec.eps = e;
    for (Index s = 0; s < ns; ++s) {
      const Mat diff = relax.slices[s] - compose_state(comp, s);
      const double err = std::sqrt(detail::grid_l2sq(diff, dx1, nx1, nx2, dx2));
      rec.sup_error = std::max(rec.sup_error, err);
      if (s == ns - 1) rec.final_error = err;
    }
    rec.bc_defect = relax.bc_defect;
    rec.identity_defect = boundary_identity_defect(comp);
    rec.residual = compute_residual(comp);
    rep.records.push_back(rec);
    rep.scale = std::sqrt(detail::grid_l2sq(relax.slices[ns - 1], dx1, nx1, nx2, dx2));
  }

  rep.monotone = rep.records.size() > 1;
  for (size_t k = 1; k < rep.records.size(); ++k)
    if (!(rep.records[k].final_error < rep.records[k - 1].final_error))
      rep.monotone = false;

  // least-squares slope of log(error) against log(eps)
  if (rep.records.size() > 1) {
    bool positive = true;
    for (const EpsRecord& rec : rep.records)
      if (!(rec.final_error > 0)) positive = false;
    if (positive) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = static_cast<double>(rep.records.size());
      for (const EpsRecord& rec : rep.records) {
        const double x = std::log(rec.eps), y = std::log(rec.final_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
  }
  return rep;
}

}  // namespace relaxbc
