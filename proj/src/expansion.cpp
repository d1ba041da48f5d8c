#include "relaxbc/expansion.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "relaxbc/error.hpp"
#include "transport.hpp"

namespace relaxbc {

namespace {

// positive/negative parts of a symmetric matrix for characteristic upwinding
struct UpwindSplit {
  Mat plus, minus;
  double radius = 0.0;
};

UpwindSplit upwind_split(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) fail(Err::NumericalFailure, "eigensolver failed");
  UpwindSplit s;
  const Vec lam = es.eigenvalues();
  s.plus = es.eigenvectors() * lam.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  s.minus = es.eigenvectors() * lam.cwiseMin(0.0).asDiagonal() * es.eigenvectors().transpose();
  s.radius = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  return s;
}

double spectral_radius(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Vec linspace(double lo, double hi, Index count) {
  Vec v(count);
  for (Index i = 0; i < count; ++i)
    v(i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

// steps whose fields must be kept: the slices plus their step neighbors
std::set<Index> wanted_steps(const TimeGrid& tg) {
  std::set<Index> keep;
  for (Index s : tg.slice_steps) {
    keep.insert(s);
    if (s > 0) keep.insert(s - 1);
    if (s < tg.nt) keep.insert(s + 1);
  }
  return keep;
}

void distribute_slices(const TimeGrid& tg, std::map<Index, Mat>& stored,
                       std::vector<Mat>& slices, std::vector<Mat>& prev,
                       std::vector<Mat>& next) {
  slices.clear();
  prev.clear();
  next.clear();
  for (Index s : tg.slice_steps) {
    slices.push_back(stored.at(s));
    prev.push_back(s > 0 ? stored.at(s - 1) : Mat());
    next.push_back(s < tg.nt ? stored.at(s + 1) : Mat());
  }
}

}  // namespace

Pipeline build_pipeline(const RelaxationSystem& sys) {
  Pipeline pipe;
  pipe.norm = normalize(sys);
  pipe.sig = classify(pipe.norm);
  pipe.la = build_layer_algebra(pipe.norm, pipe.sig);
  pipe.red = build_reduced_boundary(pipe.norm, pipe.sig, pipe.la);
  return pipe;
}

TimeGrid make_time_grid(const NormalizedSystem& sys, const GridSpec& grid, Index n_slices) {
  double rate = spectral_radius(sys.a[0]) / (grid.x1_max / grid.nx);
  if (sys.d == 2) rate += spectral_radius(sys.a[1]) / (grid.x2_max / grid.nx2);
  if (!(rate > 0)) fail(Err::NumericalFailure, "zero wave speed");
  const double dt_raw = grid.cfl / rate;
  TimeGrid tg;
  tg.nt = static_cast<Index>(std::ceil(grid.t_max / dt_raw - 1e-12));
  if (tg.nt < n_slices) tg.nt = n_slices;
  tg.dt = grid.t_max / static_cast<double>(tg.nt);

  std::set<Index> steps;
  for (Index k = 0; k < n_slices; ++k)
    steps.insert(static_cast<Index>(std::llround(
        static_cast<double>(k) * static_cast<double>(tg.nt) / (n_slices - 1))));
  tg.slice_steps.assign(steps.begin(), steps.end());
  return tg;
}

double derived_y_max(const Pipeline& pipe, const GridSpec& grid) {
  if (grid.y_max > 0) return grid.y_max;
  const Mat r2 = pipe.red.r2_stable;
  if (r2.cols() == 0) return 1.0;
  const Mat m4s = r2.transpose() * pipe.la.eps_generator * r2;
  const Eigen::EigenSolver<Mat> es(m4s);
  const double gamma = es.eigenvalues().real().cwiseAbs().minCoeff();
  return -std::log(grid.tol_layer) / gamma;
}

double derived_z_max(const Pipeline& pipe, const GridSpec& grid) {
  if (grid.z_max > 0) return grid.z_max;
  const double dnorm = spectral_radius(pipe.la.parabolic);
  return std::max(6.0 * std::sqrt(grid.t_max * dnorm), 10.0);
}

EquilibriumField solve_equilibrium(const Pipeline& pipe, const RunConfig& cfg,
                                   const TimeGrid& tg) {
  const NormalizedSystem& sys = pipe.norm;
  const CharacteristicSignature& sig = pipe.sig;
  const Index neq = sys.n - sys.r;
  const Index nx1 = cfg.grid.nx;
  const Index nx2 = sys.d == 2 ? cfg.grid.nx2 : 1;
  const double dx1 = cfg.grid.x1_max / nx1;
  const double dx2 = sys.d == 2 ? cfg.grid.x2_max / nx2 : 1.0;
  const Index cols = (nx1 + 1) * nx2;
  const auto idx = [nx1](Index i1, Index i2) { return i2 * (nx1 + 1) + i1; };

  EquilibriumField out;
  out.x1 = linspace(0.0, cfg.grid.x1_max, nx1 + 1);
  out.x2 = sys.d == 2 ? linspace(0.0, cfg.grid.x2_max * (1.0 - 1.0 / nx2), nx2)
                      : Vec::Zero(1);

  Mat u(neq, cols);
  for (Index i2 = 0; i2 < nx2; ++i2)
    for (Index i1 = 0; i1 <= nx1; ++i1)
      u.col(idx(i1, i2)) = initial_state(cfg, out.x1(i1), out.x2(i2));

  const detail::CharBasis cb1 = detail::char_basis(sys.a11(0));
  const detail::CharBasis cb2 =
      sys.d == 2 ? detail::char_basis(sys.a11(1)) : detail::CharBasis{};

  // boundary solve for the incoming characteristic amplitudes
  const Index n1p = sig.n1_plus;
  const Mat p1p = sig.p1.leftCols(n1p);
  const Mat bu = sys.b_u();
  Eigen::PartialPivLU<Mat> outer_lu;
  Mat rows_outer = pipe.red.rows_outer;
  if (n1p > 0) {
    const Mat w = rows_outer * bu * p1p;
    Eigen::JacobiSVD<Mat> svd(w);
    if (svd.singularValues().minCoeff() <=
        1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
      fail(Err::BoundarySolveSingular, "reduced boundary system is singular");
    outer_lu = w.partialPivLu();
  }

  out.trace.resize(neq, (tg.nt + 1) * nx2);
  out.energy.assign(tg.nt + 1, 0.0);
  const std::set<Index> keep = wanted_steps(tg);
  std::map<Index, Mat> stored;

  const auto record = [&](Index step) {
    for (Index i2 = 0; i2 < nx2; ++i2) out.trace.col(step * nx2 + i2) = u.col(idx(0, i2));
    out.energy[step] = detail::grid_l2sq(u, dx1, nx1, nx2, dx2);
    if (keep.count(step)) stored[step] = u;
  };
  record(0);

  // keep the outgoing and zero-speed parts, solve for the incoming ones
  const auto apply_bc = [&](Mat& f, double t) {
    if (n1p == 0) return;
    const Vec b = boundary_data(cfg, t);
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Index c = idx(0, i2);
      const Vec rest = f.col(c) - p1p * (p1p.transpose() * f.col(c));
      f.col(c) = rest + p1p * outer_lu.solve(Vec(rows_outer * (b - bu * rest)));
    }
  };
  const auto rate = [&](const Mat& f, Mat& r) {
    r.setZero();
    detail::add_rate_x1(cb1, f, nx1, nx2, dx1, r);
    if (sys.d == 2) detail::add_rate_x2(cb2, f, nx1, nx2, dx2, r);
  };

  // Heun / MUSCL marching
  Mat k1(neq, cols), k2(neq, cols), us(neq, cols);
  for (Index step = 1; step <= tg.nt; ++step) {
    const double t_new = tg.time(step);
    rate(u, k1);
    us = u + tg.dt * k1;
    apply_bc(us, t_new);
    rate(us, k2);
    u = 0.5 * (u + us + tg.dt * k2);
    apply_bc(u, t_new);
    record(step);
  }

  distribute_slices(tg, stored, out.slices, out.slices_prev, out.slices_next);
  return out;
}

TraceSet solve_boundary_traces(const Pipeline& pipe, const RunConfig& cfg,
                               const TimeGrid& tg, const EquilibriumField& ubar) {
  const Index nx2 = ubar.x2.size();
  const Index cols = (tg.nt + 1) * nx2;
  const Mat bu = pipe.norm.b_u();

  TraceSet tr;
  tr.mu1.resize(pipe.sig.n1_zero, cols);
  tr.ws.resize(pipe.red.y_layer.cols(), cols);
  for (Index step = 0; step <= tg.nt; ++step) {
    const Vec b = boundary_data(cfg, tg.time(step));
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Index c = step * nx2 + i2;
      const Vec d = b - bu * ubar.trace.col(c);
      tr.mu1.col(c) = pipe.red.solve_zero * d;
      tr.ws.col(c) = pipe.red.solve_layer * d;
      const double defect =
          (d - pipe.red.y_zero * tr.mu1.col(c) - pipe.red.y_layer * tr.ws.col(c)).norm();
      tr.reconstruction_defect = std::max(tr.reconstruction_defect, defect);
    }
  }

  tr.ws_dot.resize(tr.ws.rows(), cols);
  if (tr.ws.rows() > 0) {
    const double dt = tg.dt;
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const auto col = [&](Index step) { return tr.ws.col(step * nx2 + i2); };
      for (Index step = 0; step <= tg.nt; ++step) {
        const Index c = step * nx2 + i2;
        if (step == 0)
          tr.ws_dot.col(c) = (-3.0 * col(0) + 4.0 * col(1) - col(2)) / (2.0 * dt);
        else if (step == tg.nt)
          tr.ws_dot.col(c) =
              (3.0 * col(tg.nt) - 4.0 * col(tg.nt - 1) + col(tg.nt - 2)) / (2.0 * dt);
        else
          tr.ws_dot.col(c) = (col(step + 1) - col(step - 1)) / (2.0 * dt);
      }
    }
  }
  return tr;
}

ExpansionBase build_expansion_base(const RelaxationSystem& sys, const RunConfig& cfg) {
  ExpansionBase base;
  base.pipe = build_pipeline(sys);
  base.cfg = cfg;
  base.cfg.grid.y_max = derived_y_max(base.pipe, cfg.grid);
  base.cfg.grid.z_max = derived_z_max(base.pipe, cfg.grid);

  // compatibility of the data at t = 0 (normalized frame)
  {
    const Index nx2 = sys.d == 2 ? cfg.grid.nx2 : 1;
    Mat u0(sys.n - sys.r, nx2), b0(cfg.sys.b.rows(), nx2);
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const double x2 = sys.d == 2 ? cfg.grid.x2_max * i2 / nx2 : 0.0;
      u0.col(i2) = initial_state(cfg, 0.0, x2);
      b0.col(i2) = boundary_data(cfg, 0.0);
    }
    const ValidationReport rep = check_compatibility(base.pipe.norm, u0, b0, 1e-8);
    if (!rep.all_passed())
      fail(Err::Incompatible, "boundary data incompatible with u0 at t = 0:\n" + rep.summary());
  }

  base.tg = make_time_grid(base.pipe.norm, base.cfg.grid);
  base.ubar = solve_equilibrium(base.pipe, base.cfg, base.tg);
  base.traces = solve_boundary_traces(base.pipe, base.cfg, base.tg, base.ubar);
  base.y = linspace(0.0, base.cfg.grid.y_max, base.cfg.grid.ny + 1);
  base.z = linspace(0.0, base.cfg.grid.z_max, base.cfg.grid.nz + 1);

  const Mat r2 = base.pipe.red.r2_stable;
  base.m4s = r2.transpose() * base.pipe.la.eps_generator * r2;
  if (r2.cols() > 0) {
    const Eigen::EigenSolver<Mat> es(base.m4s);
    base.gamma = es.eigenvalues().real().cwiseAbs().minCoeff();
  }
  return base;
}

Mat eps_layer_profile(const ExpansionBase& base, double y) {
  const Mat& r2 = base.pipe.red.r2_stable;
  if (r2.cols() == 0) return Mat(r2.rows(), 0);
  return r2 * (y * base.m4s).exp();
}

namespace {

// Per-z-node sampling factors of the eps-layer source G for the sqrt-scale
// equations: column factors such that
//   P G(t, z_i / sqrt(eps)) = -proj_factors[i] * ws_dot(t) - tang_factors[i] * dws/dx2(t).
struct SourceFactors {
  std::vector<Mat> time_term;  // rows(P) x nw per z node
  std::vector<Mat> tang_term;
  bool active = false;
};

SourceFactors source_factors(const ExpansionBase& base, const Mat& proj, double eps,
                             LayerSource src) {
  SourceFactors f;
  const Index nw = base.pipe.red.r2_stable.cols();
  if (src == LayerSource::Zero || nw == 0) return f;
  f.active = true;
  const NormalizedSystem& sys = base.pipe.norm;
  const Mat lift = base.pipe.la.eps_lift;        // N
  const Mat kt = base.pipe.la.coupling_comp;     // Kt
  const Mat tang = sys.d == 2
                       ? Mat(sys.a11(1) * lift + sys.a12(1) * kt)
                       : Mat::Zero(sys.n - sys.r, kt.cols());
  const Index nz = base.z.size() - 1;
  f.time_term.resize(nz + 1);
  f.tang_term.resize(nz + 1);
  for (Index i = 0; i <= nz; ++i) {
    const Mat e = eps_layer_profile(base, base.z(i) / std::sqrt(eps));
    f.time_term[i] = proj * lift * e;
    f.tang_term[i] = proj * tang * e;
  }
  return f;
}

// periodic second-order centered x2 derivative of a trace row block
Mat tangential_derivative(const Mat& series, Index step, Index nx2, double dx2) {
  Mat out(series.rows(), nx2);
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index cp = step * nx2 + (i2 + 1) % nx2;
    const Index cm = step * nx2 + (i2 + nx2 - 1) % nx2;
    out.col(i2) = (series.col(cp) - series.col(cm)) / (2.0 * dx2);
  }
  return out;
}

}  // namespace

SqrtLayerField solve_sqrt_layer(const ExpansionBase& base, double eps, LayerSource src) {
  const Pipeline& pipe = base.pipe;
  const Index n1o = pipe.sig.n1_zero;
  const Index nz = base.z.size() - 1;
  const double dz = base.z(1) - base.z(0);
  const double dt = base.tg.dt;
  const Index nx2 = base.ubar.x2.size();
  const double dx2 = nx2 > 1 ? base.ubar.x2(1) - base.ubar.x2(0) : 1.0;

  SqrtLayerField out;
  out.z = base.z;

  // modal diagonalization of the (negated) parabolic block
  Eigen::SelfAdjointEigenSolver<Mat> es(pipe.la.parabolic);
  const Vec kappa = -es.eigenvalues().eval();  // positive diffusivities
  if (kappa.minCoeff() <= 0) fail(Err::NotDefinite, "parabolic block not negative definite");
  const Mat vd = es.eigenvectors();

  // Thomas factorization per mode, interior rows i = 1..nz-1 of
  // -(r/2) c_{i-1} + (1+r) c_i - (r/2) c_{i+1} = rhs_i with Dirichlet ends.
  // The diagonal after elimination depends only on r, so cache it.
  std::vector<Vec> diag_cache(n1o);
  for (Index j = 0; j < n1o; ++j) {
    const double r = kappa(j) * dt / (dz * dz);
    Vec diag(nz);  // diag(i-1) is the eliminated diagonal of interior row i
    diag(0) = 1.0 + r;
    for (Index i = 2; i < nz; ++i)
      diag(i - 1) = (1.0 + r) - (0.25 * r * r) / diag(i - 2);
    diag_cache[j] = diag;
  }

  const Mat p0t = pipe.sig.p0.transpose();
  const SourceFactors src_f = source_factors(base, p0t, eps, src);

  const UpwindSplit tang =
      nx2 > 1 ? upwind_split(Mat(p0t * pipe.norm.a11(1) * pipe.sig.p0)) : UpwindSplit{};
  if (nx2 > 1 && tang.radius * dt / dx2 >= 1.0)
    fail(Err::UnstableStep, "tangential advection violates the CFL bound");

  // modal source at (step, z node): n1o x nx2
  const auto modal_source = [&](Index step) {
    std::vector<Mat> g(nz + 1);
    if (!src_f.active) {
      for (Index i = 0; i <= nz; ++i) g[i] = Mat::Zero(n1o, nx2);
      return g;
    }
    Mat wdot(base.traces.ws_dot.rows(), nx2);
    for (Index i2 = 0; i2 < nx2; ++i2) wdot.col(i2) = base.traces.ws_dot.col(step * nx2 + i2);
    const Mat wtan = nx2 > 1 ? tangential_derivative(base.traces.ws, step, nx2, dx2)
                             : Mat::Zero(wdot.rows(), nx2);
    for (Index i = 0; i <= nz; ++i)
      g[i] = vd.transpose() * (-(src_f.time_term[i] * wdot) - (src_f.tang_term[i] * wtan));
    return g;
  };

  // state: per x2 column, modal coefficients on the z grid
  std::vector<Mat> c(nx2, Mat::Zero(nz + 1, n1o));
  const std::set<Index> keep = wanted_steps(base.tg);
  std::map<Index, Mat> stored;

  const auto record = [&](Index step) {
    if (!keep.count(step)) return;
    Mat m(n1o, (nz + 1) * nx2);
    for (Index i2 = 0; i2 < nx2; ++i2)
      for (Index i = 0; i <= nz; ++i)
        m.col(i2 * (nz + 1) + i) = vd * c[i2].row(i).transpose();
    stored[step] = m;
  };
  record(0);

  std::vector<Mat> g_old = modal_source(0);
  Vec rhs(nz + 1), sol(nz + 1), work(nz + 1);
  for (Index step = 1; step <= base.tg.nt; ++step) {
    std::vector<Mat> g_new = modal_source(step);

    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Vec mu_new = base.traces.mu1.col(step * nx2 + i2);
      for (Index j = 0; j < n1o; ++j) {
        const double r = kappa(j) * dt / (dz * dz);
        const double left = vd.col(j).dot(mu_new);  // Dirichlet trace, new level

        // explicit half + midpoint source; Dirichlet contributions folded in
        for (Index i = 1; i < nz; ++i)
          rhs(i) = c[i2](i, j) +
                   0.5 * r * (c[i2](i - 1, j) - 2.0 * c[i2](i, j) + c[i2](i + 1, j)) +
                   0.5 * dt * (g_old[i](j, i2) + g_new[i](j, i2));
        rhs(1) += 0.5 * r * left;

        const Vec& diag = diag_cache[j];
        work(1) = rhs(1);
        for (Index i = 2; i < nz; ++i)
          work(i) = rhs(i) + (0.5 * r / diag(i - 2)) * work(i - 1);
        sol(nz) = 0.0;
        sol(nz - 1) = work(nz - 1) / diag(nz - 2);
        for (Index i = nz - 2; i >= 1; --i)
          sol(i) = (work(i) + 0.5 * r * sol(i + 1)) / diag(i - 1);
        sol(0) = left;
        for (Index i = 0; i <= nz; ++i) c[i2](i, j) = sol(i);
      }
    }

    // tangential advection sub-step (periodic upwind)
    if (nx2 > 1 && tang.radius > 0) {
      std::vector<Mat> cn(nx2);
      for (Index i2 = 0; i2 < nx2; ++i2) {
        const Mat& cc = c[i2];
        const Mat& cm = c[(i2 + nx2 - 1) % nx2];
        const Mat& cp = c[(i2 + 1) % nx2];
        // advection acts on the physical components: map back, upwind, remap
        Mat phys = cc * vd.transpose();
        const Mat dmin = (cc - cm) * vd.transpose();
        const Mat dpls = (cp - cc) * vd.transpose();
        phys -= (dt / dx2) * (dmin * tang.plus.transpose() + dpls * tang.minus.transpose());
        cn[i2] = phys * vd;
      }
      c.swap(cn);
    }

    record(step);
    g_old.swap(g_new);
  }

  distribute_slices(base.tg, stored, out.m, out.m_prev, out.m_next);
  return out;
}

namespace {

// integral from z_i to z_max by trapezoid, accumulated from the top
Mat tail_integral(const Mat& f, Index nz, Index nx2, double dz) {
  Mat out = Mat::Zero(f.rows(), f.cols());
  for (Index i2 = 0; i2 < nx2; ++i2) {
    const Index base_col = i2 * (nz + 1);
    for (Index i = nz - 1; i >= 0; --i)
      out.col(base_col + i) = out.col(base_col + i + 1) +
                              0.5 * dz * (f.col(base_col + i) + f.col(base_col + i + 1));
  }
  return out;
}

struct CorrectorContext {
  const ExpansionBase* base;
  double eps;
  LayerSource src;
  Mat sinv_k;     // S^{-1} K
  Mat c1;         // P1^T A12 S^{-1} K
  Mat lam_inv;    // Lambda_1^{-1}
  Mat tang_coef;  // P1^T A211 P0 (d = 2)
  SourceFactors p1_source;
};

// correctors at one stored field m (n1o x (nz+1)*nx2) for the given step
void correctors_at(const CorrectorContext& ctx, const Mat& m, Index step, Mat& nu2, Mat& mu2) {
  const ExpansionBase& base = *ctx.base;
  const Index nz = base.z.size() - 1;
  const Index nx2 = base.ubar.x2.size();
  const double dz = base.z(1) - base.z(0);
  const double dx2 = nx2 > 1 ? base.ubar.x2(1) - base.ubar.x2(0) : 1.0;
  const Index neq = base.pipe.norm.n - base.pipe.norm.r;
  const Index np1 = base.pipe.sig.p1.cols();

  if (m.size() == 0) {
    nu2 = Mat::Zero(base.pipe.norm.r, (nz + 1) * nx2);
    mu2 = Mat::Zero(neq, (nz + 1) * nx2);
    return;
  }

  const Mat mz = detail::profile_derivative(m, nz, nx2, dz);
  nu2 = ctx.sinv_k * mz;

  Mat p1mu2 = -(ctx.c1 * mz);  // term 1 with the outer minus sign folded in below

  if (nx2 > 1 && ctx.tang_coef.size()) {
    // integral of m_x2 from z to z_max
    Mat mx2(m.rows(), m.cols());
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Index cp = (i2 + 1) % nx2, cm = (i2 + nx2 - 1) % nx2;
      for (Index i = 0; i <= nz; ++i)
        mx2.col(i2 * (nz + 1) + i) =
            (m.col(cp * (nz + 1) + i) - m.col(cm * (nz + 1) + i)) / (2.0 * dx2);
    }
    p1mu2 += ctx.tang_coef * tail_integral(mx2, nz, nx2, dz);
  }

  if (ctx.p1_source.active) {
    Mat p1g(np1, (nz + 1) * nx2);
    Mat wdot(base.traces.ws_dot.rows(), nx2), wtan;
    for (Index i2 = 0; i2 < nx2; ++i2) wdot.col(i2) = base.traces.ws_dot.col(step * nx2 + i2);
    wtan = nx2 > 1 ? tangential_derivative(base.traces.ws, step, nx2, dx2)
                   : Mat::Zero(wdot.rows(), nx2);
    for (Index i2 = 0; i2 < nx2; ++i2)
      for (Index i = 0; i <= nz; ++i)
        p1g.col(i2 * (nz + 1) + i) = -(ctx.p1_source.time_term[i] * wdot.col(i2)) -
                                     (ctx.p1_source.tang_term[i] * wtan.col(i2));
    p1mu2 -= tail_integral(p1g, nz, nx2, dz);
  }

  p1mu2 = ctx.lam_inv * p1mu2;  // -Lambda^{-1} [...] with sign folded above
  mu2 = base.pipe.sig.p1 * p1mu2;
}

}  // namespace

ExpansionComposite build_composite(const ExpansionBase& base, double eps, LayerSource src) {
  ExpansionComposite comp;
  comp.base = &base;
  comp.epsilon = eps;
  comp.source = src;
  comp.heat = solve_sqrt_layer(base, eps, src);

  CorrectorContext ctx;
  ctx.base = &base;
  ctx.eps = eps;
  ctx.src = src;
  const Mat& k = base.pipe.la.coupling;
  ctx.sinv_k = base.pipe.norm.s.lu().solve(k);
  const Mat p1t_a12 = base.pipe.sig.p1.transpose() * base.pipe.norm.a12(0);
  ctx.c1 = p1t_a12 * ctx.sinv_k;
  ctx.lam_inv = Mat(base.pipe.sig.lambda1.cwiseInverse().asDiagonal());
  if (base.pipe.norm.d == 2)
    ctx.tang_coef = base.pipe.sig.p1.transpose() * base.pipe.norm.a11(1) * base.pipe.sig.p0;
  ctx.p1_source = source_factors(base, Mat(base.pipe.sig.p1.transpose()), eps, src);

  const Index ns = static_cast<Index>(base.tg.slice_steps.size());
  comp.corr.nu2.resize(ns);
  comp.corr.mu2.resize(ns);
  comp.corr.nu2_prev.resize(ns);
  comp.corr.nu2_next.resize(ns);
  comp.corr.mu2_prev.resize(ns);
  comp.corr.mu2_next.resize(ns);
  for (Index s = 0; s < ns; ++s) {
    const Index step = base.tg.slice_steps[s];
    correctors_at(ctx, comp.heat.m[s], step, comp.corr.nu2[s], comp.corr.mu2[s]);
    if (comp.heat.m_prev[s].size())
      correctors_at(ctx, comp.heat.m_prev[s], step - 1, comp.corr.nu2_prev[s],
                    comp.corr.mu2_prev[s]);
    if (comp.heat.m_next[s].size())
      correctors_at(ctx, comp.heat.m_next[s], step + 1, comp.corr.nu2_next[s],
                    comp.corr.mu2_next[s]);
  }
  return comp;
}

Mat compose_state(const ExpansionComposite& comp, Index slice) {
  const ExpansionBase& base = *comp.base;
  const NormalizedSystem& sys = base.pipe.norm;
  const Index nx1 = base.ubar.x1.size() - 1;
  const Index nx2 = base.ubar.x2.size();
  const Index nz = base.z.size() - 1;
  const double sq = std::sqrt(comp.epsilon);
  const Index step = base.tg.slice_steps[slice];

  const Mat& lift = base.pipe.la.eps_lift;       // N
  const Mat& kt = base.pipe.la.coupling_comp;    // Kt
  const Mat& p0 = base.pipe.sig.p0;
  const Mat& r2 = base.pipe.red.r2_stable;
  const Index nw = r2.cols();

  // exact eps-layer transfer along the uniform x1 grid
  const double dx1 = base.ubar.x1(1) - base.ubar.x1(0);
  Mat estep, efac;
  if (nw > 0) {
    estep = ((dx1 / comp.epsilon) * base.m4s).exp();
    efac = Mat::Identity(nw, nw);
  }

  Mat state(sys.n, (nx1 + 1) * nx2);
  for (Index i1 = 0; i1 <= nx1; ++i1) {
    const double z_at = base.ubar.x1(i1) / sq;
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Index c = i2 * (nx1 + 1) + i1;
      Vec u = base.ubar.slices[slice].col(c);
      Vec v = Vec::Zero(sys.r);
      if (nw > 0) {
        const Vec w = r2 * (efac * base.traces.ws.col(step * nx2 + i2));
        u += lift * w;
        v += kt * w;
      }
      const Index zoff = i2 * (nz + 1);
      u += p0 * detail::interp_profile(comp.heat.m[slice], base.z, zoff, z_at);
      u += sq * detail::interp_profile(comp.corr.mu2[slice], base.z, zoff, z_at);
      v += sq * detail::interp_profile(comp.corr.nu2[slice], base.z, zoff, z_at);
      state.col(c) << u, v;
    }
    if (nw > 0) efac = efac * estep;
  }
  return state;
}

double boundary_identity_defect(const ExpansionComposite& comp) {
  const ExpansionBase& base = *comp.base;
  const NormalizedSystem& sys = base.pipe.norm;
  const Index nx2 = base.ubar.x2.size();
  const Index nz = base.z.size() - 1;
  const double sq = std::sqrt(comp.epsilon);
  double defect = 0.0;
  for (size_t s = 0; s < base.tg.slice_steps.size(); ++s) {
    const Index step = base.tg.slice_steps[s];
    const Mat state = compose_state(comp, static_cast<Index>(s));
    const Vec b = boundary_data(base.cfg, base.tg.time(step));
    for (Index i2 = 0; i2 < nx2; ++i2) {
      const Vec at0 = state.col(i2 * (base.ubar.x1.size()));
      const Vec corr = sys.b_u() * comp.corr.mu2[s].col(i2 * (nz + 1)) +
                       sys.b_v() * comp.corr.nu2[s].col(i2 * (nz + 1));
      defect = std::max(defect, (sys.b * at0 - b - sq * corr).norm());
    }
  }
  return defect;
}

}  // namespace relaxbc
