#pragma once

#include <algorithm>
#include <random>

#include "relaxbc/linalg.hpp"
#include "relaxbc/system.hpp"

namespace relaxbc {
namespace fixtures {

// 2x2 relaxed transport: u_t + v_x = 0, v_t + u_x = -v/eps.  The boundary
// x = 0 is characteristic of type II (A_11 = 0) and everything about the
// model is available in closed form.
inline RelaxationSystem transport2(double b0 = 1.0, double b1 = 1.0) {
  RelaxationSystem sys;
  sys.d = 1;
  sys.n = 2;
  sys.r = 1;
  sys.a = {Mat{{0.0, 1.0}, {1.0, 0.0}}};
  sys.q = Mat{{0.0, 0.0}, {0.0, -1.0}};
  sys.a0 = Mat::Identity(2, 2);
  sys.b = Mat(1, 2);
  sys.b << b0, b1;
  return sys;
}

// 4x4 model with one outgoing, one zero and one incoming mode in the
// equilibrium block plus two damped variables; exercises every branch of the
// layer algebra with hand-checkable numbers.
inline RelaxationSystem wave4(const Mat& b = Mat()) {
  RelaxationSystem sys;
  sys.d = 1;
  sys.n = 4;
  sys.r = 2;
  sys.a = {Mat{{1.0, 0.0, 0.0, 0.0},
               {0.0, 0.0, 1.0, 0.0},
               {0.0, 1.0, 1.0, 0.0},
               {0.0, 0.0, 0.0, 1.0}}};
  sys.q = Mat::Zero(4, 4);
  sys.q(2, 2) = -1.0;
  sys.q(3, 3) = -1.0;
  sys.a0 = Mat::Identity(4, 4);
  if (b.size()) {
    sys.b = b;
  } else {
    sys.b = Mat{{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 1.0}};
  }
  return sys;
}

struct RandomOptions {
  Index max_n = 12;
  Index max_r = 12;
  Index max_d = 2;
  bool conjugate = true;  // hide the normalized frame behind a congruence
};

inline Mat random_gaussian(std::mt19937& rng, Index rows, Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Mat random_orthogonal(std::mt19937& rng, Index n) {
  Eigen::HouseholderQR<Mat> qr(random_gaussian(rng, n, n));
  Mat q = qr.householderQ();
  return q;
}

// Draws an admissible type-II system.  The construction starts from the
// normalized frame (symmetric coefficients, source diag(0, s)) so that all
// structural conditions hold by design, with conditioning floors on A_1, the
// zero-mode coupling and the eps-layer block so the derived quantities stay
// well separated from the tolerance thresholds.  B mixes the rows of the
// incoming eigenprojector of A_1.
inline RelaxationSystem random_admissible(std::mt19937& rng,
                                          const RandomOptions& opt = RandomOptions()) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 400; ++attempt) {
    const Index n = 3 + static_cast<Index>(unif(rng) * static_cast<double>(opt.max_n - 2));
    const Index r_hi = std::min<Index>(n - 1, opt.max_r);
    const Index r = 1 + static_cast<Index>(unif(rng) * static_cast<double>(r_hi));
    if (n - r < 1 || r < 1) continue;
    const Index max_zero = std::min(r, n - r);
    const Index n1o = 1 + static_cast<Index>(unif(rng) * static_cast<double>(max_zero));
    if (n1o > max_zero) continue;
    const Index d = 1 + static_cast<Index>(unif(rng) * static_cast<double>(opt.max_d));

    // A_11 with an exact kernel of dimension n1o.
    const Mat v = random_orthogonal(rng, n - r);
    Vec lam = Vec::Zero(n - r);
    for (Index i = n1o; i < n - r; ++i) {
      lam(i) = 0.5 + 1.5 * unif(rng);
      if (unif(rng) < 0.5) lam(i) = -lam(i);
    }
    const Mat a11 = v * lam.asDiagonal() * v.transpose();
    const Mat p0 = v.leftCols(n1o);

    const Mat a12 = random_gaussian(rng, n - r, r) * 0.6;
    const Mat a22h = random_gaussian(rng, r, r);
    const Mat a22 = 0.5 * (a22h + a22h.transpose());

    Mat a1(n, n);
    a1.topLeftCorner(n - r, n - r) = a11;
    a1.topRightCorner(n - r, r) = a12;
    a1.bottomLeftCorner(r, n - r) = a12.transpose();
    a1.bottomRightCorner(r, r) = a22;

    {
      Eigen::SelfAdjointEigenSolver<Mat> es(a1);
      if (es.eigenvalues().cwiseAbs().minCoeff() < 5e-2) continue;
    }
    const Mat k = a12.transpose() * p0;
    {
      Eigen::JacobiSVD<Mat> svd(k);
      if (svd.singularValues().minCoeff() < 5e-2) continue;
    }
    if (r > n1o) {
      const Mat kt = orthonormal_complement(k);
      Mat p1 = v.rightCols(n - r - n1o);
      Vec nz = lam.tail(n - r - n1o);
      const Mat schur =
          a22 - a12.transpose() * p1 * nz.cwiseInverse().asDiagonal() * p1.transpose() * a12;
      Eigen::SelfAdjointEigenSolver<Mat> es(kt.transpose() * schur * kt);
      if (es.eigenvalues().cwiseAbs().minCoeff() < 2e-2) continue;
    }

    RelaxationSystem sys;
    sys.d = d;
    sys.n = n;
    sys.r = r;
    sys.a.push_back(a1);
    for (Index j = 1; j < d; ++j) {
      Mat aj = random_gaussian(rng, n, n) * 0.7;
      sys.a.push_back(0.5 * (aj + aj.transpose()));
    }
    const Mat w = random_gaussian(rng, r, r);
    sys.q = Mat::Zero(n, n);
    sys.q.bottomRightCorner(r, r) =
        -(w.transpose() * w + 0.3 * Mat::Identity(r, r));
    sys.a0 = Mat::Identity(n, n);

    SpectralSplit sa1 = symmetric_eigensplit(a1);
    const Index n_plus = sa1.p_plus.cols();
    Mat mix = Mat::Identity(n_plus, n_plus) + 0.3 * random_gaussian(rng, n_plus, n_plus);
    {
      Eigen::JacobiSVD<Mat> svd(mix);
      if (n_plus > 0 && svd.singularValues().minCoeff() < 0.2) continue;
    }
    sys.b = mix * sa1.p_plus.transpose();

    if (opt.conjugate) {
      Mat c = Mat::Identity(n, n) + 0.25 * random_gaussian(rng, n, n);
      Eigen::JacobiSVD<Mat> svd(c);
      if (svd.singularValues().minCoeff() < 0.25) continue;
      const Mat cinv = c.inverse();
      for (Mat& aj : sys.a) aj = c * aj * cinv;
      sys.q = c * sys.q * cinv;
      sys.a0 = cinv.transpose() * cinv;
      sys.b = sys.b * cinv;
    }
    return sys;
  }
  throw std::runtime_error("random_admissible: no acceptable draw");
}

}  // namespace fixtures
}  // namespace relaxbc
