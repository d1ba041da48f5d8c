#include <doctest.h>

#include <cmath>
#include <random>

#include "relaxbc/error.hpp"
#include "relaxbc/kreiss.hpp"
#include "relaxbc/layer_algebra.hpp"
#include "relaxbc/reduced_bc.hpp"
#include "support/fixtures.hpp"

using namespace relaxbc;

namespace {

// Closed-form determinant ratio for transport2 with boundary row (b0, b1).
// The symbol is [[0, -(eta + xi)], [-xi, 0]]; its stable eigenvalue is
// -sqrt(xi (xi + eta)) (principal branches) with eigenvector (s, 1),
// s = sqrt((xi + eta)/xi).  Normalizing the eigenvector and the boundary
// row gives
//   ratio = |b0 s + b1| / (sqrt(b0^2 + b1^2) sqrt(1 + |s|^2)).
double transport2_ratio(double b0, double b1, Complex xi, double eta) {
  const Complex s = std::sqrt((xi + eta) / xi);
  return std::abs(b0 * s + b1) /
         (std::hypot(b0, b1) * std::sqrt(1.0 + std::norm(s)));
}

}  // namespace

TEST_CASE("transport2 symbol and stable subspace at the reference point") {
  NormalizedSystem norm = normalize(fixtures::transport2());
  CharacteristicSignature sig = classify(norm);

  FrequencyPoint pt{Complex(1, 0), Vec(0), 0.0};
  CMat m = symbol_matrix(norm, pt);
  CMat expect{{Complex(0, 0), Complex(-1, 0)}, {Complex(-1, 0), Complex(0, 0)}};
  CHECK((m - expect).norm() < 1e-15);

  CMat basis = stable_symbol_basis(norm, sig, pt);
  REQUIRE(basis.cols() == 1);
  // span{(1,1)/sqrt 2} with restricted eigenvalue -1
  const Complex ray = basis(1, 0) / basis(0, 0);
  CHECK(std::abs(ray - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(std::abs(basis(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs((m * basis - Complex(-1, 0) * basis).norm()) < 1e-14);
}

TEST_CASE("transport2 determinant ratio matches the closed form") {
  NormalizedSystem norm = normalize(fixtures::transport2());
  CharacteristicSignature sig = classify(norm);

  const Complex xis[] = {Complex(1, 0), Complex(0.03, 0), Complex(2, 5),
                         Complex(0.4, -80), Complex(90, 0.1)};
  const double etas[] = {0.0, 0.01, 1.0, 37.0, 1e4};
  for (Complex xi : xis) {
    for (double eta : etas) {
      FrequencyPoint pt{xi, Vec(0), eta};
      const double got = boundary_determinant(norm, sig, pt);
      const double want = transport2_ratio(1.0, 1.0, xi, eta);
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("transport2 certification passes with the transmitting row") {
  NormalizedSystem norm = normalize(fixtures::transport2());
  CharacteristicSignature sig = classify(norm);
  KreissReport rep = certify_kreiss(norm, sig, default_kreiss_grid());
  CHECK(rep.passed);
  CHECK(rep.evaluated > 5000);
  // the grid reaches down to the true infimum 1/sqrt(2): the closed form
  // tends to it as Im(s^2) grows, and (xi, eta) = (1e-2 (1+i), 1e4) already
  // gives Im(s^2) = -5e5
  CHECK(rep.min_ratio > 1.0 / std::sqrt(2.0));
  CHECK(rep.min_ratio < 1.0 / std::sqrt(2.0) * 1.01);
}

TEST_CASE("transport2 certification fails with the reflecting row") {
  // (1, -1) annihilates the stable eigenvector at eta = 0 for real xi
  NormalizedSystem norm = normalize(fixtures::transport2(1.0, -1.0));
  CharacteristicSignature sig = classify(norm);
  KreissReport rep = certify_kreiss(norm, sig, default_kreiss_grid());
  CHECK_FALSE(rep.passed);
  CHECK(rep.min_ratio < 1e-8);
  CHECK(rep.argmin.eta == 0.0);
}

TEST_CASE("stable count mismatch is reported, not hidden") {
  // negative relaxation weight is outside the admissible half line and tips
  // eigenvalues across the axis; the count check must catch it
  NormalizedSystem norm = normalize(fixtures::wave4());
  CharacteristicSignature sig = classify(norm);
  FrequencyPoint pt{Complex(1, 0), Vec(0), -5.0};
  CHECK_THROWS_AS(boundary_determinant(norm, sig, pt), Error);
  try {
    boundary_determinant(norm, sig, pt);
  } catch (const Error& e) {
    CHECK(e.kind() == Err::StableCountMismatch);
  }
}

TEST_CASE("symbol stable count equals n_plus across random systems and grids") {
  std::mt19937 rng(8401);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    RelaxationSystem sys = fixtures::random_admissible(rng);
    NormalizedSystem norm = normalize(sys);
    CharacteristicSignature sig = classify(norm);
    for (int p = 0; p < 40; ++p) {
      FrequencyPoint pt;
      pt.xi = Complex(std::pow(10.0, -2 + 4 * u(rng)),
                      (u(rng) - 0.5) * std::pow(10.0, -2 + 4 * u(rng)));
      pt.eta = u(rng) < 0.25 ? 0.0 : std::pow(10.0, -2 + 6 * u(rng));
      pt.omega = Vec(norm.d - 1);
      for (Index k = 0; k < norm.d - 1; ++k)
        pt.omega(k) = (u(rng) - 0.5) * std::pow(10.0, -2 + 4 * u(rng));
      try {
        CMat basis = stable_symbol_basis(norm, sig, pt);
        CHECK(basis.cols() == sig.n_plus);
      } catch (const Error& e) {
        CHECK(e.kind() == Err::SplitAmbiguous);
      }
    }
  }
}

TEST_CASE("finite-eta stable subspace converges to the stiff-limit basis") {
  NormalizedSystem norm = normalize(fixtures::wave4());
  CharacteristicSignature sig = classify(norm);
  LayerAlgebra la = build_layer_algebra(norm, sig);

  const Complex xi(1.0, 0.4);
  const Vec omega(0);
  const CMat limit = limit_stable_basis(norm, sig, la, xi, omega);

  // the sqrt-scale eigenvector carries an O(eta^{-1/2}) tail in the damped
  // variables, so each factor 100 in eta buys one decade of angle
  double prev = 1e9;
  for (double eta : {1e2, 1e4, 1e6, 1e8}) {
    FrequencyPoint pt{xi, omega, eta};
    const CMat basis = stable_symbol_basis(norm, sig, pt);
    const double angle = subspace_angle(limit, basis);
    CHECK(angle < std::max(0.3 * prev, 1e-12));
    prev = angle;
  }
  CHECK(prev < 1e-3);
}
