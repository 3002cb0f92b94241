#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spectral/curve.hpp"
#include "spectral/ratmat.hpp"

using namespace spectral;

TEST_CASE("generator produces valid points deterministically") {
  PhasePoint p = random_phase_point(2, 4, 11);
  p.validate();
  PhasePoint q = random_phase_point(2, 4, 11);
  for (int j = 0; j < p.m(); ++j) {
    CHECK(std::abs(p.poles[j] - q.poles[j]) == 0.0);
    CHECK((p.G[j] - q.G[j]).cwiseAbs().maxCoeff() == 0.0);
  }
  PhasePoint r = random_phase_point(2, 4, 12);
  double diff = 0.0;
  for (int j = 0; j < p.m(); ++j) diff += std::abs(p.poles[j] - r.poles[j]);
  CHECK(diff > 1e-6);
}

TEST_CASE("assembled matrix has the residues it was built from") {
  PhasePoint p = random_phase_point(2, 3, 5);
  RationalMatrix A = assemble(p);
  MatC sum = MatC::Zero(2, 2);
  for (int j = 0; j < 3; ++j) sum += A.residues[j];
  CHECK(sum.cwiseAbs().maxCoeff() < 1e-10);

  cd z(0.37, -1.21);
  MatC direct = MatC::Zero(2, 2);
  for (int j = 0; j < 3; ++j) direct += A.residues[j] / (z - p.poles[j]);
  CHECK((A.evaluate(z) - direct).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(A.evaluate(z).trace()) < 1e-10);
  CHECK_THROWS_AS(A.evaluate(p.poles[1]), PoleEvaluation);
}

TEST_CASE("characteristic coefficients reproduce the determinant") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    PhasePoint p = random_phase_point(2, 4, seed);
    RationalMatrix A = assemble(p);
    CharCoeffs cc = char_coeffs(A);
    REQUIRE(cc.Q_num.size() == 1);
    for (cd z : {cd(0.11, 0.93), cd(-1.7, 0.4), cd(2.3, -2.1)}) {
      cd det = A.evaluate(z).determinant();
      CHECK(std::abs(cc.Q_value(2, z) - det) < 1e-9 * (1.0 + std::abs(det)));
    }
  }
}

TEST_CASE("characteristic coefficients for n = 3") {
  // three traceless residues summing to zero, built directly
  Rng rng(77);
  auto rmat = [&] {
    MatC M(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) M(r, c) = rng.cnormal();
    M(2, 2) = -M(0, 0) - M(1, 1);
    return M;
  };
  RationalMatrix A;
  A.poles = {cd(0, 0), cd(1, 0), cd(-0.5, 1.0)};
  MatC A0 = rmat(), A1 = rmat();
  A.residues = {A0, A1, -A0 - A1};
  CharCoeffs cc = char_coeffs(A);
  REQUIRE(cc.Q_num.size() == 2);
  for (cd z : {cd(0.4, 0.8), cd(-2.0, -0.3)}) {
    MatC Az = A.evaluate(z);
    // det(A - y) * (-1)^3 at y = 1.7 - 0.2i equals y^3 + Q2 y + Q3
    cd y(1.7, -0.2);
    MatC shifted = Az - y * MatC::Identity(3, 3);
    cd lhs = -shifted.determinant();
    cd rhs = y * y * y + cc.Q_value(2, z) * y + cc.Q_value(3, z);
    CHECK(std::abs(lhs - rhs) < 1e-8 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("gauge fixing diagonalizes at the reference point and is idempotent") {
  PhasePoint p = random_phase_point(2, 4, 21);
  cd z0(0.83, 0.21);
  PhasePoint q = gauge_fix(p, z0);
  MatC Aq = assemble(q).evaluate(z0);
  CHECK(std::abs(Aq(0, 1)) < 1e-9);
  CHECK(std::abs(Aq(1, 0)) < 1e-9);
  CHECK(lex_less(Aq(0, 0), Aq(1, 1)));
  for (int j = 0; j < q.m(); ++j)
    CHECK(std::abs(q.G[j].determinant() - cd(1, 0)) < 1e-9);
  // the assembled matrix is conjugated, so the characteristic data agrees
  CharCoeffs c1 = char_coeffs(assemble(p));
  CharCoeffs c2 = char_coeffs(assemble(q));
  cd zs(1.4, -0.6);
  CHECK(std::abs(c1.Q_value(2, zs) - c2.Q_value(2, zs)) <
        1e-8 * (1.0 + std::abs(c1.Q_value(2, zs))));
  PhasePoint q2 = gauge_fix(q, z0);
  for (int j = 0; j < q.m(); ++j)
    CHECK((q.G[j] - q2.G[j]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("validation rejects broken data") {
  PhasePoint p = random_phase_point(2, 3, 9);
  PhasePoint bad = p;
  bad.G[0] *= cd(1.1, 0.0);  // determinant drifts off one
  CHECK_THROWS_AS(bad.validate(), ConstraintViolation);
  bad = p;
  bad.L[0](0) += 0.1;  // trace of the residue no longer zero
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.L[1](0) = bad.L[1](1) = 0.0;  // collapsed (traceless) spectrum
  CHECK_THROWS_AS(bad.validate(), DegenerateSpectrum);
}

TEST_CASE("eigenvalue partial sums invert") {
  VecC lam(3);
  lam << cd(1.0, 0.5), cd(-0.25, 0.25), cd(-0.75, -0.75);
  VecC mu = mu_from_lambda(lam);
  REQUIRE(mu.size() == 2);
  CHECK(std::abs(mu(0) - lam(0)) < 1e-15);
  CHECK(std::abs(mu(1) - lam(0) - lam(1)) < 1e-15);
  VecC back = lambda_from_mu(mu);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(back(i) - lam(i)) < 1e-14);
}

TEST_CASE("phase point serialization round trip") {
  PhasePoint p = random_phase_point(2, 4, 33);
  Json j = p.to_json();
  PhasePoint q = PhasePoint::from_json(j);
  q.validate();
  for (int k = 0; k < p.m(); ++k) {
    CHECK(std::abs(p.poles[k] - q.poles[k]) < 1e-15);
    CHECK((p.G[k] - q.G[k]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((p.L[k] - q.L[k]).cwiseAbs().maxCoeff() < 1e-15);
  }
  Json broken = p.to_json();
  broken.erase("poles");
  CHECK_THROWS_AS(PhasePoint::from_json(broken), ParameterError);
}
