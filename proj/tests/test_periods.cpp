#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/periods.hpp"

using namespace spectral;

namespace {

struct Setup {
  SpectralCurve c;
  SheetTracker tracker;
  HomologyBasis basis;
  PeriodData pd;
  explicit Setup(const PhasePoint& p)
      : c(build_curve(p)), tracker(c), basis(build_homology(c, tracker)),
        pd(build_periods(c, tracker, basis)) {}
  explicit Setup(const CharCoeffs& cc)
      : c(build_curve(cc)), tracker(c), basis(build_homology(c, tracker)),
        pd(build_periods(c, tracker, basis)) {}
};

CharCoeffs reference_genus1() {
  // w^2 = z(z-1)(z-2)(z-3) with poles placed far from the branch points
  CharCoeffs cc;
  cc.n = 2;
  cc.poles = {cd(5, 0), cd(6, 0), cd(7, 1), cd(8, -2)};
  Poly P = Poly::from_roots({cd(0, 0), cd(1, 0), cd(2, 0), cd(3, 0)});
  cc.Q_num = {P * cd(-1.0)};
  return cc;
}

}  // namespace

TEST_CASE("loop system is canonical for genus 1 and 2") {
  for (std::uint64_t seed : {4u, 8u}) {
    for (int m : {4, 5}) {
      PhasePoint p = random_phase_point(2, m, seed);
      SpectralCurve c = build_curve(p);
      SheetTracker tracker(c);
      HomologyBasis basis = build_homology(c, tracker);
      const int g = c.genus;
      REQUIRE(static_cast<int>(basis.a.size()) == g);
      REQUIRE(static_cast<int>(basis.b.size()) == g);
      for (int i = 0; i < 2 * g; ++i)
        for (int j = 0; j < 2 * g; ++j) {
          int want = (j == i + g) ? 1 : (i == j + g) ? -1 : 0;
          CHECK(basis.intersections(i, j) == want);
        }
    }
  }
}

TEST_CASE("period matrix is symmetric with positive definite imaginary part") {
  PhasePoint p = random_phase_point(2, 5, 23);
  Setup s(p);
  REQUIRE(s.c.genus == 2);
  CHECK((s.pd.tau - s.pd.tau.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.pd.tau.imag());
  CHECK(es.eigenvalues().minCoeff() > 0);
}

TEST_CASE("normalized forms have unit a-periods and tau b-periods") {
  PhasePoint p = random_phase_point(2, 5, 31);
  Setup s(p);
  const int g = s.c.genus;
  auto v = normalized_forms(s.c, s.pd.Minv);
  for (int al = 0; al < g; ++al) {
    auto ra = integrate_forms(s.c, s.basis.a[al].pts, s.basis.a[al].y0, v);
    auto rb = integrate_forms(s.c, s.basis.b[al].pts, s.basis.b[al].y0, v);
    for (int b = 0; b < g; ++b) {
      cd want_a = al == b ? 1.0 : 0.0;
      CHECK(std::abs(ra.values(b) - want_a) < 1e-9);
      CHECK(std::abs(rb.values(b) - s.pd.tau(b, al)) < 1e-8);
    }
  }
}

TEST_CASE("reference modulus and action integral") {
  Setup s(reference_genus1());
  REQUIRE(s.c.genus == 1);
  // independently computed through complete elliptic integrals
  cd tau_ref(0.0, 1.2792615711710064662);
  CHECK(std::abs(s.pd.tau(0, 0) - tau_ref) < 1e-9);
  CHECK(std::abs(agm_tau(s.c) - tau_ref) < 1e-12);
  // independently computed contour integral of y dz around the first cut
  cd I_ref(0.00012916428424933333, -0.0011904179600322722);
  double match =
      std::min(std::abs(s.pd.I(0) - I_ref), std::abs(s.pd.I(0) + I_ref));
  CHECK(match < 1e-9);
}

TEST_CASE("modulus from the mean agrees with the period matrix at genus 1") {
  for (std::uint64_t seed : {3u, 14u, 25u}) {
    PhasePoint p = random_phase_point(2, 4, seed);
    Setup s(p);
    REQUIRE(s.c.genus == 1);
    cd t1 = s.pd.tau(0, 0);
    cd t2 = agm_tau(s.c);
    CHECK(std::abs(t1 - t2) < 1e-8 * (1.0 + std::abs(t1)));
  }
}

TEST_CASE("pole residues recover the eigenvalue data") {
  PhasePoint p = random_phase_point(2, 4, 42);
  Setup s(p);
  for (int j = 0; j < p.m(); ++j) {
    REQUIRE(s.pd.lambda[j].size() == 2);
    CHECK(std::abs(s.pd.lambda[j](0) + s.pd.lambda[j](1)) < 1e-9);
    // the residue pair matches L_j as a set
    double d1 = std::abs(s.pd.lambda[j](0) - p.L[j](0)) +
                std::abs(s.pd.lambda[j](1) - p.L[j](1));
    double d2 = std::abs(s.pd.lambda[j](0) - p.L[j](1)) +
                std::abs(s.pd.lambda[j](1) - p.L[j](0));
    CHECK(std::min(d1, d2) < 1e-8);
  }
}

TEST_CASE("abel map basics") {
  PhasePoint p = random_phase_point(2, 4, 61);
  Setup s(p);
  AbelContext abel(s.c, s.tracker, s.pd);
  // the basepoint maps to zero
  CHECK(abel.map_point(s.c.anchor, 0).cwiseAbs().maxCoeff() < 1e-12);
  // involution: the images of the two points over z sum to the constant
  // image of the opposite anchor sheet, modulo the lattice
  VecC F = abel.flip_shift();
  for (cd z : {cd(0.9, 0.4), cd(-1.2, -0.8)}) {
    VecC u0 = abel.map_point(z, 0);
    VecC u1 = abel.map_point(z, 1);
    CHECK(near_lattice(u0 + u1 - F, s.pd.tau, 1e-8));
  }
  // closed loops integrate to lattice vectors
  VecC ua = abel.along_path(s.basis.a[0].pts, s.basis.a[0].y0);
  CHECK(near_lattice(ua, s.pd.tau, 1e-8));
  VecC ub = abel.along_path(s.basis.b[0].pts, s.basis.b[0].y0);
  CHECK(near_lattice(ub, s.pd.tau, 1e-8));
  // the infinite points obey the same involution relation
  VecC i0 = abel.to_infinity(0);
  VecC i1 = abel.to_infinity(1);
  CHECK(std::isfinite(i0(0).real()));
  CHECK(near_lattice(i0 + i1 - F, s.pd.tau, 1e-7));
}

TEST_CASE("lattice distance helper") {
  MatC tau(1, 1);
  tau(0, 0) = cd(0.3, 1.4);
  VecC u(1);
  u(0) = cd(2.0, 0.0) + cd(3.0, 0.0) * tau(0, 0) + cd(1e-10, -1e-10);
  Eigen::VectorXi m, k;
  double d = lattice_distance(u, tau, &m, &k);
  CHECK(d < 1e-9);
  CHECK(m(0) == 2);
  CHECK(k(0) == 3);
  u(0) += cd(0.21, 0.13);
  CHECK(!near_lattice(u, tau, 1e-6));
}
