#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/periods.hpp"
#include "spectral/theta.hpp"

using namespace spectral;

namespace {

MatC sample_tau_g2() {
  MatC tau(2, 2);
  tau(0, 0) = cd(0.31, 1.12);
  tau(1, 1) = cd(-0.42, 0.97);
  tau(0, 1) = tau(1, 0) = cd(0.17, 0.33);
  return tau;
}

cd true_value(const ThetaVal& v, double ref_logscale) {
  return v.value * std::exp(v.logscale - ref_logscale);
}

}  // namespace

TEST_CASE("lattice-sum value at the square modulus") {
  MatC tau(1, 1);
  tau(0, 0) = cd(0, 1);
  ThetaContext th(tau);
  ThetaVal v = th.eval0(VecC::Zero(1));
  // independently summed: sum over n of exp(-pi n^2)
  cd ref(1.086434811213308014575, 0.0);
  CHECK(std::abs(true_value(v, 0.0) - ref) < 1e-12);
}

TEST_CASE("quasi-periodicity under the full lattice") {
  ThetaContext th(sample_tau_g2());
  const MatC& tau = th.tau();
  VecC z(2);
  z << cd(0.21, -0.34), cd(-0.11, 0.27);
  Eigen::VectorXi kvec(2), mvec(2);
  kvec << 2, -1;
  mvec << -1, 3;
  VecC shift = VecC::Zero(2);
  for (int i = 0; i < 2; ++i) {
    shift(i) += cd(mvec(i), 0);
    for (int j = 0; j < 2; ++j) shift(i) += tau(i, j) * cd(kvec(j), 0);
  }
  ThetaVal v1 = th.eval0(z);
  ThetaVal v2 = th.eval0(z + shift);
  // log theta(z + m + tau k) - log theta(z) = -i pi k tau k - 2 pi i k.z  (mod 2 pi i)
  cd lhs = std::log(v2.value / v1.value) + (v2.logscale - v1.logscale);
  cd rhs = 0.0;
  for (int i = 0; i < 2; ++i) {
    rhs += -kI * kPi * cd(kvec(i), 0) * tau(i, i) * cd(kvec(i), 0);
    for (int j = 0; j < 2; ++j)
      if (i != j) rhs += -kI * kPi * cd(kvec(i), 0) * tau(i, j) * cd(kvec(j), 0);
    rhs += -2.0 * kPi * kI * cd(kvec(i), 0) * z(i);
  }
  cd diff = (lhs - rhs) / (2.0 * kPi * kI);
  CHECK(std::abs(diff - std::round(diff.real())) < 1e-9);
}

TEST_CASE("quasi-periodicity with a characteristic") {
  ThetaContext th(sample_tau_g2());
  const MatC& tau = th.tau();
  auto odds = th.odd_characteristics();
  REQUIRE(odds.size() == 6);
  const HalfChar& ch = odds[2];
  VecC z(2);
  z << cd(0.05, 0.41), cd(0.33, -0.2);
  Eigen::VectorXi kvec(2), mvec(2);
  kvec << 1, 1;
  mvec << 2, -1;
  VecC shift = VecC::Zero(2);
  for (int i = 0; i < 2; ++i) {
    shift(i) += cd(mvec(i), 0);
    for (int j = 0; j < 2; ++j) shift(i) += tau(i, j) * cd(kvec(j), 0);
  }
  ThetaVal v1 = th.eval(z, ch);
  ThetaVal v2 = th.eval(z + shift, ch);
  cd lhs = std::log(v2.value / v1.value) + (v2.logscale - v1.logscale);
  cd rhs = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j)
      rhs += -kI * kPi * cd(kvec(i), 0) * tau(i, j) * cd(kvec(j), 0);
    rhs += -2.0 * kPi * kI * cd(kvec(i), 0) * (z(i) + ch.b(i));
    rhs += 2.0 * kPi * kI * ch.a(i) * cd(mvec(i), 0);
  }
  cd diff = (lhs - rhs) / (2.0 * kPi * kI);
  CHECK(std::abs(diff - std::round(diff.real())) < 1e-9);
}

TEST_CASE("parity by characteristic") {
  ThetaContext th(sample_tau_g2());
  VecC z(2);
  z << cd(0.13, 0.08), cd(-0.21, 0.17);
  // zero characteristic is even
  ThetaVal ve1 = th.eval0(z);
  ThetaVal ve2 = th.eval0((-z).eval());
  CHECK(std::abs(true_value(ve1, ve1.logscale) -
                 true_value(ve2, ve1.logscale)) < 1e-10);
  for (const auto& ch : th.odd_characteristics()) {
    ThetaVal vo0 = th.eval(VecC::Zero(2), ch);
    CHECK(std::abs(vo0.value) < 1e-10);  // odd functions vanish at the origin
    CHECK(vo0.grad.cwiseAbs().maxCoeff() > 1e-8);
    ThetaVal vo1 = th.eval(z, ch);
    ThetaVal vo2 = th.eval((-z).eval(), ch);
    CHECK(std::abs(true_value(vo1, vo1.logscale) +
                   true_value(vo2, vo1.logscale)) < 1e-10);
  }
}

TEST_CASE("derivatives match finite differences") {
  ThetaContext th(sample_tau_g2());
  VecC z(2);
  z << cd(0.4, -0.12), cd(-0.3, 0.22);
  ThetaVal v = th.eval0(z);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    VecC zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    ThetaVal vp = th.eval0(zp), vm = th.eval0(zm);
    cd fd = (true_value(vp, v.logscale) - true_value(vm, v.logscale)) / (2 * h);
    CHECK(std::abs(fd - v.grad(i)) < 1e-6 * (1.0 + std::abs(v.grad(i))));
    cd fd2 = (true_value(vp, v.logscale) - 2.0 * true_value(v, v.logscale) +
              true_value(vm, v.logscale)) /
             (h * h);
    CHECK(std::abs(fd2 - v.hess(i, i)) < 1e-4 * (1.0 + std::abs(v.hess(i, i))));
  }
  // mixed second derivative
  VecC zpp = z, zpm = z, zmp = z, zmm = z;
  zpp(0) += h; zpp(1) += h;
  zpm(0) += h; zpm(1) -= h;
  zmp(0) -= h; zmp(1) += h;
  zmm(0) -= h; zmm(1) -= h;
  cd mixed = (true_value(th.eval0(zpp), v.logscale) -
              true_value(th.eval0(zpm), v.logscale) -
              true_value(th.eval0(zmp), v.logscale) +
              true_value(th.eval0(zmm), v.logscale)) /
             (4 * h * h);
  CHECK(std::abs(mixed - v.hess(0, 1)) < 1e-4 * (1.0 + std::abs(v.hess(0, 1))));
}

TEST_CASE("characteristic counts") {
  for (int g = 1; g <= 3; ++g) {
    MatC tau = MatC::Identity(g, g) * cd(0, 1);
    ThetaContext th(tau);
    int want = g == 1 ? 1 : g == 2 ? 6 : 28;
    CHECK(static_cast<int>(th.odd_characteristics().size()) == want);
  }
}

TEST_CASE("works on a period matrix from an actual curve") {
  PhasePoint p = random_phase_point(2, 5, 23);
  SpectralCurve c = build_curve(p);
  SheetTracker tracker(c);
  HomologyBasis basis = build_homology(c, tracker);
  PeriodData pd = build_periods(c, tracker, basis);
  ThetaContext th(pd.tau);
  ThetaVal v = th.eval0(VecC::Zero(2));
  CHECK(std::abs(v.value) > 1e-6);  // the origin is not on the divisor
  // a generic odd characteristic exists with a healthy gradient
  bool healthy = false;
  for (const auto& ch : th.odd_characteristics())
    if (th.eval(VecC::Zero(2), ch).grad.cwiseAbs().maxCoeff() > 1e-6)
      healthy = true;
  CHECK(healthy);
}
