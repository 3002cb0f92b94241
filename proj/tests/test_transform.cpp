// Round-trip, invariance, and structural checks for the spectral transform.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <spectral/json_io.hpp>
#include <spectral/transform.hpp>

#include <cmath>
#include <memory>

using namespace spectral;

namespace {

// One reusable forward/inverse run per configuration; the surface stack
// rebuild inside each call dominates the cost, so results are shared
// between test cases.
struct Run {
  PhasePoint input;
  cd z0;
  PhasePoint canonical;
  SpectralData data;
  PhasePoint rebuilt;

  Run(int m, uint64_t seed) : input(random_phase_point(2, m, seed)) {
    CharCoeffs cc = char_coeffs(assemble(gauge_fix(input, cd(0.9, 1.3))));
    SpectralCurve c = build_curve(cc);
    std::vector<cd> special = input.poles;
    for (cd b : c.branch) special.push_back(b);
    z0 = default_basepoint(special);
    data = forward_transform(input, z0, &canonical);
    rebuilt = inverse_transform(data);
  }
};

const Run& genus1_run() {
  static Run r(4, 4);
  return r;
}

const Run& genus2_run() {
  static Run r(5, 8);
  return r;
}

}  // namespace

TEST_CASE("forward and inverse transforms close a round trip") {
  for (const Run* r : {&genus1_run(), &genus2_run()}) {
    CHECK(phase_point_distance(r->rebuilt, r->canonical) < 1e-9);
    // The canonical representative carries the same connection up to a
    // constant diagonal conjugation: same curve, same invariants.
    CharCoeffs cc = char_coeffs(assemble(gauge_fix(r->input, r->z0)));
    for (size_t k = 0; k < cc.Q_num.size(); ++k) {
      REQUIRE(cc.Q_num[k].degree() == r->data.cc.Q_num[k].degree());
      for (int i = 0; i <= cc.Q_num[k].degree(); ++i)
        CHECK(std::abs(cc.Q_num[k].coeff(i) - r->data.cc.Q_num[k].coeff(i)) <
              1e-8);
    }
    r->canonical.validate(1e-8);
    r->rebuilt.validate(1e-8);
  }
}

TEST_CASE("toric factors are unimodular in determinant") {
  for (const Run* r : {&genus1_run(), &genus2_run()}) {
    REQUIRE(static_cast<int>(r->data.R.size()) == r->input.m());
    for (const VecC& rj : r->data.R)
      CHECK(std::abs(rj(0) * rj(1) - cd(1.0, 0.0)) < 1e-10);
    for (size_t j = 0; j < r->data.R.size(); ++j)
      CHECK(std::abs(std::exp(r->data.rho[j](0)) - r->data.R[j](0)) < 1e-8);
  }
}

TEST_CASE("serialized spectral data reproduces the reconstruction") {
  const Run& r = genus1_run();
  Json j = r.data.to_json();
  // Complex numbers are stored as [re, im] pairs.
  REQUIRE(j.at("z0").is_array());
  REQUIRE(j.at("z0").size() == 2);
  CHECK(j.at("z0")[0].get<double>() == doctest::Approx(r.z0.real()));
  SpectralData back = SpectralData::from_json(j);
  PhasePoint rebuilt = inverse_transform(back);
  CHECK(phase_point_distance(rebuilt, r.canonical) < 1e-9);

  REQUIRE(j.contains("curve"));
  REQUIRE(j.contains("q_lift"));
  REQUIRE(j.at("coords").contains("I"));
  Json broken = j;
  broken.erase("q");
  CHECK_THROWS_AS(SpectralData::from_json(broken), ParameterError);
}

TEST_CASE("spectral invariants do not depend on the base point") {
  PhasePoint p = random_phase_point(2, 4, 7);
  CharCoeffs cc = char_coeffs(assemble(gauge_fix(p, cd(0.9, 1.3))));
  SpectralCurve c = build_curve(cc);
  std::vector<cd> special = p.poles;
  for (cd b : c.branch) special.push_back(b);
  cd z0 = default_basepoint(special);
  cd z1 = z0 + cd(0.37, -0.61) * c.scale;
  SpectralData s1 = forward_transform(p, z0);
  SpectralData s2 = forward_transform(p, z1);

  CHECK((s1.I - s2.I).norm() < 1e-9);
  for (size_t k = 0; k < s1.cc.Q_num.size(); ++k)
    for (int i = 0; i <= s1.cc.Q_num[k].degree(); ++i)
      CHECK(std::abs(s1.cc.Q_num[k].coeff(i) - s2.cc.Q_num[k].coeff(i)) <
            1e-9);
  for (size_t jj = 0; jj < s1.mu.size(); ++jj)
    CHECK((s1.mu[jj] - s2.mu[jj]).norm() < 1e-9);

  SurfaceStack st(build_curve(s1.cc));
  CHECK(lattice_distance(s1.q - s2.q, st.pd.tau, nullptr, nullptr) < 1e-9);

  // Moving the base point translates the toric fiber uniformly: the
  // log-ratio offsets agree across poles up to one common shift.
  VecC d0 = s1.rho[0] - s2.rho[0];
  for (size_t jj = 1; jj < s1.rho.size(); ++jj)
    CHECK((s1.rho[jj] - s2.rho[jj] - d0).norm() < 1e-9);
}

TEST_CASE("forward transform is idempotent on its canonical representative") {
  const Run& r = genus1_run();
  PhasePoint again;
  SpectralData sd = forward_transform(r.canonical, r.z0, &again);
  CHECK(phase_point_distance(again, r.canonical) < 1e-9);
  CHECK((sd.q - r.data.q).norm() < 1e-10);
  for (size_t j = 0; j < sd.R.size(); ++j)
    CHECK((sd.R[j] - r.data.R[j]).norm() < 1e-8);
}

TEST_CASE("wave matrix is normalized at the base point and inverts by swap") {
  const Run& r = genus2_run();
  SurfaceStack s(build_curve(r.data.cc));
  MatC at_base = wave_matrix(s, r.data.q, r.z0, r.z0);
  CHECK((at_base - MatC::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  cd z = r.z0 + cd(0.29, 0.41) * s.c.scale;
  MatC W = wave_matrix(s, r.data.q, z, r.z0);
  MatC Wback = wave_matrix(s, r.data.q, r.z0, z);
  CHECK((W * Wback - MatC::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("wave matrix columns solve the eigenvalue problem") {
  for (const Run* r : {&genus1_run(), &genus2_run()}) {
    RationalMatrix A = assemble(r->canonical);
    SurfaceStack s(build_curve(r->data.cc));
    cd z = r->z0 + cd(-0.33, 0.52) * s.c.scale;
    MatC W = wave_matrix(s, r->data.q, z, r->z0);
    MatC Az = A.evaluate(z);
    for (int b = 0; b < 2; ++b) {
      cd y = s.tracker.point(z, b).y;
      VecC col = W.col(b);
      double resid = (Az * col - y * col).norm() / col.norm();
      CHECK(resid < 1e-8);
    }
  }
}

TEST_CASE("eigenvector pole divisor sits on the expected sheet") {
  const Run& r = genus2_run();
  SurfaceStack s(build_curve(r.data.cc));
  RationalMatrix A = assemble(gauge_fix(r.input, r.z0));
  // Align the gauge with the sheets the same way the forward map does.
  cd y0 = s.tracker.point(r.z0, 0).y;
  MatC A0 = A.evaluate(r.z0);
  PhasePoint pv = gauge_fix(r.input, r.z0);
  if (std::abs(A0(0, 0) - y0) > std::abs(A0(1, 1) - y0)) {
    for (MatC& G : pv.G) {
      G.row(0).swap(G.row(1));
      G.col(0) *= -1.0;
    }
    A = assemble(pv);
  }
  std::vector<SurfacePoint> div = eigen_divisor(s, A, r.z0);
  REQUIRE(static_cast<int>(div.size()) == s.c.genus);
  for (const SurfacePoint& d : div) {
    MatC Ad = A.evaluate(d.z);
    CHECK(std::abs(d.y - Ad(1, 1)) < 1e-8);
  }
}

TEST_CASE("transform rejects unsupported inputs") {
  PhasePoint p3 = random_phase_point(3, 4, 2);
  CHECK_THROWS_AS(forward_transform(p3, cd(2.0, 2.0)), ParameterError);

  // A twist parked on the theta divisor must be refused by the inverse map.
  const Run& r = genus1_run();
  SurfaceStack s(build_curve(r.data.cc));
  SpectralData bad = r.data;
  bad.q = VecC::Zero(1);
  bad.q(0) = 0.5 + 0.5 * s.pd.tau(0, 0);
  CHECK_THROWS_AS(inverse_transform(bad), OnThetaDivisor);
}
