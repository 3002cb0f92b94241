#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "spectral/curve.hpp"
#include "spectral/errors.hpp"
#include "spectral/homology.hpp"
#include "spectral/kernels.hpp"
#include "spectral/periods.hpp"
#include "spectral/ratmat.hpp"
#include "spectral/theta.hpp"

using namespace spectral;

namespace {

struct Surface {
  SpectralCurve c;
  SheetTracker tr;
  HomologyBasis hb;
  PeriodData pd;
  AbelContext abel;
  KernelContext kc;
  explicit Surface(const SpectralCurve& cc)
      : c(cc), tr(c), hb(build_homology(c, tr)), pd(build_periods(c, tr, hb)),
        abel(c, tr, pd), kc(c, tr, hb, pd, abel) {}
};

// Shared fixtures so the homology/period/theta caches are built once.
Surface& genus1() {
  static Surface s(build_curve(random_phase_point(2, 4, 4)));
  return s;
}

Surface& genus2() {
  static Surface s(build_curve(random_phase_point(2, 5, 8)));
  return s;
}

VecC twist(const Surface& s) {
  VecC q(s.c.genus);
  for (int i = 0; i < s.c.genus; ++i) q(i) = cd(0.31, 0.17);
  return q;
}

cd loop_residue(const Surface& s, const ThirdKindForm& tk,
                const SurfacePoint& ctr) {
  Loop circ;
  circ.pts = circle_points(ctr.z, 0.03 * s.c.scale, 32);
  circ.y0 = continue_y_segment(s.c, ctr.z, ctr.y, circ.pts.front());
  cd val = s.kc.integrate_loop(
      circ, [&](cd z, cd y, const VecC& u) { return tk.eval(s.kc, z, y, u); },
      1e-11);
  return val / (2.0 * kPi * kI);
}

}  // namespace

TEST_CASE("square root section squares back to its source function") {
  for (Surface* sp : {&genus1(), &genus2()}) {
    Surface& s = *sp;
    auto pts = sample_points(s.kc, 4, 21);
    for (const SurfacePoint& x : pts) {
      cd sv = s.kc.sqrt_section(x);
      cd w = s.kc.w_section(x.z, x.y);
      CHECK(std::abs(sv * sv - w) <= 1e-10 * std::abs(w));
    }
    // Both sheets over the same z agree with the fiber values.
    for (int sheet = 0; sheet < 2; ++sheet) {
      SurfacePoint x = s.tr.point(s.c.anchor + cd(0.21, -0.13) * s.c.scale,
                                  sheet);
      cd sv = s.kc.sqrt_section(x);
      cd w = s.kc.w_section(x.z, x.y);
      CHECK(std::abs(sv * sv - w) <= 1e-10 * std::abs(w));
    }
  }
}

TEST_CASE("prime form is antisymmetric and has unit diagonal slope") {
  Surface& s = genus1();
  auto pts = sample_points(s.kc, 6, 7);
  for (int i = 0; i + 1 < static_cast<int>(pts.size()); i += 2) {
    cd e1 = s.kc.prime_form(pts[i], pts[i + 1]);
    cd e2 = s.kc.prime_form(pts[i + 1], pts[i]);
    CHECK(std::abs(e1) > 0.0);
    CHECK(std::abs(e1 + e2) <= 1e-10 * std::abs(e1));
  }
  // E(x, y) / (z(x) - z(y)) -> 1 as x -> y on one sheet.
  SurfacePoint x0 = pts[0];
  SurfacePoint x1 = s.tr.point(x0.z + cd(1e-4, 0.4e-4), x0.sheet);
  cd ratio = s.kc.prime_form(x1, x0) / (x1.z - x0.z);
  CHECK(std::abs(ratio - 1.0) <= 1e-6);
}

TEST_CASE("szego kernel normalizes on the diagonal and twists across cycles") {
  for (Surface* sp : {&genus1(), &genus2()}) {
    Surface& s = *sp;
    VecC q = twist(s);
    auto pts = sample_points(s.kc, 2, 7);

    // (z(x) - z(y)) S(x, y) -> 1; first-order convergence in the offset, so
    // the offset is chosen small enough to push the linear term below 1e-6.
    SurfacePoint x0 = pts[0];
    SurfacePoint x1 = s.tr.point(x0.z + cd(1e-6, 0.4e-6), x0.sheet);
    cd val = s.kc.szego(q, x1, x0) * (x1.z - x0.z);
    CHECK(std::abs(val - 1.0) <= 1e-6);

    // Trivial holonomy around every a-cycle, e^{-2 pi i q} around b-cycles
    // oriented counterclockwise around the branch tails.
    for (int al = 0; al < s.c.genus; ++al) {
      cd ha = s.kc.szego_holonomy(q, s.hb.a[al]);
      CHECK(std::abs(ha - 1.0) <= 1e-8);
      cd hb = s.kc.szego_holonomy(q, s.hb.b[al]);
      cd expect = std::exp(-2.0 * kPi * kI * q(al));
      CHECK(std::abs(hb - expect) <= 1e-8);
    }
  }
}

TEST_CASE("szego kernel rejects twists on the theta divisor") {
  Surface& s = genus1();
  VecC qbad(1);
  qbad(0) = 0.5 * (1.0 + s.pd.tau(0, 0));  // the unique theta zero at genus 1
  CHECK(s.kc.divisor_margin(qbad) < 1e-12);
  auto pts = sample_points(s.kc, 2, 7);
  CHECK_THROWS_AS((void)s.kc.szego(qbad, pts[0], pts[1]), OnThetaDivisor);
  // Coincident arguments on one sheet are rejected rather than returning inf.
  VecC q = twist(s);
  CHECK_THROWS_AS((void)s.kc.szego(q, pts[0], pts[0]), NearDiagonal);
}

TEST_CASE("bidifferential is symmetric with unit biresidue and no a-periods") {
  Surface& s = genus1();
  auto pts = sample_points(s.kc, 4, 11);
  cd b1 = s.kc.bidifferential(pts[0], pts[1]);
  cd b2 = s.kc.bidifferential(pts[1], pts[0]);
  CHECK(std::abs(b1 - b2) <= 1e-9 * std::abs(b1));

  // B(x, y) (z(x) - z(y))^2 -> 1 quadratically on the diagonal.
  SurfacePoint x0 = pts[2];
  SurfacePoint x1 = s.tr.point(x0.z + cd(1e-3, 0.4e-3), x0.sheet);
  cd dz = x1.z - x0.z;
  CHECK(std::abs(s.kc.bidifferential(x1, x0) * dz * dz - 1.0) <= 1e-5);

  // Integrating over an a-cycle in the first argument gives zero.
  cd aper = s.kc.integrate_loop(
      s.hb.a[0],
      [&](cd z, cd y, const VecC& u) {
        (void)u;
        auto fib = s.tr.points_above(z);
        int sh = 0;
        for (int i = 1; i < static_cast<int>(fib.size()); ++i)
          if (std::abs(fib[i].y - y) < std::abs(fib[sh].y - y)) sh = i;
        return s.kc.bidifferential(fib[sh], pts[1]);
      },
      1e-9);
  CHECK(std::abs(aper) <= 1e-8);
}

TEST_CASE("third kind differential has unit residues and no a-periods") {
  for (Surface* sp : {&genus1(), &genus2()}) {
    Surface& s = *sp;
    auto pts = sample_points(s.kc, 4, 7);
    ThirdKindForm tk = s.kc.third_kind(pts[0], pts[1]);

    cd rp = loop_residue(s, tk, pts[0]);
    cd rs = loop_residue(s, tk, pts[1]);
    CHECK(std::abs(rp - 1.0) <= 1e-8);
    CHECK(std::abs(rs + 1.0) <= 1e-8);

    for (int al = 0; al < s.c.genus; ++al) {
      cd aper = s.kc.integrate_loop(
          s.hb.a[al],
          [&](cd z, cd y, const VecC& u) { return tk.eval(s.kc, z, y, u); },
          1e-11);
      CHECK(std::abs(aper) <= 1e-8);
    }
  }
}

TEST_CASE("fay trisecant identity holds for random point pairs") {
  {
    Surface& s = genus1();
    ResidualReport r = verify_fay(s.kc, twist(s), 20, 99);
    CHECK(r.count == 20);
    CHECK(r.max_rel < 1e-8);
  }
  {
    Surface& s = genus2();
    ResidualReport r = verify_fay(s.kc, twist(s), 10, 99);
    CHECK(r.count == 10);
    CHECK(r.max_rel < 1e-8);
  }
}

TEST_CASE("twist derivative of the kernel matches the cycle integral") {
  Surface& s = genus1();
  VecC q = twist(s);
  VecC q2(1);
  q2(0) = cd(0.23, -0.11);
  auto pts = sample_points(s.kc, 6, 7);

  bool saw_direct_match = false;
  for (int i = 0; i + 1 < static_cast<int>(pts.size()); i += 2) {
    DqReport r = dq_szego_check(s.kc, q, 0, pts[i], pts[i + 1]);
    CHECK(r.corrected < 1e-6);
    // The homotopy offset is fixed by the positions of the two points
    // relative to the cycle representative, not by the twist.
    DqReport r2 = dq_szego_check(s.kc, q2, 0, pts[i], pts[i + 1]);
    CHECK(r2.k == r.k);
    CHECK(r2.corrected < 1e-6);
    if (r.k == 0) {
      saw_direct_match = true;
      CHECK(r.direct < 1e-6);
    }
  }
  CHECK(saw_direct_match);

  {
    Surface& s2 = genus2();
    VecC qq = twist(s2);
    auto pp = sample_points(s2.kc, 2, 7);
    for (int gamma = 0; gamma < 2; ++gamma) {
      DqReport r = dq_szego_check(s2.kc, qq, gamma, pp[0], pp[1]);
      CHECK(r.corrected < 1e-6);
    }
  }

  CHECK_THROWS_AS((void)dq_szego_check(s.kc, q, -1, pts[0], pts[1]),
                  ParameterError);
  CHECK_THROWS_AS((void)dq_szego_check(s.kc, q, 1, pts[0], pts[1]),
                  ParameterError);
}

TEST_CASE("kernel squared summed over a fiber gives a cauchy difference") {
  Surface& s = genus1();
  VecC q = twist(s);
  auto pts = sample_points(s.kc, 4, 13);
  CHECK(s.tr.points_above(s.c.anchor + cd(0.17, 0.05)).size() == 2);
  cd z1 = s.c.anchor + cd(0.11, -0.07);
  cd z2 = s.c.anchor + cd(-0.23, 0.19);
  CHECK(sheet_sum_residual(s.kc, q, pts[0], pts[1], z1) < 1e-8);
  CHECK(sheet_sum_residual(s.kc, q, pts[2], pts[3], z2) < 1e-8);
}

TEST_CASE("kernels do not depend on the choice of odd characteristic") {
  Surface& s = genus2();
  auto odds = ThetaContext(s.pd.tau).odd_characteristics();
  CHECK(odds.size() == 6);
  KernelContext alt(s.c, s.tr, s.hb, s.pd, s.abel, odds[1]);
  VecC q = twist(s);
  auto pts = sample_points(s.kc, 4, 17);
  for (int i = 0; i + 1 < static_cast<int>(pts.size()); i += 2) {
    cd e1 = s.kc.prime_form(pts[i], pts[i + 1]);
    cd e2 = alt.prime_form(pts[i], pts[i + 1]);
    CHECK(std::abs(e1 / e2 - 1.0) <= 1e-8);
    cd s1 = s.kc.szego(q, pts[i], pts[i + 1]);
    cd s2 = alt.szego(q, pts[i], pts[i + 1]);
    CHECK(std::abs(s1 / s2 - 1.0) <= 1e-8);
  }
  // An even characteristic is rejected as an override.
  HalfChar even;
  even.a = Eigen::VectorXd::Zero(2);
  even.b = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(KernelContext(s.c, s.tr, s.hb, s.pd, s.abel, even),
                  ParameterError);
}

TEST_CASE("wave factor normalizes at the base point") {
  Surface& s = genus1();
  VecC q = twist(s);
  auto pts = sample_points(s.kc, 2, 7);
  SurfacePoint x0 = pts[0];
  CHECK(s.kc.psi(q, x0, x0) == cd(1.0));
  SurfacePoint near = s.tr.point(x0.z + cd(1e-6, 0.3e-6), x0.sheet);
  CHECK(std::abs(s.kc.psi(q, near, x0) - 1.0) <= 1e-5);
  // The second fiber point over the base gives a finite off-diagonal value.
  SurfacePoint other = s.tr.point(x0.z, 1 - x0.sheet);
  cd v = s.kc.psi(q, other, x0);
  CHECK(std::isfinite(v.real()));
  CHECK(std::isfinite(v.imag()));
}
