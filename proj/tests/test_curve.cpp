#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spectral/curve.hpp"
#include "spectral/homology.hpp"

using namespace spectral;

TEST_CASE("structural counts for hyperelliptic reductions") {
  for (int m : {3, 4, 5}) {
    PhasePoint p = random_phase_point(2, m, 100 + m);
    SpectralCurve c = build_curve(p);
    CHECK(c.P.degree() == 2 * m - 4);
    CHECK(static_cast<int>(c.branch.size()) == 2 * (m - 2));
    CHECK(c.genus == m - 3);
    for (size_t i = 0; i + 1 < c.branch.size(); ++i)
      CHECK(lex_less(c.branch[i], c.branch[i + 1]));
  }
}

TEST_CASE("fiber values solve the characteristic equation") {
  PhasePoint p = random_phase_point(2, 4, 7);
  RationalMatrix A = assemble(p);
  SpectralCurve c = build_curve(p);
  for (cd z : {cd(0.21, 0.55), cd(-1.3, -0.7), c.anchor}) {
    auto ys = c.roots_at(z);
    REQUIRE(ys.size() == 2);
    CHECK(std::abs(ys[0] + ys[1]) < 1e-10);
    MatC Az = A.evaluate(z);
    for (cd y : ys) {
      MatC shifted = Az - y * MatC::Identity(2, 2);
      CHECK(std::abs(shifted.determinant()) < 1e-9);
    }
  }
}

TEST_CASE("near-branch evaluation is refused") {
  PhasePoint p = random_phase_point(2, 4, 7);
  SpectralCurve c = build_curve(p);
  cd e = c.branch[0];
  CHECK_THROWS_AS(c.roots_at(e + cd(1e-12, 0)), NearBranchPoint);
}

TEST_CASE("monodromy around a single branch point swaps the sheets") {
  PhasePoint p = random_phase_point(2, 5, 40);
  SpectralCurve c = build_curve(p);
  cd e = c.branch[2];
  double r = 1e300;
  for (cd o : c.branch)
    if (o != e) r = std::min(r, dist(e, o));
  for (cd t : c.poles) r = std::min(r, dist(e, t));
  r *= 0.4;
  auto loop = circle_points(e, r, 48);
  cd y0 = c.roots_at(loop[0])[0];
  cd y1 = continue_y_path(c, loop, y0);
  CHECK(std::abs(y1 + y0) < 1e-8 * (1.0 + std::abs(y0)));
  cd y2 = continue_y_path(c, loop, y1);
  CHECK(std::abs(y2 - y0) < 1e-8 * (1.0 + std::abs(y0)));
}

TEST_CASE("monodromy around a branch pair is trivial") {
  PhasePoint p = random_phase_point(2, 4, 13);
  SpectralCurve c = build_curve(p);
  cd e0 = c.branch[0], e1 = c.branch[1];
  double clear = 1e300;
  for (cd o : c.branch)
    if (o != e0 && o != e1) clear = std::min(clear, dist_to_segment(o, e0, e1));
  for (cd t : c.poles) clear = std::min(clear, dist_to_segment(t, e0, e1));
  auto loop = capsule_loop(e0, e1, 0.5 * clear);
  cd y0 = c.roots_at(loop[0])[0];
  cd y1 = continue_y_path(c, loop, y0);
  CHECK(std::abs(y1 - y0) < 1e-8 * (1.0 + std::abs(y0)));
}

TEST_CASE("router keeps clearance and is deterministic") {
  std::vector<cd> obstacles{cd(0, 0), cd(2, 0.1), cd(-1, 1)};
  cd from(-3, -0.2), to(3, 0.3);
  auto path = route_avoiding(from, to, obstacles);
  REQUIRE(path.size() >= 2);
  CHECK(path.front() == from);
  CHECK(path.back() == to);
  // each obstacle's clearance is 0.3 of the distance to its nearest neighbor
  for (size_t i = 0; i < obstacles.size(); ++i) {
    double dmin = 1e300;
    for (size_t k = 0; k < obstacles.size(); ++k)
      if (k != i) dmin = std::min(dmin, dist(obstacles[i], obstacles[k]));
    double want = 0.3 * dmin;
    for (size_t s = 0; s + 1 < path.size(); ++s) {
      double d = dist_to_segment(obstacles[i], path[s], path[s + 1]);
      CHECK(d > 0.98 * want);
    }
  }
  auto path2 = route_avoiding(from, to, obstacles);
  REQUIRE(path.size() == path2.size());
  for (size_t i = 0; i < path.size(); ++i) CHECK(path[i] == path2[i]);
}

TEST_CASE("sheet tracker labels are stable and consistent") {
  PhasePoint p = random_phase_point(2, 4, 19);
  SpectralCurve c = build_curve(p);
  SheetTracker tracker(c);
  cd z(0.4, -0.9);
  auto pts = tracker.points_above(z);
  REQUIRE(pts.size() == 2);
  CHECK(std::abs(pts[0].y + pts[1].y) < 1e-9);
  CHECK(pts[0].sheet == 0);
  CHECK(pts[1].sheet == 1);
  // labels vary continuously: nearby base points give nearby branch values
  auto pts2 = tracker.points_above(z + cd(1e-3, 1e-3));
  CHECK(std::abs(pts[0].y - pts2[0].y) < 1e-2);
  // anchor fiber reproduces the stored roots
  auto pa = tracker.points_above(c.anchor);
  CHECK(std::abs(pa[0].y - c.anchor_roots[0]) < 1e-12);
}

TEST_CASE("degenerate inputs are rejected") {
  // reducible: diagonal residues make det A a perfect square
  RationalMatrix A;
  A.poles = {cd(0, 0), cd(1, 0), cd(3, 0)};
  auto d = [](double a) {
    MatC M = MatC::Zero(2, 2);
    M(0, 0) = a;
    M(1, 1) = -a;
    return M;
  };
  A.residues = {d(1), d(1), d(-2)};
  CharCoeffs cc = char_coeffs(A);
  auto rep = discriminant_check(cc);
  CHECK(!rep.irreducible);
  CHECK_THROWS_AS(build_curve(cc), ReducibleCurve);

  // odd degree: the fiber over infinity ramifies
  CharCoeffs odd;
  odd.n = 2;
  odd.poles = {cd(0, 0), cd(1, 0), cd(-1, 0), cd(0, 1)};
  odd.Q_num = {Poly({cd(1, 0), cd(0, 0), cd(0.5, 0), cd(-1, 0)})};
  CHECK_THROWS_AS(build_curve(odd), InfinityIsBranchPoint);

  // double branch point
  CharCoeffs sing;
  sing.n = 2;
  sing.poles = odd.poles;
  Poly dbl = Poly::from_roots({cd(0, 0), cd(0, 0), cd(1, 0), cd(2, 0)});
  sing.Q_num = {dbl * cd(-1.0)};
  CHECK_THROWS_AS(build_curve(sing), SingularCurve);
}

TEST_CASE("curve serialization round trip") {
  PhasePoint p = random_phase_point(2, 4, 55);
  SpectralCurve c = build_curve(p);
  Json j = c.to_json();
  SpectralCurve c2 = SpectralCurve::from_json(j);
  CHECK(c2.genus == c.genus);
  CHECK(std::abs(c2.anchor - c.anchor) < 1e-15);
  REQUIRE(c2.branch.size() == c.branch.size());
  for (size_t i = 0; i < c.branch.size(); ++i)
    CHECK(std::abs(c.branch[i] - c2.branch[i]) < 1e-9);
}
