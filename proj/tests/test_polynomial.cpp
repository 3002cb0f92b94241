#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spectral/polynomial.hpp"

using namespace spectral;

TEST_CASE("evaluation and arithmetic") {
  Poly p({cd(1, 0), cd(0, 1), cd(2, 0)});  // 1 + i z + 2 z^2
  CHECK(p.degree() == 2);
  cd z(0.5, -0.25);
  cd expect = cd(1, 0) + cd(0, 1) * z + cd(2, 0) * z * z;
  CHECK(std::abs(p.eval(z) - expect) < 1e-15);

  Poly q = Poly::from_roots({cd(1, 0), cd(-2, 0)});  // (z-1)(z+2) = z^2 + z - 2
  CHECK(std::abs(q.coeff(0) - cd(-2, 0)) < 1e-14);
  CHECK(std::abs(q.coeff(1) - cd(1, 0)) < 1e-14);
  CHECK(std::abs(q.coeff(2) - cd(1, 0)) < 1e-14);

  Poly pr = p * q;
  CHECK(pr.degree() == 4);
  cd z2(-1.1, 0.3);
  CHECK(std::abs(pr.eval(z2) - p.eval(z2) * q.eval(z2)) < 1e-12);

  Poly d = q.derivative();  // 2z + 1
  CHECK(std::abs(d.eval(cd(3, 0)) - cd(7, 0)) < 1e-14);
}

TEST_CASE("roots come back in canonical order") {
  // (z-1)(z-2i)(z+1.5-0.5i) expanded by hand
  Poly p({cd(1, 3), cd(-2.5, -0.5), cd(0.5, -2.5), cd(1, 0)});
  auto r = p.roots();
  REQUIRE(r.size() == 3);
  CHECK(std::abs(r[0] - cd(-1.5, 0.5)) < 1e-10);
  CHECK(std::abs(r[1] - cd(0, 2)) < 1e-10);
  CHECK(std::abs(r[2] - cd(1, 0)) < 1e-10);
}

TEST_CASE("deflation splits off a root") {
  Poly p = Poly::from_roots({cd(2, 1), cd(-1, 0), cd(0, -3)});
  Poly q = p.deflate(cd(2, 1));
  auto r = q.roots();
  REQUIRE(r.size() == 2);
  for (cd root : r)
    CHECK(std::min(std::abs(root - cd(-1, 0)), std::abs(root - cd(0, -3))) < 1e-10);
}

TEST_CASE("square detection") {
  Poly s = Poly::from_roots({cd(1, 0), cd(-0.5, 0.25)});
  Poly sq = s * s;
  auto root = poly_sqrt(sq);
  REQUIRE(root.has_value());
  CHECK(std::abs(root->eval(cd(0.3, 0.7)) * root->eval(cd(0.3, 0.7)) -
                 sq.eval(cd(0.3, 0.7))) < 1e-10);

  Poly not_sq = Poly::from_roots({cd(1, 0), cd(-1, 0)});
  CHECK(!poly_sqrt(not_sq).has_value());

  // even multiplicities across distinct roots
  Poly s2 = Poly::from_roots({cd(0, 1), cd(0, 1), cd(2, 0), cd(2, 0)});
  CHECK(poly_sqrt(s2).has_value());
  Poly s3 = Poly::from_roots({cd(0, 1), cd(0, 1), cd(2, 0), cd(-2, 0)});
  CHECK(!poly_sqrt(s3).has_value());
}

TEST_CASE("gap helper") {
  std::vector<cd> pts{cd(0, 0), cd(1, 0), cd(1, 0.25), cd(-3, 2)};
  CHECK(min_pairwise_gap(pts) == doctest::Approx(0.25));
}
