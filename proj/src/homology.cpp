#include "spectral/homology.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "spectral/errors.hpp"

namespace spectral {

int winding_number(const std::vector<cd>& pts, cd p) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    cd u = pts[i] - p, v = pts[i + 1] - p;
    total += std::arg(v / u);
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

std::vector<cd> capsule_loop(cd p, cd q, double delta, int arcn) {
  cd u = (q - p) / dist(p, q);
  cd v = u * cd(0.0, 1.0);
  std::vector<cd> pts;
  auto arc = [&](cd center, cd from_dir, double sweep) {
    for (int k = 1; k <= arcn; ++k) {
      double th = sweep * k / arcn;
      pts.push_back(center + delta * from_dir * std::exp(cd(0.0, th)));
    }
  };
  pts.push_back(p - delta * v);
  pts.push_back(q - delta * v);
  arc(q, -v, kPi);            // around q: -v -> +v through +u
  pts.push_back(p + delta * v);
  arc(p, v, kPi);             // around p: +v -> -v through -u
  pts.back() = pts.front();
  return pts;
}

namespace {

// Andrew monotone chain; returns counterclockwise hull without repeated last
// point.  Collinear inputs collapse to the two extreme points.
std::vector<cd> convex_hull(std::vector<cd> pts) {
  std::sort(pts.begin(), pts.end(), [](cd a, cd b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n <= 2) return pts;
  auto cross = [](cd o, cd a, cd b) {
    return ((a - o) * std::conj(b - o)).imag() * -1.0;
  };
  std::vector<cd> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (int i = n - 2, t = k + 1; i >= 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace

std::vector<cd> offset_hull_loop(const std::vector<cd>& pts, double delta,
                                 int arcn) {
  std::vector<cd> hull = convex_hull(pts);
  if (hull.size() == 1) {
    auto c = circle_points(hull[0], delta, std::max(arcn * 4, 16));
    return c;
  }
  if (hull.size() == 2) return capsule_loop(hull[0], hull[1], delta, arcn);
  const int n = static_cast<int>(hull.size());
  std::vector<cd> out;
  for (int i = 0; i < n; ++i) {
    cd a = hull[i], b = hull[(i + 1) % n], c = hull[(i + 2) % n];
    cd d1 = (b - a) / dist(a, b);
    cd d2 = (c - b) / dist(b, c);
    cd n1 = d1 * cd(0.0, -1.0);  // outward normal of CCW polygon
    cd n2 = d2 * cd(0.0, -1.0);
    out.push_back(a + delta * n1);
    out.push_back(b + delta * n1);
    // arc around vertex b from n1 to n2 (counterclockwise exterior turn)
    double sweep = std::arg(n2 / n1);
    if (sweep < 0) sweep += 2.0 * kPi;
    for (int k = 1; k < arcn; ++k)
      out.push_back(b + delta * n1 * std::exp(cd(0.0, sweep * k / arcn)));
  }
  out.push_back(out.front());
  return out;
}

namespace {

// Branch value at every vertex of a closed polyline, continued along it.
std::vector<cd> vertex_branches(const SpectralCurve& c, const Loop& loop) {
  std::vector<cd> yv(loop.pts.size());
  yv[0] = loop.y0;
  for (size_t i = 0; i + 1 < loop.pts.size(); ++i)
    yv[i + 1] = continue_y_segment(c, loop.pts[i], yv[i], loop.pts[i + 1]);
  return yv;
}

struct Crossing {
  cd z;
  cd d1, d2;   // segment directions
  size_t i, j; // segment indices on each loop
  double t1;   // parameter on segment i of loop 1
  double t2;
};

// Transversal crossings of two closed polylines.  Returns nullopt when a
// crossing is too close to a vertex or the segments are near-parallel, which
// makes the count unreliable.
std::optional<std::vector<Crossing>> find_crossings(const Loop& g1,
                                                    const Loop& g2) {
  std::vector<Crossing> out;
  for (size_t i = 0; i + 1 < g1.pts.size(); ++i) {
    cd a = g1.pts[i], b = g1.pts[i + 1];
    if (a == b) continue;
    for (size_t j = 0; j + 1 < g2.pts.size(); ++j) {
      cd p = g2.pts[j], q = g2.pts[j + 1];
      if (p == q) continue;
      cd d1 = b - a, d2 = q - p;
      double den = (std::conj(d1) * d2).imag();
      double scale = std::abs(d1) * std::abs(d2);
      if (std::abs(den) < 1e-12 * scale) {
        // parallel: only a problem if the segments actually overlap
        double gap = std::min(std::min(dist_to_segment(p, a, b),
                                       dist_to_segment(q, a, b)),
                              std::min(dist_to_segment(a, p, q),
                                       dist_to_segment(b, p, q)));
        if (gap < 1e-9 * scale) return std::nullopt;
        continue;
      }
      cd rel = p - a;
      double t1 = (std::conj(rel) * d2).imag() / den;
      double t2 = (std::conj(rel) * d1).imag() / den;
      if (t1 < -1e-12 || t1 > 1 + 1e-12 || t2 < -1e-12 || t2 > 1 + 1e-12)
        continue;
      const double eps = 1e-7;
      if (t1 < eps || t1 > 1 - eps || t2 < eps || t2 > 1 - eps)
        return std::nullopt;  // vertex-grazing: ask for a jittered retry
      out.push_back({a + t1 * d1, d1, d2, i, j, t1, t2});
    }
  }
  return out;
}

// Signed intersection number of the tracked loops on the double cover:
// transversal base crossings count only when both branches agree.
std::optional<int> intersection_number(const SpectralCurve& c, const Loop& g1,
                                       const std::vector<cd>& yv1,
                                       const Loop& g2,
                                       const std::vector<cd>& yv2) {
  auto crossings = find_crossings(g1, g2);
  if (!crossings) return std::nullopt;
  int total = 0;
  for (const auto& cr : *crossings) {
    cd y1 = continue_y_segment(c, g1.pts[cr.i], yv1[cr.i], cr.z);
    cd y2 = continue_y_segment(c, g2.pts[cr.j], yv2[cr.j], cr.z);
    double d_same = std::abs(y1 - y2), d_opp = std::abs(y1 + y2);
    if (std::min(d_same, d_opp) > 0.7 * std::max(d_same, d_opp))
      return std::nullopt;  // cannot separate the sheets reliably
    if (d_same < d_opp)
      total += (std::conj(cr.d1) * cr.d2).imag() > 0 ? 1 : -1;
  }
  return total;
}

double dist_to_polygon(cd p, const std::vector<cd>& poly) {
  double d = 1e300;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i)
    d = std::min(d, dist_to_segment(p, poly[i], poly[(i + 1) % n]));
  return d;
}

bool point_in_hull(cd p, const std::vector<cd>& hull) {
  if (hull.size() < 3) return false;
  const size_t n = hull.size();
  for (size_t i = 0; i < n; ++i) {
    cd a = hull[i], b = hull[(i + 1) % n];
    if (((b - a) * std::conj(p - a)).imag() > 0) return false;  // right side
  }
  return true;
}

// Attempt one ordered pairing of the branch points.  `seq` lists branch-point
// indices so that pair k is (seq[2k], seq[2k+1]).
std::optional<HomologyBasis> try_basis(const SpectralCurve& c,
                                       const SheetTracker& tracker,
                                       const std::vector<int>& seq,
                                       double delta_scale) {
  const int g = c.genus;
  const auto& e = c.branch;
  std::vector<cd> specials = c.branch;
  specials.insert(specials.end(), c.poles.begin(), c.poles.end());

  HomologyBasis basis;
  // a-loops: capsules around the first g pairs, avoiding every other special
  for (int k = 0; k < g; ++k) {
    cd p = e[seq[2 * k]], q = e[seq[2 * k + 1]];
    double clear = 1e300;
    for (size_t s = 0; s < specials.size(); ++s) {
      cd sp = specials[s];
      if (dist(sp, p) < 1e-12 || dist(sp, q) < 1e-12) continue;
      clear = std::min(clear, dist_to_segment(sp, p, q));
    }
    double delta = delta_scale * std::min(0.5 * clear, 0.75 * dist(p, q));
    if (delta < 1e-4 * c.scale) return std::nullopt;
    Loop loop;
    loop.pts = capsule_loop(p, q, delta);
    loop.y0 = tracker.point(loop.pts[0], 0).y;
    basis.a.push_back(std::move(loop));
  }
  // b-loops: offset hulls around the tails {seq[2k+1] ... seq[2g]} for
  // k = 1..g (relabeled indices 2k..2g+1), shrinking offsets for nesting
  for (int alpha = 1; alpha <= g; ++alpha) {
    std::vector<cd> enclosed;
    std::vector<int> enclosed_idx;
    for (int r = 2 * alpha - 1; r <= 2 * g; ++r) {
      enclosed.push_back(e[seq[r]]);
      enclosed_idx.push_back(seq[r]);
    }
    std::vector<cd> hull = convex_hull(enclosed);
    double clear = 1e300;
    for (size_t s = 0; s < specials.size(); ++s) {
      cd sp = specials[s];
      bool inside_set = false;
      for (cd en : enclosed)
        if (dist(sp, en) < 1e-12) inside_set = true;
      if (inside_set) continue;
      bool is_branch = s < c.branch.size();
      if (is_branch && point_in_hull(sp, hull)) return std::nullopt;
      if (is_branch) clear = std::min(clear, dist_to_polygon(sp, hull));
    }
    double delta =
        delta_scale * 0.35 * clear * (1.0 - 0.12 * (alpha - 1));
    if (!std::isfinite(delta) || delta > 1e6)
      delta = delta_scale * 0.3 * c.scale * (1.0 - 0.12 * (alpha - 1));
    if (delta < 1e-4 * c.scale) return std::nullopt;
    Loop loop;
    loop.pts = offset_hull_loop(enclosed, delta);
    loop.y0 = tracker.point(loop.pts[0], 0).y;
    basis.b.push_back(std::move(loop));
  }

  // winding verification
  for (int k = 0; k < g; ++k) {
    for (size_t bi = 0; bi < e.size(); ++bi) {
      int want = (static_cast<int>(bi) == seq[2 * k] ||
                  static_cast<int>(bi) == seq[2 * k + 1])
                     ? 1
                     : 0;
      if (winding_number(basis.a[k].pts, e[bi]) != want) return std::nullopt;
    }
    for (cd t : c.poles)
      if (winding_number(basis.a[k].pts, t) != 0) return std::nullopt;
  }
  for (int alpha = 1; alpha <= g; ++alpha) {
    std::vector<int> want(e.size(), 0);
    for (int r = 2 * alpha - 1; r <= 2 * g; ++r) want[seq[r]] = 1;
    for (size_t bi = 0; bi < e.size(); ++bi)
      if (winding_number(basis.b[alpha - 1].pts, e[bi]) != want[bi])
        return std::nullopt;
  }

  // closure on the double cover and the intersection pairing
  std::vector<const Loop*> loops;
  for (const auto& l : basis.a) loops.push_back(&l);
  for (const auto& l : basis.b) loops.push_back(&l);
  std::vector<std::vector<cd>> branches;
  for (const Loop* l : loops) {
    auto yv = vertex_branches(c, *l);
    if (dist(yv.back(), l->y0) > 1e-6 * (1.0 + std::abs(l->y0)))
      return std::nullopt;  // loop does not close on its starting sheet
    branches.push_back(std::move(yv));
  }
  const int n2 = 2 * g;
  MatI mint = MatI::Zero(n2, n2);
  for (int i = 0; i < n2; ++i) {
    for (int j = i + 1; j < n2; ++j) {
      auto v = intersection_number(c, *loops[i], branches[i], *loops[j],
                                   branches[j]);
      if (!v) return std::nullopt;
      mint(i, j) = *v;
      mint(j, i) = -*v;
    }
  }
  // fix b-orientations so that a_k ∘ b_k = +1
  for (int k = 0; k < g; ++k) {
    if (mint(k, g + k) == -1) {
      std::reverse(basis.b[k].pts.begin(), basis.b[k].pts.end());
      for (int r = 0; r < n2; ++r) {
        mint(r, g + k) = -mint(r, g + k);
        mint(g + k, r) = -mint(g + k, r);
      }
    }
  }
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) {
      int want = 0;
      if (j == i + g) want = 1;
      if (i == j + g) want = -1;
      if (mint(i, j) != want) return std::nullopt;
    }
  basis.intersections = mint;
  return basis;
}

void enumerate_matchings(std::vector<int>& remaining, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  if (remaining.empty()) {
    out.push_back(current);
    return;
  }
  int first = remaining.front();
  for (size_t i = 1; i < remaining.size(); ++i) {
    int partner = remaining[i];
    std::vector<int> rest;
    for (size_t k = 1; k < remaining.size(); ++k)
      if (k != i) rest.push_back(remaining[k]);
    current.push_back(first);
    current.push_back(partner);
    enumerate_matchings(rest, current, out);
    current.pop_back();
    current.pop_back();
  }
}

}  // namespace

HomologyBasis build_homology(const SpectralCurve& c, const SheetTracker& tracker) {
  const int g = c.genus;
  HomologyBasis basis;
  basis.intersections = MatI::Zero(2 * g, 2 * g);
  if (g == 0) return basis;
  const int nb = static_cast<int>(c.branch.size());

  std::vector<int> primary(nb);
  for (int i = 0; i < nb; ++i) primary[i] = i;
  for (double ds : {1.0, 0.93, 0.87}) {
    auto r = try_basis(c, tracker, primary, ds);
    if (r) return *r;
  }
  // fall back to every pairing of the branch points (pairs sorted by their
  // first member, so the primary ordering is revisited harmlessly)
  std::vector<int> all(nb);
  for (int i = 0; i < nb; ++i) all[i] = i;
  std::vector<std::vector<int>> matchings;
  std::vector<int> cur;
  enumerate_matchings(all, cur, matchings);
  for (const auto& seq : matchings) {
    for (double ds : {1.0, 0.9}) {
      auto r = try_basis(c, tracker, seq, ds);
      if (r) return *r;
    }
  }
  throw BasisDegenerate(
      "build_homology: no verified loop system for this branch configuration");
}

}  // namespace spectral
