#include "spectral/curve.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "spectral/errors.hpp"

namespace spectral {

cd SpectralCurve::pole_product(cd z) const {
  cd p = 1.0;
  for (cd t : poles) p *= (z - t);
  return p;
}

std::vector<cd> SpectralCurve::roots_at(cd z, double guard) const {
  if (n != 2) throw ParameterError("roots_at: only n = 2 is supported");
  for (cd e : branch) {
    if (dist(z, e) < guard * scale)
      throw NearBranchPoint("roots_at: z within clearance of a branch projection");
  }
  cd pp = pole_product(z);
  if (std::abs(pp) < 1e-14 * scale)
    throw PoleEvaluation("roots_at: z coincides with a pole");
  cd w = std::sqrt(P.eval(z));
  cd y1 = w / pp, y2 = -w / pp;
  if (lex_less(y2, y1)) std::swap(y1, y2);
  return {y1, y2};
}

cd SpectralCurve::dy_dz(cd z, cd y) const {
  // y = w / Pi with w^2 = P:  y' = (P'/(2w) - y Pi') / Pi.
  cd pp = pole_product(z);
  cd w = y * pp;
  if (std::abs(w) < 1e-13 * scale)
    throw NearBranchPoint("dy_dz: point too close to a branch point");
  cd dpi = 0.0;
  for (size_t j = 0; j < poles.size(); ++j) {
    cd term = 1.0;
    for (size_t k = 0; k < poles.size(); ++k)
      if (k != j) term *= (z - poles[k]);
    dpi += term;
  }
  return (P.derivative().eval(z) / (2.0 * w) - y * dpi) / pp;
}

Json SpectralCurve::to_json() const {
  Json j;
  j["n"] = n;
  j["poles"] = spectral::to_json(poles);
  Json qn = Json::array();
  for (const auto& q : Q_num) qn.push_back(spectral::to_json(q.coeffs()));
  j["char_numerators"] = qn;
  j["hyperelliptic"] = spectral::to_json(P.coeffs());
  j["branch_points"] = spectral::to_json(branch);
  j["genus"] = genus;
  j["anchor"] = spectral::to_json(anchor);
  return j;
}

SpectralCurve SpectralCurve::from_json(const Json& j) {
  CharCoeffs cc;
  cc.n = require_key(j, "n", "curve").get<int>();
  cc.poles = complex_vector_from_json(require_key(j, "poles", "curve"), "poles");
  const Json& qn = require_key(j, "char_numerators", "curve");
  if (!qn.is_array()) throw ParameterError("curve: char_numerators must be an array");
  for (size_t i = 0; i < qn.size(); ++i)
    cc.Q_num.emplace_back(
        complex_vector_from_json(qn[i], "char_numerators[" + std::to_string(i) + "]"));
  std::optional<cd> anchor;
  if (j.contains("anchor")) anchor = complex_from_json(j["anchor"], "anchor");
  return build_curve(cc, anchor);
}

DiscriminantReport discriminant_check(const CharCoeffs& cc, double tol) {
  if (cc.n != 2) throw ParameterError("discriminant_check: only n = 2 is supported");
  DiscriminantReport rep;
  Poly P = (cc.Q_num[0] * cd(-1.0)).truncated(1e-11);
  if (P.degree() < 1) return rep;  // constant: degenerate
  rep.irreducible = !poly_sqrt(P).has_value();
  auto rts = P.roots();
  double scale = 1.0;
  for (cd t : cc.poles) scale = std::max(scale, std::abs(t));
  for (cd r : rts) scale = std::max(scale, std::abs(r));
  rep.min_branch_gap = min_pairwise_gap(rts);
  bool distinct = rep.min_branch_gap > tol * scale;
  // also require branch points away from the poles (w = 0 must not collide
  // with a pole of A)
  double pole_gap = 1e30;
  for (cd r : rts)
    for (cd t : cc.poles) pole_gap = std::min(pole_gap, dist(r, t));
  rep.smooth = distinct && pole_gap > tol * scale;
  return rep;
}

cd default_basepoint(const std::vector<cd>& special) {
  double lo_x = -1, hi_x = 1, lo_y = -1, hi_y = 1;
  for (cd s : special) {
    lo_x = std::min(lo_x, s.real());
    hi_x = std::max(hi_x, s.real());
    lo_y = std::min(lo_y, s.imag());
    hi_y = std::max(hi_y, s.imag());
  }
  double pad = 0.5 * std::max(hi_x - lo_x, hi_y - lo_y);
  lo_x -= pad; hi_x += pad; lo_y -= pad; hi_y += pad;
  const int N = 41;
  cd best = 0.0;
  double best_d = -1.0;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      cd cand(lo_x + (hi_x - lo_x) * i / (N - 1),
              lo_y + (hi_y - lo_y) * k / (N - 1));
      double d = 1e30;
      for (cd s : special) d = std::min(d, dist(cand, s));
      if (d > best_d + 1e-15) {
        best_d = d;
        best = cand;
      }
    }
  }
  return best;
}

SpectralCurve build_curve(const CharCoeffs& cc, std::optional<cd> anchor) {
  if (cc.n != 2)
    throw ParameterError("build_curve: curve numerics are implemented for n = 2");
  SpectralCurve c;
  c.n = cc.n;
  c.poles = cc.poles;
  c.Q_num = cc.Q_num;
  c.P = (cc.Q_num[0] * cd(-1.0)).truncated(1e-11);
  const int m = c.m();
  if (c.P.degree() % 2 != 0 || c.P.degree() != 2 * m - 4)
    throw InfinityIsBranchPoint(
        "build_curve: deg P = " + std::to_string(c.P.degree()) +
        ", expected even degree " + std::to_string(2 * m - 4));
  if (poly_sqrt(c.P))
    throw ReducibleCurve("build_curve: det A(z) is a perfect square");
  c.branch = c.P.roots();
  std::sort(c.branch.begin(), c.branch.end(), lex_less);
  c.scale = 1.0;
  for (cd t : c.poles) c.scale = std::max(c.scale, std::abs(t));
  for (cd e : c.branch) c.scale = std::max(c.scale, std::abs(e));
  if (min_pairwise_gap(c.branch) < 1e-8 * c.scale)
    throw SingularCurve("build_curve: colliding branch points");
  for (cd e : c.branch)
    for (cd t : c.poles)
      if (dist(e, t) < 1e-8 * c.scale)
        throw SingularCurve("build_curve: branch point collides with a pole");
  c.genus = (c.P.degree() - 2) / 2;
  std::vector<cd> special = c.branch;
  special.insert(special.end(), c.poles.begin(), c.poles.end());
  c.anchor = anchor ? *anchor : default_basepoint(special);
  c.anchor_roots = c.roots_at(c.anchor);
  return c;
}

SpectralCurve build_curve(const PhasePoint& p, std::optional<cd> anchor) {
  return build_curve(char_coeffs(assemble(p)), anchor);
}

cd continue_y_segment(const SpectralCurve& c, cd z0, cd y0, cd z1) {
  if (z0 == z1) return y0;
  double pos = 0.0, step = 1.0 / 16.0;
  const double floor_step = std::pow(2.0, -20);
  cd y = y0;
  while (pos < 1.0 - 1e-15) {
    double s = std::min(step, 1.0 - pos);
    cd znext = z0 + (pos + s) * (z1 - z0);
    std::vector<cd> roots;
    try {
      roots = c.roots_at(znext, 1e-13);
    } catch (const NearBranchPoint&) {
      throw ContinuationAmbiguous("continue_y_segment: path hits a branch point");
    }
    size_t best = 0;
    double d1 = 1e300, d2 = 1e300;
    for (size_t i = 0; i < roots.size(); ++i) {
      double d = dist(y, roots[i]);
      if (d < d1) {
        d2 = d1; d1 = d; best = i;
      } else {
        d2 = std::min(d2, d);
      }
    }
    if (d2 < 3.0 * d1) {
      if (step > floor_step) {
        step *= 0.5;
        continue;
      }
      throw ContinuationAmbiguous(
          "continue_y_segment: sheets indistinguishable at minimal step");
    }
    y = roots[best];
    pos += s;
    step = std::min(step * 2.0, 1.0 / 16.0);
  }
  return y;
}

cd continue_y_path(const SpectralCurve& c, const std::vector<cd>& pts, cd y0) {
  if (pts.size() < 2) return y0;
  cd y = y0;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    y = continue_y_segment(c, pts[i], y, pts[i + 1]);
  return y;
}

namespace {

void route_rec(cd from, cd to, const std::vector<cd>& obstacles,
               const std::vector<double>& clearance, int depth,
               std::vector<cd>& out) {
  if (depth <= 0) {
    out.push_back(to);
    return;
  }
  // worst offender: obstacle with largest penetration of its clearance disk
  int worst = -1;
  double worst_pen = 0.0;
  for (size_t i = 0; i < obstacles.size(); ++i) {
    cd o = obstacles[i];
    double r = clearance[i];
    if (dist(o, from) < r || dist(o, to) < r) continue;  // unavoidable
    double d = dist_to_segment(o, from, to);
    double pen = r - d;
    if (pen > worst_pen + 1e-15) {
      worst_pen = pen;
      worst = static_cast<int>(i);
    }
  }
  if (worst < 0) {
    out.push_back(to);
    return;
  }
  cd o = obstacles[worst];
  double r = clearance[worst];
  // closest point q on the segment; detour on the side of q
  cd ab = to - from;
  double t = ((o - from) * std::conj(ab)).real() / std::norm(ab);
  t = std::clamp(t, 0.0, 1.0);
  cd q = from + t * ab;
  cd dir;
  if (dist(q, o) > 1e-12 * (1.0 + std::abs(o)))
    dir = (q - o) / dist(q, o);
  else
    dir = (ab / std::abs(ab)) * cd(0.0, 1.0);  // deterministic side
  cd mid = o + 1.5 * r * dir;
  route_rec(from, mid, obstacles, clearance, depth - 1, out);
  route_rec(mid, to, obstacles, clearance, depth - 1, out);
}

}  // namespace

std::vector<cd> route_avoiding(cd from, cd to, const std::vector<cd>& obstacles) {
  std::vector<double> clearance(obstacles.size(), 0.0);
  for (size_t i = 0; i < obstacles.size(); ++i) {
    double dmin = 1e30;
    for (size_t k = 0; k < obstacles.size(); ++k)
      if (k != i) dmin = std::min(dmin, dist(obstacles[i], obstacles[k]));
    if (dmin > 1e29) dmin = 1.0;
    clearance[i] = 0.3 * dmin;
  }
  std::vector<cd> out{from};
  route_rec(from, to, obstacles, clearance, 10, out);
  return out;
}

std::vector<cd> circle_points(cd center, double radius, int npts, double phase0) {
  std::vector<cd> pts;
  pts.reserve(npts + 1);
  for (int k = 0; k <= npts; ++k) {
    double th = phase0 + 2.0 * kPi * k / npts;
    pts.push_back(center + radius * cd(std::cos(th), std::sin(th)));
  }
  pts.back() = pts.front();
  return pts;
}

SheetTracker::SheetTracker(const SpectralCurve& c) : c_(c) {
  obstacles_ = c.branch;
  obstacles_.insert(obstacles_.end(), c.poles.begin(), c.poles.end());
}

std::vector<SurfacePoint> SheetTracker::points_above(cd z) const {
  std::pair<double, double> key{z.real(), z.imag()};
  {
    std::shared_lock lk(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      std::vector<SurfacePoint> out;
      for (size_t s = 0; s < it->second.size(); ++s)
        out.push_back({z, it->second[s], static_cast<int>(s)});
      return out;
    }
  }
  auto path = route_avoiding(c_.anchor, z, obstacles_);
  std::vector<cd> ys;
  cd y0 = continue_y_path(c_, path, c_.anchor_roots[0]);
  ys.push_back(y0);
  if (c_.n == 2) {
    ys.push_back(-y0);
  } else {
    throw ParameterError("SheetTracker: only n = 2 is supported");
  }
  {
    std::unique_lock lk(mutex_);
    cache_[key] = ys;
  }
  std::vector<SurfacePoint> out;
  for (size_t s = 0; s < ys.size(); ++s)
    out.push_back({z, ys[s], static_cast<int>(s)});
  return out;
}

SurfacePoint SheetTracker::point(cd z, int sheet) const {
  auto pts = points_above(z);
  if (sheet < 0 || sheet >= static_cast<int>(pts.size()))
    throw ParameterError("SheetTracker::point: sheet index out of range");
  return pts[sheet];
}

// --- random generation ------------------------------------------------------

PhasePoint random_phase_point(int n, int m, uint64_t seed) {
  if (n < 2 || m < 3)
    throw ParameterError("random_phase_point: need n >= 2 and m >= 3");
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    PhasePoint p;
    p.n = n;
    // poles: well-separated draws from a square
    std::vector<cd> poles;
    int guard = 0;
    while (static_cast<int>(poles.size()) < m && guard < 4096) {
      ++guard;
      cd t(4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0);
      bool ok = true;
      for (cd u : poles)
        if (dist(t, u) < 0.6) ok = false;
      if (ok) poles.push_back(t);
    }
    if (static_cast<int>(poles.size()) < m) continue;
    p.poles = poles;
    // eigenvalue vectors: traceless with well-separated entries, the last
    // residue balanced afterwards
    bool bad = false;
    for (int j = 0; j < m; ++j) {
      VecC L(n);
      int tries = 0;
      while (true) {
        if (++tries > 256) { bad = true; break; }
        cd sum = 0.0;
        for (int k = 0; k < n - 1; ++k) {
          L(k) = rng.annulus(0.4, 1.5);
          sum += L(k);
        }
        L(n - 1) = -sum;
        double gap = 1e30;
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) gap = std::min(gap, dist(L(a), L(b)));
        if (gap > 0.25) break;
      }
      if (bad) break;
      p.L.push_back(L);
      MatC G(n, n);
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) G(r, s) = rng.cnormal();
      cd det = G.determinant();
      if (std::abs(det) < 1e-3) { bad = true; break; }
      G /= det_root(det, n);
      p.G.push_back(G);
    }
    if (bad) continue;
    // rebalance: replace the last residue by minus the sum of the others,
    // keeping the gauge/eigen decomposition exact
    MatC S = MatC::Zero(n, n);
    for (int j = 0; j < m - 1; ++j) S += p.residue(j);
    MatC Am = -S;
    Eigen::ComplexEigenSolver<MatC> es(Am);
    if (es.info() != Eigen::Success) continue;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return lex_less(es.eigenvalues()(a), es.eigenvalues()(b));
    });
    VecC Lm(n);
    MatC Gm(n, n);
    for (int i = 0; i < n; ++i) {
      Lm(i) = es.eigenvalues()(order[i]);
      VecC col = es.eigenvectors().col(order[i]);
      int piv = 0;
      double best = 0.0;
      for (int r = 0; r < n; ++r)
        if (std::abs(col(r)) > best) { best = std::abs(col(r)); piv = r; }
      col /= col(piv);
      Gm.col(i) = col;
    }
    double lgap = 1e30;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) lgap = std::min(lgap, dist(Lm(a), Lm(b)));
    if (lgap < 0.05) continue;
    cd detm = Gm.determinant();
    if (std::abs(detm) < 1e-8) continue;
    Gm /= det_root(detm, n);
    p.L[m - 1] = Lm;
    p.G[m - 1] = Gm;
    try {
      p.validate();
    } catch (const Error&) {
      continue;
    }
    if (n == 2) {
      auto cc = char_coeffs(assemble(p));
      auto rep = discriminant_check(cc);
      if (!rep.smooth || !rep.irreducible) continue;
      // healthy geometry for loop construction
      Poly P = (cc.Q_num[0] * cd(-1.0)).truncated(1e-11);
      auto rts = P.roots();
      double scale = 1.0;
      for (cd t : poles) scale = std::max(scale, std::abs(t));
      for (cd r : rts) scale = std::max(scale, std::abs(r));
      if (min_pairwise_gap(rts) < 0.03 * scale) continue;
      double pole_gap = 1e30;
      for (cd r : rts)
        for (cd t : poles) pole_gap = std::min(pole_gap, dist(r, t));
      if (pole_gap < 0.03 * scale) continue;
    }
    return p;
  }
  throw GenerationFailure("random_phase_point: no healthy sample after 64 attempts");
}

}  // namespace spectral
