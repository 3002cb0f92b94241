#include "spectral/riemann_constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "spectral/errors.hpp"
#include "spectral/homology.hpp"
#include "spectral/kernels.hpp"
#include "spectral/quadrature.hpp"
#include "spectral/ratmat.hpp"

namespace spectral {

namespace {

// Deterministic generic points for the vanishing probe: random z in an
// annulus around the branch centroid, rejected near branch points and poles.
std::vector<SurfacePoint> probe_points(const SpectralCurve& c,
                                       const SheetTracker& tracker, int count,
                                       Rng& rng) {
  cd centroid = 0.0;
  for (cd b : c.branch) centroid += b;
  centroid /= static_cast<double>(c.branch.size());
  std::vector<SurfacePoint> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 512) {
    ++attempts;
    cd z = centroid +
           cd(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0) * c.scale;
    bool ok = true;
    for (cd b : c.branch)
      if (dist(z, b) < 0.1 * c.scale) ok = false;
    for (cd t : c.poles)
      if (dist(z, t) < 0.1 * c.scale) ok = false;
    if (!ok) continue;
    int sheet = rng.uniform() < 0.5 ? 0 : 1;
    out.push_back(tracker.point(z, sheet));
  }
  if (static_cast<int>(out.size()) < count)
    throw GenerationFailure("could not place vanishing probe points");
  return out;
}

}  // namespace

RiemannConstant compute_riemann_constant(const SpectralCurve& c,
                                         const SheetTracker& tracker,
                                         const PeriodData& pd,
                                         const AbelContext& abel,
                                         uint64_t seed) {
  const int g = c.genus;
  if (g < 1) throw ParameterError("riemann constant requires positive genus");
  ThetaContext theta(pd.tau);

  VecC base = -0.5 * static_cast<double>(g - 1) * abel.flip_shift();

  // Degree g - 1 probe divisors; several draws so that no spurious candidate
  // survives by accident.
  constexpr int kTrials = 4;
  Rng rng(seed);
  std::vector<std::vector<SurfacePoint>> divisors(kTrials);
  for (int t = 0; t < kTrials; ++t)
    if (g > 1) divisors[t] = probe_points(c, tracker, g - 1, rng);

  const int ncand = 1 << (2 * g);
  double best = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  VecC best_K;
  for (int idx = 0; idx < ncand; ++idx) {
    VecC half = VecC::Zero(g);
    for (int a = 0; a < g; ++a) {
      double m = (idx >> a) & 1 ? 0.5 : 0.0;
      double k = (idx >> (g + a)) & 1 ? 0.5 : 0.0;
      half(a) += m;
      for (int b = 0; b < g; ++b) half(b) += pd.tau(b, a) * k;
    }
    VecC K = base + half;
    double score = 0.0;
    for (int t = 0; t < kTrials; ++t) {
      VecC u = K;
      for (const SurfacePoint& p : divisors[t])
        u += abel.map_point(p.z, p.sheet);
      score = std::max(score, std::abs(theta.eval0(u).value));
    }
    if (score < best) {
      second = best;
      best = score;
      best_idx = idx;
      best_K = K;
    } else if (score < second) {
      second = score;
    }
  }

  if (best > 1e-6 || second < 1e-3)
    throw DegenerateSpectrum(
        "vanishing test failed to single out the theta constant");

  RiemannConstant out;
  out.K = best_K;
  out.vanish = best;
  out.runner_up = second;
  out.half_index = best_idx;
  return out;
}

namespace {

double cross2(cd u, cd v) { return std::imag(std::conj(u) * v); }

// Distance from p to the closed segment [a, b].
double seg_point_dist(cd a, cd b, cd p) {
  cd d = b - a;
  double L2 = std::norm(d);
  if (L2 == 0.0) return std::abs(p - a);
  double t = std::real(std::conj(d) * (p - a)) / L2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(a + t * d - p);
}

// Proper crossing test for segments [a, b] and [p, q].
bool segs_cross(cd a, cd b, cd p, cd q) {
  double d1 = cross2(b - a, p - a);
  double d2 = cross2(b - a, q - a);
  double d3 = cross2(q - p, a - p);
  double d4 = cross2(q - p, b - p);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Polyline from `from` to `to` that crosses no cut segment and keeps
// clearance from every branch point.  The homotopy class of such a leg
// continues the Abel lift with at most integer-vector period offsets, which
// the a-loop quadrature below tolerates; branch-cut crossings would add
// b-period offsets that it does not.  Routed on a small visibility graph
// whose interior nodes ring each branch point.
std::vector<cd> build_leg(cd from, cd to,
                          const std::vector<std::pair<cd, cd>>& cuts,
                          const std::vector<cd>& branch, double clear_r) {
  std::vector<cd> nodes{from, to};
  constexpr int kRing = 8;
  for (cd b : branch)
    for (int k = 0; k < kRing; ++k)
      nodes.push_back(b + 2.0 * clear_r *
                              std::exp(cd(0, 2.0 * kPi * k / kRing)));
  const int n = static_cast<int>(nodes.size());

  auto edge_ok = [&](int i, int j) {
    cd p = nodes[i], q = nodes[j];
    for (const auto& cut : cuts)
      if (segs_cross(p, q, cut.first, cut.second)) return false;
    for (cd b : branch) {
      // A feature hugging a terminal is the terminal's own neighborhood.
      if ((i < 2 && std::abs(b - p) < 2.2 * clear_r) ||
          (j < 2 && std::abs(b - q) < 2.2 * clear_r))
        continue;
      if (seg_point_dist(p, q, b) < 1.5 * clear_r) return false;
    }
    return true;
  };

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1);
  std::vector<char> done(n, 0);
  dist[0] = 0.0;
  for (;;) {
    int u = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (!done[i] && dist[i] < best) {
        best = dist[i];
        u = i;
      }
    if (u < 0 || u == 1) break;
    done[u] = 1;
    for (int v = 0; v < n; ++v) {
      if (done[v]) continue;
      double w = std::abs(nodes[u] - nodes[v]);
      if (dist[u] + w >= dist[v]) continue;
      if (!edge_ok(u, v)) continue;
      dist[v] = dist[u] + w;
      prev[v] = u;
    }
  }
  if (!std::isfinite(dist[1]))
    throw GenerationFailure("lift leg routing found no clear path");
  std::vector<cd> leg;
  for (int v = 1; v >= 0; v = prev[v]) {
    leg.push_back(nodes[v]);
    if (v == 0) break;
  }
  std::reverse(leg.begin(), leg.end());
  return leg;
}

}  // namespace

VecC riemann_constants_at(const KernelContext& kc, const SurfacePoint& x) {
  const PeriodData& pd = kc.periods();
  const int g = static_cast<int>(pd.tau.rows());
  VecC K(g);
  for (int al = 0; al < g; ++al) K(al) = (1.0 + pd.tau(al, al)) / 2.0;
  if (g == 1) return K;

  const SpectralCurve& c = kc.curve();
  const HomologyBasis& basis = kc.basis();
  VecC Ux = kc.abel().map_point(x.z, x.sheet);

  // Each a-loop encloses exactly one branch cut; recover the cut endpoints
  // from the winding numbers of the loop around the branch points.
  std::vector<std::pair<cd, cd>> cuts;
  for (int k = 0; k < g; ++k) {
    std::vector<cd> inside;
    for (cd b : c.branch)
      if (winding_number(basis.a[k].pts, b) != 0) inside.push_back(b);
    if (inside.size() != 2)
      throw GenerationFailure("a-loop does not enclose a single branch cut");
    cuts.emplace_back(inside[0], inside[1]);
  }
  double sep = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < c.branch.size(); ++i)
    for (size_t j = i + 1; j < c.branch.size(); ++j)
      sep = std::min(sep, std::abs(c.branch[i] - c.branch[j]));
  double clear_r = 0.12 * sep;

  std::vector<CurveForm> fs;
  for (int a = 0; a < g; ++a)
    fs.push_back([&kc, a](cd z, cd y) { return kc.forms(z, y)(a); });

  for (int be = 0; be < g; ++be) {
    const Loop& loop = basis.a[be];
    // Continue the Abel lift from x to the loop start along a cut-avoiding
    // leg, so every loop shares a lift branch compatible with the formula.
    std::vector<cd> leg = build_leg(x.z, loop.pts.front(), cuts, c.branch,
                                    clear_r);
    PathResult pr = integrate_forms(c, leg, x.y, fs, 1e-12);
    VecC u0 = Ux + pr.values;
    cd ys = pr.y_end;
    double dm = std::abs(ys - loop.y0), dp = std::abs(ys + loop.y0);
    if (std::min(dm, dp) > 1e-6 * std::max(dm, dp))
      throw ContinuationAmbiguous("lift leg lost the branch at a loop start");
    // A leg landing on the conjugate lift traverses the conjugate loop
    // backwards: same homology class, same integral.
    std::vector<cd> pts = loop.pts;
    if (dm > dp) std::reverse(pts.begin(), pts.end());
    for (int al = 0; al < g; ++al) {
      if (al == be) continue;
      LoopIntegrand f = [&, al, be](cd z, cd y, const VecC& u) {
        return kc.forms(z, y)(be) * (u(al) - Ux(al));
      };
      K(al) -= kc.integrate_path(pts, f, 1e-11, ys, u0);
    }
  }

  // Because each leg ends on its loop, the lift branch handed to loop be is
  // ambiguous by one b-winding of that loop (which side of the curve the leg
  // arrives from); the quadrature is exact up to eps_be * tau(:, be) with
  // eps_be in {-1, 0, 1}.  The true constant lies on the theta divisor,
  // which singles the windings out.
  for (int range = 1; range <= 2; ++range) {
    const int base = 2 * range + 1;
    int ncand = 1;
    for (int i = 0; i < g; ++i) ncand *= base;
    double best = std::numeric_limits<double>::infinity();
    double runner = std::numeric_limits<double>::infinity();
    VecC best_K;
    for (int mask = 0; mask < ncand; ++mask) {
      VecC cand = K;
      int rest = mask;
      for (int be = 0; be < g; ++be) {
        double s = rest % base - range;
        rest /= base;
        if (s == 0.0) continue;
        for (int al = 0; al < g; ++al)
          if (al != be) cand(al) += s * pd.tau(al, be);
      }
      double m = kc.divisor_margin(cand);
      if (m < best) {
        runner = best;
        best = m;
        best_K = cand;
      } else if (m < runner) {
        runner = m;
      }
    }
    if (best < 1e-6 && runner > 1e-4) return best_K;
  }
  throw QuadratureFailure(
      "theta vanishing did not single out the lift-winding offsets");
}

}  // namespace spectral
