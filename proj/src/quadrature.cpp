#include "spectral/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "spectral/errors.hpp"

namespace spectral {

namespace {

GLRule make_rule(int n) {
  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n / 2 + n % 2; ++i) {
    // Newton iteration from the Chebyshev-like initial guess
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  return r;
}

std::map<int, GLRule> g_rules;
std::mutex g_rules_mutex;

}  // namespace

const GLRule& gl_rule(int order) {
  std::lock_guard lk(g_rules_mutex);
  auto it = g_rules.find(order);
  if (it == g_rules.end()) it = g_rules.emplace(order, make_rule(order)).first;
  return it->second;
}

namespace {

// One segment at a fixed rule order; nodes are visited in order so the branch
// continuation only has to bridge short gaps.
VecC segment_values(const SpectralCurve& c, cd a, cd b, cd y_in,
                    const std::vector<CurveForm>& fs, int order, cd* y_at_b) {
  const GLRule& rule = gl_rule(order);
  VecC acc = VecC::Zero(fs.size());
  cd half = 0.5 * (b - a), mid = 0.5 * (a + b);
  cd zprev = a, y = y_in;
  for (int k = 0; k < order; ++k) {
    cd zk = mid + rule.x[k] * half;
    y = continue_y_segment(c, zprev, y, zk);
    for (size_t i = 0; i < fs.size(); ++i) acc(i) += rule.w[k] * fs[i](zk, y);
    zprev = zk;
  }
  if (y_at_b) *y_at_b = continue_y_segment(c, zprev, y, b);
  return acc * half;
}

void segment_adaptive(const SpectralCurve& c, cd a, cd b, cd y_in,
                      const std::vector<CurveForm>& fs, double tol, int depth,
                      VecC& acc, cd* y_at_b) {
  cd yb_lo = 0.0, yb_hi = 0.0;
  VecC lo = segment_values(c, a, b, y_in, fs, 16, &yb_lo);
  VecC hi = segment_values(c, a, b, y_in, fs, 32, &yb_hi);
  double scale = std::max(1.0, hi.cwiseAbs().maxCoeff());
  if ((hi - lo).cwiseAbs().maxCoeff() <= tol * scale || depth >= 14) {
    if (depth >= 14 && (hi - lo).cwiseAbs().maxCoeff() > 1e4 * tol * scale)
      throw QuadratureFailure("integrate_forms: no convergence on segment");
    acc += hi;
    if (y_at_b) *y_at_b = yb_hi;
    return;
  }
  cd mid = 0.5 * (a + b);
  cd y_mid = 0.0;
  segment_adaptive(c, a, mid, y_in, fs, tol, depth + 1, acc, &y_mid);
  segment_adaptive(c, mid, b, y_mid, fs, tol, depth + 1, acc, y_at_b);
}

}  // namespace

PathResult integrate_forms(const SpectralCurve& c, const std::vector<cd>& pts,
                           cd y0, const std::vector<CurveForm>& fs, double tol) {
  PathResult out;
  out.values = VecC::Zero(fs.size());
  out.y_end = y0;
  if (pts.size() < 2) return out;
  cd y = y0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i] == pts[i + 1]) continue;
    cd y_next = 0.0;
    segment_adaptive(c, pts[i], pts[i + 1], y, fs, tol, 0, out.values, &y_next);
    y = y_next;
  }
  out.y_end = y;
  return out;
}

PathResult1 integrate_form(const SpectralCurve& c, const std::vector<cd>& pts,
                           cd y0, const CurveForm& f, double tol) {
  auto r = integrate_forms(c, pts, y0, {f}, tol);
  return {r.values(0), r.y_end};
}

namespace {

cd plain_segment(const std::function<cd(cd)>& f, cd a, cd b, int order) {
  const GLRule& rule = gl_rule(order);
  cd half = 0.5 * (b - a), mid = 0.5 * (a + b);
  cd acc = 0.0;
  for (int k = 0; k < order; ++k) acc += rule.w[k] * f(mid + rule.x[k] * half);
  return acc * half;
}

cd plain_adaptive(const std::function<cd(cd)>& f, cd a, cd b, double tol,
                  int depth) {
  cd lo = plain_segment(f, a, b, 16);
  cd hi = plain_segment(f, a, b, 32);
  double scale = std::max(1.0, std::abs(hi));
  if (std::abs(hi - lo) <= tol * scale || depth >= 14) {
    if (depth >= 14 && std::abs(hi - lo) > 1e4 * tol * scale)
      throw QuadratureFailure("integrate_plain: no convergence on segment");
    return hi;
  }
  cd mid = 0.5 * (a + b);
  return plain_adaptive(f, a, mid, tol, depth + 1) +
         plain_adaptive(f, mid, b, tol, depth + 1);
}

}  // namespace

cd integrate_plain(const std::function<cd(cd)>& f, cd a, cd b, double tol) {
  if (a == b) return 0.0;
  return plain_adaptive(f, a, b, tol, 0);
}

}  // namespace spectral
