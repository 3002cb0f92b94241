#include "spectral/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "spectral/quadrature.hpp"

namespace spectral {

namespace {

// Rotation margin for one square-root continuation step: |r - s| must stay
// below this multiple of |r + s|, i.e. the step may rotate the root by at
// most about 74 degrees.
constexpr double kSqrtStepMargin = 0.75;

cd materialize(const ThetaVal& tv) { return tv.value * std::exp(tv.logscale); }

}  // namespace

KernelContext::KernelContext(const SpectralCurve& c, const SheetTracker& tracker,
                             const HomologyBasis& basis, const PeriodData& pd,
                             const AbelContext& abel,
                             std::optional<HalfChar> odd_override)
    : c_(c), tracker_(tracker), basis_(basis), pd_(pd), abel_(abel),
      theta_(pd.tau), vforms_(normalized_forms(c, pd.Minv)) {
  if (c.genus < 1)
    throw ParameterError("kernel context requires positive genus");
  bool found = false;
  std::vector<HalfChar> candidates;
  if (odd_override) {
    if (!half_char_odd(*odd_override))
      throw ParameterError("characteristic override must be odd");
    candidates.push_back(*odd_override);
  } else {
    candidates = theta_.odd_characteristics();
  }
  for (const HalfChar& ch : candidates) {
    ThetaVal tv = theta_.eval(VecC::Zero(c.genus), ch);
    VecC g0 = tv.grad * std::exp(tv.logscale);
    if (g0.norm() > 1e-8) {
      odd_ = ch;
      grad0_ = g0;
      found = true;
      break;
    }
  }
  if (!found)
    throw OddCharDegenerate("no odd characteristic with a healthy gradient");
  s_anchor_ = std::sqrt(w_section(c_.anchor, c_.anchor_roots[0]));
  std::lock_guard<std::mutex> lock(mutex_);
  s_cache_[{c_.anchor.real(), c_.anchor.imag(), 0}] = s_anchor_;
}

VecC KernelContext::forms(cd z, cd y) const {
  return eval_normalized(c_, pd_.Minv, z, y);
}

cd KernelContext::w_section(cd z, cd y) const {
  VecC v = forms(z, y);
  cd acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += grad0_(i) * v(i);
  return acc;
}

std::pair<cd, cd> KernelContext::continue_sqrt_path(const std::vector<cd>& pts,
                                                    cd y0, cd s0) const {
  cd y = y0, s = s0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    cd a = pts[i], b = pts[i + 1];
    if (std::abs(b - a) < 1e-15 * c_.scale) continue;
    int ns = 16;
    for (;;) {
      cd yy = y, ss = s, zc = a;
      bool ok = true;
      for (int k = 1; k <= ns; ++k) {
        cd zn = a + (b - a) * (static_cast<double>(k) / ns);
        cd yn = continue_y_segment(c_, zc, yy, zn);
        cd W = w_section(zn, yn);
        if (std::abs(W) == 0.0)
          throw ContinuationAmbiguous(
              "square-root section vanished along the continuation path");
        cd r = std::sqrt(W);
        if (std::abs(r - ss) > std::abs(r + ss)) r = -r;
        if (std::abs(r - ss) > kSqrtStepMargin * std::abs(r + ss)) {
          ok = false;
          break;
        }
        ss = r;
        yy = yn;
        zc = zn;
      }
      if (ok) {
        y = yy;
        s = ss;
        break;
      }
      ns *= 4;
      if (ns > 4096)
        throw ContinuationAmbiguous(
            "square-root sign could not be tracked along a path segment");
    }
  }
  return {y, s};
}

cd KernelContext::sqrt_section(const SurfacePoint& x) const {
  if (x.sheet < 0)
    throw ParameterError("sqrt_section requires a tracked sheet label");
  std::tuple<double, double, int> key{x.z.real(), x.z.imag(), x.sheet};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = s_cache_.find(key);
    if (it != s_cache_.end()) return it->second;
  }
  std::vector<cd> pts;
  cd y0 = c_.anchor_roots[0];
  cd s0 = s_anchor_;
  if (x.sheet == 1) {
    pts = abel_.flip_loop();
    std::vector<cd> tail = route_avoiding(c_.anchor, x.z, tracker_.obstacles());
    pts.insert(pts.end(), tail.begin() + 1, tail.end());
  } else {
    pts = route_avoiding(c_.anchor, x.z, tracker_.obstacles());
  }
  auto [y_end, s_end] = continue_sqrt_path(pts, y0, s0);
  SurfacePoint ref = tracker_.point(x.z, x.sheet);
  if (std::abs(y_end - ref.y) > std::abs(y_end + ref.y))
    throw ContinuationAmbiguous(
        "square-root continuation landed on the wrong sheet");
  std::lock_guard<std::mutex> lock(mutex_);
  s_cache_[key] = s_end;
  return s_end;
}

cd KernelContext::prime_form(const SurfacePoint& x,
                             const SurfacePoint& y) const {
  VecC u = abel_.map_point(x.z, x.sheet) - abel_.map_point(y.z, y.sheet);
  ThetaVal tv = theta_.eval(u, odd_);
  return materialize(tv) / (sqrt_section(x) * sqrt_section(y));
}

cd KernelContext::szego(const VecC& q, const SurfacePoint& x,
                        const SurfacePoint& y) const {
  require_off_divisor(q);
  if (x.sheet == y.sheet && std::abs(x.z - y.z) < 1e-12 * c_.scale)
    throw NearDiagonal("szego kernel evaluated at coincident arguments");
  VecC u = abel_.map_point(x.z, x.sheet) - abel_.map_point(y.z, y.sheet);
  ThetaVal num = theta_.eval0(u + q);
  ThetaVal den0 = theta_.eval0(q);
  ThetaVal dend = theta_.eval(u, odd_);
  cd ratio = num.value / (den0.value * dend.value) *
             std::exp(num.logscale - den0.logscale - dend.logscale);
  return ratio * sqrt_section(x) * sqrt_section(y);
}

cd KernelContext::bidifferential(const SurfacePoint& x,
                                 const SurfacePoint& y) const {
  if (x.sheet == y.sheet && std::abs(x.z - y.z) < 1e-8 * c_.scale)
    throw NearDiagonal("bidifferential evaluated too close to the diagonal");
  VecC u = abel_.map_point(x.z, x.sheet) - abel_.map_point(y.z, y.sheet);
  ThetaVal tv = theta_.eval(u, odd_);
  VecC r = tv.grad / tv.value;
  MatC hlog = tv.hess / tv.value - r * r.transpose();
  VecC vx = forms(x.z, x.y), vy = forms(y.z, y.y);
  cd acc = 0.0;
  for (int a = 0; a < vx.size(); ++a)
    for (int b = 0; b < vy.size(); ++b) acc += vx(a) * hlog(a, b) * vy(b);
  return -acc;
}

ThirdKindForm KernelContext::third_kind(const SurfacePoint& p,
                                        const SurfacePoint& s) const {
  std::tuple<double, double, int, double, double, int> key{
      p.z.real(), p.z.imag(), p.sheet, s.z.real(), s.z.imag(), s.sheet};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = tk_cache_.find(key);
    if (it != tk_cache_.end()) {
      ThirdKindForm form;
      form.p = p;
      form.s = s;
      form.lift_p = abel_.map_point(p.z, p.sheet);
      form.lift_s = abel_.map_point(s.z, s.sheet);
      form.corrections = it->second;
      return form;
    }
  }
  ThirdKindForm form =
      third_kind_from_lifts(abel_.map_point(p.z, p.sheet),
                            abel_.map_point(s.z, s.sheet));
  form.p = p;
  form.s = s;
  std::lock_guard<std::mutex> lock(mutex_);
  tk_cache_.emplace(key, form.corrections);
  return form;
}

ThirdKindForm KernelContext::third_kind_from_lifts(const VecC& lift_p,
                                                   const VecC& lift_s) const {
  ThirdKindForm form;
  form.lift_p = lift_p;
  form.lift_s = lift_s;
  const VecC up = form.lift_p, us = form.lift_s;
  LoopIntegrand raw = [&](cd z, cd y, const VecC& u) {
    ThetaVal tp = theta_.eval(u - up, odd_);
    ThetaVal ts = theta_.eval(u - us, odd_);
    VecC v = forms(z, y);
    cd acc = 0.0;
    for (int a = 0; a < v.size(); ++a)
      acc += (tp.grad(a) / tp.value - ts.grad(a) / ts.value) * v(a);
    return acc;
  };
  VecC corr(c_.genus);
  for (int b = 0; b < c_.genus; ++b) {
    cd cb = integrate_loop(basis_.a[b], raw, 1e-11);
    double frac = cb.imag() / (2.0 * kPi);
    if (std::abs(cb.real()) > 1e-5 ||
        std::abs(frac - std::lround(frac)) > 1e-5)
      throw QuadratureFailure(
          "third-kind period defect is not an integer multiple of 2*pi*i");
    corr(b) = cb;
  }
  form.corrections = corr;
  return form;
}

cd ThirdKindForm::eval(const KernelContext& ctx, cd z, cd y,
                       const VecC& u) const {
  const ThetaContext& th = ctx.theta();
  ThetaVal tp = th.eval(u - lift_p, ctx.odd_char());
  ThetaVal ts = th.eval(u - lift_s, ctx.odd_char());
  VecC v = ctx.forms(z, y);
  cd acc = 0.0;
  for (int a = 0; a < v.size(); ++a)
    acc += (tp.grad(a) / tp.value - ts.grad(a) / ts.value - corrections(a)) *
           v(a);
  return acc;
}

cd ThirdKindForm::operator()(const KernelContext& ctx,
                             const SurfacePoint& t) const {
  VecC u = ctx.abel().map_point(t.z, t.sheet);
  cd y = t.y;
  if (t.sheet >= 0 && y == cd(0.0, 0.0))
    y = ctx.tracker().point(t.z, t.sheet).y;
  return eval(ctx, t.z, y, u);
}

cd KernelContext::psi(const VecC& q, const SurfacePoint& x,
                      const SurfacePoint& x0) const {
  if (std::abs(x.z - x0.z) < 1e-12 * c_.scale) {
    if (x.sheet == x0.sheet) return 1.0;
    return 0.0;
  }
  return szego(q, x, x0) * (x.z - x0.z);
}

double KernelContext::divisor_margin(const VecC& q) const {
  return std::abs(theta_.eval0(q).value);
}

void KernelContext::require_off_divisor(const VecC& q) const {
  if (divisor_margin(q) < kDivisorGuard)
    throw OnThetaDivisor("twist vector lies on the theta divisor");
}

cd KernelContext::seg_integrate(cd za, cd zb, cd ya, const VecC& ua,
                                const LoopIntegrand& f, double tol, int depth,
                                cd* y_end, VecC* u_end) const {
  const std::vector<CurveForm>& vf = vforms_;
  auto pass = [&](int order, cd* yo, VecC* uo) {
    const GLRule& rule = gl_rule(order);
    cd mid = 0.5 * (za + zb), half = 0.5 * (zb - za);
    cd zc = za, yc = ya;
    VecC uc = ua;
    cd acc = 0.0;
    for (int j = 0; j < order; ++j) {
      cd zn = mid + half * rule.x[j];
      PathResult pr = integrate_forms(c_, {zc, zn}, yc, vf, 1e-12);
      for (int i = 0; i < uc.size(); ++i) uc(i) += pr.values(i);
      yc = pr.y_end;
      zc = zn;
      acc += rule.w[j] * f(zn, yc, uc);
    }
    PathResult pr = integrate_forms(c_, {zc, zb}, yc, vf, 1e-12);
    for (int i = 0; i < uc.size(); ++i) uc(i) += pr.values(i);
    *yo = pr.y_end;
    *uo = uc;
    return acc * half;
  };
  cd y16, y32;
  VecC u16, u32;
  cd i16 = pass(16, &y16, &u16);
  cd i32 = pass(32, &y32, &u32);
  if (std::abs(i16 - i32) <= tol * std::max(1.0, std::abs(i32))) {
    *y_end = y32;
    *u_end = u32;
    return i32;
  }
  if (depth >= 9)
    throw QuadratureFailure("loop integral failed to converge under bisection");
  cd midpt = 0.5 * (za + zb);
  cd ym;
  VecC um;
  cd left = seg_integrate(za, midpt, ya, ua, f, tol, depth + 1, &ym, &um);
  cd right = seg_integrate(midpt, zb, ym, um, f, tol, depth + 1, y_end, u_end);
  return left + right;
}

cd KernelContext::integrate_loop(const Loop& loop, const LoopIntegrand& f,
                                 double tol) const {
  cd z0 = loop.pts.front();
  std::vector<SurfacePoint> fiber = tracker_.points_above(z0);
  int sheet = 0;
  double best = 1e300;
  for (const SurfacePoint& sp : fiber) {
    double d = std::abs(sp.y - loop.y0);
    if (d < best) {
      best = d;
      sheet = sp.sheet;
    }
  }
  VecC u = abel_.map_point(z0, sheet);
  return integrate_path(loop.pts, f, tol, loop.y0, u);
}

cd KernelContext::integrate_path(const std::vector<cd>& pts,
                                 const LoopIntegrand& f, double tol, cd y0,
                                 const VecC& u0) const {
  cd y = y0;
  VecC u = u0;
  cd total = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    cd yn;
    VecC un;
    total += seg_integrate(pts[i], pts[i + 1], y, u, f, tol, 0, &yn, &un);
    y = yn;
    u = un;
  }
  return total;
}

cd KernelContext::szego_holonomy(const VecC& q, const Loop& loop) const {
  cd z0 = loop.pts.front();
  std::vector<SurfacePoint> fiber = tracker_.points_above(z0);
  int sheet = 0;
  double best = 1e300;
  for (const SurfacePoint& sp : fiber) {
    double d = std::abs(sp.y - loop.y0);
    if (d < best) {
      best = d;
      sheet = sp.sheet;
    }
  }
  VecC u0 = abel_.map_point(z0, sheet);
  cd s0 = sqrt_section(SurfacePoint{z0, loop.y0, sheet});
  VecC P = abel_.along_path(loop.pts, loop.y0);
  auto [y_end, s_end] = continue_sqrt_path(loop.pts, loop.y0, s0);
  if (std::abs(y_end - loop.y0) > std::abs(y_end + loop.y0))
    throw ContinuationAmbiguous("loop continuation did not close its sheet");
  // The holonomy factor of S_q(x, y) in x is independent of the reference
  // argument; shift the evaluation point off the theta zeros when needed.
  VecC shift = VecC::Zero(c_.genus);
  for (int attempt = 0; attempt < 4; ++attempt) {
    VecC base = u0 - shift;
    ThetaVal n1 = theta_.eval0(base + P + q);
    ThetaVal n0 = theta_.eval0(base + q);
    ThetaVal d1 = theta_.eval(base + P, odd_);
    ThetaVal d0 = theta_.eval(base, odd_);
    double floor = 1e-8;
    if (std::abs(n1.value) > floor && std::abs(n0.value) > floor &&
        std::abs(d1.value) > floor && std::abs(d0.value) > floor) {
      cd ratio = (n1.value / n0.value) * (d0.value / d1.value) *
                 std::exp(n1.logscale - n0.logscale + d0.logscale -
                          d1.logscale);
      return ratio * (s_end / s0);
    }
    for (int i = 0; i < c_.genus; ++i)
      shift(i) += cd(0.137 + 0.031 * i, 0.211 - 0.017 * i);
  }
  throw OnThetaDivisor("holonomy reference point stuck on the theta divisor");
}

ResidualReport verify_fay(const KernelContext& kc, const VecC& q, int pairs,
                          uint64_t seed) {
  std::vector<SurfacePoint> pts = sample_points(kc, 2 * pairs, seed);
  ThetaVal q0 = kc.theta().eval0(q);
  VecC r = q0.grad / q0.value;
  MatC hlog = q0.hess / q0.value - r * r.transpose();
  ResidualReport rep;
  for (int i = 0; i < pairs; ++i) {
    const SurfacePoint& x = pts[2 * i];
    const SurfacePoint& y = pts[2 * i + 1];
    cd s1 = kc.szego(q, x, y);
    cd s2 = kc.szego(q, y, x);
    cd B = kc.bidifferential(x, y);
    VecC vx = kc.forms(x.z, x.y), vy = kc.forms(y.z, y.y);
    cd t3 = 0.0;
    for (int a = 0; a < vx.size(); ++a)
      for (int b = 0; b < vy.size(); ++b) t3 += vx(a) * hlog(a, b) * vy(b);
    cd res = s1 * s2 + B + t3;
    double scale = std::max({std::abs(s1 * s2), std::abs(B), std::abs(t3)});
    rep.max_rel = std::max(rep.max_rel, std::abs(res) / scale);
    rep.count++;
  }
  return rep;
}

double sheet_sum_residual(const KernelContext& kc, const VecC& q,
                          const SurfacePoint& x, const SurfacePoint& y, cd z) {
  std::vector<SurfacePoint> fiber = kc.tracker().points_above(z);
  cd lhs = 0.0;
  double term_scale = 0.0;
  for (const SurfacePoint& t : fiber) {
    cd term = kc.szego(q, x, t) * kc.szego(q, t, y);
    term_scale = std::max(term_scale, std::abs(term));
    lhs += term;
  }
  cd rhs = kc.szego(q, x, y) * (1.0 / (x.z - z) - 1.0 / (y.z - z));
  double scale = std::max(term_scale, std::abs(rhs));
  return std::abs(lhs - rhs) / scale;
}

DqReport dq_szego_check(const KernelContext& kc, const VecC& q, int gamma,
                        const SurfacePoint& x, const SurfacePoint& y,
                        double fd_step) {
  const int g = kc.curve().genus;
  if (gamma < 0 || gamma >= g)
    throw ParameterError("dq direction index out of range");
  auto sfun = [&](cd dq) {
    VecC qq = q;
    qq(gamma) += dq;
    return kc.szego(qq, x, y);
  };
  auto central = [&](double h) {
    cd dre = (sfun(cd(h, 0)) - sfun(cd(-h, 0))) / (2.0 * h);
    cd dim = (sfun(cd(0, h)) - sfun(cd(0, -h))) / (cd(0, 2.0) * h);
    return 0.5 * (dre + dim);
  };
  cd d1 = central(fd_step);
  cd d2 = central(0.5 * fd_step);
  cd fd = (4.0 * d2 - d1) / 3.0;

  VecC ux = kc.abel().map_point(x.z, x.sheet);
  VecC uy = kc.abel().map_point(y.z, y.sheet);
  cd sx = kc.sqrt_section(x), sy = kc.sqrt_section(y);
  ThetaVal q0 = kc.theta().eval0(q);
  LoopIntegrand f = [&](cd z2, cd y2, const VecC& u) {
    ThetaVal n1 = kc.theta().eval0(ux - u + q);
    ThetaVal n2 = kc.theta().eval0(u - uy + q);
    ThetaVal e1 = kc.theta().eval(ux - u, kc.odd_char());
    ThetaVal e2 = kc.theta().eval(u - uy, kc.odd_char());
    cd W = kc.w_section(z2, y2);
    return n1.value * n2.value / (q0.value * q0.value * e1.value * e2.value) *
           std::exp(n1.logscale + n2.logscale - 2.0 * q0.logscale -
                    e1.logscale - e2.logscale) *
           sx * sy * W;
  };
  cd loop = kc.integrate_loop(kc.basis().a[gamma], f, 1e-11);
  cd S = kc.szego(q, x, y);
  double scale = std::max(std::abs(fd), std::abs(loop));
  DqReport rep;
  rep.direct = std::abs(fd + loop) / scale;
  cd koff = (-fd - loop) / (2.0 * kPi * kI * S);
  rep.k = std::llround(koff.real());
  rep.corrected =
      std::abs(fd + loop + 2.0 * kPi * kI * S * static_cast<double>(rep.k)) /
      scale;
  return rep;
}

std::vector<SurfacePoint> sample_points(const KernelContext& kc, int count,
                                        uint64_t seed) {
  const SpectralCurve& c = kc.curve();
  Rng rng(seed);
  cd centroid = 0.0;
  for (cd b : c.branch) centroid += b;
  centroid /= static_cast<double>(c.branch.size());
  std::vector<SurfacePoint> out;
  auto loop_dist = [&](cd z) {
    double d = 1e300;
    for (const Loop& l : kc.basis().a)
      for (size_t i = 0; i + 1 < l.pts.size(); ++i)
        d = std::min(d, dist_to_segment(z, l.pts[i], l.pts[i + 1]));
    return d;
  };
  auto enclosed = [&](cd z) {
    for (const Loop& l : kc.basis().a)
      if (winding_number(l.pts, z) != 0) return true;
    return false;
  };
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 512 && !placed; ++attempt) {
      cd z = centroid + cd(2.2 * rng.uniform() - 1.1,
                           2.2 * rng.uniform() - 1.1) *
                            c.scale;
      double dmin = 1e300;
      for (cd b : c.branch) dmin = std::min(dmin, std::abs(z - b));
      for (cd t : c.poles) dmin = std::min(dmin, std::abs(z - t));
      if (dmin < 0.12 * c.scale) continue;
      bool clash = false;
      for (const SurfacePoint& prev : out)
        if (std::abs(z - prev.z) < 0.07 * c.scale) clash = true;
      if (clash) continue;
      if (loop_dist(z) < 0.06 * c.scale) continue;
      if (enclosed(z)) continue;
      int sheet = rng.uniform() < 0.5 ? 0 : 1;
      out.push_back(kc.tracker().point(z, sheet));
      placed = true;
    }
    if (!placed)
      throw GenerationFailure("could not place a generic sample point");
  }
  return out;
}

}  // namespace spectral
