#include "spectral/periods.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "spectral/errors.hpp"

namespace spectral {

std::vector<CurveForm> monomial_forms(const SpectralCurve& c) {
  std::vector<CurveForm> fs;
  const auto poles = c.poles;
  for (int b = 1; b <= c.genus; ++b) {
    fs.push_back([b, poles](cd z, cd y) {
      cd pp = 1.0;
      for (cd t : poles) pp *= (z - t);
      return std::pow(z, b - 1) / (y * pp);
    });
  }
  return fs;
}

std::vector<CurveForm> normalized_forms(const SpectralCurve& c, const MatC& Minv) {
  std::vector<CurveForm> fs;
  const auto poles = c.poles;
  const int g = c.genus;
  for (int b = 0; b < g; ++b) {
    VecC col = Minv.col(b);
    fs.push_back([col, poles, g](cd z, cd y) {
      cd pp = 1.0;
      for (cd t : poles) pp *= (z - t);
      cd num = 0.0, zp = 1.0;
      for (int gma = 0; gma < g; ++gma) {
        num += col(gma) * zp;
        zp *= z;
      }
      return num / (y * pp);
    });
  }
  return fs;
}

VecC eval_normalized(const SpectralCurve& c, const MatC& Minv, cd z, cd y) {
  const int g = c.genus;
  VecC mono(g);
  cd pp = c.pole_product(z);
  cd zp = 1.0;
  for (int gma = 0; gma < g; ++gma) {
    mono(gma) = zp / (y * pp);
    zp *= z;
  }
  return Minv.transpose() * mono;
}

PeriodData build_periods(const SpectralCurve& c, const SheetTracker& tracker,
                         const HomologyBasis& basis, double tol) {
  const int g = c.genus;
  PeriodData pd;
  pd.M = MatC::Zero(g, g);
  pd.Bp = MatC::Zero(g, g);
  pd.I = VecC::Zero(g);
  auto mono = monomial_forms(c);
  CurveForm ydz = [](cd, cd y) { return y; };

  for (int al = 0; al < g; ++al) {
    std::vector<CurveForm> fs = mono;
    fs.push_back(ydz);
    auto r = integrate_forms(c, basis.a[al].pts, basis.a[al].y0, fs, tol);
    if (dist(r.y_end, basis.a[al].y0) > 1e-6 * (1.0 + std::abs(r.y_end)))
      throw BasisDegenerate("build_periods: a-loop failed to close");
    for (int b = 0; b < g; ++b) pd.M(al, b) = r.values(b);
    pd.I(al) = r.values(g);
  }
  for (int al = 0; al < g; ++al) {
    auto r = integrate_forms(c, basis.b[al].pts, basis.b[al].y0, mono, tol);
    if (dist(r.y_end, basis.b[al].y0) > 1e-6 * (1.0 + std::abs(r.y_end)))
      throw BasisDegenerate("build_periods: b-loop failed to close");
    for (int b = 0; b < g; ++b) pd.Bp(al, b) = r.values(b);
  }

  if (g > 0) {
    Eigen::FullPivLU<MatC> lu(pd.M);
    if (!lu.isInvertible())
      throw BasisDegenerate("build_periods: singular a-period matrix");
    pd.Minv = lu.inverse();
    pd.tau = pd.Bp * pd.Minv;
    double sym = (pd.tau - pd.tau.transpose()).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, pd.tau.cwiseAbs().maxCoeff());
    if (sym > 1e-7 * scale)
      throw BasisDegenerate("build_periods: period matrix not symmetric");
    Eigen::MatrixXd imtau = pd.tau.imag();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (imtau + imtau.transpose()));
    if (es.eigenvalues().minCoeff() <= 0)
      throw BasisDegenerate("build_periods: Im(tau) not positive definite");
  } else {
    pd.Minv = MatC::Zero(0, 0);
    pd.tau = MatC::Zero(0, 0);
  }

  // residues of y dz on each sheet over every pole, via small circles with
  // sheet labels taken from the tracker at the circle seed
  for (int j = 0; j < c.m(); ++j) {
    cd tj = c.poles[j];
    double r = 1e300;
    for (int k = 0; k < c.m(); ++k)
      if (k != j) r = std::min(r, dist(tj, c.poles[k]));
    for (cd e : c.branch) r = std::min(r, dist(tj, e));
    r *= 0.3;
    VecC lam(c.n);
    auto loop = circle_points(tj, r, 16);
    for (int k = 0; k < c.n; ++k) {
      cd y0 = tracker.point(loop[0], k).y;
      auto res = integrate_form(c, loop, y0, ydz, tol);
      if (dist(res.y_end, y0) > 1e-6 * (1.0 + std::abs(y0)))
        throw QuadratureFailure("build_periods: residue loop changed sheet");
      lam(k) = res.value / (2.0 * kPi * kI);
    }
    pd.lambda.push_back(lam);
  }
  return pd;
}

cd agm_complex(cd a, cd b) {
  for (int it = 0; it < 500; ++it) {
    if (std::abs(a - b) <= 1e-16 * (std::abs(a) + std::abs(b))) break;
    cd m = 0.5 * (a + b);
    cd r = std::sqrt(a * b);
    if (std::abs(m - r) > std::abs(m + r)) r = -r;
    a = m;
    b = r;
  }
  return 0.5 * (a + b);
}

cd agm_tau(const SpectralCurve& c) {
  if (c.genus != 1 || c.branch.size() != 4)
    throw ParameterError("agm_tau: requires a genus-1 curve");
  cd e1 = c.branch[0], e2 = c.branch[1], e3 = c.branch[2], e4 = c.branch[3];
  cd A = std::sqrt((e2 - e1) * (e4 - e3));
  cd B = std::sqrt((e3 - e1) * (e4 - e2));
  cd C = std::sqrt((e4 - e1) * (e3 - e2));
  return kI * agm_complex(B, C) / agm_complex(B, A);
}

double lattice_distance(const VecC& u, const MatC& tau,
                        Eigen::VectorXi* m_out, Eigen::VectorXi* k_out) {
  const int g = static_cast<int>(u.size());
  Eigen::MatrixXd Y = tau.imag();
  Eigen::VectorXd imu(g);
  for (int i = 0; i < g; ++i) imu(i) = u(i).imag();
  Eigen::VectorXd kreal = Y.fullPivLu().solve(imu);
  Eigen::VectorXi k(g), m(g);
  for (int i = 0; i < g; ++i) k(i) = static_cast<int>(std::lround(kreal(i)));
  VecC rem = u;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) rem(i) -= tau(i, j) * cd(k(j), 0);
  for (int i = 0; i < g; ++i) m(i) = static_cast<int>(std::lround(rem(i).real()));
  for (int i = 0; i < g; ++i) rem(i) -= cd(m(i), 0);
  if (m_out) *m_out = m;
  if (k_out) *k_out = k;
  return rem.size() ? rem.cwiseAbs().maxCoeff() : 0.0;
}

bool near_lattice(const VecC& u, const MatC& tau, double tol) {
  return lattice_distance(u, tau) <= tol;
}

AbelContext::AbelContext(const SpectralCurve& c, const SheetTracker& tracker,
                         const PeriodData& pd)
    : c_(c), tracker_(tracker), pd_(pd) {
  v_ = normalized_forms(c, pd.Minv);
  // path joining the two anchor sheets: out to the first branch point, once
  // around it, and back
  cd b0 = c.branch.front();
  double r = 1e300;
  for (cd e : c.branch)
    if (e != b0) r = std::min(r, dist(b0, e));
  for (cd t : c.poles) r = std::min(r, dist(b0, t));
  r *= 0.3;
  cd start = b0 + r;
  auto out = route_avoiding(c.anchor, start, tracker.obstacles());
  auto circ = circle_points(b0, r, 24);
  flip_loop_ = out;
  flip_loop_.insert(flip_loop_.end(), circ.begin() + 1, circ.end());
  for (auto it = out.rbegin() + 1; it != out.rend(); ++it)
    flip_loop_.push_back(*it);
  if (c.genus > 0) {
    auto res = integrate_forms(c_, flip_loop_, c.anchor_roots[0], v_);
    if (dist(res.y_end, -c.anchor_roots[0]) >
        1e-6 * (1.0 + std::abs(res.y_end)))
      throw ContinuationAmbiguous("AbelContext: flip loop did not change sheet");
    flip_shift_ = res.values;
  } else {
    flip_shift_ = VecC::Zero(0);
  }
}

VecC AbelContext::along_path(const std::vector<cd>& pts, cd y0) const {
  return integrate_forms(c_, pts, y0, v_).values;
}

VecC AbelContext::map_point(cd z, int sheet) const {
  if (sheet < 0 || sheet >= c_.n)
    throw ParameterError("AbelContext::map_point: bad sheet index");
  std::tuple<double, double, int> key{z.real(), z.imag(), sheet};
  {
    std::shared_lock lk(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto path = route_avoiding(c_.anchor, z, tracker_.obstacles());
  auto res = integrate_forms(c_, path, c_.anchor_roots[0], v_);
  cd y_target = tracker_.point(z, sheet).y;
  VecC val;
  if (dist(res.y_end, y_target) <= dist(res.y_end, -y_target)) {
    val = res.values;
  } else {
    auto res2 = integrate_forms(c_, path, -c_.anchor_roots[0], v_);
    if (dist(res2.y_end, y_target) > dist(res2.y_end, -y_target))
      throw ContinuationAmbiguous("AbelContext: sheet resolution failed");
    val = flip_shift_ + res2.values;
  }
  std::unique_lock lk(mutex_);
  cache_[key] = val;
  return val;
}

VecC AbelContext::map_match(cd z, cd y) const {
  auto pts = tracker_.points_above(z);
  int best = 0;
  double bd = 1e300;
  for (const auto& p : pts) {
    double d = dist(p.y, y);
    if (d < bd) {
      bd = d;
      best = p.sheet;
    }
  }
  return map_point(z, best);
}

VecC AbelContext::to_infinity(int sheet) const {
  {
    std::shared_lock lk(mutex_);
    auto it = inf_cache_.find(sheet);
    if (it != inf_cache_.end()) return it->second;
  }
  const int g = c_.genus;
  double R = 3.0 * c_.scale + 1.0;
  cd z_far = R * std::exp(cd(0.0, 0.3));
  VecC head = map_point(z_far, sheet);
  cd y_far = tracker_.point(z_far, sheet).y;
  // reversed polynomial: Prev(t) = t^{2g+2} P(1/t)
  const int D = c_.P.degree();
  std::vector<cd> rev(D + 1);
  for (int i = 0; i <= D; ++i) rev[i] = c_.P.coeff(D - i);
  Poly prev(rev);
  cd t0 = 1.0 / z_far;
  cd h0 = y_far * c_.pole_product(z_far) * std::pow(t0, g + 1);
  // continued square root of Prev from t0 toward 0 at descending GL nodes
  auto tail_at = [&](int order) {
    const GLRule& rule = gl_rule(order);
    VecC acc = VecC::Zero(g);
    cd h = h0;
    cd tprev = t0;
    for (int k = order - 1; k >= 0; --k) {  // nodes from t0-side toward 0
      cd tk = 0.5 * t0 * (1.0 + rule.x[k]);
      int steps = 8;
      for (int s = 1; s <= steps; ++s) {
        cd tt = tprev + (tk - tprev) * (double(s) / steps);
        cd cand = std::sqrt(prev.eval(tt));
        if (std::abs(cand - h) > std::abs(cand + h)) cand = -cand;
        h = cand;
      }
      cd tp = 1.0;
      for (int gma = 0; gma < g; ++gma) {
        // integrand for z^{gma} dz / w expressed in t
        acc(gma) += rule.w[k] * std::pow(tk, g - 1 - gma) / h;
        (void)tp;
      }
      tprev = tk;
    }
    return (acc * (0.5 * t0)).eval();
  };
  VecC lo = tail_at(48), hi = tail_at(96);
  if ((hi - lo).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + hi.cwiseAbs().maxCoeff()))
    throw QuadratureFailure("AbelContext::to_infinity: tail not converged");
  VecC tail_norm = pd_.Minv.transpose() * hi;
  VecC val = head + tail_norm;
  std::unique_lock lk(mutex_);
  inf_cache_[sheet] = val;
  return val;
}

}  // namespace spectral
