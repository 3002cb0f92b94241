#include "spectral/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <utility>

#include "spectral/errors.hpp"
#include "spectral/riemann_constants.hpp"

namespace spectral {

namespace {

double max_abs(const VecC& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s = std::max(s, std::abs(v(i)));
  return s;
}

// Central difference of a vector-valued map at steps h/2^k combined through
// a Romberg table.  The returned error is the relative disagreement between
// the last two diagonal extrapolants, which estimates the accuracy of the
// final value; with a single level it stays zero and no guard applies.
VecC fd_derivative(const std::function<VecC(double)>& f, double h,
                   int levels, double* rel_err) {
  levels = std::max(1, levels);
  std::vector<std::vector<VecC>> T(levels);
  double step = h;
  for (int k = 0; k < levels; ++k, step *= 0.5) {
    T[k].resize(k + 1);
    T[k][0] = (f(step) - f(-step)) / (2.0 * step);
    for (int i = 1; i <= k; ++i) {
      const double w = std::pow(4.0, i);
      T[k][i] = (w * T[k][i - 1] - T[k - 1][i - 1]) / (w - 1.0);
    }
  }
  const VecC& best = T[levels - 1][levels - 1];
  if (rel_err) {
    *rel_err = 0.0;
    if (levels > 1) {
      const VecC& prev = T[levels - 2][levels - 2];
      *rel_err = max_abs(best - prev) / std::max(1.0, max_abs(best));
    }
  }
  return best;
}

// Flatten the (G, L) blocks of a phase point for vector-space differences.
VecC flatten_point(const PhasePoint& p) {
  const int n = p.n, m = p.m();
  VecC out(m * (n * n + n));
  Eigen::Index pos = 0;
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) out(pos++) = p.G[j](r, c);
    for (int a = 0; a < n; ++a) out(pos++) = p.L[j](a);
  }
  return out;
}

PhaseTangent unflatten_tangent(const VecC& v, int n, int m) {
  PhaseTangent t;
  t.dG.reserve(m);
  t.dL.reserve(m);
  Eigen::Index pos = 0;
  for (int j = 0; j < m; ++j) {
    MatC dG(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) dG(r, c) = v(pos++);
    VecC dL(n);
    for (int a = 0; a < n; ++a) dL(a) = v(pos++);
    t.dG.push_back(std::move(dG));
    t.dL.push_back(std::move(dL));
  }
  return t;
}

PhaseTangent tangent_from_map(const std::function<PhasePoint(double)>& f,
                              double h, const FDConfig& fd, int n, int m) {
  double err = 0.0;
  VecC d = fd_derivative([&](double e) { return flatten_point(f(e)); }, h,
                         fd.richardson, &err);
  if (fd.richardson > 1 && err > 10.0 * fd.target)
    throw FDInstability("phase-point derivative disagrees across step levels");
  PhaseTangent t = unflatten_tangent(d, n, m);
  t.fd_error = err;
  t.step = h;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// CoordTangent / FDConfig
// ---------------------------------------------------------------------------

CoordTangent CoordTangent::zero(const SpectralData& sd) {
  CoordTangent u;
  const int g = static_cast<int>(sd.I.size());
  const int m = static_cast<int>(sd.cc.poles.size());
  const int r = sd.n - 1;
  u.dI = VecC::Zero(g);
  u.dq = VecC::Zero(g);
  u.dmu.assign(m, VecC::Zero(r));
  u.drho.assign(m, VecC::Zero(r));
  return u;
}

bool CoordTangent::deforms_curve() const {
  if (dI.size() > 0 && dI.cwiseAbs().maxCoeff() > 0.0) return true;
  for (const VecC& v : dmu)
    if (v.size() > 0 && v.cwiseAbs().maxCoeff() > 0.0) return true;
  return false;
}

double CoordTangent::norm() const {
  double s = dI.squaredNorm() + dq.squaredNorm();
  for (const VecC& v : dmu) s += v.squaredNorm();
  for (const VecC& v : drho) s += v.squaredNorm();
  return std::sqrt(s);
}

void FDConfig::validate() const {
  if (!(h >= 1e-8 && h <= 1e-2))
    throw ParameterError("finite-difference step outside [1e-8, 1e-2]");
  if (richardson < 1 || richardson > 4)
    throw ParameterError("Richardson level count must lie in [1, 4]");
  if (!(target > 0.0)) throw ParameterError("accuracy target must be positive");
}

// ---------------------------------------------------------------------------
// DeformationContext
// ---------------------------------------------------------------------------

DeformationContext::DeformationContext(const SpectralData& sd)
    : sd0_(sd),
      stack0_(std::make_unique<SurfaceStack>(build_curve(sd.cc))),
      family_(std::make_unique<CurveFamily>(stack0_->c, stack0_->basis,
                                            stack0_->pd)),
      p0_(inverse_transform(sd0_, *stack0_)) {
  if (sd.n != 2)
    throw ParameterError("coordinate deformations support two-sheeted data");
  G0inv_.reserve(p0_.m());
  for (int j = 0; j < p0_.m(); ++j) G0inv_.push_back(p0_.G[j].inverse());
  K0_.assign(2, VecC());
}

SpectralData DeformationContext::displaced(const CoordTangent& u,
                                           double eps) const {
  SpectralData out = sd0_;
  const int m = static_cast<int>(sd0_.cc.poles.size());
  const int n = sd0_.n;
  const int r = n - 1;
  if (u.dq.size() == out.q.size()) out.q += eps * u.dq;

  for (int j = 0; j < m; ++j) {
    // rho telescopes the logs of the torus entries, so entry k picks up the
    // difference of the adjacent rho displacements.
    for (int k = 0; k < n; ++k) {
      cd d = 0.0;
      if (k < r) d += eps * u.drho[j](k);
      if (k > 0 && k - 1 < r) d -= eps * u.drho[j](k - 1);
      if (d != cd(0.0)) out.R[j](k) *= std::exp(d);
    }
    out.rho[j] += eps * u.drho[j];
  }

  if (u.deforms_curve()) {
    VecC It = sd0_.I + eps * u.dI;
    VecC lt = family_->base_lam0();
    for (int j = 0; j < m; ++j) lt(j) += eps * u.dmu[j](0);
    Poly P = family_->solve(It, lt);
    out.cc = family_->char_coeffs_for(P);
    out.I = It;
    for (int j = 0; j < m; ++j) {
      out.lambda[j](0) = lt(j);
      out.lambda[j](1) = -lt(j);
      out.mu[j](0) = lt(j);
    }
  }
  return out;
}

PhasePoint DeformationContext::at(const CoordTangent& u, double eps) const {
  SpectralData sdp = displaced(u, eps);
  if (!u.deforms_curve()) return inverse_transform(sdp, *stack0_);
  SurfaceStack s(build_curve(sdp.cc, stack0_->c.anchor));
  return inverse_transform(sdp, s);
}

double DeformationContext::step_for(const CoordTangent& u,
                                    const FDConfig& fd) const {
  double scale = 0.0;
  for (Eigen::Index a = 0; a < u.dI.size(); ++a)
    if (u.dI(a) != cd(0.0)) scale = std::max(scale, std::abs(sd0_.I(a)));
  for (Eigen::Index a = 0; a < u.dq.size(); ++a)
    if (u.dq(a) != cd(0.0)) scale = std::max(scale, std::abs(sd0_.q(a)));
  for (size_t j = 0; j < u.dmu.size(); ++j)
    for (Eigen::Index k = 0; k < u.dmu[j].size(); ++k)
      if (u.dmu[j](k) != cd(0.0))
        scale = std::max(scale, std::abs(sd0_.mu[j](k)));
  for (size_t j = 0; j < u.drho.size(); ++j)
    for (Eigen::Index k = 0; k < u.drho[j].size(); ++k)
      if (u.drho[j](k) != cd(0.0))
        scale = std::max(scale, std::abs(sd0_.rho[j](k)));
  const double nrm = u.norm();
  if (!(nrm > 0.0)) throw ParameterError("zero tangent direction");
  return fd.h * std::max(1.0, scale) / nrm;
}

PhaseTangent DeformationContext::phase_tangent(const CoordTangent& u,
                                               const FDConfig& fd) const {
  fd.validate();
  const double h = step_for(u, fd);
  return tangent_from_map([&](double e) { return at(u, e); }, h, fd, sd0_.n,
                          static_cast<int>(sd0_.cc.poles.size()));
}

cd DeformationContext::theta_potential(const PhaseTangent& t) const {
  cd s = 0.0;
  for (int j = 0; j < p0_.m(); ++j) {
    const MatC B = G0inv_[j] * t.dG[j];
    for (int a = 0; a < p0_.n; ++a) s += p0_.L[j](a) * B(a, a);
  }
  return s;
}

cd DeformationContext::theta_potential(const CoordTangent& u,
                                       const FDConfig& fd) const {
  return theta_potential(phase_tangent(u, fd));
}

cd DeformationContext::omega_A_at(const std::vector<MatC>& G,
                                  const std::vector<VecC>& L,
                                  const PhaseTangent& tu,
                                  const PhaseTangent& tv) {
  cd s = 0.0;
  for (size_t j = 0; j < G.size(); ++j) {
    const MatC Gi = G[j].inverse();
    const MatC Bu = Gi * tu.dG[j];
    const MatC Bv = Gi * tv.dG[j];
    const int n = static_cast<int>(G[j].rows());
    for (int a = 0; a < n; ++a)
      s += tu.dL[j](a) * Bv(a, a) - tv.dL[j](a) * Bu(a, a);
    const MatC C = Bu * Bv - Bv * Bu;
    for (int a = 0; a < n; ++a) s -= L[j](a) * C(a, a);
  }
  return s;
}

cd DeformationContext::omega_A(const PhaseTangent& tu,
                               const PhaseTangent& tv) const {
  cd s = 0.0;
  for (int j = 0; j < p0_.m(); ++j) {
    const MatC Bu = G0inv_[j] * tu.dG[j];
    const MatC Bv = G0inv_[j] * tv.dG[j];
    for (int a = 0; a < p0_.n; ++a)
      s += tu.dL[j](a) * Bv(a, a) - tv.dL[j](a) * Bu(a, a);
    const MatC C = Bu * Bv - Bv * Bu;
    for (int a = 0; a < p0_.n; ++a) s -= p0_.L[j](a) * C(a, a);
  }
  return s;
}

cd DeformationContext::omega_A(const CoordTangent& u, const CoordTangent& v,
                               const FDConfig& fd) const {
  return omega_A(phase_tangent(u, fd), phase_tangent(v, fd));
}

RiemannConstants DeformationContext::constants_along(const CoordTangent& u,
                                                     double eps,
                                                     int sheet) const {
  RiemannConstants rc;
  if (!u.deforms_curve() || eps == 0.0) {
    rc.x = stack0_->tracker.point(sd0_.z0, sheet);
    rc.K = K0(sheet);
    rc.vanish = stack0_->kernel.divisor_margin(rc.K);
    return rc;
  }
  SpectralData sdp = displaced(u, eps);
  SurfaceStack s(build_curve(sdp.cc, stack0_->c.anchor));
  rc.x = s.tracker.point(sd0_.z0, sheet);
  rc.K = riemann_constants_at(s.kernel, rc.x);
  rc.vanish = s.kernel.divisor_margin(rc.K);
  return rc;
}

const VecC& DeformationContext::K0(int sheet) const {
  if (K0_[sheet].size() == 0) {
    SurfacePoint x = stack0_->tracker.point(sd0_.z0, sheet);
    K0_[sheet] = riemann_constants_at(stack0_->kernel, x);
  }
  return K0_[sheet];
}

PhasePoint DeformationContext::at_fixed_gamma(int beta, double eps,
                                              int sheet) const {
  CoordTangent u = CoordTangent::zero(sd0_);
  u.dI(beta) = 1.0;
  SpectralData sdp = displaced(u, eps);
  SurfaceStack s(build_curve(sdp.cc, stack0_->c.anchor));
  SurfacePoint x = s.tracker.point(sd0_.z0, sheet);
  VecC K = riemann_constants_at(s.kernel, x);
  sdp.q = sd0_.q + (K0(sheet) - K);
  return inverse_transform(sdp, s);
}

RiemannConstants riemann_constants(const KernelContext& kc,
                                   const SurfacePoint& x) {
  RiemannConstants rc;
  rc.x = x;
  rc.K = riemann_constants_at(kc, x);
  rc.vanish = kc.divisor_margin(rc.K);
  return rc;
}

cd theta_potential(const SpectralData& sd, const CoordTangent& u,
                   const FDConfig& fd) {
  DeformationContext ctx(sd);
  return ctx.theta_potential(u, fd);
}

cd omega_A(const SpectralData& sd, const CoordTangent& u,
           const CoordTangent& v, const FDConfig& fd) {
  DeformationContext ctx(sd);
  return ctx.omega_A(u, v, fd);
}

cd omega_S(const CoordTangent& u, const CoordTangent& v) {
  cd s = 0.0;
  for (Eigen::Index a = 0; a < u.dI.size(); ++a)
    s += u.dI(a) * v.dq(a) - v.dI(a) * u.dq(a);
  for (size_t j = 0; j < u.dmu.size(); ++j)
    for (Eigen::Index k = 0; k < u.dmu[j].size(); ++k)
      s += u.dmu[j](k) * v.drho[j](k) - v.dmu[j](k) * u.drho[j](k);
  return s;
}

// ---------------------------------------------------------------------------
// Darboux verification
// ---------------------------------------------------------------------------

namespace {

// Basis directions in a fixed order: q, I, rho, mu blocks.
struct BasisDir {
  CoordTangent u;
  std::string name;
  cd expected;      // potential contraction value
  double scale;     // denominator for the relative error
  bool witness;     // include in the convergence-ratio sweep
};

std::vector<BasisDir> basis_directions(const SpectralData& sd) {
  const int g = static_cast<int>(sd.I.size());
  const int m = static_cast<int>(sd.cc.poles.size());
  const int r = sd.n - 1;
  double Iscale = 0.0, muscale = 0.0;
  for (int a = 0; a < g; ++a) Iscale = std::max(Iscale, std::abs(sd.I(a)));
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < r; ++k)
      muscale = std::max(muscale, std::abs(sd.mu[j](k)));
  std::vector<BasisDir> dirs;
  for (int a = 0; a < g; ++a) {
    BasisDir d{CoordTangent::zero(sd), "dq[" + std::to_string(a) + "]",
               sd.I(a), std::abs(sd.I(a)), a == 0};
    d.u.dq(a) = 1.0;
    dirs.push_back(std::move(d));
  }
  for (int a = 0; a < g; ++a) {
    BasisDir d{CoordTangent::zero(sd), "dI[" + std::to_string(a) + "]", 0.0,
               Iscale, a == 0};
    d.u.dI(a) = 1.0;
    dirs.push_back(std::move(d));
  }
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < r; ++k) {
      BasisDir d{CoordTangent::zero(sd),
                 "drho[" + std::to_string(j) + "]", sd.mu[j](k),
                 std::abs(sd.mu[j](k)), j == 0};
      d.u.drho[j](k) = 1.0;
      dirs.push_back(std::move(d));
    }
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < r; ++k) {
      BasisDir d{CoordTangent::zero(sd), "dmu[" + std::to_string(j) + "]",
                 0.0, muscale, j == 0};
      d.u.dmu[j](k) = 1.0;
      dirs.push_back(std::move(d));
    }
  return dirs;
}

PhaseTangent combine(const std::vector<PhaseTangent>& basis, const VecC& c) {
  PhaseTangent t;
  const size_t m = basis[0].dG.size();
  for (size_t j = 0; j < m; ++j) {
    MatC dG = MatC::Zero(basis[0].dG[j].rows(), basis[0].dG[j].cols());
    VecC dL = VecC::Zero(basis[0].dL[j].size());
    for (size_t i = 0; i < basis.size(); ++i) {
      dG += c(i) * basis[i].dG[j];
      dL += c(i) * basis[i].dL[j];
    }
    t.dG.push_back(std::move(dG));
    t.dL.push_back(std::move(dL));
  }
  for (const PhaseTangent& b : basis)
    t.fd_error = std::max(t.fd_error, b.fd_error);
  return t;
}

CoordTangent combine_coords(const std::vector<BasisDir>& dirs, const VecC& c) {
  CoordTangent u = dirs[0].u;  // zero-shaped copy
  u.dI.setZero();
  u.dq.setZero();
  for (VecC& v : u.dmu) v.setZero();
  for (VecC& v : u.drho) v.setZero();
  for (size_t i = 0; i < dirs.size(); ++i) {
    u.dI += c(i) * dirs[i].u.dI;
    u.dq += c(i) * dirs[i].u.dq;
    for (size_t j = 0; j < u.dmu.size(); ++j) {
      u.dmu[j] += c(i) * dirs[i].u.dmu[j];
      u.drho[j] += c(i) * dirs[i].u.drho[j];
    }
  }
  return u;
}

}  // namespace

DarbouxReport verify_darboux(const SpectralData& sd, const FDConfig& fd,
                             int trials, std::uint64_t seed, double tol) {
  fd.validate();
  DeformationContext ctx(sd);
  DarbouxReport rep;
  const int g = ctx.genus();
  const std::vector<BasisDir> dirs = basis_directions(sd);
  const int nb = static_cast<int>(dirs.size());

  // Phase tangents along every coordinate direction, computed once.
  std::vector<PhaseTangent> tang;
  tang.reserve(nb);
  for (const BasisDir& d : dirs) {
    tang.push_back(ctx.phase_tangent(d.u, fd));
    rep.fd_steps.push_back(tang.back().step);
  }

  // Potential contractions against the coordinate form of the potential.
  for (int i = 0; i < nb; ++i) {
    ContractionCase c;
    c.name = dirs[i].name;
    c.value = ctx.theta_potential(tang[i]);
    c.expected = dirs[i].expected;
    c.rel_err = std::abs(c.value - c.expected) /
                std::max(dirs[i].scale, 1e-12);
    rep.contractions.push_back(std::move(c));
    rep.contraction_err =
        std::max(rep.contraction_err, rep.contractions.back().rel_err);
  }

  // Second-order convergence witness: plain central differences at a step
  // where truncation dominates the quadrature noise, halved once.
  rep.min_ratio = std::numeric_limits<double>::infinity();
  FDConfig coarse = fd;
  coarse.richardson = 1;
  coarse.h = 2e-3;
  FDConfig fine = coarse;
  fine.h = coarse.h / 2.0;
  for (int i = 0; i < nb; ++i) {
    if (!dirs[i].witness) continue;
    const cd vc = ctx.theta_potential(ctx.phase_tangent(dirs[i].u, coarse));
    const cd vf = ctx.theta_potential(ctx.phase_tangent(dirs[i].u, fine));
    const double ec = std::abs(vc - dirs[i].expected);
    const double ef = std::abs(vf - dirs[i].expected);
    const double ratio = ec / std::max(ef, 1e-300);
    for (ContractionCase& c : rep.contractions)
      if (c.name == dirs[i].name) c.ratio = ratio;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
  }

  // Full basis matrix of omega_A against the canonical coordinate form.
  MatC WA(nb, nb), WS(nb, nb);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      WA(i, j) = ctx.omega_A(tang[i], tang[j]);
      WS(i, j) = omega_S(dirs[i].u, dirs[j].u);
    }
  rep.canonical_err = (WA - WS).cwiseAbs().maxCoeff();

  // Random tangent pairs assembled from the basis tangents, plus one pair
  // differentiated directly along the combined direction as a linearity
  // sentinel.
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    VecC cu(nb), cv(nb);
    for (int i = 0; i < nb; ++i) {
      cu(i) = rng.cnormal();
      cv(i) = rng.cnormal();
    }
    const PhaseTangent tu = combine(tang, cu);
    const PhaseTangent tv = combine(tang, cv);
    const CoordTangent uu = combine_coords(dirs, cu);
    const CoordTangent vv = combine_coords(dirs, cv);
    const cd wa = ctx.omega_A(tu, tv);
    const cd ws = omega_S(uu, vv);
    const double scale = std::max(1.0, std::abs(ws));
    double err = std::abs(wa - ws) / scale;
    if (t == 0) {
      const cd wd = ctx.omega_A(ctx.phase_tangent(uu, fd),
                                ctx.phase_tangent(vv, fd));
      err = std::max(err, std::abs(wd - ws) / scale);
    }
    rep.random_pair_err = std::max(rep.random_pair_err, err);
  }

  // Leaf restriction: pairs with dmu = drho = 0 against sum dI ^ dq.
  for (int t = 0; t < trials; ++t) {
    VecC cu = VecC::Zero(nb), cv = VecC::Zero(nb);
    for (int i = 0; i < 2 * g; ++i) {
      cu(i) = rng.cnormal();
      cv(i) = rng.cnormal();
    }
    const cd wa = ctx.omega_A(combine(tang, cu), combine(tang, cv));
    const cd ws = omega_S(combine_coords(dirs, cu), combine_coords(dirs, cv));
    rep.leaf_err = std::max(
        rep.leaf_err, std::abs(wa - ws) / std::max(1.0, std::abs(ws)));
  }

  // Gamma coordinates on the leaf: moving I at fixed gamma = q + K^x must
  // leave the leaf form canonical against the q-directions and closed among
  // themselves.
  {
    const int sheet = 0;
    std::vector<PhaseTangent> tgam;
    for (int b = 0; b < g; ++b) {
      CoordTangent u = CoordTangent::zero(sd);
      u.dI(b) = 1.0;
      const double h = ctx.step_for(u, fd);
      tgam.push_back(tangent_from_map(
          [&](double e) { return ctx.at_fixed_gamma(b, e, sheet); }, h, fd,
          sd.n, static_cast<int>(sd.cc.poles.size())));
    }
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        const cd pair = ctx.omega_A(tgam[a], tang[b]);  // against dq[b]
        const cd want = (a == b) ? cd(1.0) : cd(0.0);
        rep.gamma_err = std::max(rep.gamma_err, std::abs(pair - want));
        const cd closed = ctx.omega_A(tgam[a], tgam[b]);
        rep.gamma_err = std::max(rep.gamma_err, std::abs(closed));
      }
    }
  }

  rep.pass = rep.contraction_err < tol && rep.min_ratio >= 4.0 &&
             rep.canonical_err < tol && rep.random_pair_err < tol &&
             rep.leaf_err < tol && rep.gamma_err < tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Riemann-constant gradient symmetry
// ---------------------------------------------------------------------------

KSymmetryReport verify_K_symmetry(const SpectralData& sd, const FDConfig& fd,
                                  double tol) {
  fd.validate();
  DeformationContext ctx(sd);
  KSymmetryReport rep;
  const int g = ctx.genus();
  rep.genus = g;
  for (int sheet = 0; sheet < 2; ++sheet) {
    MatC M(g, g);
    for (int b = 0; b < g; ++b) {
      CoordTangent u = CoordTangent::zero(sd);
      u.dI(b) = 1.0;
      const double h = ctx.step_for(u, fd);
      if (sheet == 0 && b == 0) rep.fd_steps.push_back(h);
      double err = 0.0;
      VecC col = fd_derivative(
          [&](double e) { return ctx.constants_along(u, e, sheet).K; }, h,
          fd.richardson, &err);
      if (fd.richardson > 1 && err > 10.0 * fd.target)
        throw FDInstability(
            "Riemann-constant derivative disagrees across step levels");
      M.col(b) = col;
    }
    rep.M.push_back(M);
    rep.sym_err.push_back((M - M.transpose()).cwiseAbs().maxCoeff());
    rep.max_err = std::max(rep.max_err, rep.sym_err.back());
  }
  bool finite = true;
  for (const MatC& M : rep.M) finite = finite && M.allFinite();
  rep.pass = finite && (g < 2 || rep.max_err < tol);
  return rep;
}

// ---------------------------------------------------------------------------
// Extended Poisson bracket
// ---------------------------------------------------------------------------

cd poisson_bracket(const MatC& G, const VecC& lambda, int a, int b, int c,
                   int d) {
  const int n = static_cast<int>(G.rows());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(lambda(i)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(lambda(i) - lambda(j)) <= 1e-12 * std::max(scale, 1.0))
        throw DegenerateSpectrum("coincident eigenvalues in bracket");

  const MatC Gi = G.inverse();
  const MatC A = G * lambda.asDiagonal() * Gi;
  const MatC LGi = lambda.asDiagonal() * Gi;
  auto dA_dG = [&](int i, int j, int p, int q) {
    cd v = 0.0;
    if (i == p) v += LGi(q, j);
    v -= A(i, p) * Gi(q, j);
    return v;
  };
  auto dA_dlam = [&](int i, int j, int k) { return G(i, k) * Gi(k, j); };

  cd s = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const cd left = dA_dG(a, b, p, q);
      const cd right = dA_dG(c, d, p, q);
      for (int r = 0; r < n; ++r)
        for (int t = 0; t < n; ++t) {
          if (q == t) continue;  // equal eigenvalue index: bracket vanishes
          const cd br = G(p, t) * G(r, q) / (lambda(q) - lambda(t));
          s += left * br * dA_dG(c, d, r, t);
        }
      // {G_pq, lambda_k} = -G_pq at k = q, zero otherwise.
      const cd br = -G(p, q);
      s += left * br * dA_dlam(c, d, q);
      s -= dA_dlam(a, b, q) * br * right;
    }
  return s;
}

KKReport verify_induced_kk(int n, std::uint64_t seed, double tol) {
  Rng rng(seed);
  MatC G;
  VecC lam;
  for (;;) {
    G = MatC(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = rng.cnormal();
    lam = VecC(n);
    for (int i = 0; i < n; ++i) lam(i) = rng.cnormal();
    if (std::abs(G.determinant()) < 0.3) continue;
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        gap = std::min(gap, std::abs(lam(i) - lam(j)));
    if (gap > 0.5) break;
  }
  G /= det_root(G.determinant(), n);
  const MatC A = G * lam.asDiagonal() * G.inverse();

  KKReport rep;
  rep.n = n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const cd br = poisson_bracket(G, lam, a, b, c, d);
          const cd rv = poisson_bracket(G, lam, c, d, a, b);
          rep.antisym_err = std::max(rep.antisym_err, std::abs(br + rv));
          const cd kk = (c == b ? A(a, d) : cd(0.0)) -
                        (a == d ? A(c, b) : cd(0.0));
          rep.kk_err = std::max(rep.kk_err, std::abs(br - kk));
        }
  rep.pass = rep.antisym_err < 1e-13 && rep.kk_err < tol;
  return rep;
}

}  // namespace spectral
