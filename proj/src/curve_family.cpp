#include "spectral/curve_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spectral/errors.hpp"
#include "spectral/quadrature.hpp"

namespace spectral {

CurveFamily::CurveFamily(const SpectralCurve& base, const HomologyBasis& basis,
                         const PeriodData& pd, double quad_tol)
    : poles_(base.poles),
      baseP_(base.P),
      anchor_(base.anchor),
      ncoef_(base.P.degree() + 1),
      aloops_(basis.a),
      baseI_(pd.I),
      baseLam0_(VecC::Zero(base.m())),
      quad_tol_(quad_tol),
      scale_(base.scale) {
  if (base.n != 2)
    throw ParameterError("curve family: two-sheeted curves only");
  const int m = base.m();
  for (int j = 0; j < m; ++j) baseLam0_(j) = pd.lambda[j](0);
  pole_gaps_.resize(m);
  for (int j = 0; j < m; ++j) {
    cd prod = 1.0;
    for (int k = 0; k < m; ++k)
      if (k != j) prod *= poles_[j] - poles_[k];
    pole_gaps_[j] = prod;
  }
}

CharCoeffs CurveFamily::char_coeffs_for(const Poly& P) const {
  CharCoeffs cc;
  cc.n = 2;
  cc.poles = poles_;
  cc.Q_num = {P * cd(-1.0)};
  return cc;
}

SpectralCurve CurveFamily::curve_for(const Poly& P) const {
  return build_curve(char_coeffs_for(P), anchor_);
}

CurveFamily::Eval CurveFamily::eval(const Poly& P) const {
  const int g = static_cast<int>(aloops_.size());
  const int m = static_cast<int>(poles_.size());
  SpectralCurve c = curve_for(P);

  Eval out;
  out.I = VecC::Zero(g);
  out.lam0 = VecC::Zero(m);
  out.JI = MatC::Zero(g, ncoef_);
  out.Jlam = MatC::Zero(m, ncoef_);

  // One pass per loop: y dz together with the coefficient sensitivities
  // z^k dz / (2 y prod(z - t)^2).
  std::vector<CurveForm> fs;
  fs.push_back([](cd, cd y) { return y; });
  for (int k = 0; k < ncoef_; ++k)
    fs.push_back([k, &c](cd z, cd y) {
      cd pp = c.pole_product(z);
      cd zp = std::pow(z, k);
      return zp / (2.0 * y * pp * pp);
    });
  for (int al = 0; al < g; ++al) {
    const Loop& loop = aloops_[al];
    std::vector<cd> roots = c.roots_at(loop.pts.front());
    cd y0 = roots[0];
    for (cd r : roots)
      if (std::abs(r - loop.y0) < std::abs(y0 - loop.y0)) y0 = r;
    auto r = integrate_forms(c, loop.pts, y0, fs, quad_tol_);
    if (dist(r.y_end, y0) > 1e-6 * (1.0 + std::abs(y0)))
      throw QuadratureFailure("curve family: a-loop failed to close");
    out.I(al) = r.values(0);
    for (int k = 0; k < ncoef_; ++k) out.JI(al, k) = r.values(1 + k);
  }

  for (int j = 0; j < m; ++j) {
    cd w = std::sqrt(P.eval(poles_[j]));
    cd lam = w / pole_gaps_[j];
    if (std::abs(lam - baseLam0_(j)) > std::abs(lam + baseLam0_(j))) lam = -lam;
    out.lam0(j) = lam;
    cd zp = 1.0;
    for (int k = 0; k < ncoef_; ++k) {
      out.Jlam(j, k) = zp / (2.0 * lam * pole_gaps_[j] * pole_gaps_[j]);
      zp *= poles_[j];
    }
  }
  return out;
}

Poly CurveFamily::solve(const VecC& I_target, const VecC& lam0_target) const {
  const int g = static_cast<int>(aloops_.size());
  const int m = static_cast<int>(poles_.size());
  if (I_target.size() != g || lam0_target.size() != m)
    throw ParameterError("curve family: target dimensions do not match");
  if (g + m != ncoef_)
    throw ParameterError("curve family: coordinate count mismatch");

  double scaleF = 1.0;
  for (int al = 0; al < g; ++al)
    scaleF = std::max(scaleF, std::abs(I_target(al)));
  for (int j = 0; j < m; ++j)
    scaleF = std::max(scaleF, std::abs(lam0_target(j)));

  std::vector<cd> coef(baseP_.coeffs());
  coef.resize(ncoef_, cd(0.0));
  double prev = std::numeric_limits<double>::infinity();
  int worse = 0;
  for (int iter = 0; iter < 30; ++iter) {
    Poly P{std::vector<cd>(coef)};
    Eval ev = eval(P);
    VecC F(ncoef_);
    for (int al = 0; al < g; ++al) F(al) = ev.I(al) - I_target(al);
    for (int j = 0; j < m; ++j) F(g + j) = ev.lam0(j) - lam0_target(j);
    double res = F.cwiseAbs().maxCoeff() / scaleF;
    if (res < 1e-10) return P;
    if (res > prev) {
      if (++worse >= 2)
        throw GenerationFailure("curve family: Newton residual diverges");
    } else {
      worse = 0;
    }
    prev = res;
    MatC J(ncoef_, ncoef_);
    J.topRows(g) = ev.JI;
    J.bottomRows(m) = ev.Jlam;
    VecC step = J.colPivHouseholderQr().solve(F);
    for (int k = 0; k < ncoef_; ++k) coef[k] -= step(k);
  }
  throw GenerationFailure("curve family: Newton did not converge");
}

}  // namespace spectral
