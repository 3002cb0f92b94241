#include "spectral/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spectral/errors.hpp"

namespace spectral {

namespace {

// All permutations of {0..n-1}, for the small column-matching searches.
std::vector<std::vector<int>> permutations(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

}  // namespace

SurfaceStack::SurfaceStack(SpectralCurve curve)
    : c(std::move(curve)),
      tracker(c),
      basis(build_homology(c, tracker)),
      pd(build_periods(c, tracker, basis)),
      abel(c, tracker, pd),
      rc(compute_riemann_constant(c, tracker, pd, abel)),
      kernel(c, tracker, basis, pd, abel) {}

MatC wave_matrix(const SurfaceStack& s, const VecC& q, cd z, cd z0) {
  const int n = s.c.n;
  MatC W(n, n);
  for (int a = 0; a < n; ++a) {
    SurfacePoint x0 = s.tracker.point(z0, a);
    for (int b = 0; b < n; ++b)
      W(a, b) = s.kernel.psi(q, s.tracker.point(z, b), x0);
  }
  return W;
}

MatC wave_matrix_at_pole(const SurfaceStack& s, const VecC& q, int pole_index,
                         cd z0) {
  const int n = s.c.n;
  if (pole_index < 0 || pole_index >= s.c.m())
    throw ParameterError("pole index out of range");
  s.kernel.require_off_divisor(q);
  cd t = s.c.poles[pole_index];

  double gap = dist(t, z0);
  for (int j = 0; j < s.c.m(); ++j)
    if (j != pole_index) gap = std::min(gap, dist(t, s.c.poles[j]));
  for (cd b : s.c.branch) gap = std::min(gap, dist(t, b));
  double h = 0.08 * gap;
  if (h <= 0.0) throw DegenerateSpectrum("pole collides with special points");

  const int N = 16;
  std::vector<cd> pts = circle_points(t, h, N);

  const ThetaContext& theta = s.kernel.theta();
  ThetaVal tq = theta.eval0(q);

  std::vector<SurfacePoint> x0s;
  std::vector<VecC> u0s;
  std::vector<cd> s0s;
  for (int a = 0; a < n; ++a) {
    x0s.push_back(s.tracker.point(z0, a));
    u0s.push_back(s.abel.map_point(z0, a));
    s0s.push_back(s.kernel.sqrt_section(x0s[a]));
  }

  MatC W = MatC::Zero(n, n);
  for (int b = 0; b < n; ++b) {
    cd y = s.tracker.point(pts[0], b).y;
    VecC u = s.abel.map_point(pts[0], b);
    cd sv = s.kernel.sqrt_section(s.tracker.point(pts[0], b));
    cd y_start = y, s_start = sv;
    VecC u_start = u;
    for (int i = 0; i < N; ++i) {
      for (int a = 0; a < n; ++a) {
        ThetaVal num = theta.eval0(u - u0s[a] + q);
        ThetaVal den = theta.eval(u - u0s[a], s.kernel.odd_char());
        cd ratio = num.value / (tq.value * den.value) *
                   std::exp(num.logscale - tq.logscale - den.logscale);
        W(a, b) += ratio * sv * s0s[a] * (pts[i] - z0);
      }
      std::vector<cd> seg{pts[i], pts[i + 1]};
      u += s.abel.along_path(seg, y);
      auto [y_next, s_next] = s.kernel.continue_sqrt_path(seg, y, sv);
      y = y_next;
      sv = s_next;
    }
    if (std::abs(y - y_start) > 1e-8 * (std::abs(y_start) + 1.0) ||
        std::abs(sv - s_start) > 1e-8 * std::abs(s_start) ||
        (u - u_start).norm() > 1e-8)
      throw QuadratureFailure("branch did not close around the pole circle");
  }
  return W / static_cast<double>(N);
}

std::vector<SurfacePoint> eigen_divisor(const SurfaceStack& s,
                                        const RationalMatrix& Ahat, cd z0) {
  if (s.c.n != 2)
    throw ParameterError("eigenvector divisor requires a two-sheeted curve");
  const int m = s.c.m();

  // Numerator of the upper-right entry over prod_j (z - t_j).
  Poly S;
  for (int j = 0; j < m; ++j) {
    std::vector<cd> others;
    for (int k = 0; k < m; ++k)
      if (k != j) others.push_back(s.c.poles[k]);
    S = S + Poly::from_roots(others, Ahat.residues[j](0, 1));
  }
  S = S.truncated(1e-12);
  if (S.is_zero())
    throw ReducibleCurve("upper-right entry vanishes identically");

  cd rem{};
  Poly T = S.deflate(z0, &rem);
  if (std::abs(rem) > 1e-7 * std::max(S.max_abs_coeff(), 1e-300))
    throw ConstraintViolation(
        "normalization point is not a zero of the off-diagonal entry");
  if (T.degree() != s.c.genus)
    throw DegenerateSpectrum(
        "eigenvector divisor does not have the expected degree");

  std::vector<cd> zs = T.roots();
  Poly Td = T.derivative();
  for (cd& r : zs)
    for (int it = 0; it < 2; ++it) {
      cd d = Td.eval(r);
      if (std::abs(d) > 0.0) r -= T.eval(r) / d;
    }
  std::sort(zs.begin(), zs.end(), lex_less);

  std::vector<SurfacePoint> out;
  for (cd r : zs) {
    for (cd b : s.c.branch)
      if (dist(r, b) < 1e-6 * s.c.scale)
        throw DegenerateSpectrum("divisor point too close to a branch point");
    for (cd t : s.c.poles)
      if (dist(r, t) < 1e-6 * s.c.scale)
        throw DegenerateSpectrum("divisor point too close to a pole");
    if (dist(r, z0) < 1e-6 * s.c.scale)
      throw DegenerateSpectrum("divisor point collides with the base point");
    auto fiber = s.tracker.points_above(r);
    cd a22 = Ahat.evaluate(r)(1, 1);
    int best = 0;
    for (int b = 1; b < static_cast<int>(fiber.size()); ++b)
      if (std::abs(fiber[b].y - a22) < std::abs(fiber[best].y - a22)) best = b;
    double ymag = 0.0;
    for (const auto& f : fiber) ymag = std::max(ymag, std::abs(f.y));
    if (std::abs(fiber[best].y - a22) > 1e-5 * std::max(ymag, std::abs(a22)))
      throw DegenerateSpectrum(
          "matrix is not triangular over a divisor projection");
    out.push_back(fiber[best]);
  }
  return out;
}

PhasePoint canonicalize_to_sheets(const PhasePoint& p, const SurfaceStack& s,
                                  double tol) {
  PhasePoint out = p;
  for (int j = 0; j < p.m(); ++j) {
    const VecC& lam = s.pd.lambda[j];
    double scale = lam.cwiseAbs().maxCoeff();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm;
    for (const auto& perm : permutations(p.n)) {
      double err = 0.0;
      for (int k = 0; k < p.n; ++k)
        err = std::max(err, std::abs(p.L[j](perm[k]) - lam(k)));
      if (err < best) {
        best = err;
        best_perm = perm;
      }
    }
    if (best > tol * scale)
      throw DegenerateSpectrum(
          "residue eigenvalues do not match the curve sheets");
    MatC G(p.n, p.n);
    VecC L(p.n);
    for (int k = 0; k < p.n; ++k) {
      G.col(k) = p.G[j].col(best_perm[k]);
      L(k) = p.L[j](best_perm[k]);
    }
    // A column permutation can flip the determinant sign; absorb it into the
    // first column, which leaves the residue matrix unchanged.
    cd d = G.determinant();
    if (std::abs(d + 1.0) < std::abs(d - 1.0)) G.col(0) *= -1.0;
    out.G[j] = G;
    out.L[j] = L;
  }
  return out;
}

namespace {

// Ratio between the wave-matrix eigenvector slope and the one of the given
// matrix.  It is constant on the curve; the forward map conjugates the
// input by diag(1, kappa) to make it one, which aligns the torus factors
// with the wave normalization.
cd row_calibration(const SurfaceStack& s, const RationalMatrix& Ah,
                   const VecC& q, cd z0) {
  SurfacePoint x01 = s.tracker.point(z0, 0);
  SurfacePoint x02 = s.tracker.point(z0, 1);
  const std::vector<cd> offsets{
      cd(0.31, -0.22), cd(-0.17, 0.29), cd(0.23, 0.37),  cd(-0.41, -0.11),
      cd(0.48, 0.08),  cd(-0.09, -0.44), cd(0.52, 0.51), cd(-0.57, 0.23),
      cd(0.13, -0.58), cd(-0.33, -0.47), cd(0.61, -0.36), cd(-0.62, -0.09)};
  // Probes near the zeros or poles of either slope lose relative accuracy,
  // so each candidate carries a quality score and only well-conditioned
  // pairs are compared.
  std::vector<std::pair<double, cd>> values;
  for (cd off : offsets) {
    cd z = z0 + off * s.c.scale;
    try {
      SurfacePoint x = s.tracker.point(z, 0);
      MatC A = Ah.evaluate(z);
      double anorm = A.cwiseAbs().maxCoeff();
      if (std::abs(A(0, 1)) < 1e-6 * anorm) continue;
      cd ctrue = (x.y - A(0, 0)) / A(0, 1);
      cd cpsi = s.kernel.szego(q, x, x02) / s.kernel.szego(q, x, x01);
      double mag = std::abs(ctrue);
      if (!(mag > 1e-6) || !(mag < 1e6) || !std::isfinite(std::abs(cpsi)))
        continue;
      double quality = std::min({mag, 1.0 / mag, std::abs(cpsi),
                                 1.0 / std::abs(cpsi)});
      values.emplace_back(quality, cpsi / ctrue);
      if (values.size() == 6) break;
    } catch (const NearBranchPoint&) {
    } catch (const PoleEvaluation&) {
    } catch (const NearDiagonal&) {
    }
  }
  std::stable_sort(values.begin(), values.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (values.size() < 2)
    throw GenerationFailure("no usable probe for the row calibration");
  if (std::abs(values[0].second / values[1].second - 1.0) > 1e-6)
    throw DegenerateSpectrum(
        "eigenvector calibration is not constant on the curve");
  return values[0].second;
}

}  // namespace

SpectralData forward_transform(const PhasePoint& p, cd z0,
                               PhasePoint* canonical) {
  if (p.n != 2)
    throw ParameterError("the transform supports two-sheeted data only");
  p.validate();
  PhasePoint pv = gauge_fix(p, z0);
  RationalMatrix Ah = assemble(pv);
  CharCoeffs cc = char_coeffs(Ah);
  SurfaceStack s(build_curve(cc));

  // The base-point gauge may order the eigenvalues at z0 opposite to the
  // sheet labels of the curve; conjugate by the swap so the first diagonal
  // entry at z0 belongs to sheet 0.  Everything downstream (the divisor
  // sheets, the twist, the slope calibration) relies on this alignment.
  {
    cd y0 = s.tracker.point(z0, 0).y;
    MatC A0 = Ah.evaluate(z0);
    double d0 = std::abs(A0(0, 0) - y0);
    double d1 = std::abs(A0(1, 1) - y0);
    double gap = std::abs(A0(0, 0) - A0(1, 1));
    if (std::min(d0, d1) > 1e-6 * gap)
      throw DegenerateSpectrum("cannot match the gauge order to the sheets");
    if (d0 > d1) {
      for (MatC& G : pv.G) {
        G.row(0).swap(G.row(1));
        G.col(0) *= -1.0;
      }
      Ah = assemble(pv);
    }
  }
  pv = canonicalize_to_sheets(pv, s);

  std::vector<SurfacePoint> divisor = eigen_divisor(s, Ah, z0);
  VecC q_raw = s.abel.map_point(z0, 0) - s.rc.K;
  for (const SurfacePoint& d : divisor) q_raw -= s.abel.map_point(d.z, d.sheet);
  Eigen::VectorXi mi, ki;
  lattice_distance(q_raw, s.pd.tau, &mi, &ki);
  VecC q = q_raw;
  for (int a = 0; a < s.c.genus; ++a) {
    q(a) -= static_cast<double>(mi(a));
    for (int b = 0; b < s.c.genus; ++b)
      q(a) -= s.pd.tau(a, b) * static_cast<double>(ki(b));
  }
  s.kernel.require_off_divisor(q);


  // Align the input with the wave-matrix row normalization.
  cd kappa = row_calibration(s, Ah, q, z0);
  cd kroot = det_root(kappa, p.n);
  for (int j = 0; j < p.m(); ++j) {
    pv.G[j].row(1) *= kappa;
    pv.G[j] /= kroot;
  }
  if (canonical) *canonical = pv;

  SpectralData sd;
  sd.n = p.n;
  sd.z0 = z0;
  sd.cc = cc;
  sd.q = q;
  sd.q_lift_m = mi;
  sd.q_lift_k = ki;
  sd.I = s.pd.I;
  sd.lambda = s.pd.lambda;
  for (int j = 0; j < p.m(); ++j) {
    MatC G0 = wave_matrix_at_pole(s, q, j, z0);
    cd det = G0.determinant();
    if (std::abs(det) < 1e-8)
      throw DegenerateSpectrum("wave matrix degenerates at a pole");
    G0 /= det_root(det, p.n);
    MatC R = G0.inverse() * pv.G[j];
    double diag_norm = 0.0;
    for (int k = 0; k < p.n; ++k)
      diag_norm = std::max(diag_norm, std::abs(R(k, k)));
    for (int a = 0; a < p.n; ++a)
      for (int b = 0; b < p.n; ++b)
        if (a != b && std::abs(R(a, b)) > 1e-6 * diag_norm)
          throw NonDiagonalToric(
              "torus factor has an off-diagonal part of relative size " +
              std::to_string(std::abs(R(a, b)) / diag_norm));
    VecC r(p.n);
    for (int k = 0; k < p.n; ++k) r(k) = R(k, k);
    cd rdet = 1.0;
    for (int k = 0; k < p.n; ++k) rdet *= r(k);
    r /= det_root(rdet, p.n);
    sd.R.push_back(r);
    sd.mu.push_back(mu_from_lambda(s.pd.lambda[j]));
    // Telescoped log coordinates: exponentiating consecutive differences
    // recovers the diagonal entries, with the boundary sums pinned to zero.
    VecC rho(p.n - 1);
    cd acc = 0.0;
    for (int k = 0; k + 1 < p.n; ++k) {
      if (std::abs(r(k)) < 1e-12)
        throw LogBranchAmbiguity("toric entry too close to zero for a log");
      acc += std::log(r(k));
      rho(k) = acc;
    }
    sd.rho.push_back(rho);
  }
  return sd;
}

PhasePoint inverse_transform(const SpectralData& sd) {
  if (sd.n != 2)
    throw ParameterError("the transform supports two-sheeted data only");
  SurfaceStack s(build_curve(sd.cc));
  return inverse_transform(sd, s);
}

PhasePoint inverse_transform(const SpectralData& sd, const SurfaceStack& s) {
  if (sd.n != 2)
    throw ParameterError("the transform supports two-sheeted data only");
  s.kernel.require_off_divisor(sd.q);

  PhasePoint out;
  out.n = sd.n;
  out.poles = sd.cc.poles;
  for (int j = 0; j < static_cast<int>(sd.cc.poles.size()); ++j) {
    MatC G0 = wave_matrix_at_pole(s, sd.q, j, sd.z0);
    cd det = G0.determinant();
    if (std::abs(det) < 1e-8)
      throw DegenerateSpectrum("wave matrix degenerates at a pole");
    G0 /= det_root(det, sd.n);
    MatC GF = G0;
    for (int k = 0; k < sd.n; ++k) GF.col(k) *= sd.R[j](k);
    cd dF = GF.determinant();
    GF /= det_root(dF, sd.n);
    out.G.push_back(GF);
    out.L.push_back(s.pd.lambda[j]);
  }
  out.validate(1e-6);
  return out;
}

double wave_inverse_residual(const SurfaceStack& s, const VecC& q, cd z,
                             cd z0) {
  MatC W1 = wave_matrix(s, q, z, z0);
  MatC W2 = wave_matrix(s, q, z0, z);
  MatC P = W1 * W2 - MatC::Identity(s.c.n, s.c.n);
  return P.cwiseAbs().maxCoeff();
}

double eigenvector_residual(const SurfaceStack& s, const RationalMatrix& A,
                            const VecC& q, cd z, cd z0) {
  MatC Az = A.evaluate(z);
  MatC W = wave_matrix(s, q, z, z0);
  double anorm = Az.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int b = 0; b < s.c.n; ++b) {
    cd yb = s.tracker.point(z, b).y;
    VecC col = W.col(b);
    VecC r = Az * col - yb * col;
    worst = std::max(worst, r.norm() / (anorm * col.norm()));
  }
  return worst;
}

double phase_point_distance(const PhasePoint& a, const PhasePoint& b) {
  if (a.n != b.n || a.m() != b.m())
    throw ParameterError("phase points have different shapes");
  double worst = 0.0;
  for (int j = 0; j < a.m(); ++j) {
    worst = std::max(worst, std::abs(a.poles[j] - b.poles[j]));
    worst = std::max(
        worst, (a.G[j] - b.G[j]).cwiseAbs().maxCoeff() /
                   std::max(1.0, a.G[j].cwiseAbs().maxCoeff()));
    worst = std::max(worst, (a.L[j] - b.L[j]).cwiseAbs().maxCoeff() /
                                std::max(1.0, a.L[j].cwiseAbs().maxCoeff()));
  }
  return worst;
}

Json SpectralData::to_json() const {
  Json j;
  j["n"] = n;
  j["z0"] = spectral::to_json(z0);
  Json curve;
  curve["n"] = cc.n;
  curve["poles"] = spectral::to_json(cc.poles);
  Json qn = Json::array();
  for (const Poly& p : cc.Q_num) qn.push_back(spectral::to_json(p.coeffs()));
  curve["Q_num"] = qn;
  SpectralCurve c = build_curve(cc);
  curve["P"] = spectral::to_json(c.P.coeffs());
  curve["branch_points"] = spectral::to_json(c.branch);
  j["curve"] = curve;
  j["q"] = spectral::to_json(q);
  Json lift = Json::array();
  for (int a = 0; a < q.size(); ++a) {
    int lm = a < q_lift_m.size() ? q_lift_m(a) : 0;
    int lk = a < q_lift_k.size() ? q_lift_k(a) : 0;
    lift.push_back(Json::array({lm, lk}));
  }
  j["q_lift"] = lift;
  Json rj = Json::array(), lj = Json::array(), mj = Json::array(),
       pj = Json::array();
  for (const VecC& v : R) rj.push_back(spectral::to_json(v));
  for (const VecC& v : lambda) lj.push_back(spectral::to_json(v));
  for (const VecC& v : mu) mj.push_back(spectral::to_json(v));
  for (const VecC& v : rho) pj.push_back(spectral::to_json(v));
  j["R"] = rj;
  Json coords;
  coords["I"] = spectral::to_json(I);
  coords["lambda"] = lj;
  coords["mu"] = mj;
  coords["rho"] = pj;
  j["coords"] = coords;
  return j;
}

SpectralData SpectralData::from_json(const Json& j) {
  SpectralData sd;
  sd.n = require_key(j, "n", "spectral data").get<int>();
  sd.z0 = complex_from_json(require_key(j, "z0", "spectral data"), "z0");
  const Json& curve = require_key(j, "curve", "spectral data");
  sd.cc.n = require_key(curve, "n", "curve").get<int>();
  sd.cc.poles =
      complex_vector_from_json(require_key(curve, "poles", "curve"), "poles");
  for (const Json& row : require_key(curve, "Q_num", "curve"))
    sd.cc.Q_num.push_back(Poly(complex_vector_from_json(row, "Q_num")));
  sd.q = vec_from_json(require_key(j, "q", "spectral data"), "q");
  const Json& lift = require_key(j, "q_lift", "spectral data");
  sd.q_lift_m.resize(sd.q.size());
  sd.q_lift_k.resize(sd.q.size());
  sd.q_lift_m.setZero();
  sd.q_lift_k.setZero();
  int li = 0;
  for (const Json& row : lift) {
    if (!row.is_array() || row.size() != 2 || li >= sd.q.size())
      throw ParameterError("malformed q_lift entry");
    sd.q_lift_m(li) = row[0].get<int>();
    sd.q_lift_k(li) = row[1].get<int>();
    ++li;
  }
  for (const Json& row : require_key(j, "R", "spectral data"))
    sd.R.push_back(vec_from_json(row, "R"));
  const Json& coords = require_key(j, "coords", "spectral data");
  sd.I = vec_from_json(require_key(coords, "I", "coords"), "I");
  for (const Json& row : require_key(coords, "lambda", "coords"))
    sd.lambda.push_back(vec_from_json(row, "lambda"));
  for (const Json& row : require_key(coords, "mu", "coords"))
    sd.mu.push_back(vec_from_json(row, "mu"));
  for (const Json& row : require_key(coords, "rho", "coords"))
    sd.rho.push_back(vec_from_json(row, "rho"));
  return sd;
}

}  // namespace spectral
