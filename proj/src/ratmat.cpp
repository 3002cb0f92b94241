#include "spectral/ratmat.hpp"

#include <algorithm>
#include <cmath>

#include "spectral/errors.hpp"

namespace spectral {

namespace {

double matrix_scale(const std::vector<MatC>& ms) {
  double s = 0.0;
  for (const auto& m : ms) s = std::max(s, m.cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}

}  // namespace

// Principal n-th root used to renormalize determinants to one.
cd det_root(cd det, int n) {
  return std::pow(det, 1.0 / double(n));
}

MatC PhasePoint::residue(int j) const {
  return G[j] * L[j].asDiagonal() * G[j].inverse();
}

void PhasePoint::validate(double tol) const {
  if (n < 2) throw ParameterError("phase point requires n >= 2");
  if (m() < 2) throw ParameterError("phase point requires m >= 2");
  if (static_cast<int>(G.size()) != m() || static_cast<int>(L.size()) != m())
    throw ParameterError("phase point arrays must all have length m");
  const double pole_scale = std::max(1.0, [&] {
    double s = 0.0;
    for (cd t : poles) s = std::max(s, std::abs(t));
    return s;
  }());
  for (int i = 0; i < m(); ++i)
    for (int j = i + 1; j < m(); ++j)
      if (std::abs(poles[i] - poles[j]) < tol * pole_scale)
        throw ConstraintViolation("poles " + std::to_string(i) + " and " +
                                  std::to_string(j) + " coincide");
  double lscale = 0.0;
  for (const auto& l : L) lscale = std::max(lscale, l.cwiseAbs().maxCoeff());
  lscale = std::max(lscale, 1e-300);
  for (int j = 0; j < m(); ++j) {
    if (G[j].rows() != n || G[j].cols() != n || L[j].size() != n)
      throw ParameterError("block " + std::to_string(j) + " has wrong dimensions");
    if (std::abs(G[j].determinant() - 1.0) > tol * 10)
      throw ConstraintViolation("det G_" + std::to_string(j) + " differs from 1");
    if (std::abs(L[j].sum()) > tol * lscale)
      throw TraceViolation("L_" + std::to_string(j) + " is not traceless");
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (std::abs(L[j](a) - L[j](b)) < kTieTol * lscale)
          throw DegenerateSpectrum("L_" + std::to_string(j) +
                                   " has coinciding entries");
  }
  MatC sum = MatC::Zero(n, n);
  std::vector<MatC> res;
  for (int j = 0; j < m(); ++j) {
    res.push_back(residue(j));
    sum += res.back();
  }
  if (sum.cwiseAbs().maxCoeff() > tol * matrix_scale(res))
    throw ConstraintViolation("residues do not sum to zero");
}

Json PhasePoint::to_json() const {
  Json j;
  j["n"] = n;
  j["poles"] = spectral::to_json(poles);
  Json gs = Json::array(), ls = Json::array();
  for (const auto& g : G) gs.push_back(spectral::to_json(g));
  for (const auto& l : L) ls.push_back(spectral::to_json(l));
  j["G"] = gs;
  j["L"] = ls;
  return j;
}

PhasePoint PhasePoint::from_json(const Json& j) {
  PhasePoint p;
  p.n = require_key(j, "n", "phase point").get<int>();
  p.poles = complex_vector_from_json(require_key(j, "poles", "phase point"),
                                     "poles");
  const Json& gs = require_key(j, "G", "phase point");
  const Json& ls = require_key(j, "L", "phase point");
  if (!gs.is_array() || !ls.is_array())
    throw ParameterError("G and L must be arrays");
  if (gs.size() != p.poles.size() || ls.size() != p.poles.size())
    throw ParameterError("G/L length must match the number of poles (" +
                         std::to_string(p.poles.size()) + "), got G:" +
                         std::to_string(gs.size()) + " L:" +
                         std::to_string(ls.size()));
  for (size_t k = 0; k < gs.size(); ++k) {
    MatC g = mat_from_json(gs[k], "G[" + std::to_string(k) + "]");
    if (g.rows() != p.n || g.cols() != p.n)
      throw ParameterError("G[" + std::to_string(k) + "] is " +
                           std::to_string(g.rows()) + "x" +
                           std::to_string(g.cols()) + ", expected " +
                           std::to_string(p.n) + "x" + std::to_string(p.n));
    p.G.push_back(std::move(g));
  }
  for (size_t k = 0; k < ls.size(); ++k) {
    VecC l = vec_from_json(ls[k], "L[" + std::to_string(k) + "]");
    if (l.size() != p.n)
      throw ParameterError("L[" + std::to_string(k) + "] has length " +
                           std::to_string(l.size()) + ", expected " +
                           std::to_string(p.n));
    p.L.push_back(std::move(l));
  }
  return p;
}

MatC RationalMatrix::evaluate(cd z, double guard) const {
  double scale = 1.0;
  for (cd t : poles) scale = std::max(scale, std::abs(t));
  for (size_t j = 0; j < poles.size(); ++j)
    if (std::abs(z - poles[j]) < guard * scale)
      throw PoleEvaluation("evaluation at pole index " + std::to_string(j));
  MatC out = MatC::Zero(n(), n());
  for (size_t j = 0; j < poles.size(); ++j)
    out += residues[j] / (z - poles[j]);
  return out;
}

RationalMatrix assemble(const PhasePoint& p) {
  RationalMatrix A;
  A.poles = p.poles;
  for (int j = 0; j < p.m(); ++j) A.residues.push_back(p.residue(j));
  return A;
}

cd CharCoeffs::Q_value(int j, cd z) const {
  if (j < 2 || j > n) throw ParameterError("Q_j index out of range");
  cd prod = 1.0;
  for (cd t : poles) prod *= (z - t);
  return Q_num[j - 2].eval(z) / std::pow(prod, j);
}

namespace {

// Characteristic coefficients c_k of det(yI - M) = y^n + c_1 y^{n-1} + ...
// via Newton's identities on power traces.
std::vector<cd> char_poly_coeffs(const MatC& M) {
  const int n = static_cast<int>(M.rows());
  std::vector<cd> p(n + 1);  // power sums tr(M^k)
  MatC Mk = MatC::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    Mk = Mk * M;
    p[k] = Mk.trace();
  }
  std::vector<cd> c(n + 1);
  c[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    cd acc = p[k];
    for (int i = 1; i < k; ++i) acc += c[i] * p[k - i];
    c[k] = -acc / double(k);
  }
  return c;
}

}  // namespace

CharCoeffs char_coeffs(const RationalMatrix& A) {
  CharCoeffs out;
  out.n = A.n();
  out.poles = A.poles;
  const int n = A.n(), m = A.m();

  if (n == 2) {
    // Exact route: det of the matrix polynomial B(z) = sum_j A_j prod_{k!=j}(z - t_k),
    // so that A(z) = B(z)/prod(z - t_k) and Q_2 = det B / prod^2.
    std::array<std::array<Poly, 2>, 2> B;
    for (int j = 0; j < m; ++j) {
      std::vector<cd> others;
      for (int k = 0; k < m; ++k)
        if (k != j) others.push_back(A.poles[k]);
      const Poly pj = Poly::from_roots(others);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) B[a][b] = B[a][b] + pj * A.residues[j](a, b);
    }
    Poly det = B[0][0] * B[1][1] - B[0][1] * B[1][0];
    out.Q_num.push_back(det.truncated(1e-11));
    return out;
  }

  // General n: fit each numerator polynomial from samples on a circle that
  // encloses all poles.
  double R = 1.0;
  for (cd t : A.poles) R = std::max(R, std::abs(t));
  R = 2.0 * R + 1.0;
  const int max_deg = n * (m - 2);
  const int S = std::max(2 * (max_deg + 1), 16);
  std::vector<cd> zs(S), prods(S);
  std::vector<std::vector<cd>> qvals(n + 1, std::vector<cd>(S));
  for (int s = 0; s < S; ++s) {
    const double ang = 2.0 * kPi * (s + 0.37) / S;
    zs[s] = R * cd(std::cos(ang), std::sin(ang));
    cd prod = 1.0;
    for (cd t : A.poles) prod *= (zs[s] - t);
    prods[s] = prod;
    const auto c = char_poly_coeffs(A.evaluate(zs[s]));
    for (int j = 2; j <= n; ++j) qvals[j][s] = c[j];
  }
  for (int j = 2; j <= n; ++j) {
    const int deg = j * (m - 2);
    MatC V(S, deg + 1);
    VecC rhs(S);
    for (int s = 0; s < S; ++s) {
      cd pw = 1.0;
      for (int k = 0; k <= deg; ++k) {
        V(s, k) = pw;
        pw *= zs[s];
      }
      rhs(s) = qvals[j][s] * std::pow(prods[s], j);
    }
    VecC coef = V.colPivHouseholderQr().solve(rhs);
    const double resid = (V * coef - rhs).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (resid > 1e-7 * scale)
      throw ConstraintViolation("numerator fit for Q_" + std::to_string(j) +
                                " did not close");
    std::vector<cd> cc(coef.data(), coef.data() + coef.size());
    out.Q_num.push_back(Poly(std::move(cc)).truncated(1e-10));
  }
  return out;
}

PhasePoint gauge_fix(const PhasePoint& p, cd z0, double tie_tol) {
  const RationalMatrix A = assemble(p);
  const MatC Az0 = A.evaluate(z0);
  Eigen::ComplexEigenSolver<MatC> es(Az0);
  const int n = p.n;
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return lex_less(es.eigenvalues()(a), es.eigenvalues()(b));
  });
  const double scale = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  for (int k = 0; k + 1 < n; ++k)
    if (std::abs(es.eigenvalues()(order[k]) - es.eigenvalues()(order[k + 1])) <
        tie_tol * scale)
      throw DegenerateSpectrum("A(z0) has coinciding eigenvalues");
  MatC V(n, n);
  for (int k = 0; k < n; ++k) V.col(k) = es.eigenvectors().col(order[k]);
  for (int k = 0; k < n; ++k) {
    if (std::abs(V(k, k)) < 1e-12)
      throw DegenerateSpectrum("eigenvector normalization is singular");
    V.col(k) /= V(k, k);
  }
  MatC S = V.inverse();
  S /= det_root(S.determinant(), n);
  PhasePoint out = p;
  for (int j = 0; j < p.m(); ++j) {
    out.G[j] = S * p.G[j];
    out.G[j] /= det_root(out.G[j].determinant(), n);
  }
  return out;
}

VecC mu_from_lambda(const VecC& lambda, double tol) {
  const double scale = std::max(1e-300, lambda.cwiseAbs().maxCoeff());
  if (std::abs(lambda.sum()) > tol * scale)
    throw TraceViolation("eigenvalue vector does not sum to zero");
  VecC mu(lambda.size() - 1);
  cd acc = 0.0;
  for (int k = 0; k + 1 < lambda.size(); ++k) {
    acc += lambda(k);
    mu(k) = acc;
  }
  return mu;
}

VecC lambda_from_mu(const VecC& mu) {
  VecC lambda(mu.size() + 1);
  cd prev = 0.0;
  for (int k = 0; k < mu.size(); ++k) {
    lambda(k) = mu(k) - prev;
    prev = mu(k);
  }
  lambda(mu.size()) = -prev;
  return lambda;
}

std::uint64_t Rng::next() {
  // splitmix64: tiny, fully specified, reproducible across platforms.
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return double(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform(), u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double a = 2.0 * kPi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

cd Rng::cnormal() {
  const double a = normal(), b = normal();
  return cd(a, b) / std::sqrt(2.0);
}

cd Rng::annulus(double rmin, double rmax) {
  const double r = rmin + (rmax - rmin) * uniform();
  const double a = 2.0 * kPi * uniform();
  return cd(r * std::cos(a), r * std::sin(a));
}

}  // namespace spectral
