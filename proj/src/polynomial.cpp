#include "spectral/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "spectral/errors.hpp"

namespace spectral {

void Poly::trim() {
  while (!c_.empty() && c_.back() == cd{0.0}) c_.pop_back();
}

Poly Poly::monomial(int degree, cd a) {
  std::vector<cd> c(degree + 1, cd{0.0});
  c[degree] = a;
  return Poly(std::move(c));
}

Poly Poly::from_roots(const std::vector<cd>& roots, cd leading) {
  Poly p = Poly::constant(leading);
  for (cd r : roots) p = p * Poly({-r, 1.0});
  return p;
}

double Poly::max_abs_coeff() const {
  double m = 0.0;
  for (cd a : c_) m = std::max(m, std::abs(a));
  return m;
}

cd Poly::eval(cd z) const {
  cd v{0.0};
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * z + *it;
  return v;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly();
  std::vector<cd> d(c_.size() - 1);
  for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * cd(double(k));
  return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<cd> r(std::max(c_.size(), o.c_.size()), cd{0.0});
  for (size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
  for (size_t k = 0; k < o.c_.size(); ++k) r[k] += o.c_[k];
  return Poly(std::move(r));
}

Poly Poly::operator-(const Poly& o) const {
  std::vector<cd> r(std::max(c_.size(), o.c_.size()), cd{0.0});
  for (size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
  for (size_t k = 0; k < o.c_.size(); ++k) r[k] -= o.c_[k];
  return Poly(std::move(r));
}

Poly Poly::operator*(const Poly& o) const {
  if (is_zero() || o.is_zero()) return Poly();
  std::vector<cd> r(c_.size() + o.c_.size() - 1, cd{0.0});
  for (size_t i = 0; i < c_.size(); ++i)
    for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  return Poly(std::move(r));
}

Poly Poly::operator*(cd s) const {
  std::vector<cd> r = c_;
  for (cd& a : r) a *= s;
  return Poly(std::move(r));
}

Poly Poly::deflate(cd root, cd* remainder) const {
  if (c_.empty()) {
    if (remainder) *remainder = 0.0;
    return Poly();
  }
  std::vector<cd> q(c_.size() > 1 ? c_.size() - 1 : 0);
  cd carry = c_.back();
  for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) {
    q[k] = carry;
    carry = c_[k] + carry * root;
  }
  if (remainder) *remainder = carry;
  return Poly(std::move(q));
}

std::vector<cd> Poly::roots() const {
  if (is_zero()) throw ParameterError("roots of the zero polynomial");
  const int n = degree();
  if (n == 0) return {};
  if (n == 1) return {-c_[0] / c_[1]};
  MatC companion = MatC::Zero(n, n);
  for (int k = 0; k < n; ++k) companion(k, n - 1) = -c_[k] / c_[n];
  for (int k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
  Eigen::ComplexEigenSolver<MatC> es(companion, /*computeEigenvectors=*/false);
  std::vector<cd> r(n);
  for (int k = 0; k < n; ++k) r[k] = es.eigenvalues()(k);
  std::sort(r.begin(), r.end(), lex_less);
  return r;
}

Poly Poly::truncated(double tol) const {
  const double m = max_abs_coeff();
  std::vector<cd> r = c_;
  while (!r.empty() && std::abs(r.back()) <= tol * m) r.pop_back();
  return Poly(std::move(r));
}

double min_pairwise_gap(const std::vector<cd>& pts) {
  double g = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      g = std::min(g, std::abs(pts[i] - pts[j]));
  return g;
}

std::optional<Poly> poly_sqrt(const Poly& p, double tol) {
  if (p.is_zero()) return Poly();
  if (p.degree() % 2 != 0) return std::nullopt;
  if (p.degree() == 0) return Poly::constant(std::sqrt(p.coeff(0)));
  std::vector<cd> r = p.roots();
  double scale = 0.0;
  for (cd z : r) scale = std::max(scale, std::abs(z));
  scale = std::max(scale, 1.0);
  // Greedily pair each unused root with its nearest unused partner.
  std::vector<bool> used(r.size(), false);
  std::vector<cd> half;
  for (size_t i = 0; i < r.size(); ++i) {
    if (used[i]) continue;
    size_t best = i;
    double bestd = std::numeric_limits<double>::infinity();
    for (size_t j = i + 1; j < r.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(r[i] - r[j]);
      if (d < bestd) {
        bestd = d;
        best = j;
      }
    }
    if (best == i || bestd > tol * scale) return std::nullopt;
    used[i] = used[best] = true;
    half.push_back(0.5 * (r[i] + r[best]));
  }
  const Poly s = Poly::from_roots(half, std::sqrt(p.leading()));
  // Confirm coefficientwise: root pairing alone can mislead.
  const Poly diff = s * s - p;
  if (diff.max_abs_coeff() > 1e-6 * std::max(1.0, p.max_abs_coeff()))
    return std::nullopt;
  return s;
}

}  // namespace spectral
