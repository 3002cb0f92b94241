#pragma once

#include <optional>
#include <vector>

#include "spectral/core.hpp"

namespace spectral {

// Dense univariate polynomial with complex coefficients, ascending order.
// The zero polynomial is represented by an empty coefficient vector.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<cd> coeffs) : c_(std::move(coeffs)) { trim(); }
  static Poly constant(cd a) { return Poly({a}); }
  static Poly monomial(int degree, cd a = 1.0);
  static Poly from_roots(const std::vector<cd>& roots, cd leading = 1.0);

  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
  bool is_zero() const { return c_.empty(); }
  cd coeff(int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : cd{0.0};
  }
  const std::vector<cd>& coeffs() const { return c_; }
  cd leading() const { return c_.empty() ? cd{0.0} : c_.back(); }
  double max_abs_coeff() const;

  cd eval(cd z) const;        // Horner
  Poly derivative() const;
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(cd s) const;

  // Divide by (z - root); the remainder (value at root) is returned through
  // *remainder when requested and discarded otherwise.
  Poly deflate(cd root, cd* remainder = nullptr) const;

  // All roots via the companion matrix.  Throws ParameterError on the zero
  // polynomial; constants have no roots.
  std::vector<cd> roots() const;

  // Drop trailing coefficients smaller than `tol` times the largest one.
  Poly truncated(double tol) const;

 private:
  void trim();
  std::vector<cd> c_;
};

// Smallest pairwise distance among the given points (infinity for < 2).
double min_pairwise_gap(const std::vector<cd>& pts);

// If p is (numerically) the square of a polynomial, return that square root;
// otherwise std::nullopt.  Roots are matched into coincident pairs within
// `tol` relative to the root scale.
std::optional<Poly> poly_sqrt(const Poly& p, double tol = 1e-5);

}  // namespace spectral
