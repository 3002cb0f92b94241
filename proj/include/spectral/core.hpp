#pragma once

#include <complex>
#include <vector>
#include <Eigen/Dense>

namespace spectral {

using cd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatI = Eigen::MatrixXi;

inline constexpr double kDefaultTol = 1e-10;
inline constexpr double kQuadTarget = 1e-11;
inline constexpr double kTieTol = 1e-12;
inline constexpr cd kI{0.0, 1.0};
inline const double kPi = 3.14159265358979323846264338327950288;

// Canonical complex ordering: by real part, ties broken by imaginary part.
// Used everywhere a deterministic order of eigenvalues, roots or branch
// points is required.
inline bool lex_less(cd a, cd b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

inline double dist(cd a, cd b) { return std::abs(a - b); }

// Distance from point p to segment [a,b].
inline double dist_to_segment(cd p, cd a, cd b) {
  const cd d = b - a;
  const double L2 = std::norm(d);
  if (L2 == 0.0) return std::abs(p - a);
  double t = ((p - a) * std::conj(d)).real() / L2;
  t = std::max(0.0, std::min(1.0, t));
  return std::abs(p - (a + t * d));
}

}  // namespace spectral
