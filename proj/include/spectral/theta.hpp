#pragma once

#include <mutex>
#include <unordered_map>
#include <vector>

#include "spectral/core.hpp"

namespace spectral {

// Half-integer characteristic: entries of a and b are 0 or 1/2.
struct HalfChar {
  Eigen::VectorXd a, b;
};

bool half_char_odd(const HalfChar& ch);

// Scaled evaluation: the function value is `value * exp(logscale)`, and grad
// and hess carry the same scale, so logarithmic derivatives are plain ratios.
struct ThetaVal {
  cd value{};
  VecC grad;
  MatC hess;
  double logscale = 0.0;
};

// Lattice sum for theta functions with characteristics at fixed modulus.
// Terms are truncated to a box whose radius is set by the target accuracy and
// the smallest eigenvalue of Im(tau); the z-independent part of every
// exponent is cached per characteristic.
class ThetaContext {
 public:
  explicit ThetaContext(MatC tau, double eps = 1e-12);

  int g() const { return g_; }
  const MatC& tau() const { return tau_; }

  ThetaVal eval(const VecC& z, const HalfChar& ch) const;
  ThetaVal eval0(const VecC& z) const;  // zero characteristic

  HalfChar zero_characteristic() const;
  std::vector<HalfChar> odd_characteristics() const;

 private:
  int g_;
  MatC tau_;
  Eigen::MatrixXd Y_, Yinv_;
  int radius_;
  struct CharCache {
    std::unordered_map<long long, cd> tn;  // z-independent exponent parts
  };
  mutable std::unordered_map<int, CharCache> cache_;
  mutable std::mutex cache_mutex_;
  static int char_key(const HalfChar& ch);
};

}  // namespace spectral
