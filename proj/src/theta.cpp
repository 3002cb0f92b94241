#include "spectral/theta.hpp"

#include <cmath>

#include "spectral/errors.hpp"

namespace spectral {

bool half_char_odd(const HalfChar& ch) {
  double s = 4.0 * ch.a.dot(ch.b);
  return (static_cast<long long>(std::llround(s)) % 2 + 2) % 2 == 1;
}

ThetaContext::ThetaContext(MatC tau, double eps) {
  g_ = static_cast<int>(tau.rows());
  tau_ = 0.5 * (tau + tau.transpose().eval());
  Y_ = tau_.imag();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Y_);
  double lmin = g_ > 0 ? es.eigenvalues().minCoeff() : 1.0;
  if (g_ > 0 && lmin <= 0)
    throw ParameterError("ThetaContext: Im(tau) must be positive definite");
  Yinv_ = g_ > 0 ? Y_.inverse().eval() : Eigen::MatrixXd();
  double r = std::sqrt((-std::log(eps) + 8.0) / (kPi * lmin)) + 2.0;
  radius_ = static_cast<int>(std::ceil(r));
  if (radius_ > 30)
    throw TruncationFailure("ThetaContext: lattice box radius exceeds cap");
  double count = std::pow(2.0 * radius_ + 1.0, g_);
  if (count > 2e6)
    throw TruncationFailure("ThetaContext: lattice box too large");
}

int ThetaContext::char_key(const HalfChar& ch) {
  int key = 0;
  for (int i = 0; i < ch.a.size(); ++i)
    key = key * 2 + (std::abs(ch.a(i)) > 0.25 ? 1 : 0);
  for (int i = 0; i < ch.b.size(); ++i)
    key = key * 2 + (std::abs(ch.b(i)) > 0.25 ? 1 : 0);
  return key;
}

ThetaVal ThetaContext::eval(const VecC& z, const HalfChar& ch) const {
  if (z.size() != g_ || ch.a.size() != g_ || ch.b.size() != g_)
    throw ParameterError("ThetaContext::eval: dimension mismatch");
  ThetaVal out;
  out.grad = VecC::Zero(g_);
  out.hess = MatC::Zero(g_, g_);
  if (g_ == 0) {
    out.value = 1.0;
    out.logscale = 0.0;
    return out;
  }
  std::lock_guard<std::mutex> cache_lock(cache_mutex_);
  CharCache& cc = cache_[char_key(ch)];

  // box center from the real stationary point of the exponent
  Eigen::VectorXd imz(g_);
  for (int i = 0; i < g_; ++i) imz(i) = z(i).imag();
  Eigen::VectorXd nu = -Yinv_ * imz;
  std::vector<int> center(g_);
  for (int i = 0; i < g_; ++i)
    center[i] = static_cast<int>(std::lround(nu(i) - ch.a(i)));

  const int R = radius_;
  const long long side = 2 * R + 1;
  long long total = 1;
  for (int i = 0; i < g_; ++i) total *= side;

  std::vector<cd> expo(total);
  std::vector<VecC> lvec(total);
  double maxre = -1e300;
  std::vector<int> n(g_);
  for (long long idx = 0; idx < total; ++idx) {
    long long rem = idx;
    long long key = 0;
    for (int i = 0; i < g_; ++i) {
      n[i] = center[i] + static_cast<int>(rem % side) - R;
      rem /= side;
      key = key * 2048 + (n[i] + 1024);
    }
    VecC l(g_);
    for (int i = 0; i < g_; ++i) l(i) = cd(n[i] + ch.a(i), 0.0);
    auto it = cc.tn.find(key);
    cd tn;
    if (it != cc.tn.end()) {
      tn = it->second;
    } else {
      cd quad = 0.0;
      for (int i = 0; i < g_; ++i)
        for (int k = 0; k < g_; ++k) quad += l(i) * tau_(i, k) * l(k);
      cd lin = 0.0;
      for (int i = 0; i < g_; ++i) lin += l(i) * ch.b(i);
      tn = kI * kPi * quad + 2.0 * kPi * kI * lin;
      cc.tn.emplace(key, tn);
    }
    cd e = tn;
    for (int i = 0; i < g_; ++i) e += 2.0 * kPi * kI * l(i) * z(i);
    expo[idx] = e;
    lvec[idx] = l;
    maxre = std::max(maxre, e.real());
  }

  cd val = 0.0;
  VecC grad = VecC::Zero(g_);
  MatC hess = MatC::Zero(g_, g_);
  for (long long idx = 0; idx < total; ++idx) {
    cd t = std::exp(expo[idx] - maxre);
    val += t;
    const VecC& l = lvec[idx];
    for (int i = 0; i < g_; ++i) {
      cd gi = 2.0 * kPi * kI * l(i);
      grad(i) += gi * t;
      for (int k = 0; k <= i; ++k)
        hess(i, k) += gi * (2.0 * kPi * kI * l(k)) * t;
    }
  }
  for (int i = 0; i < g_; ++i)
    for (int k = i + 1; k < g_; ++k) hess(i, k) = hess(k, i);
  out.value = val;
  out.grad = grad;
  out.hess = hess;
  out.logscale = maxre;
  return out;
}

ThetaVal ThetaContext::eval0(const VecC& z) const {
  return eval(z, zero_characteristic());
}

HalfChar ThetaContext::zero_characteristic() const {
  HalfChar ch;
  ch.a = Eigen::VectorXd::Zero(g_);
  ch.b = Eigen::VectorXd::Zero(g_);
  return ch;
}

std::vector<HalfChar> ThetaContext::odd_characteristics() const {
  std::vector<HalfChar> out;
  const int total = 1 << (2 * g_);
  for (int mask = 0; mask < total; ++mask) {
    HalfChar ch;
    ch.a = Eigen::VectorXd::Zero(g_);
    ch.b = Eigen::VectorXd::Zero(g_);
    for (int i = 0; i < g_; ++i) {
      if (mask & (1 << i)) ch.a(i) = 0.5;
      if (mask & (1 << (g_ + i))) ch.b(i) = 0.5;
    }
    if (half_char_odd(ch)) out.push_back(ch);
  }
  return out;
}

}  // namespace spectral
