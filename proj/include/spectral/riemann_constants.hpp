#pragma once

#include "spectral/curve.hpp"
#include "spectral/periods.hpp"
#include "spectral/theta.hpp"

namespace spectral {

// Vector of Riemann constants for the curve marking carried by the period
// data, anchored at the Abel-map base point.
//
// Twice the constant is the (negated) Abel image of the canonical class.  On
// a two-sheeted curve the canonical class is (g - 1) times the fiber class,
// whose Abel image is the involution shift, so the constant is determined up
// to a half period.  The remaining half period is resolved by the defining
// property: theta vanishes exactly on K plus images of effective divisors of
// degree g - 1.  All 4^g candidates are scored on random divisors and the
// winner must vanish decisively.
struct RiemannConstant {
  VecC K;              // the constant, as a concrete lift
  double vanish;       // scale-free |theta| at the winning candidate
  double runner_up;    // best scale-free |theta| among the rejected ones
  int half_index;      // index of the winning half period (m, k bits)
};

RiemannConstant compute_riemann_constant(const SpectralCurve& c,
                                         const SheetTracker& tracker,
                                         const PeriodData& pd,
                                         const AbelContext& abel,
                                         uint64_t seed = 2026);

class KernelContext;

// Vector of Riemann constants anchored at an arbitrary tracked point x,
// by loop quadrature:
//   K^x_a = (1 + tau_aa)/2 - sum_{b != a} oint_{a_b} v_b(t) (int_x^t v_a),
// where the inner integral runs continuously along each loop.  Returns a
// concrete lift; theta vanishes at it on the divisor side, and changing x
// shifts the value by (g - 1) times the Abel image of the path, both up to
// lattice terms.
VecC riemann_constants_at(const KernelContext& kc, const SurfacePoint& x);

}  // namespace spectral
