#pragma once

#include <vector>

#include "spectral/core.hpp"
#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/periods.hpp"
#include "spectral/polynomial.hpp"

namespace spectral {

// Family of two-sheeted curves w^2 = P(z) sharing a pole set, parametrized
// near a base curve by the a-periods of y dz and the sheet-0 residue at each
// pole.  The coefficient polynomial realizing prescribed coordinates is
// found by a Newton iteration with an analytic Jacobian; all period
// integrals run along the frozen cycle representatives of the base curve, so
// nearby curves receive a continuously varying marking.
class CurveFamily {
 public:
  CurveFamily(const SpectralCurve& base, const HomologyBasis& basis,
              const PeriodData& pd, double quad_tol = 1e-12);

  struct Eval {
    VecC I;      // a-periods of y dz, base loop order
    VecC lam0;   // sheet-0 residue of y dz at each pole
    MatC JI;     // d I_al / d c_k for P = sum c_k z^k
    MatC Jlam;   // d lam0_j / d c_k
  };

  // Coordinates (and their coefficient Jacobian) of a trial polynomial near
  // the base one.  The y-branch on each loop starts at the root closest to
  // the base loop's start value, and residues are sign-matched to the base
  // residues, so the evaluation is continuous in the coefficients.
  Eval eval(const Poly& P) const;

  // Newton solve for the polynomial attaining the given coordinates.
  Poly solve(const VecC& I_target, const VecC& lam0_target) const;

  // Characteristic coefficients of a solved polynomial (shared pole set).
  CharCoeffs char_coeffs_for(const Poly& P) const;
  // Curve built from a solved polynomial, anchored at the base anchor so
  // sheet labels continue the base labeling.
  SpectralCurve curve_for(const Poly& P) const;

  const Poly& base_poly() const { return baseP_; }
  const VecC& base_I() const { return baseI_; }
  const VecC& base_lam0() const { return baseLam0_; }
  int coeff_count() const { return ncoef_; }

 private:
  std::vector<cd> poles_;
  Poly baseP_;
  cd anchor_;
  int ncoef_ = 0;          // 2m - 3 coefficients, degree 2m - 4
  std::vector<Loop> aloops_;
  VecC baseI_;
  VecC baseLam0_;
  std::vector<cd> pole_gaps_;  // prod_{k != j} (t_j - t_k)
  double quad_tol_;
  double scale_ = 1.0;
};

}  // namespace spectral
