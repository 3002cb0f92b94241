#pragma once

#include <map>
#include <shared_mutex>
#include <vector>

#include "spectral/core.hpp"
#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/quadrature.hpp"

namespace spectral {

struct PeriodData {
  MatC M;     // a-periods of the monomial forms z^{b-1} dz / w
  MatC Bp;    // b-periods of the same forms
  MatC Minv;
  MatC tau;   // Bp * Minv; symmetric with positive definite imaginary part
  VecC I;     // action integrals of y dz over the a-loops
  std::vector<VecC> lambda;  // residues of y dz at each pole, by sheet label
};

PeriodData build_periods(const SpectralCurve& c, const SheetTracker& tracker,
                         const HomologyBasis& basis, double tol = kQuadTarget);

// Monomial forms in the z-chart (f_b(z,y) = z^{b-1} / (y * prod(z - t)))
std::vector<CurveForm> monomial_forms(const SpectralCurve& c);
// Normalized holomorphic forms (unit a-periods).
std::vector<CurveForm> normalized_forms(const SpectralCurve& c, const MatC& Minv);
// Value vector of the normalized forms at a point, z-chart trivialization.
VecC eval_normalized(const SpectralCurve& c, const MatC& Minv, cd z, cd y);

// Genus-1 modulus from the branch points through the arithmetic-geometric
// mean with the sign choice |a-b| <= |a+b| at every step.
cd agm_complex(cd a, cd b);
cd agm_tau(const SpectralCurve& c);

// Nearest point of Z^g + tau Z^g; returns the distance and optionally the
// integer coordinates.
double lattice_distance(const VecC& u, const MatC& tau,
                        Eigen::VectorXi* m_out = nullptr,
                        Eigen::VectorXi* k_out = nullptr);
bool near_lattice(const VecC& u, const MatC& tau, double tol);

// Integrals of the normalized forms from the anchor (sheet 0) along
// deterministic routes; lifts are whatever the recorded paths produce and are
// never reduced modulo the lattice.
class AbelContext {
 public:
  AbelContext(const SpectralCurve& c, const SheetTracker& tracker,
              const PeriodData& pd);

  const SpectralCurve& curve() const { return c_; }
  const PeriodData& periods() const { return pd_; }
  const SheetTracker& tracker() const { return tracker_; }

  VecC map_point(cd z, int sheet) const;       // cached
  VecC map_match(cd z, cd y) const;            // sheet resolved by y proximity
  // Integral along an explicit polyline from a known branch value.
  VecC along_path(const std::vector<cd>& pts, cd y0) const;
  // Image of the point at infinity on the given sheet (tail handled by the
  // substitution t = 1/z with a continued square root of the reversed
  // polynomial).
  VecC to_infinity(int sheet) const;
  // Offset between the two anchor sheets: the integral along a small loop
  // around the first branch point.
  const VecC& flip_shift() const { return flip_shift_; }
  const std::vector<cd>& flip_loop() const { return flip_loop_; }

 private:
  const SpectralCurve& c_;
  const SheetTracker& tracker_;
  const PeriodData& pd_;
  std::vector<CurveForm> v_;
  std::vector<cd> flip_loop_;
  VecC flip_shift_;
  mutable std::map<std::tuple<double, double, int>, VecC> cache_;
  mutable std::map<int, VecC> inf_cache_;
  mutable std::shared_mutex mutex_;
};

}  // namespace spectral
