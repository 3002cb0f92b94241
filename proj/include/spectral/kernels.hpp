#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "spectral/core.hpp"
#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/periods.hpp"
#include "spectral/theta.hpp"

namespace spectral {

class KernelContext;

// Meromorphic differential with residue +1 at p, -1 at s and vanishing
// a-periods.  The correction coefficients remove the 2*pi*i-integer period
// defects of the raw logarithmic derivative.
struct ThirdKindForm {
  SurfacePoint p, s;
  VecC lift_p, lift_s;
  VecC corrections;

  // Evaluate at an explicit base point / branch value / Abel lift triple
  // (used inside loop integrals where the lift is continued).
  cd eval(const KernelContext& ctx, cd z, cd y, const VecC& u) const;
  // Evaluate at a surface point using its cached Abel lift.
  cd operator()(const KernelContext& ctx, const SurfacePoint& t) const;
};

// Integrand on a loop: base point, branch value, running Abel lift.
using LoopIntegrand = std::function<cd(cd, cd, const VecC&)>;

// Evaluation engine for the objects built from theta functions on the curve:
// the distinguished odd-characteristic square root, the prime form, the Szego
// kernel, the canonical bidifferential and third-kind differentials.  All
// values are coefficients in the z-chart trivialization; branch points are
// excluded evaluation sites.
class KernelContext {
 public:
  KernelContext(const SpectralCurve& c, const SheetTracker& tracker,
                const HomologyBasis& basis, const PeriodData& pd,
                const AbelContext& abel,
                std::optional<HalfChar> odd_override = {});

  const SpectralCurve& curve() const { return c_; }
  const SheetTracker& tracker() const { return tracker_; }
  const HomologyBasis& basis() const { return basis_; }
  const PeriodData& periods() const { return pd_; }
  const AbelContext& abel() const { return abel_; }
  const ThetaContext& theta() const { return theta_; }
  // Selected nondegenerate odd characteristic and the gradient of its theta
  // function at the origin.
  const HalfChar& odd_char() const { return odd_; }
  const VecC& odd_grad0() const { return grad0_; }

  // Normalized holomorphic form values at (z, y).
  VecC forms(cd z, cd y) const;
  // Contraction of the normalized forms with the odd-characteristic gradient;
  // the square of the half-differential entering the prime form.
  cd w_section(cd z, cd y) const;
  // Sign-continued square root of w_section, cached per surface point;
  // continuation runs along the same deterministic routes as the Abel map.
  cd sqrt_section(const SurfacePoint& x) const;
  // Continue (branch value, square root) along a polyline.  Returns the final
  // pair; throws ContinuationAmbiguous when the sign cannot be tracked.
  std::pair<cd, cd> continue_sqrt_path(const std::vector<cd>& pts, cd y0,
                                       cd s0) const;

  // Prime form E(x, y): antisymmetric, vanishing only on the diagonal,
  // normalized to (z(x) - z(y)) * (1 + O((z(x)-z(y))^2)) near it.
  cd prime_form(const SurfacePoint& x, const SurfacePoint& y) const;
  // Szego kernel S_q(x, y) = Theta(U(x) - U(y) + q) / (Theta(q) E(x, y)).
  cd szego(const VecC& q, const SurfacePoint& x, const SurfacePoint& y) const;
  // Canonical bidifferential B(x, y): symmetric, double pole of biresidue 1
  // on the diagonal, vanishing a-periods.
  cd bidifferential(const SurfacePoint& x, const SurfacePoint& y) const;
  // Normalized third-kind differential; coefficients cached per (p, s).
  ThirdKindForm third_kind(const SurfacePoint& p, const SurfacePoint& s) const;
  // Same, specified directly by the Abel lifts of the residue points; used
  // when those points sit over poles of the eigenvalue function, where no
  // finite branch value exists.  Not cached.
  ThirdKindForm third_kind_from_lifts(const VecC& lift_p,
                                      const VecC& lift_s) const;
  // Scalar wave function psi(x, x0) = S_q(x, x0) * (z(x) - z(x0));
  // equals 1 at x = x0 along the same sheet.
  cd psi(const VecC& q, const SurfacePoint& x, const SurfacePoint& x0) const;

  // |Theta(q)| relative to the largest lattice term.
  double divisor_margin(const VecC& q) const;
  // Throws OnThetaDivisor when the margin is below the guard.
  void require_off_divisor(const VecC& q) const;

  // Integrate f over a closed loop; the branch value follows the loop and the
  // Abel lift runs continuously from the cached lift of the start point.
  cd integrate_loop(const Loop& loop, const LoopIntegrand& f,
                    double tol = 1e-10) const;
  // Same traversal with the starting branch value and Abel lift supplied by
  // the caller; used when the lift must be continued from a specific point
  // rather than taken from the route cache.
  cd integrate_path(const std::vector<cd>& pts, const LoopIntegrand& f,
                    double tol, cd y0, const VecC& u0) const;
  // Multiplicative factor picked up by S_q(x, y) in x around a closed loop.
  cd szego_holonomy(const VecC& q, const Loop& loop) const;

  static constexpr double kDivisorGuard = 1e-10;

 private:
  const SpectralCurve& c_;
  const SheetTracker& tracker_;
  const HomologyBasis& basis_;
  const PeriodData& pd_;
  const AbelContext& abel_;
  ThetaContext theta_;
  std::vector<CurveForm> vforms_;
  HalfChar odd_;
  VecC grad0_;
  cd s_anchor_;
  mutable std::map<std::tuple<double, double, int>, cd> s_cache_;
  mutable std::map<std::tuple<double, double, int, double, double, int>,
                   VecC>
      tk_cache_;
  mutable std::mutex mutex_;

  cd seg_integrate(cd za, cd zb, cd ya, const VecC& ua, const LoopIntegrand& f,
                   double tol, int depth, cd* y_end, VecC* u_end) const;
};

struct ResidualReport {
  double max_rel = 0.0;
  int count = 0;
};

// Fay identity: S_q(x,y) S_q(y,x) + B(x,y)
//   + sum_{ab} d_a d_b log Theta(q) v_a(x) v_b(y) = 0
// checked at deterministically sampled random pairs.
ResidualReport verify_fay(const KernelContext& kc, const VecC& q, int pairs,
                          uint64_t seed);

// Residual of the fiber product formula
//   sum_i S_q(x, z^(i)) S_q(z^(i), y)
//     = S_q(x, y) (1/(z(x) - z) - 1/(z(y) - z)).
double sheet_sum_residual(const KernelContext& kc, const VecC& q,
                          const SurfacePoint& x, const SurfacePoint& y, cd z);

// Comparison of the finite-difference derivative of S_q in q_gamma
// (Richardson-extrapolated central differences on both axes) against the loop
// integral -oint_{a_gamma} S_q(x,t) S_q(t,y) dt.  The value of the integral
// over a concrete closed representative differs from the one over the
// canonical cut-system representative by 2*pi*i * k * S_q(x,y) with integer
// k, since the integrand has residues -+S_q(x,y) at t = x, y; the report
// carries the homotopy offset k alongside both mismatches.
struct DqReport {
  double direct = 0.0;     // |FD + loop| / scale, no offset correction
  double corrected = 0.0;  // residual after removing the integer offset
  long long k = 0;         // homotopy offset of the representative
};
DqReport dq_szego_check(const KernelContext& kc, const VecC& q, int gamma,
                        const SurfacePoint& x, const SurfacePoint& y,
                        double fd_step = 1e-5);

// Deterministic generic surface points away from branch points, poles and
// each other.
std::vector<SurfacePoint> sample_points(const KernelContext& kc, int count,
                                        uint64_t seed);

}  // namespace spectral
