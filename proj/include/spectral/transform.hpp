#pragma once

#include <vector>

#include "spectral/curve.hpp"
#include "spectral/homology.hpp"
#include "spectral/json_io.hpp"
#include "spectral/kernels.hpp"
#include "spectral/periods.hpp"
#include "spectral/ratmat.hpp"
#include "spectral/riemann_constants.hpp"

namespace spectral {

// Everything derived from one spectral curve, assembled in dependency order
// and usable as a unit: sheet labels, cycle basis, periods, Abel map, theta
// constant, kernel evaluator.
struct SurfaceStack {
  SpectralCurve c;
  SheetTracker tracker;
  HomologyBasis basis;
  PeriodData pd;
  AbelContext abel;
  RiemannConstant rc;
  KernelContext kernel;

  explicit SurfaceStack(SpectralCurve curve);
  SurfaceStack(const SurfaceStack&) = delete;
  SurfaceStack& operator=(const SurfaceStack&) = delete;
};

// Spectral-side description of a phase point: the curve through its
// characteristic coefficients, the twist vector of the eigenline bundle, the
// per-pole torus factors, and the derived coordinate values.  Complex
// numbers serialize as [re, im] pairs.
struct SpectralData {
  int n = 0;
  cd z0{};
  CharCoeffs cc;
  VecC q;                    // twist vector, reduced near the origin
  Eigen::VectorXi q_lift_m;  // integer lattice part removed in reduction
  Eigen::VectorXi q_lift_k;  // period lattice part removed in reduction
  std::vector<VecC> R;       // diagonal torus entries per pole, det 1
  VecC I;                    // a-periods of the action differential
  std::vector<VecC> lambda;  // eigenvalue residues per pole, sheet order
  std::vector<VecC> mu;      // partial sums of lambda, first n-1 entries
  std::vector<VecC> rho;     // telescoped logs of the torus entries

  Json to_json() const;
  static SpectralData from_json(const Json& j);
};

// Matrix of wave functions evaluated through the kernel caches,
// entry (a, b) = psi(z^(b), z0^(a)).  The identity at z = z0.
MatC wave_matrix(const SurfaceStack& s, const VecC& q, cd z, cd z0);

// Same matrix in the limit z -> pole of the assembled rational matrix,
// where the eigenvalues blow up but the wave functions stay finite: the
// entries are averaged over a small circle traversed with one coherent
// branch of the Abel lift and of the square-root section.
MatC wave_matrix_at_pole(const SurfaceStack& s, const VecC& q, int pole_index,
                         cd z0);

// Pole divisor of the normalized eigenvector section away from z0 in the
// gauge where A(z0) is diagonal: the points over the zeros of the deflated
// upper-right numerator, on the sheet carrying the lower-right eigenvalue.
std::vector<SurfacePoint> eigen_divisor(const SurfaceStack& s,
                                        const RationalMatrix& Ahat, cd z0);

// Reorder each conjugator/eigenvalue pair so that column k matches the
// residue on sheet k of the curve, flipping one column sign when needed to
// stay in SL(n).  Idempotent; the residue matrices are unchanged.
PhasePoint canonicalize_to_sheets(const PhasePoint& p, const SurfaceStack& s,
                                  double tol = 1e-6);

// The spectral transform and its inverse.  Both are restricted to
// two-sheeted (n = 2) data, the only case the curve numerics support.
//
// The forward map first gauge-fixes at z0 and then applies the remaining
// constant diagonal conjugation that aligns the eigenvector rows of the
// input with the wave-matrix rows; the resulting canonical representative
// (conjugate to the input, identical curve and twist) is what the inverse
// map reproduces, and is returned through `canonical` when requested.
SpectralData forward_transform(const PhasePoint& p, cd z0,
                               PhasePoint* canonical = nullptr);
PhasePoint inverse_transform(const SpectralData& sd);
// Same reconstruction on a caller-provided stack, which must be built from
// the curve of `sd`; lets finite-difference sweeps that keep the curve fixed
// reuse one stack, and deformation sweeps control the anchor.
PhasePoint inverse_transform(const SpectralData& sd, const SurfaceStack& s);

// --- diagnostics ------------------------------------------------------------

// || W(z; z0) W(z0; z) - 1 || for the wave matrices with roles swapped.
double wave_inverse_residual(const SurfaceStack& s, const VecC& q, cd z,
                             cd z0);

// Worst relative eigenvector defect || (A(z) - y_b) W e_b || over the two
// columns of the wave matrix at z.
double eigenvector_residual(const SurfaceStack& s, const RationalMatrix& A,
                            const VecC& q, cd z, cd z0);

// Max relative entry difference between two phase points with identical
// pole sets (conjugators and eigenvalues compared directly).
double phase_point_distance(const PhasePoint& a, const PhasePoint& b);

}  // namespace spectral
