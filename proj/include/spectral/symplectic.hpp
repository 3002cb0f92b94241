#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spectral/curve_family.hpp"
#include "spectral/transform.hpp"

namespace spectral {

// ---------------------------------------------------------------------------
// Tangents and finite differences
// ---------------------------------------------------------------------------

// Tangent direction in the spectral coordinates (I, q, mu, rho).  Sizes
// follow the data: g entries for dI and dq, n-1 entries per pole for dmu
// and drho.
struct CoordTangent {
  VecC dI;
  VecC dq;
  std::vector<VecC> dmu;
  std::vector<VecC> drho;

  static CoordTangent zero(const SpectralData& sd);
  // True when the direction moves the curve moduli (any dI or dmu entry).
  bool deforms_curve() const;
  double norm() const;
};

// Central differences evaluated at steps h, h/2, ..., h/2^(levels-1) and
// combined by Richardson extrapolation; the disagreement between the last
// two levels is the instability witness.
struct FDConfig {
  double h = 1e-5;       // step, relative to the coordinate scale
  int richardson = 2;    // number of step levels (1 = plain central)
  double target = 1e-6;  // accuracy goal backing the instability guard

  void validate() const;  // throws ParameterError outside h in [1e-8, 1e-2]
};

// Derivative of the phase point along one coordinate direction.
struct PhaseTangent {
  std::vector<MatC> dG;   // conjugator derivative per pole
  std::vector<VecC> dL;   // eigenvalue derivative per pole
  double fd_error = 0.0;  // relative Richardson disagreement
  double step = 0.0;      // coarsest step actually used
};

// Vector of Riemann constants attached to a movable basepoint lift.
struct RiemannConstants {
  SurfacePoint x;       // the basepoint lift the vector refers to
  VecC K;               // principal representative of the vector
  double vanish = 0.0;  // |theta(K)| / scale, divisor-membership residual
};

RiemannConstants riemann_constants(const KernelContext& kc,
                                   const SurfacePoint& x);

// ---------------------------------------------------------------------------
// Deformation machinery
// ---------------------------------------------------------------------------

// Differentiates the inverse transform in the spectral coordinates around a
// center point.  Holds the center data, its surface stack, and the curve
// family used to realize I/mu displacements as coefficient changes; pure
// q/rho displacements reuse the center stack, moduli displacements rebuild
// the stack at the base anchor so sheet labels vary continuously.
class DeformationContext {
 public:
  explicit DeformationContext(const SpectralData& sd);

  const SpectralData& center() const { return sd0_; }
  const SurfaceStack& stack() const { return *stack0_; }
  const CurveFamily& family() const { return *family_; }
  const PhasePoint& center_point() const { return p0_; }
  int genus() const { return static_cast<int>(sd0_.I.size()); }

  // Center data with coordinates displaced by eps * u.
  SpectralData displaced(const CoordTangent& u, double eps) const;
  // Phase point at the displaced coordinates.
  PhasePoint at(const CoordTangent& u, double eps) const;
  // Step size fd.h scaled by the magnitude of the coordinates u moves.
  double step_for(const CoordTangent& u, const FDConfig& fd) const;

  // Central-difference derivative of the phase point along u.
  PhaseTangent phase_tangent(const CoordTangent& u, const FDConfig& fd) const;

  // Symplectic potential contracted with a tangent:
  // sum_j tr(L_j G_j^{-1} dG_j) at the center point.
  cd theta_potential(const PhaseTangent& t) const;
  cd theta_potential(const CoordTangent& u, const FDConfig& fd) const;

  // Exterior derivative of the potential on two directions, assembled from
  // the phase tangents at the center point.
  cd omega_A(const PhaseTangent& tu, const PhaseTangent& tv) const;
  cd omega_A(const CoordTangent& u, const CoordTangent& v,
             const FDConfig& fd) const;

  // The same bilinear with an explicit base point, for gauge-moved copies.
  static cd omega_A_at(const std::vector<MatC>& G, const std::vector<VecC>& L,
                       const PhaseTangent& tu, const PhaseTangent& tv);

  // Riemann constants over the fixed projection z(x) = center z0 on the
  // curve displaced along u; the lift continues the requested center sheet.
  RiemannConstants constants_along(const CoordTangent& u, double eps,
                                   int sheet) const;
  // Phase point displaced along I_beta at fixed gamma = q + K^x instead of
  // fixed q: the twist compensates the motion of the Riemann constants.
  PhasePoint at_fixed_gamma(int beta, double eps, int sheet) const;

 private:
  const VecC& K0(int sheet) const;

  SpectralData sd0_;
  std::unique_ptr<SurfaceStack> stack0_;
  std::unique_ptr<CurveFamily> family_;
  PhasePoint p0_;
  std::vector<MatC> G0inv_;
  mutable std::vector<VecC> K0_;  // constants at the z0 lifts, per sheet, lazy
};

// Convenience wrappers matching the report entry points.
cd theta_potential(const SpectralData& sd, const CoordTangent& u,
                   const FDConfig& fd);
cd omega_A(const SpectralData& sd, const CoordTangent& u,
           const CoordTangent& v, const FDConfig& fd);

// Exact canonical pairing sum dI^dq + sum dmu^drho on coordinate tangents.
cd omega_S(const CoordTangent& u, const CoordTangent& v);

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

// One potential contraction against a coordinate direction.
struct ContractionCase {
  std::string name;     // direction label, e.g. "dq[0]"
  cd value{};           // theta_potential along the direction
  cd expected{};        // coordinate-form prediction
  double rel_err = 0.0;
  double ratio = 0.0;   // plain central-difference error ratio under h -> h/2
};

struct DarbouxReport {
  std::vector<ContractionCase> contractions;
  double contraction_err = 0.0;  // max rel_err over the contractions
  double min_ratio = 0.0;        // min convergence ratio over the witnesses
  double canonical_err = 0.0;    // omega_A on canonical pairs vs +-1
  double random_pair_err = 0.0;  // max |omega_A - omega_S| / scale
  double leaf_err = 0.0;         // dmu = drho = 0 pairs vs sum dI^dq
  double gamma_err = 0.0;        // leaf pairs with q replaced by gamma^x
  std::vector<double> fd_steps;
  bool pass = false;
};

// Contraction identities, canonical pairs, random tangent pairs, the
// moduli-leaf restriction, and the gamma-coordinate substitution.
DarbouxReport verify_darboux(const SpectralData& sd, const FDConfig& fd,
                             int trials = 5, std::uint64_t seed = 1,
                             double tol = 1e-4);

struct KSymmetryReport {
  int genus = 0;
  std::vector<MatC> M;          // dK^x/dI per sheet lift of z0
  std::vector<double> sym_err;  // max |M - M^T| entry per sheet
  double max_err = 0.0;
  std::vector<double> fd_steps;
  bool pass = false;
};

// Symmetry of the I-gradient of the Riemann constants at fixed projection
// z(x) = z0, checked on both sheet lifts.
KSymmetryReport verify_K_symmetry(const SpectralData& sd, const FDConfig& fd,
                                  double tol = 1e-4);

struct SzegoVariationCase {
  std::string name;  // "I[0]" or "mu[2]"
  cd lhs{};          // finite-difference derivative of the kernel
  cd rhs{};          // branch-point residue sum
  double rel_err = 0.0;
};

struct SzegoVariationReport {
  std::vector<SzegoVariationCase> cases;
  double max_err = 0.0;
  cd fit_ratio{};          // least-squares LHS/RHS ratio over the cases
  double ratio_err = 0.0;  // |fit_ratio - 1|
  double quad_drift = 0.0; // worst radius-halving disagreement on the RHS
  std::vector<double> fd_steps;
  bool pass = false;
};

// Variational formula for the twisted Szego kernel: finite differences in
// I_alpha and mu_j against the branch-point residue representation.
SzegoVariationReport verify_szego_variation(const SpectralData& sd,
                                            const FDConfig& fd,
                                            double tol = 1e-4);

// ---------------------------------------------------------------------------
// Extended Poisson bracket on (G, lambda)
// ---------------------------------------------------------------------------

// Bracket of two residue-matrix entries {A_ab, A_cd} for A = G L G^{-1},
// induced by {G_bj, G_cl} = G_bl G_cj / (lambda_j - lambda_l) off-diagonal,
// {G, G} = 0 at equal eigenvalue index, and {G_bk, lambda_l} = -G_bk d_lk.
// Exact linear algebra; throws DegenerateSpectrum on coincident lambda.
cd poisson_bracket(const MatC& G, const VecC& lambda, int a, int b, int c,
                   int d);

struct KKReport {
  int n = 0;
  double antisym_err = 0.0;  // assembled bracket antisymmetry residual
  double kk_err = 0.0;       // worst |{A,A} - Kirillov-Kostant closed form|
  bool pass = false;
};

// Chain-rule bracket of A = G L G^{-1} against the Kirillov-Kostant closed
// form on a seeded random (G, lambda).
KKReport verify_induced_kk(int n, std::uint64_t seed, double tol = 1e-12);

}  // namespace spectral
