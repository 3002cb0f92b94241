#pragma once

#include <cstdint>
#include <vector>

#include "spectral/core.hpp"
#include "spectral/json_io.hpp"
#include "spectral/polynomial.hpp"

namespace spectral {

// A point of the phase space: m simple poles t_j with residue data
// A_j = G_j L_j G_j^{-1}, where G_j lies in SL(n) and L_j is diagonal,
// traceless, with pairwise distinct entries.  The residues must sum to zero.
struct PhasePoint {
  int n = 0;
  std::vector<cd> poles;
  std::vector<MatC> G;
  std::vector<VecC> L;

  int m() const { return static_cast<int>(poles.size()); }
  MatC residue(int j) const;  // G_j L_j G_j^{-1}

  // Throws on any violated structural invariant.  `tol` is relative.
  void validate(double tol = kDefaultTol) const;

  Json to_json() const;
  static PhasePoint from_json(const Json& j);
};

// The assembled rational function A(z) = sum_j A_j / (z - t_j).
struct RationalMatrix {
  std::vector<cd> poles;
  std::vector<MatC> residues;

  int n() const { return residues.empty() ? 0 : static_cast<int>(residues[0].rows()); }
  int m() const { return static_cast<int>(poles.size()); }

  // Throws PoleEvaluation when z is within `guard` (relative) of a pole.
  MatC evaluate(cd z, double guard = 1e-12) const;
};

RationalMatrix assemble(const PhasePoint& p);

// Coefficients of the characteristic polynomial
//   det(A(z) - y) * (-1)^n = y^n + Q_2(z) y^{n-2} + ... + Q_n(z),
// with each Q_j returned through its numerator polynomial over
// prod_k (z - t_k)^j.  The y^{n-1} coefficient vanishes identically
// because A is traceless.
struct CharCoeffs {
  int n = 0;
  std::vector<cd> poles;
  std::vector<Poly> Q_num;  // Q_num[i] is the numerator of Q_{i+2}

  cd Q_value(int j, cd z) const;  // Q_j(z), j in [2, n]
};

CharCoeffs char_coeffs(const RationalMatrix& A);

// Conjugate all G_j by a single S chosen so that A(z0) becomes diagonal with
// eigenvalues in canonical order; the residual diagonal freedom is fixed by
// normalizing the eigenvector matrix to unit diagonal.  Idempotent.
PhasePoint gauge_fix(const PhasePoint& p, cd z0, double tie_tol = kTieTol);

// Deterministic generator; identical (n, m, seed) give identical output.
// Resamples internally until all invariants hold and, for n = 2, the
// spectral curve is smooth and irreducible.
PhasePoint random_phase_point(int n, int m, std::uint64_t seed);

// Partial-sum change of variables between residue eigenvalue vectors
// lambda^(1..n) (summing to zero) and the reduced coordinates mu^(1..n-1):
// mu^(k) = lambda^(1) + ... + lambda^(k).
VecC mu_from_lambda(const VecC& lambda, double tol = 1e-9);
VecC lambda_from_mu(const VecC& mu);

// Principal n-th root, used to renormalize determinants to one.
cd det_root(cd det, int n);

// Deterministic stream of complex numbers used by the generators.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform();        // [0, 1)
  double normal();         // standard normal, Box-Muller
  cd cnormal();            // complex, E|z|^2 = 1
  cd annulus(double rmin, double rmax);  // uniform argument, uniform radius

 private:
  std::uint64_t next();
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spectral
