#pragma once

#include <functional>
#include <vector>

#include "spectral/core.hpp"
#include "spectral/curve.hpp"

namespace spectral {

// Gauss-Legendre rule on [-1, 1]; cached per order.
struct GLRule {
  std::vector<double> x, w;
};
const GLRule& gl_rule(int order);

// Integrand on the curve in the z-chart: f(z, y) with y the tracked branch.
using CurveForm = std::function<cd(cd, cd)>;

struct PathResult {
  VecC values;
  cd y_end{};
};

struct PathResult1 {
  cd value{};
  cd y_end{};
};

// Integrate several forms f(z, y) dz along a polyline while continuing the
// y-branch from y0.  Each segment is accepted when two rule orders agree to
// the target, otherwise bisected.
PathResult integrate_forms(const SpectralCurve& c, const std::vector<cd>& pts,
                           cd y0, const std::vector<CurveForm>& fs,
                           double tol = kQuadTarget);

PathResult1 integrate_form(const SpectralCurve& c, const std::vector<cd>& pts,
                           cd y0, const CurveForm& f, double tol = kQuadTarget);

// Plain adaptive line integral of a single-valued integrand.
cd integrate_plain(const std::function<cd(cd)>& f, cd a, cd b,
                   double tol = kQuadTarget);

}  // namespace spectral
