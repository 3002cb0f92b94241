#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "spectral/core.hpp"
#include "spectral/json_io.hpp"
#include "spectral/polynomial.hpp"
#include "spectral/ratmat.hpp"

namespace spectral {

// The plane curve det(A(z) - y) = 0 attached to a traceless rational matrix.
// For n = 2 it is kept in the hyperelliptic normal form w^2 = P(z) with
// w = y * prod_j (z - t_j), which is the only case the numerics support.
struct SpectralCurve {
  int n = 0;
  std::vector<cd> poles;
  std::vector<Poly> Q_num;     // numerators of Q_2..Q_n over prod(z-t)^j
  Poly P;                      // n = 2 normal form
  std::vector<cd> branch;      // branch projections, canonical order
  int genus = 0;
  cd anchor{};                 // basepoint used for sheet labeling
  std::vector<cd> anchor_roots;  // y-values above the anchor, canonical order
  double scale = 1.0;          // geometric scale for relative tolerances

  int m() const { return static_cast<int>(poles.size()); }
  cd pole_product(cd z) const;
  // y-values above z in canonical order; throws NearBranchPoint when z is
  // within `guard` (relative) of a branch projection.
  std::vector<cd> roots_at(cd z, double guard = 1e-9) const;
  cd w_of(cd z, cd y) const { return y * pole_product(z); }
  // y-derivative along the curve away from branch points: dy/dz = ...
  cd dy_dz(cd z, cd y) const;

  Json to_json() const;
  static SpectralCurve from_json(const Json& j);
};

struct SurfacePoint {
  cd z{};
  cd y{};
  int sheet = -1;  // continuation label from the anchor; -1 when untracked
};

struct DiscriminantReport {
  bool smooth = false;
  bool irreducible = false;
  double min_branch_gap = 0.0;
};

DiscriminantReport discriminant_check(const CharCoeffs& cc, double tol = 1e-8);

// Basepoint maximizing the minimum distance to the given special points over
// a deterministic grid.
cd default_basepoint(const std::vector<cd>& special);

SpectralCurve build_curve(const CharCoeffs& cc, std::optional<cd> anchor = {});
SpectralCurve build_curve(const PhasePoint& p, std::optional<cd> anchor = {});

// --- analytic continuation -------------------------------------------------

// Continue the y-branch from (z0, y0) to z1 along the straight segment.
// Step halving keeps the tracked root at least three times closer than any
// other; below the floor step the continuation is reported ambiguous.
cd continue_y_segment(const SpectralCurve& c, cd z0, cd y0, cd z1);

// Same along a polyline.
cd continue_y_path(const SpectralCurve& c, const std::vector<cd>& pts, cd y0);

// Waypoint route from `from` to `to` avoiding the listed obstacle points by
// a clearance proportional to each obstacle's distance to its nearest
// neighbor.  Obstacles too close to either endpoint are ignored.
std::vector<cd> route_avoiding(cd from, cd to, const std::vector<cd>& obstacles);

// Closed circle polyline (first point repeated at the end), counterclockwise.
std::vector<cd> circle_points(cd center, double radius, int npts,
                              double phase0 = 0.0);

// Sheet labeling by continuation from the curve's anchor, with a guarded
// cache so repeated queries are cheap and deterministic.
class SheetTracker {
 public:
  explicit SheetTracker(const SpectralCurve& c);
  const SpectralCurve& curve() const { return c_; }
  std::vector<SurfacePoint> points_above(cd z) const;
  SurfacePoint point(cd z, int sheet) const;
  // Obstacles used for routing (branch points and poles).
  const std::vector<cd>& obstacles() const { return obstacles_; }

 private:
  const SpectralCurve& c_;
  std::vector<cd> obstacles_;
  mutable std::map<std::pair<double, double>, std::vector<cd>> cache_;
  mutable std::shared_mutex mutex_;
};

}  // namespace spectral
