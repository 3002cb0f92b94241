#pragma once

#include <vector>

#include "spectral/core.hpp"
#include "spectral/curve.hpp"

namespace spectral {

// Closed polyline on the base plane together with the tracked branch value at
// its first vertex; pts.front() == pts.back().
struct Loop {
  std::vector<cd> pts;
  cd y0{};
};

struct HomologyBasis {
  std::vector<Loop> a, b;   // g loops each
  MatI intersections;       // verified pairing, rows/cols a_1..a_g, b_1..b_g
};

int winding_number(const std::vector<cd>& pts, cd p);

// Capsule polyline at distance delta around the segment [p, q],
// counterclockwise.
std::vector<cd> capsule_loop(cd p, cd q, double delta, int arcn = 10);

// Counterclockwise offset of the convex hull of `pts` by delta (circle for a
// single point, capsule for collinear sets).
std::vector<cd> offset_hull_loop(const std::vector<cd>& pts, double delta,
                                 int arcn = 8);

// Canonical basis of cycles: a-loops as capsules around branch-point pairs,
// b-loops as offset hulls around nested tails of the branch list, verified by
// winding numbers and a numerically computed intersection pairing.  Falls back
// to alternative pairings of branch points before giving up.
HomologyBasis build_homology(const SpectralCurve& c, const SheetTracker& tracker);

}  // namespace spectral
