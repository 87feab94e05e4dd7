#pragma once

// Log-barrier interior-point method for small convex programs with linear,
// second-order-cone and linear equality constraints:
//
//   minimize    c'z + phi(z)
//   subject to  G z <= h
//               ||A_j z + b_j||_2 <= c_j'z + d_j     (j = 1..J)
//               E z = e
//
// phi is an optional smooth convex term. The method needs a strictly
// feasible start satisfying the equalities.

#include <functional>
#include <optional>
#include <vector>

#include "drne/common.hpp"

namespace drne::conic {

struct SmoothTerm {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

struct SocConstraint {
  Mat A;
  Vec b;
  Vec c;
  double d = 0.0;
};

struct ConvexProgram {
  Vec c;
  std::optional<SmoothTerm> smooth;
  Mat G;
  Vec h;
  std::vector<SocConstraint> cones;
  Mat E;
  Vec e;

  int dim() const { return static_cast<int>(c.size()); }
  double objective(const Vec& z) const;
  /// Smallest slack over all inequality rows and cones (> 0 iff strictly feasible).
  double min_slack(const Vec& z) const;
};

struct BarrierOptions {
  /// Stop once the barrier duality gap m/t falls below tol * max(1, |objective|).
  double tol = 1e-9;
  double t0 = 1.0;
  double growth = 16.0;
  int max_centering_steps = 100;
  int max_outer = 80;
};

struct BarrierResult {
  Vec z;
  double objective = 0.0;
  double gap = kInf;
  int newton_steps = 0;
  bool converged = false;
};

BarrierResult solve(const ConvexProgram& program, const Vec& z0,
                    const BarrierOptions& options = {});

/// Point z with lower < z < upper, G z < h, E z = e maximizing the uniform
/// margin (capped at 1), or nullopt if the set is empty. `margin` receives
/// the attained margin, which is 0 when the set has no strict interior.
std::optional<Vec> interior_point(const Mat& G, const Vec& h, const Mat& E, const Vec& e,
                                  const Vec& lower, const Vec& upper, double* margin = nullptr);

}  // namespace drne::conic
