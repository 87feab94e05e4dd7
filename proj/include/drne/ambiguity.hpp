#pragma once

// Empirical distributions, discrete Wasserstein distances, finite-sample
// radius calibration and the mapping sensitivity bound.

#include <vector>

#include "drne/common.hpp"

namespace drne {

struct DiscreteDistribution {
  std::vector<Vec> points;
  Vec weights;

  int size() const { return static_cast<int>(points.size()); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  /// Throws unless weights are nonnegative, sum to 1 within 1e-12 and
  /// all atoms share one dimension.
  void validate() const;
  /// Identical atoms merged (weights summed), sorted lexicographically.
  DiscreteDistribution merged() const;
  /// Sum of weight * fn(atom).
  template <class Fn>
  double expectation(Fn&& fn) const {
    double acc = 0.0;
    for (int k = 0; k < size(); ++k) acc += weights[k] * fn(points[k]);
    return acc;
  }
};

DiscreteDistribution empirical_distribution(const std::vector<Vec>& samples);

/// Constants of the light-tailed concentration inequality. `A` is
/// informational only. c = 3, b = 1 are illustrative defaults, not
/// certified concentration constants.
struct CalibrationConstants {
  double a = 2.0;
  double A = 0.0;
  double c = 3.0;
  double b = 1.0;
  int p = 1;

  void validate() const;
};

struct Confidence {
  double beta = 1.0;
  bool vacuous = false;  // beta >= 1 carries no information
};

/// beta = c exp(-b K eps^max(p,2)) for eps <= 1, c exp(-b K eps^a) otherwise.
Confidence confidence_from_radius(int K, double eps, const CalibrationConstants& consts);

/// Inverse of confidence_from_radius: eps = (ln(c/beta)/(bK))^(1/max(p,2))
/// when K >= ln(c/beta)/b, otherwise with exponent 1/a. The tie goes to the
/// first branch; both branches give eps = 1 there.
double radius_from_confidence(int K, double beta, const CalibrationConstants& consts);

/// Exact 1-Wasserstein distance with ground norm `norm`. One-dimensional
/// inputs use the sorted-quantile coupling; otherwise a transportation simplex.
double wasserstein_discrete(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                            Norm norm = Norm::kL2);

/// The same distance through the generic dense LP (slow; for cross-checks).
double wasserstein_discrete_lp(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                               Norm norm = Norm::kL2);

/// Sorted-quantile 1-D distance; both inputs must be one-dimensional.
double wasserstein_1d(const DiscreteDistribution& P, const DiscreteDistribution& Q);

/// Per-agent inputs of the sensitivity bound.
struct SensitivityInput {
  Vec lipschitz;     // L_ij, j = 1..n_i
  double eps = 0.0;  // ball radius
  double dW = 0.0;   // distance of the empirical distribution to the reference
};

/// rho = sum_i sum_j L_ij^2 (eps_i + dW_i)^2.
double sensitivity_bound(const std::vector<SensitivityInput>& agents);

}  // namespace drne
