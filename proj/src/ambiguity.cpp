#include "drne/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drne/lp.hpp"

namespace drne {

void DiscreteDistribution::validate() const {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "distribution has no atoms");
  if (weights.size() != size()) {
    throw Error(ErrorCode::kDimensionMismatch, "distribution: one weight per atom required");
  }
  const int p = dim();
  for (const auto& pt : points) {
    if (pt.size() != p) throw Error(ErrorCode::kDimensionMismatch, "distribution: atoms differ in dimension");
  }
  if ((weights.array() < 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "distribution: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "distribution: weights do not sum to 1");
  }
}

DiscreteDistribution DiscreteDistribution::merged() const {
  std::vector<int> order(size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](int i, int j) {
    return std::lexicographical_compare(points[i].begin(), points[i].end(), points[j].begin(),
                                        points[j].end());
  };
  std::sort(order.begin(), order.end(), less);
  DiscreteDistribution out;
  std::vector<double> w;
  for (int idx : order) {
    if (!out.points.empty() && out.points.back() == points[idx]) {
      w.back() += weights[idx];
    } else {
      out.points.push_back(points[idx]);
      w.push_back(weights[idx]);
    }
  }
  out.weights = Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
  return out;
}

DiscreteDistribution empirical_distribution(const std::vector<Vec>& samples) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empirical_distribution: no samples");
  DiscreteDistribution d;
  d.points = samples;
  d.weights = Vec::Constant(static_cast<Eigen::Index>(samples.size()), 1.0 / static_cast<double>(samples.size()));
  for (const auto& s : samples) {
    if (s.size() != samples.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "empirical_distribution: samples differ in dimension");
    }
  }
  return d;
}

void CalibrationConstants::validate() const {
  if (!(a > 1.0)) throw Error(ErrorCode::kInvalidArgument, "calibration: a must exceed 1");
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "calibration: c must be positive");
  if (!(b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "calibration: b must be positive");
  if (p < 1) throw Error(ErrorCode::kInvalidArgument, "calibration: p must be at least 1");
  if (p == 2) {
    throw Error(ErrorCode::kUnsupported,
                "calibration: p = 2 is not covered by the concentration bound; specify the radius directly");
  }
}

Confidence confidence_from_radius(int K, double eps, const CalibrationConstants& consts) {
  consts.validate();
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "confidence_from_radius: K must be >= 1");
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "confidence_from_radius: eps must be positive");
  const double expo = eps <= 1.0 ? std::max<double>(consts.p, 2.0) : consts.a;
  Confidence out;
  out.beta = consts.c * std::exp(-consts.b * K * std::pow(eps, expo));
  out.vacuous = out.beta >= 1.0;
  return out;
}

double radius_from_confidence(int K, double beta, const CalibrationConstants& consts) {
  consts.validate();
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "radius_from_confidence: K must be >= 1");
  if (!(beta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius_from_confidence: beta must be positive");
  if (beta > consts.c) {
    throw Error(ErrorCode::kInvalidArgument, "radius_from_confidence: beta must not exceed c");
  }
  const double logterm = std::log(consts.c / beta);
  if (logterm <= 0.0) return 0.0;
  const double base = logterm / (consts.b * K);
  const double expo = K >= logterm / consts.b ? 1.0 / std::max<double>(consts.p, 2.0) : 1.0 / consts.a;
  return std::pow(base, expo);
}

namespace {

Mat ground_cost(const DiscreteDistribution& P, const DiscreteDistribution& Q, Norm n) {
  Mat cost(P.size(), Q.size());
  for (int i = 0; i < P.size(); ++i)
    for (int j = 0; j < Q.size(); ++j) cost(i, j) = norm(P.points[i] - Q.points[j], n);
  return cost;
}

void check_pair(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  P.validate();
  Q.validate();
  if (P.dim() != Q.dim()) throw Error(ErrorCode::kDimensionMismatch, "wasserstein: dimensions differ");
}

}  // namespace

double wasserstein_1d(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  check_pair(P, Q);
  if (P.dim() != 1) throw Error(ErrorCode::kDimensionMismatch, "wasserstein_1d: inputs must be 1-D");
  // Integral of |F_P - F_Q| over the merged breakpoints.
  std::vector<std::pair<double, double>> events;  // (location, signed mass)
  for (int k = 0; k < P.size(); ++k) events.emplace_back(P.points[k][0], P.weights[k]);
  for (int k = 0; k < Q.size(); ++k) events.emplace_back(Q.points[k][0], -Q.weights[k]);
  std::sort(events.begin(), events.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  double cdf_gap = 0.0;
  double dist = 0.0;
  for (std::size_t e = 0; e + 1 < events.size(); ++e) {
    cdf_gap += events[e].second;
    dist += std::abs(cdf_gap) * (events[e + 1].first - events[e].first);
  }
  return dist;
}

double wasserstein_discrete(const DiscreteDistribution& P, const DiscreteDistribution& Q, Norm n) {
  check_pair(P, Q);
  if (P.dim() == 1) return wasserstein_1d(P, Q);
  return std::max(0.0, lp::solve_transport(P.weights, Q.weights, ground_cost(P, Q, n)).cost);
}

double wasserstein_discrete_lp(const DiscreteDistribution& P, const DiscreteDistribution& Q, Norm n) {
  check_pair(P, Q);
  const int a = P.size();
  const int b = Q.size();
  const Mat cost = ground_cost(P, Q, n);
  lp::Problem pb;
  pb.c.resize(a * b);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) pb.c[i * b + j] = cost(i, j);
  // Last column constraint is implied by the others.
  pb.A_eq = Mat::Zero(a + b - 1, a * b);
  pb.b_eq.resize(a + b - 1);
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) pb.A_eq(i, i * b + j) = 1.0;
    pb.b_eq[i] = P.weights[i];
  }
  for (int j = 0; j + 1 < b; ++j) {
    for (int i = 0; i < a; ++i) pb.A_eq(a + j, i * b + j) = 1.0;
    pb.b_eq[a + j] = Q.weights[j];
  }
  const lp::Solution sol = lp::solve(pb);
  if (sol.status != lp::Status::kOptimal) {
    throw Error(ErrorCode::kNotConverged, std::string("wasserstein_discrete_lp: ") + lp::to_string(sol.status));
  }
  return std::max(0.0, sol.objective);
}

double sensitivity_bound(const std::vector<SensitivityInput>& agents) {
  double rho = 0.0;
  for (const auto& ag : agents) {
    if (ag.eps < 0.0 || ag.dW < 0.0 || (ag.lipschitz.array() < 0.0).any()) {
      throw Error(ErrorCode::kInvalidArgument, "sensitivity_bound: inputs must be nonnegative");
    }
    const double r = ag.eps + ag.dW;
    rho += ag.lipschitz.squaredNorm() * r * r;
  }
  return rho;
}

}  // namespace drne
