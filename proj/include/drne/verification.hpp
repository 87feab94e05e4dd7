#pragma once

// Independent oracles for the worst-case reformulation, equilibrium
// certificates and statistical experiments (coverage, consistency,
// gradient-mapping sensitivity).

#include <functional>
#include <optional>
#include <vector>

#include "drne/ambiguity.hpp"
#include "drne/case_studies.hpp"

namespace drne {

// --- Grids -----------------------------------------------------------------

struct GridSpec {
  std::vector<int> resolution;  // points per dimension, >= 2

  /// 101 points for p = 1, 51 per axis for p = 2, 21 per axis for p = 3.
  static GridSpec defaults_for(int p);
  static GridSpec uniform(int p, int points);

  /// Per-dimension spacing over the bounding box of the polytope.
  Vec spacing(const UncertaintyPolytope& poly) const;
  /// Largest per-dimension spacing.
  double h(const UncertaintyPolytope& poly) const;
  /// Ground-norm distance from any point of the bounding box to its
  /// nearest grid node (half a cell diagonal).
  double covering_radius(const UncertaintyPolytope& poly, Norm norm) const;
  /// Grid nodes of the bounding box satisfying C xi <= d + 1e-12.
  std::vector<Vec> enumerate(const UncertaintyPolytope& poly) const;
};

// --- Worst-case oracles ----------------------------------------------------

/// One affine piece a' xi + b evaluated at a fixed decision.
struct PieceAt {
  Vec a;
  double b = 0.0;
};

std::vector<PieceAt> pieces_at(const AgentSpec& agent, const Vec& x);

/// max over xi in the polytope of a' xi + b - lambda ||xi - anchor|| by grid
/// enumeration followed by a projected-supergradient polish from the best
/// node. Within (||a||_* + lambda) * covering radius of the true maximum.
double inner_sup_oracle(const PieceAt& piece, double lambda, const Vec& anchor, const UncertaintyPolytope& poly,
                        const GridSpec& grid, Norm norm = Norm::kL2);

/// Transport LP over grid atoms (samples added as atoms):
///   max sum q_kg h(x, xi_g)  s.t. sum_g q_kg = 1/K, sum q_kg ||xi_g - xi_k|| <= eps.
/// Returns f_i(x) plus the LP value, a lower bound on the worst case.
double discretized_dro_worstcase(const AgentSpec& agent, const Vec& x, double eps, const GridSpec& grid,
                                 Norm norm = Norm::kL2);

/// Largest gap between the discretized worst case and the true one:
/// 2 * max_l ||a_l||_* * covering radius.
double discretization_gap(const AgentSpec& agent, const Vec& x, const GridSpec& grid, Norm norm = Norm::kL2);

struct GoldenDualResult {
  double value = 0.0;   // f_i(x) + min over lambda
  double lambda = 0.0;  // minimizer
  double lambda_max = 0.0;
  double tolerance = 0.0;  // inner grid bound at lambda_max plus bracket width term
};

/// Outer minimization min_{lambda in [0, lambda_max]} lambda eps +
/// (1/K) sum_k max_l inner_sup_oracle(...) by golden-section search,
/// lambda_max = max_l ||a_l||_* + 1.
GoldenDualResult golden_dual_worstcase(const AgentSpec& agent, const Vec& x, double eps, const GridSpec& grid,
                                       Norm norm = Norm::kL2, double lambda_tol = 1e-7);

// --- Equilibrium certificates ----------------------------------------------

/// Per-agent worst-case cost at x_star minus the best-response cost.
std::vector<double> nash_gap(const ReformulatedGame& game, const Vec& x_star);

// --- Statistical experiments -------------------------------------------------

/// Builds a game from per-agent samples and radii.
using SampleBuilder =
    std::function<GameSpec(const std::vector<std::vector<Vec>>& samples, const std::vector<double>& eps)>;

enum class RadiusRule {
  kFixed,       // radius given per agent
  kObserved,    // radius = d_W(P_hat_i, P_i) computed per trial
  kCalibrated,  // radius from the concentration inequality at beta_i
};

struct CoverageConfig {
  int trials = 200;
  std::uint64_t seed = 0;
  std::vector<int> K;        // samples per agent
  RadiusRule rule = RadiusRule::kObserved;
  std::vector<double> eps;   // kFixed
  std::vector<double> beta;  // kCalibrated
  CalibrationConstants constants;
  Norm norm = Norm::kL2;
  int threads = 0;
};

struct CoverageReport {
  int trials = 0;
  int joint_success = 0;
  std::vector<int> per_agent;
  int flagged = 0;      // trials whose solve failed, excluded
  double target = 0.0;  // 1 - sum beta (1 for kObserved / kFixed)
  std::vector<std::uint64_t> seeds;
  std::vector<char> success;  // per trial, 1 joint success, 0 failure, -1 flagged
  std::vector<std::vector<double>> true_cost, worst_cost;

  double frequency() const;
  /// Binomial standard deviation of the frequency at the target.
  double sigma() const;
};

CoverageReport coverage_experiment(const SampleBuilder& builder, const std::vector<DiscreteDistribution>& truths,
                                   const CoverageConfig& cfg, const EquilibriumSolver& solver);

struct ConsistencyConfig {
  std::vector<int> K_schedule{5, 10, 20, 40, 80};
  std::function<double(int)> eps_of_K = [](int K) { return 1.0 / std::sqrt(static_cast<double>(K)); };
  int replications = 30;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct ConsistencyReport {
  std::vector<int> K;
  std::vector<double> eps;
  std::vector<double> mean_distance;
  std::vector<std::vector<double>> distances;  // [schedule][replication]
  std::vector<double> rho;                     // sensitivity bound at mean d_W
  Vec reference;
  int flagged = 0;
  double head_mean = 0.0;  // first entry
  double tail_mean = 0.0;  // last entry
  bool trend_holds = false;
};

/// `reference` is the equilibrium of the exact-expectation game; it is
/// computed by the caller since exact expectations are model specific.
ConsistencyReport consistency_experiment(const SampleBuilder& builder, const std::vector<DiscreteDistribution>& truths,
                                         const Vec& reference, const ConsistencyConfig& cfg,
                                         const EquilibriumSolver& solver);

struct SensitivityConfig {
  int probes = 50;
  int perturbations = 10;
  std::uint64_t seed = 0;
};

struct SensitivityReport {
  double max_slack = -kInf;  // max ||F_Q - F_P||^2 - rho
  double rho = 0.0;
  double max_distance2 = 0.0;
  int evaluations = 0;
};

/// Pseudo-gradient of the expected cost under per-agent discrete
/// distributions, by exact expectation over atoms.
Vec expected_pseudogradient(const GameSpec& spec, const std::vector<DiscreteDistribution>& dists, const Vec& x);

/// Compares F_Q with F_P at random decisions, Q_i obtained by moving the
/// atoms of the empirical distribution within its ball (certified by the
/// exact transport distance).
SensitivityReport mapping_distance_check(const GameSpec& spec, const std::vector<DiscreteDistribution>& truths,
                                         const SensitivityConfig& cfg);

}  // namespace drne
