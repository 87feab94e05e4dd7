#pragma once

// Parametric games: the two-agent quadratic example with point masses, a
// peer-to-peer electricity market, a Nash-Cournot oligopoly, and small
// quadratic test games; plus Monte-Carlo and sweep drivers.

#include <functional>
#include <string>
#include <vector>

#include "drne/defaults.hpp"
#include "drne/parallel.hpp"
#include "drne/solver.hpp"

namespace drne {

// --- Example 1 ------------------------------------------------------------

struct Example1Params {
  double c11 = 1.0, c12 = 0.7, c21 = 0.7, c22 = 1.0;
  double eps1 = 0.1, eps2 = 0.1;
  double p1 = 1.0, p2 = 1.0;  // point-mass samples (p_i, p_i)
  double bound = defaults::kExample1Bound;
};

/// f1 = c11 x1^2 + c12 x1 x2, f2 = c21 x1 x2 + c22 x2^2, common piece
/// a(x) = x with xi in R^2, one sample (p_i, p_i) per agent.
GameSpec build_example1(const Example1Params& params);

/// Damped Newton root of the stationarity system
///   2 c11 x1 + c12 x2 + eps1 x1/||x|| = -p1
///   c21 x1 + 2 c22 x2 + eps2 x2/||x|| = -p2
Vec solve_example1_stationarity(const Example1Params& params);

/// Left minus right side of the stationarity system at x.
Vec example1_stationarity_residual(const Example1Params& params, const Vec& x);

// --- Quadratic test games -------------------------------------------------

/// Scalar-decision game f_i = q_i x_i^2 / 2 + sum_j kappa_ij x_i x_j + r_i x_i
/// with uncertain part xi_i x_i, xi_i in [xi_lo_i, xi_hi_i], x_i in [-bound, bound].
struct QuadraticGameParams {
  Vec q;
  Mat kappa;
  Vec r;
  Vec xi_lo;
  Vec xi_hi;
  double bound = 5.0;
  std::vector<std::vector<double>> samples;  // per agent
  std::vector<double> radius;                // per agent
};

GameSpec build_quadratic_game(const QuadraticGameParams& params);

/// Equilibrium of the game with every uncertain xi_i replaced by a fixed
/// value m_i (sample average or exact mean), by a projected linear solve.
Vec quadratic_mean_equilibrium(const QuadraticGameParams& params, const Vec& mean_xi);

/// Discretized truth of player i: normal centered on its support midpoint
/// with sigma a sixth of the support width.
DiscreteDistribution quadratic_truth(const QuadraticGameParams& params, int i);

// --- Peer-to-peer market --------------------------------------------------

struct P2PParams {
  int N = defaults::kP2PAgents;
  std::vector<std::vector<int>> neighbors;  // symmetric; empty -> star around agent 0
  double chi = defaults::kP2PTradeCap;
  Mat price;  // c_mi, N x N; empty -> defaults
  Vec omega1;
  Vec omega2;
  Vec D_star;
  double G_min = 0.0, G_max = defaults::kP2PGenMax;
  double D_min = 0.0, D_max = defaults::kP2PDemandMax;
  Vec delta_G;
  Vec zeta_lo;  // support of (zeta1, zeta2)
  Vec zeta_hi;
  std::vector<std::vector<Vec>> samples;  // per agent, zeta samples
  std::vector<double> radius;

  /// Fills unset fields with the documented defaults.
  void complete();
  void validate() const;
};

/// Decision of participant i: (G_i, D_i, nu_mi for m in neighbors(i)).
GameSpec build_p2p(P2PParams params);

/// Per-agent index of nu_mi inside the decision of agent i, or -1.
int p2p_trade_index(const P2PParams& params, int i, int m);

// --- Nash-Cournot ---------------------------------------------------------

struct CournotParams {
  int N = 3;
  Vec c;  // production coefficients
  double w1 = defaults::kCournotW1;
  double w2 = defaults::kCournotW2;
  double x_max = defaults::kCournotXMax;
  double demand_min = defaults::kCournotDemandMin;
  double xi_lo = defaults::kCournotXiLo;
  double xi_hi = defaults::kCournotXiHi;
  std::vector<std::vector<double>> samples;  // per firm
  std::vector<double> radius;

  void complete();
  void validate() const;
};

/// Firm i: f_i = c_i x_i^2, piece a(x) = -(w1 - w2 sum_j x_j) x_i, b = 0,
/// coupling sum_j x_j >= demand_min.
GameSpec build_cournot(CournotParams params);

/// Common-ambiguity variant: f_i = c_i x_i^2 - (w1 - w2 S) x_i and one
/// shared piece a(x) = levy * S with common samples and radius.
GameSpec build_cournot_common(const CournotParams& params, double levy, const std::vector<double>& samples,
                              double radius);

/// Discretized truncated normal on `atoms` equispaced points of [lo, hi].
DiscreteDistribution discretized_normal(double mean, double sigma, double lo, double hi, int atoms);

/// K i.i.d. draws from a discrete distribution.
std::vector<Vec> draw_samples(const DiscreteDistribution& dist, int K, std::uint64_t seed);

/// Seeded Cournot study: K samples per firm from the firm's discretized truth.
/// Radii are kept from `nominal` (or defaults when unset).
GameSpec cournot_study(CournotParams nominal, int K, std::uint64_t seed);

/// Discretized truth of firm i.
DiscreteDistribution cournot_truth(const CournotParams& params, int i);

/// Seeded P2P study: K zeta samples per agent (independent coordinates from
/// discretized normals), renewables perturbed uniformly by +-20% and radii
/// uniform in the default range. Fields set in `nominal` are kept.
GameSpec p2p_study(P2PParams nominal, int K, std::uint64_t seed);

// --- Studies and sweeps ---------------------------------------------------

/// Builds study s from its derived seed.
using StudyBuilder = std::function<GameSpec(int study, std::uint64_t seed)>;

struct TrajectoryBand {
  std::vector<double> mean, min, max;
};

struct StudySummary {
  int studies = 0;
  int failed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<SolveStatus> status;
  std::vector<int> iterations;
  TrajectoryBand step_norm;
  TrajectoryBand residual;
  TrajectoryBand cost_gap;  // |sum_i J_i(k) - sum_i J_i(final)|
  std::vector<Vec> equilibria;
  std::vector<std::vector<double>> final_costs;
};

/// Independent seeded studies run concurrently; trajectories aligned by
/// iteration with shorter runs padded by their final value.
StudySummary run_mc_studies(const StudyBuilder& builder, const SolverConfig& cfg, int num_studies,
                            std::uint64_t seed, int threads = 0);

struct SweepPoint {
  double parameter = 0.0;  // eps or K
  std::vector<double> mean, min, max;  // per agent equilibrium worst-case cost
  int studies = 0;
  int failed = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool trend_holds = false;
  std::string trend;  // description of the asserted trend
};

/// Builds a game for (grid value, study seed).
using SweepBuilder = std::function<GameSpec(double value, int study, std::uint64_t seed)>;

/// Equilibrium solver used by the sweeps; returns the stacked equilibrium.
using EquilibriumSolver = std::function<EquilibriumResult(const ReformulatedGame&)>;

/// Per-eps equilibrium cost statistics; asserts nondecreasing means.
SweepResult sweep_radius(const SweepBuilder& builder, const std::vector<double>& eps_grid, int studies,
                         std::uint64_t seed, const EquilibriumSolver& solver, int threads = 0);

/// Per-K spread statistics; asserts the band at the largest K is below the
/// band at the smallest K.
SweepResult sweep_samples(const SweepBuilder& builder, const std::vector<int>& K_grid, int studies,
                          std::uint64_t seed, const EquilibriumSolver& solver, int threads = 0);

}  // namespace drne
