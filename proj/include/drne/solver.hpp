#pragma once

// Inertial primal-dual projected-gradient equilibrium seeking (Jacobi
// updates across agents), a generic natural residual, single-agent best
// responses and a Gauss-Seidel reference method.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drne/reformulation.hpp"

namespace drne {

struct SolverConfig {
  /// Per-agent step sizes; agents beyond the list use tau_default.
  std::vector<double> tau;
  double tau_default = 0.01;
  double delta = 1.0 / kGoldenRatio;
  int max_iter = 50000;
  double tol_step = 1e-4;
  double tol_residual = 1e-4;
  std::uint64_t seed = 0;
  /// Draw the start uniformly from the boxes instead of the box centers.
  bool randomize_start = false;
  /// Raise the starting lambda until every g2 row holds (default start only).
  bool feasible_start = false;
  /// Keep every log_stride-th record (the last iterate is always kept).
  int log_stride = 1;

  double tau_for(int i) const { return i < static_cast<int>(tau.size()) ? tau[i] : tau_default; }
  void validate() const;
};

enum class SolveStatus { kConverged, kMaxIter, kDiverged, kCycling };
const char* to_string(SolveStatus status);

struct IterateRecord {
  int iter = 0;
  double step_norm = 0.0;
  double residual = 0.0;
  std::vector<double> J;
  double max_violation = 0.0;
  double mu_norm = 0.0;
};

struct IterateLog {
  std::vector<IterateRecord> records;
};

struct EquilibriumResult {
  std::vector<Vec> y;   // per-agent extended decisions
  std::vector<Vec> mu;  // per-agent multipliers [g1; g2; coupling]
  Vec x;                // stacked decisions
  SolveStatus status = SolveStatus::kMaxIter;
  int iterations = 0;
  double step_norm = kInf;
  double residual = kInf;
  double max_violation = kInf;
  IterateLog log;
};

struct WarmStart {
  std::vector<Vec> y;
  std::vector<Vec> mu;  // zeros when empty
};

/// Block description of a primal-dual VI: block j has variable y_j and
/// multipliers mu_j for its constraints g_j(y) <= 0.
struct PrimalDualProblem {
  int blocks = 0;
  /// Gradient of the block Lagrangian in y_j, g_j, and optionally J_j,
  /// all at the current joint iterate.
  std::function<void(int, const std::vector<Vec>&, const Vec&, Vec&, Vec&, double*)> evaluate;
  std::function<Vec(int, const Vec&)> project;
  std::function<double(int)> tau;
};

struct PrimalDualState {
  std::vector<Vec> y;
  std::vector<Vec> mu;
};

/// Runs the inertial loop
///   ybar = (1 - delta) y + delta ybar_prev,  mubar likewise,
///   y+   = P_Y [ybar - tau (grad J + grad g' mu)],  mu+ = [mubar + tau g]_+.
EquilibriumResult run_primal_dual(const PrimalDualProblem& problem, PrimalDualState start,
                                  const SolverConfig& cfg);

/// Algorithm of record for heterogeneous games.
EquilibriumResult solve_drne(const ReformulatedGame& game, const SolverConfig& cfg,
                             const std::optional<WarmStart>& y0 = std::nullopt);

/// Variational path for common-ambiguity games.
EquilibriumResult solve_common_vi(const CommonVIProblem& vi, const SolverConfig& cfg);

/// || x - P_X(x - F) ||.
double natural_residual(const Vec& x, const Vec& F, const Polyhedron& X);
double natural_residual(const Vec& x, const Vec& F, const std::function<Vec(const Vec&)>& project);

/// Primal-dual residual of the reformulated game at (y, mu).
double kkt_residual(const ReformulatedGame& game, const std::vector<Vec>& y, const std::vector<Vec>& mu);

/// Stacked decision from per-agent extended decisions.
Vec stack_decisions(const ReformulatedGame& game, const std::vector<Vec>& y);

struct BestResponse {
  ExtendedDecision y;
  double J = 0.0;  // worst-case cost at the response
  bool converged = false;
  std::string method;  // "conic" or "interval"
};

/// Agent i's optimal decision against fixed others, with the matching
/// (lambda, s, gamma).
BestResponse best_response(const ReformulatedGame& game, int i, const Vec& x);

/// Cyclic best responses from the box centers (or x0) until the sweep
/// change falls below tol. Multipliers are returned as zeros.
EquilibriumResult gauss_seidel(const ReformulatedGame& game, int sweeps, double tol = 1e-9,
                               const std::optional<Vec>& x0 = std::nullopt);

}  // namespace drne
