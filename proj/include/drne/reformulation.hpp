#pragma once

// Finite-dimensional GNEP equivalent to the distributionally robust game
// with polytopic supports. Agent i controls y_i = (x_i, lambda, s, gamma):
//
//   J_i  = f_i(x) + lambda eps_i + (1/K) sum_k s_k
//   g1_kl = b_l(x) + a_l(x)' xi_k + gamma_kl' (d - C xi_k) - s_k      <= 0
//   g2_kl = || C' gamma_kl - a_l(x) ||_*  - lambda                      <= 0
//
// with lambda >= 0, gamma >= 0. Constraint vectors are ordered k-major,
// l-minor; gamma_kl occupies m consecutive entries in the same order.

#include <optional>
#include <vector>

#include "drne/barrier.hpp"
#include "drne/game_model.hpp"

namespace drne {

struct AgentLayout {
  int n = 0;  // decision dimension
  int K = 0;  // samples
  int L = 0;  // pieces
  int m = 0;  // polytope rows
  int p = 0;  // uncertainty dimension

  int dim() const { return n + 1 + K + K * L * m; }
  int lambda_index() const { return n; }
  int s_index(int k) const { return n + 1 + k; }
  int gamma_index(int k, int l) const { return n + 1 + K + (k * L + l) * m; }
  int pairs() const { return K * L; }
};

struct ExtendedDecision {
  Vec x;
  double lambda = 0.0;
  Vec s;
  Vec gamma;  // K*L*m, k-major, l-minor

  Vec pack() const;
  static ExtendedDecision unpack(const Vec& y, const AgentLayout& layout);
};

struct AgentEval {
  double J = 0.0;
  Vec g1;  // K*L
  Vec g2;  // K*L
};

struct WorstCase {
  double value = 0.0;  // f_i(x) + optimal inner value
  ExtendedDecision y;  // minimizing (lambda, s, gamma) with x_i from x
  double gap = 0.0;    // barrier duality gap of the inner solve
  bool converged = false;
};

class ReformulatedGame {
 public:
  explicit ReformulatedGame(GameSpec spec);

  const GameSpec& spec() const { return spec_; }
  int N() const { return spec_.N(); }
  const AgentLayout& layout(int i) const { return layouts_[i]; }
  double epsilon(int i) const { return eps_[i]; }
  Norm dual_norm() const { return dual(spec_.norm); }
  int coupling_rows() const { return spec_.coupling_rows(); }
  /// Multiplier count of agent i: g1, g2, then one copy of the coupling rows.
  int num_constraints(int i) const { return 2 * layouts_[i].pairs() + coupling_rows(); }

  /// x with agent i's own block taken from y_i.
  Vec merged_x(int i, const Vec& y_i, const Vec& x) const;

  AgentEval eval_agent(int i, const Vec& y_i, const Vec& x) const;

  /// Full constraint vector g_i = [g1; g2; A_c x - b_c] at (y_i, x_-i).
  Vec constraints(int i, const Vec& y_i, const Vec& x) const;

  /// grad_y J_i + (grad_y g_i)' mu_i, and g_i, at (y_i, x_-i).
  void lagrangian(int i, const Vec& y_i, const Vec& x, const Vec& mu_i, Vec& grad, Vec& g,
                  double* J = nullptr) const;

  /// Projection onto Y_i = X_i x R_+ x R^K x R_+^{KLm}.
  Vec project(int i, const Vec& v) const;

  /// Default start: x_i from x, lambda = 1, s_k = per-sample uncertain cost,
  /// gamma = 0.
  Vec initial_point(int i, const Vec& x) const;

  /// Worst-case expected cost sup_{Q in ball} E_Q[h_i(x, xi)] via the dual
  /// convex program solved by the barrier method.
  WorstCase worst_case(int i, const Vec& x, double tol = 1e-9) const;

  /// Joint convex program over (x_i, lambda, s, gamma) with x_-i fixed.
  /// Requires own-affine pieces.
  WorstCase joint_best_response(int i, const Vec& x, double tol = 1e-9) const;

  /// Maximal positive constraint violation of agent i plus coupling and
  /// local-set feasibility of y_i.
  double max_violation(int i, const Vec& y_i, const Vec& x) const;

 private:
  struct PieceEval {
    Vec a;
    Mat Ja;  // p x n_i (own block)
    double b = 0.0;
    Vec gb;  // n_i
  };
  std::vector<PieceEval> eval_pieces(int i, const Vec& x, bool derivatives) const;
  conic::ConvexProgram inner_program(int i, const Vec& x, bool with_x, Vec& z0, int& aux_offset) const;

  GameSpec spec_;
  std::vector<AgentLayout> layouts_;
  std::vector<double> eps_;
  std::vector<int> offsets_;
  std::vector<Mat> slack_;  // d - C xi_k per sample, m x K
};

ReformulatedGame build_gnep(const GameSpec& spec);

double worst_case_value(const ReformulatedGame& game, int i, const Vec& x);

/// Variational form of the common-ambiguity game over the shared variable
/// omega = [x, lambda, s, gamma] with constant-block operator
/// T(omega) = [grad_{x_i} f_i(x) ...; eps; (1/K) 1; 0].
class CommonVIProblem {
 public:
  explicit CommonVIProblem(const ReformulatedGame& game);

  const ReformulatedGame& game() const { return *game_; }
  int dim() const { return n_x_ + layout_.dim() - layout_.n; }
  int x_dim() const { return n_x_; }
  const AgentLayout& shared_layout() const { return layout_; }
  int num_constraints() const { return 2 * layout_.pairs() + game_->coupling_rows(); }

  Vec T(const Vec& omega) const;
  /// Pooled constraints G(omega) <= 0 and their Jacobian-transpose action.
  void lagrangian(const Vec& omega, const Vec& mu, Vec& grad, Vec& g) const;
  Vec project(const Vec& v) const;
  Vec initial_point() const;
  /// The agent-i extended decision embedded in omega.
  Vec agent_view(int i, const Vec& omega) const;

 private:
  const ReformulatedGame* game_;
  AgentLayout layout_;  // layout of the shared (lambda, s, gamma) with n = 0
  int n_x_ = 0;
};

CommonVIProblem build_common_vi(const ReformulatedGame& game);

}  // namespace drne
