#pragma once

// Data-driven distributionally robust games. Agent i pays
//
//   h_i(x, xi) = f_i(x) + max_l [ a_l(x)' xi + b_l(x) ],   xi in {C xi <= d},
//
// and hedges against every distribution in a Wasserstein ball around the
// empirical distribution of its own samples.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drne/ambiguity.hpp"
#include "drne/common.hpp"
#include "drne/polyhedron.hpp"

namespace drne {

/// Support set { xi in R^p : C xi <= d }, certified nonempty and bounded.
class UncertaintyPolytope {
 public:
  UncertaintyPolytope(Mat C, Vec d);
  static UncertaintyPolytope box(const Vec& lower, const Vec& upper);

  const Mat& C() const { return C_; }
  const Vec& d() const { return d_; }
  int p() const { return static_cast<int>(C_.cols()); }
  int m() const { return static_cast<int>(C_.rows()); }
  /// Tight coordinate bounds of the polytope.
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Vec& interior_point() const { return interior_; }
  bool contains(const Vec& xi, double tol = 1e-9) const;
  /// Largest distance between two points of the polytope, bounded above by
  /// the diameter of its bounding box in the given norm.
  double diameter_bound(Norm norm) const;

  bool operator==(const UncertaintyPolytope& other) const {
    return C_ == other.C_ && d_ == other.d_;
  }

 private:
  Mat C_;
  Vec d_;
  Vec lower_;
  Vec upper_;
  Vec interior_;
};

/// One affine-in-xi piece a(x)' xi + b(x). All callbacks take the stacked
/// decision of every agent, and derivatives are with respect to the whole
/// stacked decision so that one piece list can be shared in common mode.
struct AffinePiece {
  std::function<Vec(const Vec&)> a;
  std::function<Mat(const Vec&)> a_jacobian;  // p x n_total
  std::function<double(const Vec&)> b;
  std::function<Vec(const Vec&)> b_gradient;  // n_total
};

using PieceList = std::vector<AffinePiece>;

struct CostModel {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> f_gradient;  // n_i
  /// Own-block Hessian of f; finite differences of f_gradient when empty.
  std::function<Mat(const Vec&)> f_hessian;
  std::shared_ptr<const PieceList> pieces;
  /// L_ij: Lipschitz constant in xi of dh_i/dx_ij.
  Vec lipschitz;
  /// True when every a_l, b_l is affine in the owner's block for fixed
  /// others; enables the joint conic best response.
  bool own_affine = false;

  int num_pieces() const { return pieces ? static_cast<int>(pieces->size()) : 0; }
};

struct CalibrationRequest {
  double beta = 0.05;
  CalibrationConstants constants;
};

struct AgentSpec {
  std::string name;
  Polyhedron X;
  CostModel cost;
  std::shared_ptr<const UncertaintyPolytope> support;
  std::vector<Vec> samples;
  std::optional<double> radius;
  std::optional<CalibrationRequest> calibration;

  int n() const { return X.dim(); }
  int K() const { return static_cast<int>(samples.size()); }
  /// The radius, resolved through calibration when not given directly.
  double epsilon() const;
};

enum class AmbiguityMode { kHeterogeneous, kCommon };

const char* to_string(AmbiguityMode mode);
AmbiguityMode parse_ambiguity_mode(const std::string& text);

struct GameSpec {
  std::vector<AgentSpec> agents;
  /// Shared coupling A_c x <= b_c over the stacked decision.
  Mat A_c;
  Vec b_c;
  AmbiguityMode mode = AmbiguityMode::kHeterogeneous;
  Norm norm = Norm::kL2;

  int N() const { return static_cast<int>(agents.size()); }
  int total_dim() const;
  int offset(int i) const;
  int coupling_rows() const { return static_cast<int>(A_c.rows()); }
  Vec block(const Vec& x, int i) const { return x.segment(offset(i), agents[i].n()); }
  /// Stacked box centers.
  Vec center() const;
  /// Copy of x with agent i's block replaced.
  Vec with_block(const Vec& x, int i, const Vec& xi) const;
};

/// f_i(x) + max_l [a_l(x)' xi + b_l(x)].
double evaluate_cost(const AgentSpec& agent, const Vec& x, const Vec& xi);

/// Value a_l(x)' xi + b_l(x) of the active piece and its index.
double uncertain_part(const AgentSpec& agent, const Vec& x, const Vec& xi, int* active = nullptr);

/// Gradient of h_i with respect to the owner's block (starting at `offset`
/// in the stacked decision) at (x, xi), using the active piece.
Vec cost_gradient(const AgentSpec& agent, int offset, const Vec& x, const Vec& xi);

struct Violation {
  std::string kind;  // "dimension", "support", "mode", "coupling", "radius", "bounds", "gradient"
  int agent = -1;
  int index = -1;
  std::string message;
};

/// Checks all model invariants; an empty list means the game is valid.
/// With `check_gradients` set, derivatives are compared with central
/// differences on random probes.
std::vector<Violation> validate_game(const GameSpec& spec, bool check_gradients = false,
                                     std::uint64_t seed = 0);

/// Throws kInvalidArgument with the first violation, if any.
void require_valid(const GameSpec& spec);

}  // namespace drne
