#pragma once

#include <utility>
#include <vector>

#include "drne/common.hpp"

namespace drne {

/// Box intersected with affine inequalities: { x : lower <= x <= upper, A x <= b }.
/// Nonemptiness is certified by an LP at construction; the box must be finite.
class Polyhedron {
 public:
  Polyhedron() = default;
  Polyhedron(Vec lower, Vec upper, Mat A = {}, Vec b = {});

  static Polyhedron box(Vec lower, Vec upper) { return Polyhedron(std::move(lower), std::move(upper)); }

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  bool is_box() const { return A_.rows() == 0; }
  Vec center() const { return 0.5 * (lower_ + upper_); }
  const Vec& feasible_point() const { return feasible_; }

  bool contains(const Vec& x, double tol = 1e-9) const;
  double max_violation(const Vec& x) const;

  /// Euclidean projection. Box sets are clamped; otherwise an exact
  /// primal active-set QP is solved from the stored feasible point.
  Vec project(const Vec& v) const;

  /// Pairs (r, s) of rows of A with A_r = -A_s and b_r = -b_s, i.e.
  /// equalities written as two opposing inequalities.
  std::vector<std::pair<int, int>> equality_pairs() const;

 private:
  Vec lower_;
  Vec upper_;
  Mat A_;
  Vec b_;
  Vec feasible_;
};

/// Clamp v into [lower, upper].
Vec clamp(const Vec& v, const Vec& lower, const Vec& upper);

}  // namespace drne
