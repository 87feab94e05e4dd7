#include "drne/polyhedron.hpp"

#include <algorithm>
#include <cmath>

#include "drne/lp.hpp"

namespace drne {

Vec clamp(const Vec& v, const Vec& lower, const Vec& upper) {
  return v.cwiseMax(lower).cwiseMin(upper);
}

Polyhedron::Polyhedron(Vec lower, Vec upper, Mat A, Vec b)
    : lower_(std::move(lower)), upper_(std::move(upper)), A_(std::move(A)), b_(std::move(b)) {
  const int n = dim();
  if (upper_.size() != n) throw Error(ErrorCode::kDimensionMismatch, "Polyhedron: bound sizes differ");
  if (A_.rows() == 0) {
    A_.resize(0, n);
    b_.resize(0);
  }
  if (A_.cols() != n || b_.size() != A_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "Polyhedron: A or b has the wrong shape");
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j])) {
      throw Error(ErrorCode::kInvalidArgument, "Polyhedron: box bounds must be finite");
    }
    if (lower_[j] > upper_[j]) {
      throw Error(ErrorCode::kInfeasible, "Polyhedron: lower bound exceeds upper bound at " + std::to_string(j));
    }
  }
  if (A_.rows() == 0) {
    feasible_ = center();
    return;
  }
  lp::Problem pb;
  pb.c = Vec::Zero(n);
  pb.A_ub = A_;
  pb.b_ub = b_;
  pb.lower = lower_;
  pb.upper = upper_;
  const lp::Solution sol = lp::solve(pb);
  if (sol.status != lp::Status::kOptimal) {
    throw Error(ErrorCode::kInfeasible, "Polyhedron: affine constraints are infeasible on the box");
  }
  feasible_ = clamp(sol.x, lower_, upper_);
}

bool Polyhedron::contains(const Vec& x, double tol) const { return max_violation(x) <= tol; }

double Polyhedron::max_violation(const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::kDimensionMismatch, "Polyhedron: point has wrong size");
  double v = 0.0;
  if (dim() > 0) {
    v = std::max(v, (lower_ - x).maxCoeff());
    v = std::max(v, (x - upper_).maxCoeff());
  }
  if (A_.rows() > 0) v = std::max(v, (A_ * x - b_).maxCoeff());
  return v;
}

std::vector<std::pair<int, int>> Polyhedron::equality_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  std::vector<char> used(A_.rows(), 0);
  for (Eigen::Index r = 0; r < A_.rows(); ++r) {
    if (used[r]) continue;
    for (Eigen::Index s = r + 1; s < A_.rows(); ++s) {
      if (used[s]) continue;
      const double scale = 1.0 + A_.row(r).cwiseAbs().maxCoeff() + std::abs(b_[r]);
      if ((A_.row(r) + A_.row(s)).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
          std::abs(b_[r] + b_[s]) <= 1e-12 * scale) {
        pairs.emplace_back(static_cast<int>(r), static_cast<int>(s));
        used[r] = used[s] = 1;
        break;
      }
    }
  }
  return pairs;
}

Vec Polyhedron::project(const Vec& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::kDimensionMismatch, "Polyhedron: point has wrong size");
  const Vec clamped = clamp(v, lower_, upper_);
  if (A_.rows() == 0) return clamped;
  if (((A_ * clamped - b_).array() <= 0.0).all()) return clamped;

  // Primal active-set method for min 0.5||x - v||^2 over all rows.
  const int n = dim();
  const int m = static_cast<int>(A_.rows()) + 2 * n;
  auto row = [&](int r, Vec& a, double& rhs) {
    a.setZero(n);
    if (r < A_.rows()) {
      a = A_.row(r).transpose();
      rhs = b_[r];
    } else if (r < A_.rows() + n) {
      const int j = r - static_cast<int>(A_.rows());
      a[j] = 1.0;
      rhs = upper_[j];
    } else {
      const int j = r - static_cast<int>(A_.rows()) - n;
      a[j] = -1.0;
      rhs = -lower_[j];
    }
  };
  const double scale = 1.0 + v.cwiseAbs().maxCoeff() + upper_.cwiseAbs().maxCoeff() +
                       lower_.cwiseAbs().maxCoeff();
  const double tol = 1e-13 * scale;

  Vec x = feasible_;
  std::vector<int> work;
  Vec a(n);
  double rhs = 0.0;
  for (int it = 0; it < 50 * (m + n) + 100; ++it) {
    const int w = static_cast<int>(work.size());
    Mat Aw(w, n);
    for (int k = 0; k < w; ++k) {
      row(work[k], a, rhs);
      Aw.row(k) = a.transpose();
    }
    const Vec g = v - x;
    Vec lambda = Vec::Zero(w);
    Vec p = g;
    if (w > 0) {
      const Mat gram = Aw * Aw.transpose();
      lambda = gram.ldlt().solve(Aw * g);
      p = g - Aw.transpose() * lambda;
    }
    if (p.norm() <= tol) {
      int worst = -1;
      double most = -1e-12 * scale;
      for (int k = 0; k < w; ++k) {
        if (lambda[k] < most) {
          most = lambda[k];
          worst = k;
        }
      }
      if (worst < 0) return x;
      work.erase(work.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    int block = -1;
    for (int r = 0; r < m; ++r) {
      if (std::find(work.begin(), work.end(), r) != work.end()) continue;
      row(r, a, rhs);
      const double ap = a.dot(p);
      if (ap > 1e-14 * p.norm()) {
        const double step = std::max(0.0, (rhs - a.dot(x)) / ap);
        if (step < alpha) {
          alpha = step;
          block = r;
        }
      }
    }
    x += alpha * p;
    if (block >= 0) work.push_back(block);
  }
  throw Error(ErrorCode::kNotConverged, "Polyhedron::project: active-set iteration limit");
}

}  // namespace drne
