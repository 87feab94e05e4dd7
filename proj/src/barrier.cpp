#include "drne/barrier.hpp"

#include <cmath>

#include "drne/lp.hpp"

namespace drne::conic {

double ConvexProgram::objective(const Vec& z) const {
  double v = c.dot(z);
  if (smooth) v += smooth->value(z);
  return v;
}

double ConvexProgram::min_slack(const Vec& z) const {
  double s = kInf;
  if (G.rows() > 0) s = std::min(s, (h - G * z).minCoeff());
  for (const auto& k : cones) {
    const double u0 = k.c.dot(z) + k.d;
    const double un = (k.A * z + k.b).norm();
    s = std::min(s, u0 - un);
  }
  return s;
}

namespace {

// Barrier value; +inf outside the strict interior.
double barrier_value(const ConvexProgram& p, const Vec& z, double t) {
  double v = t * p.objective(z);
  if (p.G.rows() > 0) {
    const Vec slack = p.h - p.G * z;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      if (!(slack[i] > 0.0)) return kInf;
      v -= std::log(slack[i]);
    }
  }
  for (const auto& k : p.cones) {
    const double u0 = k.c.dot(z) + k.d;
    const Vec u = k.A * z + k.b;
    const double w = u0 * u0 - u.squaredNorm();
    if (!(u0 > 0.0) || !(w > 0.0)) return kInf;
    v -= std::log(w);
  }
  return std::isfinite(v) ? v : kInf;
}

void barrier_derivatives(const ConvexProgram& p, const Vec& z, double t, Vec& grad, Mat& hess) {
  const int n = p.dim();
  grad = t * p.c;
  hess = Mat::Zero(n, n);
  if (p.smooth) {
    grad += t * p.smooth->gradient(z);
    hess += t * p.smooth->hessian(z);
  }
  if (p.G.rows() > 0) {
    const Vec inv = (p.h - p.G * z).cwiseInverse();
    grad += p.G.transpose() * inv;
    hess += p.G.transpose() * inv.cwiseAbs2().asDiagonal() * p.G;
  }
  for (const auto& k : p.cones) {
    const double u0 = k.c.dot(z) + k.d;
    const Vec u = k.A * z + k.b;
    const double w = u0 * u0 - u.squaredNorm();
    const Vec dw = 2.0 * (u0 * k.c - k.A.transpose() * u);
    grad -= dw / w;
    hess += dw * dw.transpose() / (w * w);
    hess -= (2.0 / w) * (k.c * k.c.transpose() - k.A.transpose() * k.A);
  }
}

}  // namespace

BarrierResult solve(const ConvexProgram& p, const Vec& z0, const BarrierOptions& opt) {
  const int n = p.dim();
  if (z0.size() != n) throw Error(ErrorCode::kDimensionMismatch, "barrier: start has wrong size");
  if (!(p.min_slack(z0) > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "barrier: start is not strictly feasible");
  }
  const int m_eq = static_cast<int>(p.E.rows());
  const double degree = static_cast<double>(p.G.rows()) + 2.0 * static_cast<double>(p.cones.size());

  Mat null_E;
  if (m_eq > 0) {
    const double scale = 1.0 + p.E.cwiseAbs().maxCoeff() + p.e.cwiseAbs().maxCoeff() + z0.cwiseAbs().maxCoeff();
    if ((p.E * z0 - p.e).cwiseAbs().maxCoeff() > 1e-9 * scale) {
      throw Error(ErrorCode::kInvalidArgument, "barrier: start violates the equality constraints");
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(p.E.transpose());
    const int rank = static_cast<int>(cod.rank());
    null_E = (cod.householderQ() * Mat::Identity(n, n)).rightCols(n - rank);
  }

  BarrierResult res;
  res.z = z0;
  if (degree == 0.0 && !p.smooth) {
    res.objective = p.objective(z0);
    res.gap = 0.0;
    res.converged = true;
    return res;
  }
  double t = opt.t0;
  Vec grad;
  Mat hess;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    for (int step = 0; step < opt.max_centering_steps; ++step) {
      barrier_derivatives(p, res.z, t, grad, hess);
      Vec dz;
      if (m_eq == 0) {
        Eigen::LDLT<Mat> ldlt(hess);
        dz = ldlt.solve(-grad);
        if (ldlt.info() != Eigen::Success || !dz.allFinite()) {
          dz = hess.completeOrthogonalDecomposition().solve(-grad);
        }
      } else {
        // Newton step restricted to the null space of E.
        const Mat Hn = null_E.transpose() * hess * null_E;
        Eigen::LDLT<Mat> ldlt(Hn);
        Vec w = ldlt.solve(-(null_E.transpose() * grad));
        if (ldlt.info() != Eigen::Success || !w.allFinite()) {
          w = Hn.completeOrthogonalDecomposition().solve(-(null_E.transpose() * grad));
        }
        dz = null_E * w;
      }
      const double decrement = -grad.dot(dz);
      ++res.newton_steps;
      if (!(decrement > 0.0) || decrement / 2.0 <= 1e-12) break;
      // Backtracking on the barrier function.
      const double f0 = barrier_value(p, res.z, t);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec trial = res.z + alpha * dz;
        const double f1 = barrier_value(p, trial, t);
        if (f1 <= f0 - 0.25 * alpha * decrement) {
          res.z = trial;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    res.objective = p.objective(res.z);
    res.gap = degree / t;
    if (res.gap <= opt.tol * std::max(1.0, std::abs(res.objective))) {
      res.converged = true;
      return res;
    }
    t *= opt.growth;
  }
  return res;
}

std::optional<Vec> interior_point(const Mat& G, const Vec& h, const Mat& E, const Vec& e,
                                  const Vec& lower, const Vec& upper, double* margin) {
  const int n = static_cast<int>(lower.size());
  std::vector<std::pair<Vec, double>> rows;
  for (Eigen::Index i = 0; i < G.rows(); ++i) rows.emplace_back(G.row(i).transpose(), h[i]);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(upper[j])) {
      Vec r = Vec::Zero(n);
      r[j] = 1.0;
      rows.emplace_back(r, upper[j]);
    }
    if (std::isfinite(lower[j])) {
      Vec r = Vec::Zero(n);
      r[j] = -1.0;
      rows.emplace_back(r, -lower[j]);
    }
  }
  lp::Problem pb;
  pb.c = Vec::Zero(n + 1);
  pb.c[n] = -1.0;
  pb.A_ub = Mat::Zero(static_cast<Eigen::Index>(rows.size()), n + 1);
  pb.b_ub = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double scale = std::max(1e-300, rows[i].first.norm());
    pb.A_ub.row(static_cast<Eigen::Index>(i)).head(n) = rows[i].first.transpose() / scale;
    pb.A_ub(static_cast<Eigen::Index>(i), n) = 1.0;
    pb.b_ub[static_cast<Eigen::Index>(i)] = rows[i].second / scale;
  }
  if (E.rows() > 0) {
    pb.A_eq = Mat::Zero(E.rows(), n + 1);
    pb.A_eq.leftCols(n) = E;
    pb.b_eq = e;
  }
  pb.lower = Vec::Constant(n + 1, -kInf);
  pb.upper = Vec::Constant(n + 1, kInf);
  pb.lower[n] = -kInf;
  pb.upper[n] = 1.0;
  const lp::Solution sol = lp::solve(pb);
  if (sol.status != lp::Status::kOptimal || sol.x[n] < -1e-9) return std::nullopt;
  if (margin) *margin = std::max(0.0, sol.x[n]);
  return Vec(sol.x.head(n));
}

}  // namespace drne::conic
