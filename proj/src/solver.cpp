#include "drne/solver.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <random>

namespace drne {

void SolverConfig::validate() const {
  if (!(tau_default > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solver: tau must be positive");
  for (double t : tau)
    if (!(t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solver: tau must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "solver: delta must lie in [0, 1)");
  if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "solver: max_iter must be positive");
  if (!(tol_step > 0.0) || !(tol_residual > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "solver: tolerances must be positive");
  }
  if (log_stride < 1) throw Error(ErrorCode::kInvalidArgument, "solver: log_stride must be positive");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kDiverged: return "diverged";
    case SolveStatus::kCycling: return "cycling";
  }
  return "unknown";
}

namespace {

bool finite_and_bounded(const std::vector<Vec>& v) {
  for (const auto& b : v) {
    if (!b.allFinite() || b.cwiseAbs().maxCoeff() > 1e12) return false;
  }
  return true;
}

}  // namespace

EquilibriumResult run_primal_dual(const PrimalDualProblem& pb, PrimalDualState st, const SolverConfig& cfg) {
  cfg.validate();
  const int B = pb.blocks;
  const double delta = cfg.delta;
  std::vector<Vec> ybar_prev = st.y;
  std::vector<Vec> mubar_prev = st.mu;
  std::vector<Vec> grad(B), g(B), ynext(B), munext(B);
  std::vector<double> J(B, 0.0);
  EquilibriumResult res;

  for (int it = 0; it < cfg.max_iter; ++it) {
    double res2 = 0.0;
    double viol = 0.0;
    for (int j = 0; j < B; ++j) pb.evaluate(j, st.y, st.mu[j], grad[j], g[j], &J[j]);
    double step2 = 0.0;
    double mu2 = 0.0;
    for (int j = 0; j < B; ++j) {
      res2 += (st.y[j] - pb.project(j, st.y[j] - grad[j])).squaredNorm();
      res2 += (st.mu[j] - (st.mu[j] + g[j]).cwiseMax(0.0)).squaredNorm();
      if (g[j].size() > 0) viol = std::max(viol, g[j].maxCoeff());
      mu2 += st.mu[j].squaredNorm();
      const double tau = pb.tau(j);
      const Vec ybar = (1.0 - delta) * st.y[j] + delta * ybar_prev[j];
      const Vec mubar = (1.0 - delta) * st.mu[j] + delta * mubar_prev[j];
      ynext[j] = pb.project(j, ybar - tau * grad[j]);
      munext[j] = (mubar + tau * g[j]).cwiseMax(0.0);
      step2 += (ynext[j] - st.y[j]).squaredNorm();
      ybar_prev[j] = ybar;
      mubar_prev[j] = mubar;
    }
    const double residual = std::sqrt(res2);
    const double step = std::sqrt(step2);
    res.step_norm = step;
    res.residual = residual;
    res.max_violation = std::max(0.0, viol);
    res.iterations = it + 1;

    const bool converged = step <= cfg.tol_step && residual <= cfg.tol_residual;
    const bool diverged = !finite_and_bounded(ynext) || !finite_and_bounded(munext) || !std::isfinite(residual);
    const bool last = converged || diverged || it + 1 == cfg.max_iter;
    if (it % cfg.log_stride == 0 || last) {
      IterateRecord rec;
      rec.iter = it;
      rec.step_norm = step;
      rec.residual = residual;
      rec.J = J;
      rec.max_violation = res.max_violation;
      rec.mu_norm = std::sqrt(mu2);
      res.log.records.push_back(std::move(rec));
    }
    if (converged || diverged) {
      res.status = converged ? SolveStatus::kConverged : SolveStatus::kDiverged;
      res.y = st.y;
      res.mu = st.mu;
      return res;
    }
    st.y.swap(ynext);
    st.mu.swap(munext);
  }
  res.status = SolveStatus::kMaxIter;
  res.y = st.y;
  res.mu = st.mu;
  return res;
}

Vec stack_decisions(const ReformulatedGame& game, const std::vector<Vec>& y) {
  const GameSpec& spec = game.spec();
  Vec x(spec.total_dim());
  for (int i = 0; i < spec.N(); ++i) x.segment(spec.offset(i), spec.agents[i].n()) = y[i].head(spec.agents[i].n());
  return x;
}

namespace {

PrimalDualProblem agent_problem(const ReformulatedGame& game, const SolverConfig& cfg) {
  PrimalDualProblem pb;
  pb.blocks = game.N();
  pb.evaluate = [&game](int i, const std::vector<Vec>& y, const Vec& mu, Vec& grad, Vec& g, double* J) {
    game.lagrangian(i, y[i], stack_decisions(game, y), mu, grad, g, J);
  };
  pb.project = [&game](int i, const Vec& v) { return game.project(i, v); };
  pb.tau = [cfg](int i) { return cfg.tau_for(i); };
  return pb;
}

}  // namespace

EquilibriumResult solve_drne(const ReformulatedGame& game, const SolverConfig& cfg,
                             const std::optional<WarmStart>& y0) {
  cfg.validate();
  const GameSpec& spec = game.spec();
  PrimalDualState st;
  if (y0) {
    if (static_cast<int>(y0->y.size()) != game.N()) {
      throw Error(ErrorCode::kDimensionMismatch, "solve_drne: warm start has the wrong agent count");
    }
    st.y = y0->y;
    for (int i = 0; i < game.N(); ++i) {
      if (st.y[i].size() != game.layout(i).dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "solve_drne: warm start block has the wrong size");
      }
    }
    st.mu = y0->mu;
    if (st.mu.empty()) {
      for (int i = 0; i < game.N(); ++i) st.mu.push_back(Vec::Zero(game.num_constraints(i)));
    }
  } else {
    Vec x = spec.center();
    if (cfg.randomize_start) {
      std::mt19937_64 rng(cfg.seed);
      for (int i = 0; i < spec.N(); ++i) {
        const auto& X = spec.agents[i].X;
        for (int c = 0; c < X.dim(); ++c) {
          std::uniform_real_distribution<double> u(X.lower()[c], X.upper()[c]);
          x[spec.offset(i) + c] = u(rng);
        }
        x.segment(spec.offset(i), X.dim()) = X.project(x.segment(spec.offset(i), X.dim()));
      }
    }
    for (int i = 0; i < game.N(); ++i) {
      Vec y = game.initial_point(i, x);
      if (cfg.feasible_start) {
        const AgentEval ev = game.eval_agent(i, y, x);
        if (ev.g2.size() > 0) y[game.layout(i).lambda_index()] += std::max(0.0, ev.g2.maxCoeff());
      }
      st.y.push_back(std::move(y));
      st.mu.push_back(Vec::Zero(game.num_constraints(i)));
    }
  }
  EquilibriumResult res = run_primal_dual(agent_problem(game, cfg), std::move(st), cfg);
  res.x = stack_decisions(game, res.y);
  return res;
}

EquilibriumResult solve_common_vi(const CommonVIProblem& vi, const SolverConfig& cfg) {
  PrimalDualProblem pb;
  pb.blocks = 1;
  pb.evaluate = [&vi](int, const std::vector<Vec>& y, const Vec& mu, Vec& grad, Vec& g, double* J) {
    vi.lagrangian(y[0], mu, grad, g);
    if (J) *J = 0.0;
  };
  pb.project = [&vi](int, const Vec& v) { return vi.project(v); };
  pb.tau = [cfg](int) { return cfg.tau_for(0); };
  PrimalDualState st;
  st.y.push_back(vi.initial_point());
  st.mu.push_back(Vec::Zero(vi.num_constraints()));
  EquilibriumResult inner = run_primal_dual(pb, std::move(st), cfg);

  const ReformulatedGame& game = vi.game();
  EquilibriumResult res = inner;
  res.y.clear();
  res.mu.clear();
  for (int i = 0; i < game.N(); ++i) {
    res.y.push_back(vi.agent_view(i, inner.y[0]));
    res.mu.push_back(inner.mu[0]);
  }
  res.x = inner.y[0].head(vi.x_dim());
  // Per-agent costs on the shared variables.
  for (auto& rec : res.log.records) {
    rec.J.assign(game.N(), 0.0);
  }
  if (!res.log.records.empty()) {
    auto& last = res.log.records.back();
    for (int i = 0; i < game.N(); ++i) last.J[i] = game.eval_agent(i, res.y[i], res.x).J;
  }
  return res;
}

double natural_residual(const Vec& x, const Vec& F, const std::function<Vec(const Vec&)>& project) {
  if (x.size() != F.size()) throw Error(ErrorCode::kDimensionMismatch, "natural_residual: size mismatch");
  return (x - project(x - F)).norm();
}

double natural_residual(const Vec& x, const Vec& F, const Polyhedron& X) {
  return natural_residual(x, F, [&X](const Vec& v) { return X.project(v); });
}

double kkt_residual(const ReformulatedGame& game, const std::vector<Vec>& y, const std::vector<Vec>& mu) {
  const Vec x = stack_decisions(game, y);
  double r2 = 0.0;
  Vec grad, g;
  for (int i = 0; i < game.N(); ++i) {
    game.lagrangian(i, y[i], x, mu[i], grad, g);
    r2 += (y[i] - game.project(i, y[i] - grad)).squaredNorm();
    r2 += (mu[i] - (mu[i] + g).cwiseMax(0.0)).squaredNorm();
  }
  return std::sqrt(r2);
}

namespace {

// Feasible interval of a scalar decision given the others.
std::pair<double, double> scalar_interval(const ReformulatedGame& game, int i, const Vec& x) {
  const GameSpec& spec = game.spec();
  const auto& X = spec.agents[i].X;
  const int off = spec.offset(i);
  double lo = X.lower()[0];
  double hi = X.upper()[0];
  auto cut = [&](double a, double rhs) {
    if (a > 0.0) hi = std::min(hi, rhs / a);
    else if (a < 0.0) lo = std::max(lo, rhs / a);
  };
  for (Eigen::Index r = 0; r < X.A().rows(); ++r) cut(X.A()(r, 0), X.b()[r]);
  for (int r = 0; r < spec.coupling_rows(); ++r) {
    const double a = spec.A_c(r, off);
    const double rest = spec.A_c.row(r).dot(x) - a * x[off];
    cut(a, spec.b_c[r] - rest);
  }
  if (lo > hi + 1e-12) {
    throw Error(ErrorCode::kInfeasible, "best_response: agent " + std::to_string(i) + " has an empty feasible interval");
  }
  return {lo, std::max(lo, hi)};
}

}  // namespace

BestResponse best_response(const ReformulatedGame& game, int i, const Vec& x) {
  const GameSpec& spec = game.spec();
  const AgentSpec& ag = spec.agents[i];
  BestResponse br;
  if (ag.cost.own_affine) {
    const WorstCase wc = game.joint_best_response(i, x);
    br.y = wc.y;
    br.J = wc.value;
    br.converged = wc.converged;
    br.method = "conic";
    return br;
  }
  if (ag.n() != 1) {
    throw Error(ErrorCode::kUnsupported, "best_response: agent " + std::to_string(i) +
                                             " has non-affine pieces and more than one decision");
  }
  const int off = spec.offset(i);
  const auto [lo, hi] = scalar_interval(game, i, x);
  bool ok = true;
  auto value = [&](double xi) {
    Vec xx = x;
    xx[off] = xi;
    const WorstCase wc = game.worst_case(i, xx, 1e-11);
    ok = ok && wc.converged;
    return wc.value;
  };
  double best_x = lo;
  double best_v = value(lo);
  if (hi > lo) {
    const auto r = boost::math::tools::brent_find_minima(value, lo, hi, std::numeric_limits<double>::digits / 2 + 8);
    if (r.second < best_v) {
      best_x = r.first;
      best_v = r.second;
    }
    const double vh = value(hi);
    if (vh < best_v) {
      best_x = hi;
      best_v = vh;
    }
  }
  Vec xx = x;
  xx[off] = best_x;
  const WorstCase wc = game.worst_case(i, xx);
  br.y = wc.y;
  br.J = wc.value;
  br.converged = ok && wc.converged;
  br.method = "interval";
  return br;
}

EquilibriumResult gauss_seidel(const ReformulatedGame& game, int sweeps, double tol, const std::optional<Vec>& x0) {
  const GameSpec& spec = game.spec();
  Vec x = x0 ? *x0 : spec.center();
  EquilibriumResult res;
  res.status = SolveStatus::kMaxIter;
  std::vector<double> changes;
  std::vector<double> J(game.N(), 0.0);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const Vec before = x;
    for (int i = 0; i < game.N(); ++i) {
      const BestResponse br = best_response(game, i, x);
      x.segment(spec.offset(i), spec.agents[i].n()) = br.y.x;
      J[i] = br.J;
    }
    const double change = (x - before).lpNorm<Eigen::Infinity>();
    changes.push_back(change);
    IterateRecord rec;
    rec.iter = sweep;
    rec.step_norm = change;
    rec.residual = change;
    rec.J = J;
    res.log.records.push_back(rec);
    res.iterations = sweep + 1;
    res.step_norm = change;
    if (change < tol) {
      res.status = SolveStatus::kConverged;
      break;
    }
    if (changes.size() >= 11) {
      bool nondecreasing = true;
      for (std::size_t k = changes.size() - 10; k < changes.size(); ++k) {
        if (changes[k] < changes[k - 1]) nondecreasing = false;
      }
      if (nondecreasing) {
        res.status = SolveStatus::kCycling;
        break;
      }
    }
  }
  res.x = x;
  res.max_violation = 0.0;
  for (int i = 0; i < game.N(); ++i) {
    const WorstCase wc = game.worst_case(i, x);
    res.y.push_back(wc.y.pack());
    res.mu.push_back(Vec::Zero(game.num_constraints(i)));
    res.max_violation = std::max(res.max_violation, game.max_violation(i, res.y.back(), x));
  }
  res.residual = res.step_norm;
  return res;
}

}  // namespace drne
