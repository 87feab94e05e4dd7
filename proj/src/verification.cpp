#include "drne/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "drne/lp.hpp"

namespace drne {

// --- Grids -----------------------------------------------------------------

GridSpec GridSpec::uniform(int p, int points) {
  if (p < 1 || points < 2) throw Error(ErrorCode::kInvalidArgument, "GridSpec: need p >= 1 and >= 2 points");
  return GridSpec{std::vector<int>(p, points)};
}

GridSpec GridSpec::defaults_for(int p) {
  if (p == 1) return uniform(1, defaults::kGrid1D);
  if (p == 2) return uniform(2, defaults::kGrid2D);
  if (p == 3) return uniform(3, 21);
  throw Error(ErrorCode::kUnsupported, "GridSpec: enumeration limited to p <= 3");
}

Vec GridSpec::spacing(const UncertaintyPolytope& poly) const {
  if (static_cast<int>(resolution.size()) != poly.p()) {
    throw Error(ErrorCode::kDimensionMismatch, "GridSpec: resolution does not match the polytope dimension");
  }
  Vec h(poly.p());
  for (int j = 0; j < poly.p(); ++j) {
    if (resolution[j] < 2) throw Error(ErrorCode::kInvalidArgument, "GridSpec: need >= 2 points per dimension");
    h[j] = (poly.upper()[j] - poly.lower()[j]) / (resolution[j] - 1);
  }
  return h;
}

double GridSpec::h(const UncertaintyPolytope& poly) const { return spacing(poly).maxCoeff(); }

double GridSpec::covering_radius(const UncertaintyPolytope& poly, Norm norm) const {
  return drne::norm(0.5 * spacing(poly), norm);
}

std::vector<Vec> GridSpec::enumerate(const UncertaintyPolytope& poly) const {
  const Vec h = spacing(poly);
  const int p = poly.p();
  std::vector<int> idx(p, 0);
  std::vector<Vec> out;
  while (true) {
    Vec xi(p);
    for (int j = 0; j < p; ++j) {
      xi[j] = idx[j] == resolution[j] - 1 ? poly.upper()[j] : poly.lower()[j] + h[j] * idx[j];
    }
    if (((poly.C() * xi - poly.d()).array() <= 1e-12).all()) out.push_back(xi);
    int j = 0;
    while (j < p && ++idx[j] == resolution[j]) idx[j++] = 0;
    if (j == p) break;
  }
  if (out.empty()) throw Error(ErrorCode::kInfeasible, "GridSpec: no grid node inside the polytope");
  return out;
}

// --- Worst-case oracles ----------------------------------------------------

std::vector<PieceAt> pieces_at(const AgentSpec& agent, const Vec& x) {
  std::vector<PieceAt> out;
  for (const auto& piece : *agent.cost.pieces) out.push_back(PieceAt{piece.a(x), piece.b(x)});
  return out;
}

namespace {

Polyhedron support_set(const UncertaintyPolytope& poly) {
  return Polyhedron(poly.lower(), poly.upper(), poly.C(), poly.d());
}

double max_dual_slope(const std::vector<PieceAt>& pieces, Norm norm) {
  double s = 0.0;
  for (const auto& pc : pieces) s = std::max(s, drne::norm(pc.a, dual(norm)));
  return s;
}

double inner_sup_on_nodes(const PieceAt& pc, double lambda, const Vec& anchor, const std::vector<Vec>& nodes,
                          const Polyhedron& set, double step0, Norm norm) {
  auto phi = [&](const Vec& xi) { return pc.a.dot(xi) + pc.b - lambda * drne::norm(xi - anchor, norm); };
  double best = phi(anchor);
  Vec arg = anchor;
  for (const Vec& xi : nodes) {
    const double v = phi(xi);
    if (v > best) {
      best = v;
      arg = xi;
    }
  }
  // Projected supergradient ascent with diminishing steps.
  Vec xi = arg;
  for (int t = 0; t < 200; ++t) {
    Vec g = pc.a - lambda * norm_subgradient(xi - anchor, norm);
    const double gn = g.norm();
    if (gn == 0.0) break;
    xi = set.project(xi + (step0 / std::sqrt(1.0 + t)) * g / gn);
    const double v = phi(xi);
    if (v > best) best = v;
  }
  return best;
}

}  // namespace

double inner_sup_oracle(const PieceAt& piece, double lambda, const Vec& anchor, const UncertaintyPolytope& poly,
                        const GridSpec& grid, Norm norm) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "inner_sup_oracle: lambda must be nonnegative");
  if (poly.p() > 3) throw Error(ErrorCode::kUnsupported, "inner_sup_oracle: p <= 3 required");
  const std::vector<Vec> nodes = grid.enumerate(poly);
  return inner_sup_on_nodes(piece, lambda, anchor, nodes, support_set(poly), grid.h(poly), norm);
}

double discretized_dro_worstcase(const AgentSpec& agent, const Vec& x, double eps, const GridSpec& grid, Norm norm) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "discretized_dro_worstcase: eps must be nonnegative");
  const UncertaintyPolytope& poly = *agent.support;
  std::vector<Vec> atoms = grid.enumerate(poly);
  for (const Vec& s : agent.samples) atoms.push_back(s);
  const int G = static_cast<int>(atoms.size());
  const int K = agent.K();
  Vec hval(G);
  for (int g = 0; g < G; ++g) hval[g] = uncertain_part(agent, x, atoms[g]);

  lp::Problem prob;
  prob.c.resize(K * G);
  prob.A_eq = Mat::Zero(K, K * G);
  prob.b_eq = Vec::Constant(K, 1.0 / K);
  prob.A_ub = Mat::Zero(1, K * G);
  prob.b_ub = Vec::Constant(1, eps);
  for (int k = 0; k < K; ++k) {
    for (int g = 0; g < G; ++g) {
      const int v = k * G + g;
      prob.c[v] = -hval[g];
      prob.A_eq(k, v) = 1.0;
      prob.A_ub(0, v) = drne::norm(atoms[g] - agent.samples[k], norm);
    }
  }
  const lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) {
    throw Error(ErrorCode::kNotConverged,
                std::string("discretized_dro_worstcase: transport LP ") + lp::to_string(sol.status));
  }
  return agent.cost.f(x) - sol.objective;
}

double discretization_gap(const AgentSpec& agent, const Vec& x, const GridSpec& grid, Norm norm) {
  return 2.0 * max_dual_slope(pieces_at(agent, x), norm) * grid.covering_radius(*agent.support, norm);
}

GoldenDualResult golden_dual_worstcase(const AgentSpec& agent, const Vec& x, double eps, const GridSpec& grid,
                                       Norm norm, double lambda_tol) {
  const UncertaintyPolytope& poly = *agent.support;
  const std::vector<PieceAt> pieces = pieces_at(agent, x);
  const std::vector<Vec> nodes = grid.enumerate(poly);
  const Polyhedron set = support_set(poly);
  const double step0 = grid.h(poly);
  const int K = agent.K();
  auto phi = [&](double lambda) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      double best = -kInf;
      for (const auto& pc : pieces)
        best = std::max(best, inner_sup_on_nodes(pc, lambda, agent.samples[k], nodes, set, step0, norm));
      acc += best;
    }
    return lambda * eps + acc / K;
  };
  GoldenDualResult out;
  const double slope = max_dual_slope(pieces, norm);
  out.lambda_max = slope + 1.0;
  const double invphi = 1.0 / kGoldenRatio;
  double lo = 0.0, hi = out.lambda_max;
  double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
  double fc = phi(c), fd = phi(d);
  while (hi - lo > lambda_tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = phi(d);
    }
  }
  // The endpoints are checked too: the minimizer may sit on the bracket.
  double best = std::min(fc, fd);
  out.lambda = fc <= fd ? c : d;
  for (double lam : {0.0, out.lambda_max}) {
    const double v = phi(lam);
    if (v < best) {
      best = v;
      out.lambda = lam;
    }
  }
  out.value = agent.cost.f(x) + best;
  out.tolerance = (slope + out.lambda_max) * grid.covering_radius(poly, norm) +
                  (eps + poly.diameter_bound(norm)) * lambda_tol;
  return out;
}

// --- Equilibrium certificates ----------------------------------------------

std::vector<double> nash_gap(const ReformulatedGame& game, const Vec& x_star) {
  const GameSpec& spec = game.spec();
  if (x_star.size() != spec.total_dim()) throw Error(ErrorCode::kDimensionMismatch, "nash_gap: wrong decision size");
  std::vector<double> gaps(game.N());
  for (int i = 0; i < game.N(); ++i) {
    const double here = worst_case_value(game, i, x_star);
    const BestResponse br = best_response(game, i, x_star);
    if (!br.converged) {
      throw Error(ErrorCode::kNotConverged, "nash_gap: best response of agent " + std::to_string(i) + " failed");
    }
    gaps[i] = here - br.J;
  }
  return gaps;
}

// --- Coverage ----------------------------------------------------------------

double CoverageReport::frequency() const {
  const int used = trials - flagged;
  return used > 0 ? static_cast<double>(joint_success) / used : 0.0;
}

double CoverageReport::sigma() const {
  const int used = trials - flagged;
  return used > 0 ? std::sqrt(target * (1.0 - target) / used) : 0.0;
}

namespace {

std::vector<std::vector<Vec>> draw_all(const std::vector<DiscreteDistribution>& truths, const std::vector<int>& K,
                                       std::uint64_t seed) {
  std::vector<std::vector<Vec>> samples;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    samples.push_back(draw_samples(truths[i], K[i], derive_seed(seed, i)));
  }
  return samples;
}

void check_truths(const GameSpec& spec, const std::vector<DiscreteDistribution>& truths) {
  if (static_cast<int>(truths.size()) != spec.N()) {
    throw Error(ErrorCode::kDimensionMismatch, "verification: one true distribution per agent required");
  }
  for (int i = 0; i < spec.N(); ++i) {
    truths[i].validate();
    for (const Vec& atom : truths[i].points) {
      if (!spec.agents[i].support->contains(atom)) {
        throw Error(ErrorCode::kSupportViolation,
                    "verification: true atom outside the support of agent " + std::to_string(i));
      }
    }
  }
}

}  // namespace

CoverageReport coverage_experiment(const SampleBuilder& builder, const std::vector<DiscreteDistribution>& truths,
                                   const CoverageConfig& cfg, const EquilibriumSolver& solver) {
  const int N = static_cast<int>(truths.size());
  if (static_cast<int>(cfg.K.size()) != N) throw Error(ErrorCode::kDimensionMismatch, "coverage: K per agent required");
  if (cfg.rule == RadiusRule::kFixed && static_cast<int>(cfg.eps.size()) != N) {
    throw Error(ErrorCode::kDimensionMismatch, "coverage: eps per agent required");
  }
  if (cfg.rule == RadiusRule::kCalibrated && static_cast<int>(cfg.beta.size()) != N) {
    throw Error(ErrorCode::kDimensionMismatch, "coverage: beta per agent required");
  }
  CoverageReport rep;
  rep.trials = cfg.trials;
  rep.per_agent.assign(N, 0);
  rep.seeds.resize(cfg.trials);
  rep.success.assign(cfg.trials, -1);
  rep.true_cost.assign(cfg.trials, std::vector<double>(N, 0.0));
  rep.worst_cost.assign(cfg.trials, std::vector<double>(N, 0.0));
  rep.target = 1.0;
  if (cfg.rule == RadiusRule::kCalibrated)
    for (double b : cfg.beta) rep.target -= b;
  std::vector<std::vector<char>> agent_ok(cfg.trials, std::vector<char>(N, 0));

  parallel_for(cfg.trials, cfg.threads, [&](int t) {
    const std::uint64_t sd = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    rep.seeds[t] = sd;
    const auto samples = draw_all(truths, cfg.K, sd);
    std::vector<double> eps(N, 0.0);
    for (int i = 0; i < N; ++i) {
      switch (cfg.rule) {
        case RadiusRule::kFixed: eps[i] = cfg.eps[i]; break;
        case RadiusRule::kObserved:
          eps[i] = wasserstein_discrete(empirical_distribution(samples[i]), truths[i], cfg.norm);
          break;
        case RadiusRule::kCalibrated: eps[i] = radius_from_confidence(cfg.K[i], cfg.beta[i], cfg.constants); break;
      }
    }
    try {
      GameSpec spec = builder(samples, eps);
      if (spec.norm != cfg.norm) throw Error(ErrorCode::kInvalidArgument, "coverage: builder norm differs");
      check_truths(spec, truths);
      const ReformulatedGame game(std::move(spec));
      const EquilibriumResult res = solver(game);
      if (res.status == SolveStatus::kDiverged) return;
      bool joint = true;
      for (int i = 0; i < N; ++i) {
        const AgentSpec& ag = game.spec().agents[i];
        const double truth = truths[i].expectation([&](const Vec& xi) { return evaluate_cost(ag, res.x, xi); });
        const double worst = worst_case_value(game, i, res.x);
        rep.true_cost[t][i] = truth;
        rep.worst_cost[t][i] = worst;
        agent_ok[t][i] = truth <= worst + 1e-9 * std::max(1.0, std::abs(worst));
        joint = joint && agent_ok[t][i];
      }
      rep.success[t] = joint ? 1 : 0;
    } catch (const Error&) {
      rep.success[t] = -1;
    }
  });
  for (int t = 0; t < cfg.trials; ++t) {
    if (rep.success[t] < 0) {
      ++rep.flagged;
      continue;
    }
    rep.joint_success += rep.success[t];
    for (int i = 0; i < N; ++i) rep.per_agent[i] += agent_ok[t][i];
  }
  return rep;
}

// --- Consistency -------------------------------------------------------------

ConsistencyReport consistency_experiment(const SampleBuilder& builder, const std::vector<DiscreteDistribution>& truths,
                                         const Vec& reference, const ConsistencyConfig& cfg,
                                         const EquilibriumSolver& solver) {
  const int N = static_cast<int>(truths.size());
  const int S = static_cast<int>(cfg.K_schedule.size());
  const int R = cfg.replications;
  if (S == 0 || R < 1) throw Error(ErrorCode::kInvalidArgument, "consistency: empty schedule or no replications");
  ConsistencyReport rep;
  rep.K = cfg.K_schedule;
  rep.reference = reference;
  rep.distances.assign(S, std::vector<double>(R, kInf));
  std::vector<std::vector<std::vector<double>>> dW(S, std::vector<std::vector<double>>(R, std::vector<double>(N, 0.0)));
  std::vector<Vec> lipschitz(N);
  Norm norm = Norm::kL2;
  {
    // Probe build for the Lipschitz constants and the ground norm.
    const auto samples = draw_all(truths, std::vector<int>(N, cfg.K_schedule.front()), cfg.seed);
    const GameSpec spec = builder(samples, std::vector<double>(N, 0.0));
    check_truths(spec, truths);
    if (reference.size() != spec.total_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "consistency: reference has the wrong size");
    }
    for (int i = 0; i < N; ++i) lipschitz[i] = spec.agents[i].cost.lipschitz;
    norm = spec.norm;
  }
  for (int s = 0; s < S; ++s) rep.eps.push_back(cfg.eps_of_K(cfg.K_schedule[s]));

  std::vector<char> ok(S * R, 0);
  parallel_for(S * R, cfg.threads, [&](int job) {
    const int s = job / R, r = job % R;
    const int K = cfg.K_schedule[s];
    const std::uint64_t sd = derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(s) + 1), r);
    const auto samples = draw_all(truths, std::vector<int>(N, K), sd);
    for (int i = 0; i < N; ++i) dW[s][r][i] = wasserstein_discrete(empirical_distribution(samples[i]), truths[i], norm);
    try {
      const ReformulatedGame game(builder(samples, std::vector<double>(N, rep.eps[s])));
      const EquilibriumResult res = solver(game);
      if (res.status == SolveStatus::kDiverged) return;
      rep.distances[s][r] = (res.x - reference).norm();
      ok[job] = 1;
    } catch (const Error&) {
      ok[job] = 0;
    }
  });
  for (int s = 0; s < S; ++s) {
    double acc = 0.0;
    int used = 0;
    std::vector<SensitivityInput> inputs(N);
    for (int i = 0; i < N; ++i) {
      inputs[i].lipschitz = lipschitz[i];
      inputs[i].eps = rep.eps[s];
    }
    for (int r = 0; r < R; ++r) {
      if (!ok[s * R + r]) {
        ++rep.flagged;
        continue;
      }
      acc += rep.distances[s][r];
      ++used;
      for (int i = 0; i < N; ++i) inputs[i].dW += dW[s][r][i];
    }
    for (int i = 0; i < N; ++i) inputs[i].dW /= std::max(1, used);
    rep.mean_distance.push_back(used > 0 ? acc / used : kInf);
    rep.rho.push_back(sensitivity_bound(inputs));
  }
  rep.head_mean = rep.mean_distance.front();
  rep.tail_mean = rep.mean_distance.back();
  rep.trend_holds = S >= 2 && rep.tail_mean < rep.head_mean;
  return rep;
}

// --- Sensitivity -------------------------------------------------------------

Vec expected_pseudogradient(const GameSpec& spec, const std::vector<DiscreteDistribution>& dists, const Vec& x) {
  if (static_cast<int>(dists.size()) != spec.N()) {
    throw Error(ErrorCode::kDimensionMismatch, "expected_pseudogradient: one distribution per agent required");
  }
  Vec F = Vec::Zero(spec.total_dim());
  for (int i = 0; i < spec.N(); ++i) {
    const AgentSpec& ag = spec.agents[i];
    const int off = spec.offset(i);
    Vec g = Vec::Zero(ag.n());
    for (int k = 0; k < dists[i].size(); ++k) g += dists[i].weights[k] * cost_gradient(ag, off, x, dists[i].points[k]);
    F.segment(off, ag.n()) = g;
  }
  return F;
}

SensitivityReport mapping_distance_check(const GameSpec& spec, const std::vector<DiscreteDistribution>& truths,
                                         const SensitivityConfig& cfg) {
  check_truths(spec, truths);
  const int N = spec.N();
  std::vector<DiscreteDistribution> empirical(N);
  std::vector<SensitivityInput> inputs(N);
  std::vector<double> eps(N);
  std::vector<Polyhedron> supports;
  for (int i = 0; i < N; ++i) {
    const AgentSpec& ag = spec.agents[i];
    empirical[i] = empirical_distribution(ag.samples);
    eps[i] = ag.epsilon();
    inputs[i].lipschitz = ag.cost.lipschitz;
    inputs[i].eps = eps[i];
    inputs[i].dW = wasserstein_discrete(empirical[i], truths[i], spec.norm);
    supports.push_back(support_set(*ag.support));
  }
  SensitivityReport rep;
  rep.rho = sensitivity_bound(inputs);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int probe = 0; probe < cfg.probes; ++probe) {
    Vec x(spec.total_dim());
    for (int i = 0; i < N; ++i) {
      const Polyhedron& X = spec.agents[i].X;
      Vec xi(X.dim());
      for (int c = 0; c < X.dim(); ++c) xi[c] = X.lower()[c] + unit(rng) * (X.upper()[c] - X.lower()[c]);
      x.segment(spec.offset(i), X.dim()) = X.project(xi);
    }
    const Vec FP = expected_pseudogradient(spec, truths, x);
    for (int pert = 0; pert < cfg.perturbations; ++pert) {
      std::vector<DiscreteDistribution> Q(N);
      for (int i = 0; i < N; ++i) {
        const int K = empirical[i].size();
        const int p = empirical[i].dim();
        // Split the budget (first perturbation uses all of it) over atoms.
        const double use = pert == 0 ? 1.0 : unit(rng);
        Vec share(K);
        for (int k = 0; k < K; ++k) share[k] = unit(rng) + 1e-12;
        share /= share.sum();
        Q[i].weights = empirical[i].weights;
        for (int k = 0; k < K; ++k) {
          Vec dir(p);
          for (int c = 0; c < p; ++c) dir[c] = gauss(rng);
          const double dn = drne::norm(dir, spec.norm);
          if (dn > 0.0) dir /= dn;
          const double len = use * eps[i] * share[k] / empirical[i].weights[k];
          Q[i].points.push_back(supports[i].project(empirical[i].points[k] + len * dir));
        }
        // Clipping is nonexpansive only in the Euclidean norm; rescale the
        // displacements whenever the identity coupling exceeds the budget.
        double moved = 0.0;
        for (int k = 0; k < K; ++k)
          moved += empirical[i].weights[k] * drne::norm(Q[i].points[k] - empirical[i].points[k], spec.norm);
        if (moved > eps[i]) {
          for (int k = 0; k < K; ++k) {
            Q[i].points[k] = empirical[i].points[k] + (Q[i].points[k] - empirical[i].points[k]) * (eps[i] / moved);
          }
        }
        if (wasserstein_discrete(Q[i], empirical[i], spec.norm) > eps[i] * (1.0 + 1e-9) + 1e-12) {
          throw Error(ErrorCode::kInvalidArgument, "mapping_distance_check: perturbed distribution left its ball");
        }
      }
      const Vec FQ = expected_pseudogradient(spec, Q, x);
      const double d2 = (FQ - FP).squaredNorm();
      rep.max_distance2 = std::max(rep.max_distance2, d2);
      rep.max_slack = std::max(rep.max_slack, d2 - rep.rho);
      ++rep.evaluations;
    }
  }
  return rep;
}

}  // namespace drne
