#include <doctest.h>

#include "drne/case_studies.hpp"

using namespace drne;

namespace {

SolverConfig cfg(double tau, double tol = 1e-4) {
  SolverConfig c;
  c.tau_default = tau;
  c.tol_step = c.tol_residual = tol;
  c.max_iter = 200000;
  c.log_stride = 100;
  return c;
}

}  // namespace

TEST_CASE("discretized normal") {
  const auto d = discretized_normal(1.0, 0.15, 0.5, 1.5, 50);
  REQUIRE(d.size() == 50);
  CHECK(d.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.points.front()[0] == doctest::Approx(0.5));
  CHECK(d.points.back()[0] == doctest::Approx(1.5));
  CHECK(d.expectation([](const Vec& z) { return z[0]; }) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(discretized_normal(1.0, 0.0, 0.5, 1.5, 50), Error);
}

TEST_CASE("sample draws are reproducible and lie on the atoms") {
  const auto d = discretized_normal(1.0, 0.15, 0.5, 1.5, 50);
  const auto a = draw_samples(d, 20, 42), b = draw_samples(d, 20, 42), c = draw_samples(d, 20, 43);
  CHECK(a == b);
  CHECK(a != c);
  for (const Vec& s : a) {
    bool on_atom = false;
    for (const Vec& p : d.points) on_atom = on_atom || p == s;
    CHECK(on_atom);
  }
}

TEST_CASE("Cournot study draws K samples per firm") {
  const GameSpec spec = cournot_study(CournotParams{}, 7, 5);
  REQUIRE(spec.N() == 3);
  for (const auto& ag : spec.agents) CHECK(ag.K() == 7);
  CHECK(spec.agents[0].epsilon() == doctest::Approx(defaults::kCournotRadius[0]));
  CHECK(validate_game(spec).empty());
}

TEST_CASE("P2P study perturbs renewables and radii within their ranges") {
  P2PParams nominal;
  nominal.complete();
  const GameSpec spec = p2p_study(P2PParams{}, 4, 9);
  REQUIRE(spec.N() == 5);
  for (const auto& ag : spec.agents) {
    CHECK(ag.K() == 4);
    CHECK(ag.epsilon() >= defaults::kP2PRadiusLo);
    CHECK(ag.epsilon() <= defaults::kP2PRadiusHi);
  }
  // Fixed radii are kept.
  P2PParams fixed;
  fixed.radius.assign(5, 0.2);
  for (const auto& ag : p2p_study(fixed, 4, 9).agents) CHECK(ag.epsilon() == 0.2);
}

TEST_CASE("P2P equilibrium keeps power balance and reciprocity") {
  const GameSpec spec = p2p_study(P2PParams{}, 8, 3);
  const ReformulatedGame game(spec);
  const auto res = solve_drne(game, cfg(defaults::kP2PStep));
  REQUIRE(res.status == SolveStatus::kConverged);
  for (int i = 0; i < spec.N(); ++i) CHECK(spec.agents[i].X.max_violation(spec.block(res.x, i)) <= 1e-6);
  CHECK((spec.A_c * res.x - spec.b_c).maxCoeff() <= 1e-6);
}

TEST_CASE("a single study gives identical mean, min and max") {
  StudyBuilder b = [](int, std::uint64_t seed) { return cournot_study(CournotParams{}, 5, seed); };
  SolverConfig c = cfg(0.03);
  c.max_iter = 3000;
  const StudySummary s = run_mc_studies(b, c, 1, 11, 1);
  CHECK(s.studies == 1);
  CHECK(s.failed == 0);
  CHECK(s.residual.mean == s.residual.min);
  CHECK(s.residual.mean == s.residual.max);
  CHECK(s.cost_gap.mean.back() == 0.0);
}

TEST_CASE("studies are deterministic under a fixed seed and independent of the thread count") {
  StudyBuilder b = [](int, std::uint64_t seed) { return cournot_study(CournotParams{}, 5, seed); };
  SolverConfig c = cfg(0.03);
  c.max_iter = 2000;
  const StudySummary s1 = run_mc_studies(b, c, 4, 7, 1);
  const StudySummary s2 = run_mc_studies(b, c, 4, 7, 3);
  CHECK(s1.seeds == s2.seeds);
  CHECK(s1.residual.mean == s2.residual.mean);
  CHECK(s1.step_norm.max == s2.step_norm.max);
  for (int k = 0; k < 4; ++k) CHECK(s1.equilibria[k] == s2.equilibria[k]);
  // Shorter runs are padded with their final value.
  CHECK(s1.residual.mean.size() == s1.step_norm.mean.size());
}

TEST_CASE("failed studies are flagged and excluded") {
  StudyBuilder b = [](int s, std::uint64_t seed) {
    if (s == 1) throw Error(ErrorCode::kInvalidArgument, "broken study");
    return cournot_study(CournotParams{}, 5, seed);
  };
  SolverConfig c = cfg(0.03);
  c.max_iter = 500;
  const StudySummary s = run_mc_studies(b, c, 3, 7, 1);
  CHECK(s.failed == 1);
}

TEST_CASE("radius sweep: zero radius gives the sample-average costs and the mean cost grows") {
  const SolverConfig c = cfg(0.03, 1e-6);
  EquilibriumSolver solver = [c](const ReformulatedGame& g) { return solve_drne(g, c); };
  SweepBuilder b = [](double eps, int, std::uint64_t seed) {
    CournotParams p;
    p.radius.assign(3, eps);
    return cournot_study(p, 5, seed);
  };
  const SweepResult r = sweep_radius(b, {0.0, 0.1, 0.3}, 2, 17, solver, 1);
  REQUIRE(r.points.size() == 3);
  CHECK(r.trend_holds);
  // eps = 0: the worst-case cost is the sample average of the realized costs.
  const GameSpec spec = b(0.0, 0, derive_seed(17, 0));
  const ReformulatedGame game(spec);
  const Vec x = solver(game).x;
  double saa = 0.0;
  for (const Vec& s : spec.agents[0].samples) saa += evaluate_cost(spec.agents[0], x, s);
  saa /= spec.agents[0].K();
  CHECK(worst_case_value(game, 0, x) == doctest::Approx(saa).epsilon(1e-9));
}

TEST_CASE("sample sweep with one fixed sample set has a zero band") {
  const SolverConfig c = cfg(0.03, 1e-6);
  EquilibriumSolver solver = [c](const ReformulatedGame& g) { return solve_drne(g, c); };
  SweepBuilder b = [](double K, int, std::uint64_t) {
    CournotParams p;
    p.samples.assign(3, std::vector<double>(static_cast<int>(K), 1.0));
    return build_cournot(p);
  };
  const SweepResult r = sweep_samples(b, {2, 4}, 3, 1, solver, 1);
  for (const auto& pt : r.points)
    for (std::size_t i = 0; i < pt.mean.size(); ++i) CHECK(pt.max[i] - pt.min[i] == 0.0);
  CHECK_FALSE(r.trend_holds);  // strict shrinkage is impossible at zero width
}
