#include <doctest.h>

#include "drne/case_studies.hpp"

using namespace drne;

namespace {

CournotParams small_cournot() {
  CournotParams p;
  p.samples = {{0.8, 1.0, 1.2}, {0.9, 1.1}, {1.0, 1.3, 0.7, 1.0}};
  p.radius = {0.05, 0.1, 0.15};
  p.complete();
  return p;
}

// Interior equilibrium of the Cournot game with every xi_i replaced by the
// worst-case effective value m_i - min(eps_i, m_i - xi_lo) (prices stay
// positive so each firm's worst case pushes xi down):
//   (2 c_i + w2 xt_i) x_i + w2 xt_i sum_j x_j = w1 xt_i.
Vec cournot_effective_equilibrium(const CournotParams& p) {
  const int N = p.N;
  Mat A = Mat::Zero(N, N);
  Vec b(N);
  for (int i = 0; i < N; ++i) {
    double m = 0.0;
    for (double s : p.samples[i]) m += s;
    m /= p.samples[i].size();
    const double xt = m - std::min(p.radius[i], m - p.xi_lo);
    A.row(i).setConstant(p.w2 * xt);
    A(i, i) += 2.0 * p.c[i] + p.w2 * xt;
    b[i] = p.w1 * xt;
  }
  return A.partialPivLu().solve(b);
}

SolverConfig tight(double tau, double tol = 1e-9, int max_iter = 400000) {
  SolverConfig c;
  c.tau_default = tau;
  c.tol_step = tol;
  c.tol_residual = tol;
  c.max_iter = max_iter;
  c.log_stride = 1000;
  return c;
}

}  // namespace

TEST_CASE("natural residual is zero exactly at fixed points of the projection") {
  const Polyhedron X = Polyhedron::box(Vec::Zero(1), Vec::Ones(1));
  CHECK(natural_residual(Vec::Ones(1), -Vec::Ones(1), X) == 0.0);
  CHECK(natural_residual(Vec::Constant(1, 0.5), Vec::Ones(1), X) == doctest::Approx(0.5));
  CHECK(natural_residual(Vec::Constant(1, 0.5), Vec::Zero(1), X) == 0.0);
}

TEST_CASE("solver configuration validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau_default = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.delta = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.tau = {0.1, -0.1};
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(SolverConfig{}.delta == doctest::Approx(0.6180339887498949));
  c = SolverConfig{};
  c.tau = {0.5};
  CHECK(c.tau_for(0) == 0.5);
  CHECK(c.tau_for(3) == c.tau_default);
}

TEST_CASE("Example 1 with zero radii reduces to the linear system") {
  Example1Params p;
  p.eps1 = p.eps2 = 0.0;
  const ReformulatedGame game(build_example1(p));
  const auto res = solve_drne(game, tight(0.1));
  REQUIRE(res.status == SolveStatus::kConverged);
  // 2 x1 + 0.7 x2 = -1 and 0.7 x1 + 2 x2 = -1.
  CHECK(res.x[0] == doctest::Approx(-1.0 / 2.7).epsilon(1e-7));
  CHECK(res.x[1] == doctest::Approx(-1.0 / 2.7).epsilon(1e-7));
}

TEST_CASE("Example 1: primal-dual equilibrium solves the stationarity system") {
  for (const auto& [eps1, p2] : {std::pair{0.1, 1.0}, std::pair{2.5, 10.0}}) {
    Example1Params p;
    p.eps1 = eps1;
    p.p2 = p2;
    const ReformulatedGame game(build_example1(p));
    const auto res = solve_drne(game, tight(0.1, 1e-8));
    REQUIRE(res.status == SolveStatus::kConverged);
    CHECK(example1_stationarity_residual(p, res.x).norm() <= 1e-6);
    CHECK((res.x - solve_example1_stationarity(p)).norm() <= 1e-5);
  }
}

TEST_CASE("Example 1 Newton root") {
  Example1Params p;
  const Vec x = solve_example1_stationarity(p);
  CHECK(example1_stationarity_residual(p, x).norm() <= 1e-10);
  CHECK(x[0] == doctest::Approx(x[1]).epsilon(1e-12));
  Example1Params h;
  h.eps1 = 2.5;
  h.p2 = 10.0;
  const Vec y = solve_example1_stationarity(h);
  CHECK(example1_stationarity_residual(h, y).norm() <= 1e-10);
  CHECK((x - y).norm() > 1e-3);
}

TEST_CASE("quadratic game with zero radii matches the sample-average equilibrium") {
  QuadraticGameParams q;
  q.q = Vec::Constant(2, 2.0);
  q.kappa = Mat::Zero(2, 2);
  q.kappa(0, 1) = q.kappa(1, 0) = 0.5;
  q.r = (Vec(2) << -3.0, -2.0).finished();
  q.xi_lo = Vec::Constant(2, 0.5);
  q.xi_hi = Vec::Constant(2, 1.5);
  q.samples = {{0.6, 1.1, 1.4}, {0.9, 0.7}};
  q.radius = {0.0, 0.0};
  const ReformulatedGame game(build_quadratic_game(q));
  const auto res = solve_drne(game, tight(0.1));
  REQUIRE(res.status == SolveStatus::kConverged);
  const Vec saa = quadratic_mean_equilibrium(q, (Vec(2) << 3.1 / 3.0, 0.8).finished());
  CHECK((res.x - saa).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("Cournot: primal-dual and Gauss-Seidel reach the effective-price equilibrium") {
  const CournotParams p = small_cournot();
  const ReformulatedGame game(build_cournot(p));
  const Vec ref = cournot_effective_equilibrium(p);
  REQUIRE(ref.sum() > p.demand_min);
  const auto res = solve_drne(game, tight(0.03, 1e-8));
  REQUIRE(res.status == SolveStatus::kConverged);
  CHECK((res.x - ref).lpNorm<Eigen::Infinity>() <= 1e-5);
  const auto gs = gauss_seidel(game, 200, 1e-10);
  REQUIRE(gs.status == SolveStatus::kConverged);
  CHECK((gs.x - ref).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("feasible start reaches the same equilibrium") {
  const CournotParams p = small_cournot();
  const ReformulatedGame game(build_cournot(p));
  SolverConfig c = tight(0.03, 1e-8);
  c.feasible_start = true;
  // First iterate of the run starts from lambda raised onto the g2 rows.
  SolverConfig one = c;
  one.max_iter = 1;
  const auto first = solve_drne(game, one);
  for (int i = 0; i < game.N(); ++i) CHECK(first.y[i][game.layout(i).lambda_index()] >= 1.0);
  const auto res = solve_drne(game, c);
  REQUIRE(res.status == SolveStatus::kConverged);
  CHECK((res.x - cournot_effective_equilibrium(p)).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("primal-dual run is deterministic and logs with the requested stride") {
  const ReformulatedGame game(build_cournot(small_cournot()));
  SolverConfig c = tight(0.03, 1e-4, 2000);
  c.log_stride = 100;
  const auto a = solve_drne(game, c);
  const auto b = solve_drne(game, c);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.log.records.size() == 21);
  CHECK(a.log.records[1].iter == 100);
  CHECK(a.log.records.back().iter == a.iterations - 1);
}

TEST_CASE("best response is optimal against fixed rivals") {
  const CournotParams p = small_cournot();
  const ReformulatedGame game(build_cournot(p));
  const Vec x = (Vec(3) << 1.0, 2.0, 1.5).finished();
  const BestResponse br = best_response(game, 1, x);
  REQUIRE(br.converged);
  for (double t = 0.0; t <= 4.0; t += 0.05) {
    Vec z = x;
    z[1] = t;
    CHECK(worst_case_value(game, 1, z) >= br.J - 1e-8);
  }
}

TEST_CASE("large steps are reported as divergence with the last finite iterate") {
  Example1Params p;
  p.bound = 1e9;
  const ReformulatedGame game(build_example1(p));
  SolverConfig c = tight(50.0, 1e-9, 5000);
  const auto res = solve_drne(game, c);
  CHECK(res.status == SolveStatus::kDiverged);
  CHECK(res.x.allFinite());
}
