#include <doctest.h>

#include <random>

#include "drne/case_studies.hpp"

using namespace drne;

namespace {

CournotParams small_cournot() {
  CournotParams p;
  p.samples = {{0.8, 1.0, 1.2}, {0.9, 1.1}, {1.0, 1.3, 0.7, 1.0}};
  p.radius = {0.05, 0.1, 0.15};
  return p;
}

// One-dimensional linear cost a xi over [lo, hi]: the worst distribution
// moves mass toward the costly end until the budget or the support runs out.
double linear_1d_worst(double a, const std::vector<double>& xs, double eps, double lo, double hi) {
  double mean = 0.0, room = 0.0;
  for (double x : xs) {
    mean += x;
    room += a >= 0.0 ? hi - x : x - lo;
  }
  mean /= xs.size();
  room /= xs.size();
  return a * mean + std::abs(a) * std::min(eps, room);
}

double cournot_worst_closed_form(const CournotParams& p, int i, const Vec& x) {
  const double a = -(p.w1 - p.w2 * x.sum()) * x[i];
  return p.c[i] * x[i] * x[i] + linear_1d_worst(a, p.samples[i], p.radius[i], p.xi_lo, p.xi_hi);
}

}  // namespace

TEST_CASE("layout and packing") {
  AgentLayout lay{2, 3, 2, 4, 2};
  CHECK(lay.dim() == 2 + 1 + 3 + 3 * 2 * 4);
  CHECK(lay.gamma_index(1, 0) == 2 + 1 + 3 + 2 * 4);
  ExtendedDecision e;
  e.x = (Vec(2) << 1.0, 2.0).finished();
  e.lambda = 0.5;
  e.s = Vec::LinSpaced(3, 0.0, 1.0);
  e.gamma = Vec::LinSpaced(24, 0.0, 2.0);
  const auto back = ExtendedDecision::unpack(e.pack(), lay);
  CHECK(back.x == e.x);
  CHECK(back.lambda == e.lambda);
  CHECK(back.s == e.s);
  CHECK(back.gamma == e.gamma);
}

TEST_CASE("Cournot worst case matches the transport closed form") {
  CournotParams p = small_cournot();
  const ReformulatedGame game(build_cournot(p));
  p.complete();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = (Vec(3) << u(rng), u(rng), u(rng)).finished();
    for (int i = 0; i < 3; ++i)
      CHECK(worst_case_value(game, i, x) == doctest::Approx(cournot_worst_closed_form(p, i, x)).epsilon(1e-7));
  }
}

TEST_CASE("Example 1 worst case is f + p (x1 + x2) + eps ||x||") {
  Example1Params p;
  p.eps1 = 0.3;
  p.eps2 = 0.1;
  p.p2 = 2.0;
  const ReformulatedGame game(build_example1(p));
  const Vec x = (Vec(2) << -0.7, 1.2).finished();
  const double n = x.norm();
  CHECK(worst_case_value(game, 0, x) ==
        doctest::Approx(p.c11 * 0.49 + p.c12 * (-0.84) + p.p1 * 0.5 + p.eps1 * n).epsilon(1e-8));
  CHECK(worst_case_value(game, 1, x) ==
        doctest::Approx(p.c21 * (-0.84) + p.c22 * 1.44 + p.p2 * 0.5 + p.eps2 * n).epsilon(1e-8));
}

TEST_CASE("zero radius gives the sample average") {
  CournotParams p = small_cournot();
  p.radius = {0.0, 0.0, 0.0};
  const GameSpec spec = build_cournot(p);
  const ReformulatedGame game(spec);
  const Vec x = (Vec(3) << 1.0, 2.0, 0.5).finished();
  for (int i = 0; i < 3; ++i) {
    double saa = 0.0;
    for (const Vec& s : spec.agents[i].samples) saa += evaluate_cost(spec.agents[i], x, s);
    saa /= spec.agents[i].K();
    CHECK(worst_case_value(game, i, x) == doctest::Approx(saa).epsilon(1e-8));
  }
}

TEST_CASE("worst case is nondecreasing in the radius and bounded by the support") {
  const Vec x = (Vec(3) << 1.0, 1.5, 2.0).finished();
  double prev = -kInf;
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 2.0}) {
    CournotParams p = small_cournot();
    p.radius.assign(3, eps);
    const ReformulatedGame game(build_cournot(p));
    const double v = worst_case_value(game, 0, x);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  // Radius beyond the diameter: every sample at the costly end.
  const double a = -(10.0 - 4.5) * 1.0;
  CHECK(prev == doctest::Approx(1.0 + a * 0.5).epsilon(1e-7));
}

TEST_CASE("worst-case solution is feasible for the epigraph constraints") {
  const ReformulatedGame game(build_cournot(small_cournot()));
  const Vec x = (Vec(3) << 1.0, 1.5, 2.0).finished();
  for (int i = 0; i < 3; ++i) {
    const WorstCase wc = game.worst_case(i, x);
    REQUIRE(wc.converged);
    const AgentEval ev = game.eval_agent(i, wc.y.pack(), x);
    CHECK(ev.J == doctest::Approx(wc.value).epsilon(1e-7));
    CHECK(ev.g1.maxCoeff() <= 1e-7);
    CHECK(ev.g2.maxCoeff() <= 1e-7);
  }
}

TEST_CASE("default start: lambda = 1, s = per-sample cost, gamma = 0") {
  const GameSpec spec = build_cournot(small_cournot());
  const ReformulatedGame game(spec);
  const Vec x = spec.center();
  const auto y = ExtendedDecision::unpack(game.initial_point(1, x), game.layout(1));
  CHECK(y.lambda == 1.0);
  CHECK(y.gamma.isZero());
  for (int k = 0; k < 2; ++k) CHECK(y.s[k] == doctest::Approx(uncertain_part(spec.agents[1], x, spec.agents[1].samples[k])));
}

TEST_CASE("Lagrangian gradient agrees with central differences") {
  const ReformulatedGame game(build_cournot(small_cournot()));
  const Vec x = (Vec(3) << 1.0, 1.5, 2.0).finished();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const int i = 2;
  const int d = game.layout(i).dim();
  Vec y(d), mu(game.num_constraints(i));
  for (int k = 0; k < d; ++k) y[k] = u(rng);
  for (int k = 0; k < mu.size(); ++k) mu[k] = u(rng);
  Vec grad, g;
  game.lagrangian(i, y, x, mu, grad, g);
  auto L = [&](const Vec& yy) {
    const AgentEval ev = game.eval_agent(i, yy, x);
    const Vec gg = game.constraints(i, yy, x);
    return ev.J + mu.dot(gg);
  };
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e[k] = 1e-6;
    CHECK(grad[k] == doctest::Approx((L(y + e) - L(y - e)) / 2e-6).epsilon(1e-5));
  }
  CHECK((g - game.constraints(i, y, x)).norm() < 1e-12);
}

TEST_CASE("projection onto the extended local set") {
  const ReformulatedGame game(build_cournot(small_cournot()));
  const int d = game.layout(0).dim();
  const Vec v = Vec::Constant(d, -2.0);
  const Vec p = game.project(0, v);
  CHECK(p[0] == 0.0);                 // x clamped to [0, x_max]
  CHECK(p[1] == 0.0);                 // lambda >= 0
  CHECK(p.segment(2, 3).isApprox(v.segment(2, 3)));  // s free
  CHECK(p.tail(d - 5).isZero());      // gamma >= 0
}
