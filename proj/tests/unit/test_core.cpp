#include <doctest.h>

#include <random>

#include "drne/barrier.hpp"
#include "drne/lp.hpp"
#include "drne/polyhedron.hpp"

using namespace drne;

TEST_CASE("norms and their duals") {
  const Vec v = (Vec(3) << 3.0, -4.0, 1.0).finished();
  CHECK(norm(v, Norm::kL1) == doctest::Approx(8.0));
  CHECK(norm(v, Norm::kL2) == doctest::Approx(std::sqrt(26.0)));
  CHECK(norm(v, Norm::kLinf) == doctest::Approx(4.0));
  CHECK(dual(Norm::kL1) == Norm::kLinf);
  CHECK(dual(Norm::kL2) == Norm::kL2);
  CHECK(dual(Norm::kLinf) == Norm::kL1);
  for (Norm n : {Norm::kL1, Norm::kL2, Norm::kLinf}) {
    CHECK(parse_norm(to_string(n)) == n);
    // <g, v> = ||v|| with ||g||_* <= 1.
    const Vec g = norm_subgradient(v, n);
    CHECK(g.dot(v) == doctest::Approx(norm(v, n)));
    CHECK(norm(g, dual(n)) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(parse_norm("l3"), Error);
}

TEST_CASE("derived seeds are distinct and reproducible") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("simplex solves a textbook LP") {
  // max x + y  s.t. x + 2y <= 4, 3x + y <= 6; vertex (1.6, 1.2).
  lp::Problem p;
  p.c = (Vec(2) << -1.0, -1.0).finished();
  p.A_ub = (Mat(2, 2) << 1, 2, 3, 1).finished();
  p.b_ub = (Vec(2) << 4, 6).finished();
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::kOptimal);
  CHECK(s.objective == doctest::Approx(-2.8).epsilon(1e-12));
  CHECK(s.x[0] == doctest::Approx(1.6));
  CHECK(s.x[1] == doctest::Approx(1.2));
}

TEST_CASE("simplex reports infeasible and unbounded programs") {
  lp::Problem inf;
  inf.c = Vec::Ones(1);
  inf.A_ub = Mat::Ones(1, 1);
  inf.b_ub = Vec::Constant(1, -1.0);  // x <= -1 with x >= 0
  CHECK(lp::solve(inf).status == lp::Status::kInfeasible);
  lp::Problem unb;
  unb.c = -Vec::Ones(1);
  CHECK(lp::solve(unb).status == lp::Status::kUnbounded);
}

TEST_CASE("transportation simplex agrees with the dense LP") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 4, n = 3 + trial % 3;
    Vec a(m), b(n);
    for (int i = 0; i < m; ++i) a[i] = 0.1 + u(rng);
    for (int j = 0; j < n; ++j) b[j] = 0.1 + u(rng);
    a /= a.sum();
    b /= b.sum();
    Mat C(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = u(rng);
    const auto plan = lp::solve_transport(a, b, C);
    lp::Problem p;
    p.c.resize(m * n);
    p.A_eq = Mat::Zero(m + n, m * n);
    p.b_eq.resize(m + n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        p.c[i * n + j] = C(i, j);
        p.A_eq(i, i * n + j) = 1.0;
        p.A_eq(m + j, i * n + j) = 1.0;
      }
    p.b_eq << a, b;
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::kOptimal);
    CHECK(plan.cost == doctest::Approx(s.objective).epsilon(1e-9));
    CHECK((plan.flow.rowwise().sum() - a).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((plan.flow.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("barrier method: linear objective over a disc") {
  conic::ConvexProgram prog;
  prog.c = (Vec(2) << 1.0, 1.0).finished();
  conic::SocConstraint cone;
  cone.A = Mat::Identity(2, 2);
  cone.b = Vec::Zero(2);
  cone.c = Vec::Zero(2);
  cone.d = 1.0;
  prog.cones.push_back(cone);
  const auto r = conic::solve(prog, Vec::Zero(2));
  REQUIRE(r.converged);
  CHECK(r.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("barrier method: smooth objective with an equality") {
  // min (x - 1)^2 + (y - 2)^2  s.t. x + y = 1, |x|, |y| <= 5  ->  (0, 1).
  conic::ConvexProgram prog;
  prog.c = Vec::Zero(2);
  const Vec t = (Vec(2) << 1.0, 2.0).finished();
  prog.smooth = conic::SmoothTerm{[t](const Vec& z) { return (z - t).squaredNorm(); },
                                  [t](const Vec& z) { return Vec(2.0 * (z - t)); },
                                  [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); }};
  prog.G.resize(4, 2);
  prog.G << 1, 0, 0, 1, -1, 0, 0, -1;
  prog.h = Vec::Constant(4, 5.0);
  prog.E = Mat::Ones(1, 2);
  prog.e = Vec::Ones(1);
  const auto r = conic::solve(prog, Vec::Constant(2, 0.5));
  REQUIRE(r.converged);
  CHECK(r.z[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.z[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("barrier method rejects an infeasible start") {
  conic::ConvexProgram prog;
  prog.c = Vec::Ones(1);
  prog.G = Mat::Ones(1, 1);
  prog.h = Vec::Ones(1);
  CHECK_THROWS_AS(conic::solve(prog, Vec::Constant(1, 2.0)), Error);
}

TEST_CASE("polyhedron projection satisfies the variational inequality") {
  // Box [0, 2]^3 cut by x1 + x2 + x3 <= 3 and x1 - x2 <= 0.5.
  Mat A(2, 3);
  A << 1, 1, 1, 1, -1, 0;
  const Vec b = (Vec(2) << 3.0, 0.5).finished();
  const Polyhedron P(Vec::Zero(3), Vec::Constant(3, 2.0), A, b);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 5.0), w(0.0, 2.0);
  std::vector<Vec> feasible;
  while (feasible.size() < 200) {
    Vec z(3);
    for (int j = 0; j < 3; ++j) z[j] = w(rng);
    if (P.contains(z)) feasible.push_back(z);
  }
  for (int trial = 0; trial < 100; ++trial) {
    Vec v(3);
    for (int j = 0; j < 3; ++j) v[j] = u(rng);
    const Vec p = P.project(v);
    CHECK(P.contains(p, 1e-9));
    for (const Vec& z : feasible) CHECK((v - p).dot(z - p) <= 1e-9);
    CHECK((P.project(p) - p).norm() < 1e-10);
  }
}

TEST_CASE("polyhedron basics") {
  const Polyhedron box = Polyhedron::box(Vec::Zero(2), Vec::Ones(2));
  CHECK(box.is_box());
  CHECK(box.contains(box.center()));
  CHECK(box.max_violation((Vec(2) << 1.5, -0.25).finished()) == doctest::Approx(0.5));
  CHECK(clamp((Vec(2) << 2.0, -1.0).finished(), Vec::Zero(2), Vec::Ones(2)) == (Vec(2) << 1.0, 0.0).finished());
  // x1 <= 0.2 and -x1 <= -0.5 cannot both hold.
  Mat A(2, 2);
  A << 1, 0, -1, 0;
  CHECK_THROWS_AS(Polyhedron(Vec::Zero(2), Vec::Ones(2), A, (Vec(2) << 0.2, -0.5).finished()), Error);
  Mat E(2, 2);
  E << 1, 1, -1, -1;
  const Polyhedron eq(Vec::Zero(2), Vec::Ones(2), E, (Vec(2) << 1.0, -1.0).finished());
  REQUIRE(eq.equality_pairs().size() == 1);
  CHECK(eq.equality_pairs()[0] == std::make_pair(0, 1));
}
