#include <doctest.h>

#include "drne/case_studies.hpp"

using namespace drne;

namespace {

bool has_kind(const std::vector<Violation>& v, const std::string& kind) {
  for (const auto& x : v)
    if (x.kind == kind) return true;
  return false;
}

CournotParams small_cournot() {
  CournotParams p;
  p.samples = {{0.8, 1.0, 1.2}, {0.9, 1.1}, {1.0, 1.3, 0.7, 1.0}};
  p.radius = {0.05, 0.1, 0.15};
  return p;
}

}  // namespace

TEST_CASE("uncertainty polytope certification") {
  const auto box = UncertaintyPolytope::box(Vec::Zero(2), Vec::Ones(2));
  CHECK(box.p() == 2);
  CHECK(box.m() == 4);
  CHECK(box.contains(box.interior_point()));
  CHECK(box.lower().isApprox(Vec::Zero(2)));
  CHECK(box.upper().isApprox(Vec::Ones(2)));
  CHECK(box.diameter_bound(Norm::kL2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(box.diameter_bound(Norm::kL1) == doctest::Approx(2.0));
  // Half-plane only: unbounded.
  CHECK_THROWS_AS(UncertaintyPolytope(Mat::Ones(1, 2), Vec::Ones(1)), Error);
  // x <= 0 and -x <= -1: empty.
  CHECK_THROWS_AS(UncertaintyPolytope((Mat(2, 1) << 1, -1).finished(), (Vec(2) << 0, -1).finished()), Error);
}

TEST_CASE("Cournot cost by hand") {
  // c = 1, w1 = 10, w2 = 1, x = (1, 1, 1), xi = 1: 1 - (10 - 3) = -6.
  const GameSpec spec = build_cournot(small_cournot());
  const Vec x = Vec::Ones(3);
  for (int i = 0; i < 3; ++i) CHECK(evaluate_cost(spec.agents[i], x, Vec::Ones(1)) == doctest::Approx(-6.0));
  CHECK(spec.total_dim() == 3);
  CHECK(spec.coupling_rows() == 1);
  CHECK(validate_game(spec, true).empty());
}

TEST_CASE("Cournot demand row is inactive when the threshold is zero") {
  CournotParams p = small_cournot();
  p.demand_min = 0.0;
  const GameSpec spec = build_cournot(p);
  const Vec x = Vec::Constant(3, 0.5);
  CHECK((spec.A_c * x - spec.b_c).maxCoeff() < 0.0);
}

TEST_CASE("validation flags broken games") {
  GameSpec spec = build_cournot(small_cournot());
  SUBCASE("negative radius") {
    spec.agents[1].radius = -0.1;
    CHECK(has_kind(validate_game(spec), "radius"));
  }
  SUBCASE("missing radius and calibration") {
    spec.agents[0].radius.reset();
    CHECK(has_kind(validate_game(spec), "radius"));
  }
  SUBCASE("sample outside the support") {
    spec.agents[2].samples[0] = Vec::Constant(1, 3.0);
    CHECK(has_kind(validate_game(spec), "support"));
  }
  SUBCASE("sample of the wrong dimension") {
    spec.agents[2].samples[0] = Vec::Zero(2);
    CHECK(has_kind(validate_game(spec), "dimension"));
  }
  SUBCASE("infeasible coupling") {
    spec.b_c = Vec::Constant(1, -100.0);
    CHECK(has_kind(validate_game(spec), "coupling"));
  }
  SUBCASE("wrong gradient") {
    spec.agents[0].cost.f_gradient = [](const Vec& x) { return Vec::Constant(1, 5.0 * x[0]); };
    CHECK(has_kind(validate_game(spec, true), "gradient"));
    CHECK(validate_game(spec, false).empty());
  }
  SUBCASE("common mode with different samples") {
    spec.mode = AmbiguityMode::kCommon;
    CHECK(has_kind(validate_game(spec), "mode"));
    CHECK_THROWS_AS(require_valid(spec), Error);
  }
}

TEST_CASE("calibrated radius resolves through the concentration inequality") {
  GameSpec spec = build_cournot(small_cournot());
  auto& ag = spec.agents[0];
  ag.radius.reset();
  ag.calibration = CalibrationRequest{0.05, CalibrationConstants{}};
  CHECK(ag.epsilon() == doctest::Approx(radius_from_confidence(ag.K(), 0.05, CalibrationConstants{})));
  CHECK(validate_game(spec).empty());
}

TEST_CASE("common Cournot shares one piece list") {
  const GameSpec spec = build_cournot_common(CournotParams{}, 0.5, {0.9, 1.0, 1.2}, 0.1);
  CHECK(spec.mode == AmbiguityMode::kCommon);
  CHECK(validate_game(spec, true).empty());
  CHECK(spec.agents[0].cost.pieces == spec.agents[2].cost.pieces);
}

TEST_CASE("P2P dimensions on the default star") {
  P2PParams p;
  p.complete();
  p.samples.assign(p.N, {(Vec(2) << 1.5, 0.5).finished()});
  const GameSpec spec = build_p2p(p);
  REQUIRE(spec.N() == 5);
  CHECK(spec.agents[0].n() == 2 + 4);
  for (int i = 1; i < 5; ++i) CHECK(spec.agents[i].n() == 2 + 1);
  CHECK(spec.total_dim() == 18);
  CHECK(spec.coupling_rows() == 4);  // one reciprocity row per link
  CHECK(p2p_trade_index(p, 0, 3) == 4);
  CHECK(p2p_trade_index(p, 3, 0) == 2);
  CHECK(p2p_trade_index(p, 1, 2) == -1);
  CHECK(validate_game(spec, true).empty());
}

TEST_CASE("P2P rejects asymmetric neighbor sets") {
  P2PParams p;
  p.N = 3;
  p.neighbors = {{1}, {}, {}};
  auto build = [p]() mutable {
    p.complete();
    p.samples.assign(p.N, {(Vec(2) << 1.5, 0.5).finished()});
    return build_p2p(p);
  };
  CHECK_THROWS_AS(build(), Error);
}
