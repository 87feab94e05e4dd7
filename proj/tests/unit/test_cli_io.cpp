#include <doctest.h>

#include <random>

#include "drne/cli_io.hpp"

using namespace drne;

namespace {

const std::filesystem::path kSource = DRNE_SOURCE_DIR;

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("drne_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::vector<std::string> issues_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& s : issues)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

const char* kSmallExample1 = R"({
  "game": {"model": "example1", "params": {"eps1": 0.1, "eps2": 0.1}},
  "solver": {"tau_default": 0.1, "max_iter": 60, "tol_step": 1e-12, "tol_residual": 1e-12, "log_stride": 10}
})";

}  // namespace

TEST_CASE("bundled configs parse") {
  const RunConfig c = parse_config(kSource / "configs" / "cournot.cfg");
  CHECK(c.model == ModelKind::kCournot);
  CHECK(build_spec(c, c.seed).N() == 3);
  CHECK(c.agents.size() == 3);
  CHECK(c.solver.tau_default == 0.01);
  for (const auto& entry : std::filesystem::directory_iterator(kSource / "configs")) {
    INFO(entry.path().string());
    CHECK_NOTHROW(parse_config(entry.path()));
  }
}

TEST_CASE("agents without radius or calibration are named in the error") {
  const auto issues = issues_of(R"({
    "game": {"model": "cournot"},
    "agents": [{"name": "firm1", "radius": 0.1}, {"name": "firm2"}, {"name": "firm3", "radius": 0.1}]
  })");
  REQUIRE(issues.size() == 1);
  CHECK(mentions(issues, "agents[1] (firm2)"));
  CHECK(mentions(issues, "radius or a calibration"));
}

TEST_CASE("unknown keys and wrong types are field-addressed errors") {
  const auto issues = issues_of(R"({
    "game": {"model": "cournot", "params": {"w3": 1.0}},
    "solver": {"tau0": 0.1, "max_iter": "many"},
    "extra": {}
  })");
  CHECK(mentions(issues, "game.params.w3: unknown key"));
  CHECK(mentions(issues, "solver.tau0: unknown key"));
  CHECK(mentions(issues, "solver.max_iter: expected an integer"));
  CHECK(mentions(issues, "extra: unknown key"));
  CHECK(mentions(issues_of(R"({"game": {"model": "bertrand"}})"), "game.model"));
  CHECK(mentions(issues_of(R"({"solver": {}})"), "game: missing section"));
}

TEST_CASE("syntax errors report the line") {
  const auto issues = issues_of("{\n  \"game\": {\"model\": \"cournot\"},\n  \"solver\": {,}\n}");
  REQUIRE(issues.size() == 1);
  CHECK(mentions(issues, "<config>:3:"));
}

TEST_CASE("model invariant violations are forwarded") {
  const auto issues = issues_of(R"({
    "game": {"model": "cournot"},
    "agents": [{"samples": [5.0], "radius": 0.1}, {"radius": 0.1}, {"radius": 0.1}]
  })");
  CHECK(mentions(issues, "support"));
  CHECK(mentions(issues_of(R"({"game": {"model": "cournot", "params": {"w2": -1.0}}})"), "game"));
  CHECK(mentions(issues_of(R"({"game": {"model": "p2p", "mode": "common"}})"), "game.mode"));
}

TEST_CASE("canonical form round-trips") {
  for (const char* name : {"cournot.cfg", "p2p.cfg", "example1.cfg", "quadratic.cfg"}) {
    INFO(name);
    const RunConfig a = parse_config(kSource / "configs" / name);
    const Json ja = to_json(a);
    const RunConfig b = parse_config_text(ja.dump(2));
    CHECK(to_json(b) == ja);
    CHECK(b.solver.tau_default == a.solver.tau_default);
    CHECK(b.seed == a.seed);
    const GameSpec sa = build_spec(a, a.seed), sb = build_spec(b, b.seed);
    REQUIRE(sa.N() == sb.N());
    for (int i = 0; i < sa.N(); ++i) {
      CHECK(sa.agents[i].samples == sb.agents[i].samples);
      CHECK(sa.agents[i].epsilon() == sb.agents[i].epsilon());
    }
  }
}

TEST_CASE("config-wide radius, calibration and per-agent samples") {
  const RunConfig r = parse_config_text(R"({
    "game": {"model": "cournot"},
    "ambiguity": {"samples_per_agent": 4, "seed": 9, "calibration": {"beta": 0.1}},
    "agents": [{"samples": [1.0, 1.1]}, {"radius": 0.3}, {}]
  })");
  const GameSpec s = build_spec(r, r.seed);
  CHECK(s.agents[0].K() == 2);
  CHECK(s.agents[1].K() == 4);
  CHECK(s.agents[1].epsilon() == 0.3);
  CHECK(s.agents[2].epsilon() == doctest::Approx(radius_from_confidence(4, 0.1, CalibrationConstants{})));
  // Same seed, same draws; another seed, other draws.
  CHECK(build_spec(r, 9).agents[2].samples == s.agents[2].samples);
  CHECK(build_spec(r, 10).agents[2].samples != s.agents[2].samples);
}

TEST_CASE("common-mode Cournot config") {
  const RunConfig r = parse_config_text(R"({
    "game": {"model": "cournot", "mode": "common", "params": {"levy": 0.5}},
    "ambiguity": {"radius": 0.1, "samples_per_agent": 6},
    "solver": {"tau_default": 0.05, "max_iter": 100000, "tol_step": 1e-6, "tol_residual": 1e-6}
  })");
  const ReformulatedGame game(build_spec(r, r.seed));
  CHECK(game.spec().mode == AmbiguityMode::kCommon);
  const auto res = solve_configured(game, r.solver);
  CHECK(res.status == SolveStatus::kConverged);
  CHECK(res.x.minCoeff() >= 0.0);
}

TEST_CASE("command-line overrides") {
  RunConfig c = parse_config_text(kSmallExample1);
  apply_overrides(c, 77u, 500, 1e-5);
  CHECK(c.seed == 77u);
  CHECK(c.solver.max_iter == 500);
  CHECK(c.solver.tol_step == 1e-5);
  CHECK(c.solver.tol_residual == 1e-5);
  apply_overrides(c, std::nullopt, std::nullopt, std::nullopt);
  CHECK(c.solver.max_iter == 500);
}

TEST_CASE("sha256 test vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("run record hash covers the stored config") {
  const RunConfig c = parse_config_text(kSmallExample1);
  RunRecord r = make_run_record(c, "converged", 1.5);
  CHECK(r.verify());
  CHECK(r.tool_version == kToolVersion);
  const RunRecord back = RunRecord::from_json(Json::parse(r.to_json().dump()));
  CHECK(back.verify());
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.status == "converged");
  r.config["solver"]["max_iter"] = 61;
  CHECK_FALSE(r.verify());
  CHECK_THROWS_AS(RunRecord::from_json(Json::object()), Error);
}

TEST_CASE("17 significant digits round-trip doubles") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, k % 20 - 10);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("iterates.csv header is frozen") {
  IterateLog log;
  log.records.push_back({0, 0.5, 0.25, {1.0, -2.0, 3.0}, 0.0, 1.0});
  CHECK(iterates_csv(log, 3) ==
        "iter,step_norm,residual,J_1,J_2,J_3,max_violation,mu_norm\n"
        "0,0.5,0.25,1,-2,3,0,1\n");
}

TEST_CASE("band csv") {
  TrajectoryBand b{{1.0, 0.5}, {0.5, 0.25}, {2.0, 1.0}};
  CHECK(band_csv(b, 10) == "iter,mean,min,max\n0,1,0.5,2\n10,0.5,0.25,1\n");
}

TEST_CASE("directory lock excludes a second writer") {
  const auto dir = scratch_dir("lock");
  {
    DirectoryLock a(dir);
    CHECK_THROWS_AS([&] { DirectoryLock b(dir); }(), Error);
  }
  CHECK_NOTHROW([&] { DirectoryLock c(dir); }());
}

TEST_CASE("emitted results are byte-identical across runs and match the golden file") {
  const RunConfig c = parse_config_text(kSmallExample1);
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch_dir("emit" + std::to_string(run));
    const ReformulatedGame game(build_spec(c, c.seed));
    const auto res = solve_configured(game, c.solver);
    emit_results(game, res, make_run_record(c, to_string(res.status), 0.0), dir);
    for (const char* f : {"iterates.csv", "solution.json", "run_record.json"}) CHECK(std::filesystem::exists(dir / f));
    CHECK_FALSE(std::filesystem::exists(dir / ".drne.lock"));
    const std::string text = read_text(dir / "iterates.csv");
    if (run == 0) first = text;
    else CHECK(text == first);
    const Json sol = Json::parse(read_text(dir / "solution.json"));
    CHECK(sol["status"] == "max_iter");
    CHECK(sol["agents"].size() == 2);
    CHECK(RunRecord::from_json(Json::parse(read_text(dir / "run_record.json"))).verify());
  }
  CHECK(first == read_text(kSource / "tests" / "golden" / "example1_iterates.csv"));
}

TEST_CASE("a diverged run stores its status and last finite iterate") {
  RunConfig c = parse_config_text(R"({
    "game": {"model": "example1", "params": {"bound": 1e9}},
    "solver": {"tau_default": 50.0, "max_iter": 5000}
  })");
  const auto dir = scratch_dir("diverged");
  const ReformulatedGame game(build_spec(c, c.seed));
  const auto res = solve_configured(game, c.solver);
  emit_results(game, res, make_run_record(c, to_string(res.status), 0.0), dir);
  const Json sol = Json::parse(read_text(dir / "solution.json"));
  CHECK(sol["status"] == "diverged");
  for (const auto& v : sol["x"]) CHECK(v.is_number());
}

TEST_CASE("I/O failures name the path") {
  try {
    read_text("/nonexistent/drne.cfg");
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/drne.cfg") != std::string::npos);
    CHECK(e.code() == ErrorCode::kIo);
  }
}
