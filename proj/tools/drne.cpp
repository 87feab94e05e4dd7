// Command-line driver: solve, calibrate, verify, run case studies and sweeps.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "drne/cli_io.hpp"
#include "drne/verification.hpp"

using namespace drne;

namespace {

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter;
  std::optional<double> tol;
};

void add_common(CLI::App* app, CommonFlags& f, bool needs_config = true) {
  auto* opt = app->add_option("--config", f.config, "config file");
  if (needs_config) opt->required();
  app->add_option("--out", f.out, "output directory")->capture_default_str();
  app->add_option("--seed", f.seed, "sample and study seed");
  app->add_option("--max-iter", f.max_iter, "iteration cap");
  app->add_option("--tol", f.tol, "step and residual tolerance");
}

RunConfig load(const CommonFlags& f) {
  RunConfig cfg = parse_config(f.config);
  apply_overrides(cfg, f.seed, f.max_iter, f.tol);
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EquilibriumSolver configured_solver(const RunConfig& cfg) {
  const SolverConfig sc = cfg.solver;
  return [sc](const ReformulatedGame& g) { return solve_configured(g, sc); };
}

void write_record(const RunConfig& cfg, const std::string& status, double secs, const std::filesystem::path& dir) {
  write_text(dir / "run_record.json", make_run_record(cfg, status, secs).to_json().dump(2) + "\n");
}

std::string vec_text(const Vec& v) {
  std::string s;
  for (int k = 0; k < v.size(); ++k) s += (k ? " " : "") + format_double(v[k]);
  return s;
}

// --- solve ------------------------------------------------------------------

int cmd_solve(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  const auto t0 = std::chrono::steady_clock::now();
  const ReformulatedGame game(build_spec(cfg, cfg.seed));
  const EquilibriumResult res = solve_configured(game, cfg.solver);
  const double secs = seconds_since(t0);
  emit_results(game, res, make_run_record(cfg, to_string(res.status), secs), f.out);
  std::printf("status=%s iterations=%d step_norm=%s residual=%s max_violation=%s\n", to_string(res.status),
              res.iterations, format_double(res.step_norm).c_str(), format_double(res.residual).c_str(),
              format_double(res.max_violation).c_str());
  std::printf("x=%s\n", vec_text(res.x).c_str());
  return res.status == SolveStatus::kConverged ? 0 : 3;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateFlags {
  std::string config;
  int K = 0;
  std::optional<double> beta, eps;
  CalibrationConstants constants;
};

int cmd_calibrate(const CalibrateFlags& f) {
  if (!f.config.empty()) {
    const RunConfig cfg = parse_config(f.config);
    const GameSpec spec = build_spec(cfg, cfg.seed);
    std::printf("agent,K,beta,eps\n");
    for (const auto& ag : spec.agents) {
      const double beta = ag.calibration ? ag.calibration->beta : NAN;
      std::printf("%s,%d,%s,%s\n", ag.name.c_str(), ag.K(), format_double(beta).c_str(),
                  format_double(ag.epsilon()).c_str());
    }
    return 0;
  }
  if (f.K < 1) throw Error(ErrorCode::kInvalidArgument, "calibrate: --K must be positive");
  f.constants.validate();
  if (f.beta) {
    const double eps = radius_from_confidence(f.K, *f.beta, f.constants);
    const Confidence back = confidence_from_radius(f.K, eps, f.constants);
    std::printf("K=%d beta=%s eps=%s beta_back=%s\n", f.K, format_double(*f.beta).c_str(), format_double(eps).c_str(),
                format_double(back.beta).c_str());
  }
  if (f.eps) {
    const Confidence c = confidence_from_radius(f.K, *f.eps, f.constants);
    std::printf("K=%d eps=%s beta=%s%s\n", f.K, format_double(*f.eps).c_str(), format_double(c.beta).c_str(),
                c.vacuous ? " (vacuous)" : "");
  }
  if (!f.beta && !f.eps) throw Error(ErrorCode::kInvalidArgument, "calibrate: give --beta or --eps");
  return 0;
}

// --- verify -----------------------------------------------------------------

int cmd_verify_duality(const CommonFlags& f, int grid_points) {
  const RunConfig cfg = load(f);
  const ReformulatedGame game(build_spec(cfg, cfg.seed));
  const GameSpec& spec = game.spec();
  const Vec x = spec.center();
  bool ok = true;
  std::ostringstream csv;
  csv << "agent,worst_case,lp_oracle,grid_gap,golden,golden_tol\n";
  for (int i = 0; i < spec.N(); ++i) {
    const AgentSpec& ag = spec.agents[i];
    const int p = ag.support->p();
    const GridSpec grid = grid_points > 0 ? GridSpec::uniform(p, grid_points) : GridSpec::defaults_for(p);
    const double wc = worst_case_value(game, i, x);
    const double lp = discretized_dro_worstcase(ag, x, game.epsilon(i), grid, spec.norm);
    const double gap = discretization_gap(ag, x, grid, spec.norm);
    const GoldenDualResult gd = golden_dual_worstcase(ag, x, game.epsilon(i), grid, spec.norm);
    const double slack = 1e-7 * std::max(1.0, std::abs(wc));
    const bool pass = lp <= wc + slack && wc <= lp + gap + slack && std::abs(gd.value - wc) <= gd.tolerance + slack;
    ok = ok && pass;
    csv << i + 1 << ',' << format_double(wc) << ',' << format_double(lp) << ',' << format_double(gap) << ','
        << format_double(gd.value) << ',' << format_double(gd.tolerance) << '\n';
    std::printf("%s %s: worst_case=%.10g lp=%.10g gap=%.3g golden=%.10g tol=%.3g\n", pass ? "PASS" : "FAIL",
                ag.name.c_str(), wc, lp, gap, gd.value, gd.tolerance);
  }
  DirectoryLock lock(f.out);
  write_text(std::filesystem::path(f.out) / "duality.csv", csv.str());
  write_record(cfg, ok ? "pass" : "fail", 0.0, f.out);
  return ok ? 0 : 1;
}

struct CoverageFlags {
  int trials = 200;
  std::string rule = "observed";
  double beta = 0.05;
};

int cmd_verify_coverage(const CommonFlags& f, const CoverageFlags& c) {
  const RunConfig cfg = load(f);
  const auto truths = model_truths(cfg);
  const int N = static_cast<int>(truths.size());
  const GameSpec base = build_spec(cfg, cfg.seed);
  CoverageConfig cc;
  cc.trials = c.trials;
  cc.seed = cfg.seed;
  cc.norm = cfg.norm;
  cc.threads = cfg.experiment.threads;
  for (const auto& ag : base.agents) cc.K.push_back(ag.K());
  if (c.rule == "observed") {
    cc.rule = RadiusRule::kObserved;
  } else if (c.rule == "fixed") {
    cc.rule = RadiusRule::kFixed;
    for (const auto& ag : base.agents) cc.eps.push_back(ag.epsilon());
  } else if (c.rule == "calibrated") {
    cc.rule = RadiusRule::kCalibrated;
    cc.beta.assign(N, c.beta);
    if (cfg.calibration) cc.constants = cfg.calibration->constants;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "verify coverage: unknown rule '" + c.rule + "'");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const CoverageReport rep = coverage_experiment(sample_builder(cfg), truths, cc, configured_solver(cfg));
  const double secs = seconds_since(t0);
  std::ostringstream csv;
  csv << "trial,seed,success";
  for (int i = 1; i <= N; ++i) csv << ",true_" << i << ",worst_" << i;
  csv << '\n';
  for (int t = 0; t < rep.trials; ++t) {
    csv << t << ',' << rep.seeds[t] << ',' << static_cast<int>(rep.success[t]);
    for (int i = 0; i < N; ++i) {
      const bool have = rep.success[t] >= 0 && i < static_cast<int>(rep.true_cost[t].size());
      csv << ',' << format_double(have ? rep.true_cost[t][i] : NAN) << ','
          << format_double(have ? rep.worst_cost[t][i] : NAN);
    }
    csv << '\n';
  }
  const double bound = rep.target - 3.0 * rep.sigma();
  const bool pass = rep.target >= 1.0 ? rep.joint_success == rep.trials - rep.flagged : rep.frequency() >= bound;
  DirectoryLock lock(f.out);
  write_text(std::filesystem::path(f.out) / "coverage.csv", csv.str());
  write_record(cfg, pass ? "pass" : "fail", secs, f.out);
  std::printf("%s coverage: joint=%d/%d flagged=%d frequency=%.4f target=%.4f sigma=%.4f\n", pass ? "PASS" : "FAIL",
              rep.joint_success, rep.trials - rep.flagged, rep.flagged, rep.frequency(), rep.target, rep.sigma());
  return pass ? 0 : 1;
}

int cmd_verify_consistency(const CommonFlags& f, int replications) {
  const RunConfig cfg = load(f);
  if (cfg.model != ModelKind::kQuadratic)
    throw Error(ErrorCode::kUnsupported, "verify consistency: needs the quadratic model (exact reference)");
  const auto truths = model_truths(cfg);
  Vec mean(static_cast<int>(truths.size()));
  for (std::size_t i = 0; i < truths.size(); ++i)
    mean[static_cast<int>(i)] = truths[i].expectation([](const Vec& z) { return z[0]; });
  const Vec ref = quadratic_mean_equilibrium(cfg.quadratic, mean);
  ConsistencyConfig cc;
  cc.replications = replications;
  cc.seed = cfg.seed;
  cc.threads = cfg.experiment.threads;
  if (!cfg.experiment.K_grid.empty()) cc.K_schedule = cfg.experiment.K_grid;
  const auto t0 = std::chrono::steady_clock::now();
  const ConsistencyReport rep = consistency_experiment(sample_builder(cfg), truths, ref, cc, configured_solver(cfg));
  const double secs = seconds_since(t0);
  std::ostringstream csv;
  csv << "K,eps,mean_distance,rho\n";
  for (std::size_t k = 0; k < rep.K.size(); ++k)
    csv << rep.K[k] << ',' << format_double(rep.eps[k]) << ',' << format_double(rep.mean_distance[k]) << ','
        << format_double(rep.rho[k]) << '\n';
  DirectoryLock lock(f.out);
  write_text(std::filesystem::path(f.out) / "consistency.csv", csv.str());
  write_record(cfg, rep.trend_holds ? "pass" : "fail", secs, f.out);
  std::printf("%s consistency: head=%.6g tail=%.6g flagged=%d\n", rep.trend_holds ? "PASS" : "FAIL", rep.head_mean,
              rep.tail_mean, rep.flagged);
  return rep.trend_holds ? 0 : 1;
}

int cmd_verify_sensitivity(const CommonFlags& f, const SensitivityConfig& sc_in) {
  const RunConfig cfg = load(f);
  const GameSpec spec = build_spec(cfg, cfg.seed);
  SensitivityConfig sc = sc_in;
  sc.seed = cfg.seed;
  const SensitivityReport rep = mapping_distance_check(spec, model_truths(cfg), sc);
  const bool pass = rep.max_slack <= 1e-8;
  DirectoryLock lock(f.out);
  write_record(cfg, pass ? "pass" : "fail", 0.0, f.out);
  std::printf("%s sensitivity: max_slack=%.3g rho=%.6g max_distance2=%.6g evaluations=%d\n", pass ? "PASS" : "FAIL",
              rep.max_slack, rep.rho, rep.max_distance2, rep.evaluations);
  return pass ? 0 : 1;
}

// --- run --------------------------------------------------------------------

int cmd_run_example1(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  if (cfg.model != ModelKind::kExample1) throw Error(ErrorCode::kInvalidArgument, "run example1: config model differs");
  const auto t0 = std::chrono::steady_clock::now();
  const ReformulatedGame game(build_spec(cfg, cfg.seed));
  const EquilibriumResult res = solve_drne(game, cfg.solver);
  const Vec newton = solve_example1_stationarity(cfg.example1);
  const Vec stat = example1_stationarity_residual(cfg.example1, res.x);
  const double secs = seconds_since(t0);
  emit_results(game, res, make_run_record(cfg, to_string(res.status), secs), f.out);
  std::ostringstream csv;
  csv << "method,x1,x2,stationarity\n";
  csv << "primal_dual," << format_double(res.x[0]) << ',' << format_double(res.x[1]) << ','
      << format_double(stat.norm()) << '\n';
  csv << "newton," << format_double(newton[0]) << ',' << format_double(newton[1]) << ','
      << format_double(example1_stationarity_residual(cfg.example1, newton).norm()) << '\n';
  write_text(std::filesystem::path(f.out) / "example1.csv", csv.str());
  std::printf("status=%s x=(%.8f, %.8f) newton=(%.8f, %.8f) stationarity=%.3g distance=%.3g\n", to_string(res.status),
              res.x[0], res.x[1], newton[0], newton[1], stat.norm(), (res.x - newton).norm());
  return res.status == SolveStatus::kConverged ? 0 : 3;
}

int cmd_run_studies(const CommonFlags& f, ModelKind kind) {
  const RunConfig cfg = load(f);
  if (cfg.model != kind)
    throw Error(ErrorCode::kInvalidArgument, std::string("run ") + to_string(kind) + ": config model differs");
  const auto t0 = std::chrono::steady_clock::now();
  const StudySummary sum =
      run_mc_studies(study_builder(cfg), cfg.solver, cfg.experiment.studies, cfg.seed, cfg.experiment.threads);
  const double secs = seconds_since(t0);
  int converged = 0;
  for (auto s : sum.status) converged += s == SolveStatus::kConverged ? 1 : 0;
  const std::filesystem::path dir = f.out;
  DirectoryLock lock(dir);
  const int stride = cfg.solver.log_stride;
  write_text(dir / "step_norm.csv", band_csv(sum.step_norm, stride));
  write_text(dir / "residual.csv", band_csv(sum.residual, stride));
  write_text(dir / "cost_gap.csv", band_csv(sum.cost_gap, stride));
  std::ostringstream csv;
  csv << "study,seed,status,iterations,x\n";
  for (int s = 0; s < sum.studies; ++s) {
    csv << s << ',' << sum.seeds[s] << ',' << to_string(sum.status[s]) << ',' << sum.iterations[s] << ','
        << (s < static_cast<int>(sum.equilibria.size()) ? vec_text(sum.equilibria[s]) : "") << '\n';
  }
  write_text(dir / "studies.csv", csv.str());
  const std::string status = converged == sum.studies ? "converged" : "partial";
  write_record(cfg, status, secs, dir);
  std::printf("studies=%d converged=%d failed=%d seconds=%.1f\n", sum.studies, converged, sum.failed, secs);
  return converged == sum.studies ? 0 : 3;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const CommonFlags& f, bool radius) {
  const RunConfig cfg = load(f);
  const auto& x = cfg.experiment;
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult res;
  if (radius) {
    if (x.eps_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep radius: experiment.eps_grid is empty");
    res = sweep_radius(radius_sweep_builder(cfg), x.eps_grid, x.studies, cfg.seed, configured_solver(cfg), x.threads);
  } else {
    if (x.K_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep samples: experiment.K_grid is empty");
    res = sweep_samples(samples_sweep_builder(cfg), x.K_grid, x.studies, cfg.seed, configured_solver(cfg),
                        x.threads);
  }
  const double secs = seconds_since(t0);
  std::ostringstream csv;
  csv << (radius ? "eps" : "K") << ",agent,mean,min,max,studies,failed\n";
  for (const auto& pt : res.points)
    for (std::size_t i = 0; i < pt.mean.size(); ++i)
      csv << format_double(pt.parameter) << ',' << i + 1 << ',' << format_double(pt.mean[i]) << ','
          << format_double(pt.min[i]) << ',' << format_double(pt.max[i]) << ',' << pt.studies << ',' << pt.failed
          << '\n';
  const std::filesystem::path dir = f.out;
  DirectoryLock lock(dir);
  write_text(dir / (radius ? "sweep_radius.csv" : "sweep_samples.csv"), csv.str());
  write_record(cfg, res.trend_holds ? "trend_holds" : "trend_fails", secs, dir);
  std::printf("%s %s (%.1f s)\n", res.trend_holds ? "PASS" : "FAIL", res.trend.c_str(), secs);
  return res.trend_holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven distributionally robust Nash equilibrium seeking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonFlags common;
  auto* solve = app.add_subcommand("solve", "solve the configured game and write iterates, solution and run record");
  add_common(solve, common);

  CalibrateFlags cal;
  auto* calibrate = app.add_subcommand("calibrate", "radius <-> confidence for the concentration inequality");
  calibrate->add_option("--config", cal.config, "report the calibrated radius of every agent of a config");
  calibrate->add_option("--K", cal.K, "samples");
  calibrate->add_option("--beta", cal.beta, "confidence level");
  calibrate->add_option("--eps", cal.eps, "radius");
  calibrate->add_option("--a", cal.constants.a, "light-tail exponent")->capture_default_str();
  calibrate->add_option("--b", cal.constants.b, "rate constant")->capture_default_str();
  calibrate->add_option("--c", cal.constants.c, "prefactor")->capture_default_str();
  calibrate->add_option("--p", cal.constants.p, "uncertainty dimension")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "independent checks");
  verify->require_subcommand(1);
  int grid_points = 0;
  auto* duality = verify->add_subcommand("duality", "worst case against grid LP and golden-section routes");
  add_common(duality, common);
  duality->add_option("--grid", grid_points, "grid points per axis (0: defaults)");
  CoverageFlags cov;
  auto* coverage = verify->add_subcommand("coverage", "joint coverage of the true expected costs");
  add_common(coverage, common);
  coverage->add_option("--trials", cov.trials)->capture_default_str();
  coverage->add_option("--rule", cov.rule, "observed | fixed | calibrated")->capture_default_str();
  coverage->add_option("--beta", cov.beta, "per-agent confidence for the calibrated rule")->capture_default_str();
  int replications = 30;
  auto* consistency = verify->add_subcommand("consistency", "distance to the exact-expectation equilibrium");
  add_common(consistency, common);
  consistency->add_option("--replications", replications)->capture_default_str();
  SensitivityConfig sens;
  auto* sensitivity = verify->add_subcommand("sensitivity", "pseudo-gradient distance against its bound");
  add_common(sensitivity, common);
  sensitivity->add_option("--probes", sens.probes)->capture_default_str();
  sensitivity->add_option("--perturbations", sens.perturbations)->capture_default_str();

  auto* run = app.add_subcommand("run", "case studies");
  run->require_subcommand(1);
  auto* run_ex1 = run->add_subcommand("example1", "two-agent example against the stationarity root");
  auto* run_p2p = run->add_subcommand("p2p", "peer-to-peer market studies");
  auto* run_cournot = run->add_subcommand("cournot", "Nash-Cournot studies");
  for (auto* s : {run_ex1, run_p2p, run_cournot}) add_common(s, common);

  auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
  sweep->require_subcommand(1);
  auto* sw_radius = sweep->add_subcommand("radius", "equilibrium cost over experiment.eps_grid");
  auto* sw_samples = sweep->add_subcommand("samples", "equilibrium cost spread over experiment.K_grid");
  for (auto* s : {sw_radius, sw_samples}) add_common(s, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(common);
    if (calibrate->parsed()) return cmd_calibrate(cal);
    if (duality->parsed()) return cmd_verify_duality(common, grid_points);
    if (coverage->parsed()) return cmd_verify_coverage(common, cov);
    if (consistency->parsed()) return cmd_verify_consistency(common, replications);
    if (sensitivity->parsed()) return cmd_verify_sensitivity(common, sens);
    if (run_ex1->parsed()) return cmd_run_example1(common);
    if (run_p2p->parsed()) return cmd_run_studies(common, ModelKind::kP2P);
    if (run_cournot->parsed()) return cmd_run_studies(common, ModelKind::kCournot);
    if (sw_radius->parsed()) return cmd_sweep(common, true);
    if (sw_samples->parsed()) return cmd_sweep(common, false);
  } catch (const ConfigError& e) {
    for (const auto& s : e.issues()) std::cerr << "config error: " << s << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  }
  return 0;
}
