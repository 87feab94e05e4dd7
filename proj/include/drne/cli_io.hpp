#pragma once

// Config ingestion, result persistence and reproducibility records.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drne/case_studies.hpp"
#include "drne/verification.hpp"

namespace drne {

using Json = nlohmann::ordered_json;

/// Field-addressed problems found while reading a config.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

enum class ModelKind { kExample1, kCournot, kP2P, kQuadratic };
const char* to_string(ModelKind kind);

/// Per-agent entries of the `agents` section.
struct AgentOverride {
  std::string name;
  std::vector<Vec> samples;  // empty: drawn from the model truth
  std::optional<double> radius;
  std::optional<CalibrationRequest> calibration;
};

struct ExperimentDirectives {
  std::string kind = "solve";  // solve | studies | sweep_radius | sweep_samples
  int studies = 1;
  std::vector<double> eps_grid;
  std::vector<int> K_grid;
  int threads = 0;
};

struct RunConfig {
  ModelKind model = ModelKind::kCournot;
  Norm norm = Norm::kL2;
  AmbiguityMode mode = AmbiguityMode::kHeterogeneous;
  Example1Params example1;
  CournotParams cournot;
  P2PParams p2p;
  QuadraticGameParams quadratic;
  double levy = 0.5;          // common-mode Cournot piece slope
  int samples_per_agent = 0;  // 0: model default
  std::optional<double> radius;  // default radius for every agent
  std::optional<CalibrationRequest> calibration;
  std::uint64_t seed = 0;     // sample draws and study seeds
  std::vector<AgentOverride> agents;  // empty: model defaults
  SolverConfig solver;
  ExperimentDirectives experiment;
};

/// Parses and validates a config text. Unknown keys are errors.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical, fully explicit form; parse_config_text(dump) reproduces it.
Json to_json(const RunConfig& cfg);

/// Game of the run. Samples missing from the config are drawn with `seed`.
GameSpec build_spec(const RunConfig& cfg, std::uint64_t seed);

/// Two-agent strongly monotone quadratic game used by the statistical checks.
QuadraticGameParams default_quadratic_params();

std::string sha256_hex(const std::string& data);

struct RunRecord {
  std::string config_hash;
  Json config;  // canonical config the hash is taken over
  std::uint64_t seed = 0;
  std::string tool_version;
  double seconds = 0.0;
  std::string status;

  Json to_json() const;
  static RunRecord from_json(const Json& j);
  /// Recomputes the hash over the stored config.
  bool verify() const;
};

RunRecord make_run_record(const RunConfig& cfg, const std::string& status, double seconds);

/// 17 significant digits.
std::string format_double(double v);

/// iter,step_norm,residual,J_1..J_N,max_violation,mu_norm
std::string iterates_csv(const IterateLog& log, int N);

Json solution_json(const ReformulatedGame& game, const EquilibriumResult& result);

/// Exclusive lock on an output directory, released on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Writes iterates.csv, solution.json and run_record.json into out_dir.
void emit_results(const ReformulatedGame& game, const EquilibriumResult& result, const RunRecord& record,
                  const std::filesystem::path& out_dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// One row per iteration: iter,mean,min,max.
std::string band_csv(const TrajectoryBand& band, int stride = 1);

/// Solves the configured game with the path matching its ambiguity mode.
EquilibriumResult solve_configured(const ReformulatedGame& game, const SolverConfig& cfg);

// --- Experiment harness derived from a config ------------------------------

/// Study s of the configured model, built from its derived seed.
StudyBuilder study_builder(const RunConfig& cfg);
/// Every agent's radius replaced by the grid value.
SweepBuilder radius_sweep_builder(const RunConfig& cfg);
/// Samples per agent replaced by the grid value.
SweepBuilder samples_sweep_builder(const RunConfig& cfg);
/// Game of the configured model with the given per-agent samples and radii.
SampleBuilder sample_builder(const RunConfig& cfg);
/// Discretized truths of the configured model (cournot and quadratic).
std::vector<DiscreteDistribution> model_truths(const RunConfig& cfg);

/// Applies the shared CLI overrides; negative or zero values leave fields as they are.
void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> max_iter,
                     std::optional<double> tol);

inline constexpr const char* kToolVersion = "drne 1.0.0";

}  // namespace drne
