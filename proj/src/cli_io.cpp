#include "drne/cli_io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace drne {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid config:";
  for (const auto& s : issues) out += "\n  " + s;
  return out;
}

ModelKind parse_model(const std::string& s) {
  if (s == "example1") return ModelKind::kExample1;
  if (s == "cournot") return ModelKind::kCournot;
  if (s == "p2p") return ModelKind::kP2P;
  if (s == "quadratic") return ModelKind::kQuadratic;
  throw Error(ErrorCode::kParse, "unknown model '" + s + "'");
}

// Typed field access that records problems instead of throwing, so one pass
// reports every bad field.
class Reader {
 public:
  std::vector<std::string> issues;

  bool object(const Json& j, const std::string& path) {
    if (j.is_object()) return true;
    issues.push_back(path + ": expected an object");
    return false;
  }

  void allow(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) issues.push_back(join(path, it.key()) + ": unknown key");
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const Json* find(const Json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  void number(const Json& j, const std::string& path, const char* key, double& out) {
    if (const Json* v = find(j, key)) read_number(*v, join(path, key), out);
  }

  void integer(const Json& j, const std::string& path, const char* key, int& out) {
    if (const Json* v = find(j, key)) read_int(*v, join(path, key), out);
  }

  void unsigned64(const Json& j, const std::string& path, const char* key, std::uint64_t& out) {
    const Json* v = find(j, key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v->get<std::int64_t>());
    } else {
      issues.push_back(join(path, key) + ": expected a nonnegative integer");
    }
  }

  void boolean(const Json& j, const std::string& path, const char* key, bool& out) {
    const Json* v = find(j, key);
    if (!v) return;
    if (v->is_boolean())
      out = v->get<bool>();
    else
      issues.push_back(join(path, key) + ": expected a boolean");
  }

  void string(const Json& j, const std::string& path, const char* key, std::string& out) {
    const Json* v = find(j, key);
    if (!v) return;
    if (v->is_string())
      out = v->get<std::string>();
    else
      issues.push_back(join(path, key) + ": expected a string");
  }

  void vector(const Json& j, const std::string& path, const char* key, Vec& out) {
    const Json* v = find(j, key);
    if (!v) return;
    const std::string p = join(path, key);
    if (!v->is_array()) {
      issues.push_back(p + ": expected an array of numbers");
      return;
    }
    Vec r(static_cast<int>(v->size()));
    for (std::size_t k = 0; k < v->size(); ++k) read_number((*v)[k], p + "[" + std::to_string(k) + "]", r[k]);
    out = r;
  }

  void doubles(const Json& j, const std::string& path, const char* key, std::vector<double>& out) {
    const Json* v = find(j, key);
    if (v) doubles_at(*v, join(path, key), out);
  }

  void doubles_at(const Json& v, const std::string& p, std::vector<double>& out) {
    if (!v.is_array()) {
      issues.push_back(p + ": expected an array of numbers");
      return;
    }
    out.assign(v.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) read_number(v[k], p + "[" + std::to_string(k) + "]", out[k]);
  }

  void ints(const Json& j, const std::string& path, const char* key, std::vector<int>& out) {
    const Json* v = find(j, key);
    if (v) ints_at(*v, join(path, key), out);
  }

  void ints_at(const Json& v, const std::string& p, std::vector<int>& out) {
    if (!v.is_array()) {
      issues.push_back(p + ": expected an array of integers");
      return;
    }
    out.assign(v.size(), 0);
    for (std::size_t k = 0; k < v.size(); ++k) read_int(v[k], p + "[" + std::to_string(k) + "]", out[k]);
  }

  void matrix(const Json& j, const std::string& path, const char* key, Mat& out) {
    const Json* v = find(j, key);
    if (!v) return;
    const std::string p = join(path, key);
    if (!v->is_array()) {
      issues.push_back(p + ": expected an array of rows");
      return;
    }
    std::vector<std::vector<double>> rows(v->size());
    for (std::size_t r = 0; r < v->size(); ++r) doubles_at((*v)[r], p + "[" + std::to_string(r) + "]", rows[r]);
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        issues.push_back(p + "[" + std::to_string(r) + "]: rows differ in length");
        return;
      }
    }
    Mat m(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    out = m;
  }

  void samples(const Json& v, const std::string& p, std::vector<Vec>& out) {
    if (!v.is_array()) {
      issues.push_back(p + ": expected an array of samples");
      return;
    }
    out.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string pk = p + "[" + std::to_string(k) + "]";
      if (v[k].is_number()) {
        Vec s(1);
        read_number(v[k], pk, s[0]);
        out.push_back(s);
        continue;
      }
      std::vector<double> c;
      doubles_at(v[k], pk, c);
      out.push_back(Eigen::Map<const Vec>(c.data(), static_cast<int>(c.size())));
    }
  }

  void calibration(const Json& v, const std::string& p, std::optional<CalibrationRequest>& out) {
    if (!object(v, p)) return;
    allow(v, p, {"beta", "constants"});
    CalibrationRequest req;
    number(v, p, "beta", req.beta);
    if (const Json* c = find(v, "constants")) {
      const std::string pc = join(p, "constants");
      if (object(*c, pc)) {
        allow(*c, pc, {"a", "A", "c", "b", "p"});
        number(*c, pc, "a", req.constants.a);
        number(*c, pc, "A", req.constants.A);
        number(*c, pc, "c", req.constants.c);
        number(*c, pc, "b", req.constants.b);
        integer(*c, pc, "p", req.constants.p);
      }
    }
    if (!(req.beta > 0.0 && req.beta < 1.0)) issues.push_back(join(p, "beta") + ": must lie in (0, 1)");
    try {
      req.constants.validate();
    } catch (const Error& e) {
      issues.push_back(join(p, "constants") + ": " + e.what());
    }
    out = req;
  }

 private:
  void read_number(const Json& v, const std::string& p, double& out) {
    if (v.is_number() && std::isfinite(v.get<double>()))
      out = v.get<double>();
    else
      issues.push_back(p + ": expected a finite number");
  }

  void read_int(const Json& v, const std::string& p, int& out) {
    if (v.is_number_integer())
      out = v.get<int>();
    else
      issues.push_back(p + ": expected an integer");
  }
};

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (int r = 0; r < m.rows(); ++r) vec_json(m.row(r).transpose()).swap(a.emplace_back());
  return a;
}

Json calibration_json(const CalibrationRequest& c) {
  return Json{{"beta", c.beta},
              {"constants",
               {{"a", c.constants.a}, {"A", c.constants.A}, {"c", c.constants.c}, {"b", c.constants.b},
                {"p", c.constants.p}}}};
}

void read_params(Reader& rd, const Json& j, const std::string& p, RunConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::kExample1: {
      auto& e = cfg.example1;
      rd.allow(j, p, {"c11", "c12", "c21", "c22", "eps1", "eps2", "p1", "p2", "bound"});
      rd.number(j, p, "c11", e.c11);
      rd.number(j, p, "c12", e.c12);
      rd.number(j, p, "c21", e.c21);
      rd.number(j, p, "c22", e.c22);
      rd.number(j, p, "eps1", e.eps1);
      rd.number(j, p, "eps2", e.eps2);
      rd.number(j, p, "p1", e.p1);
      rd.number(j, p, "p2", e.p2);
      rd.number(j, p, "bound", e.bound);
      break;
    }
    case ModelKind::kCournot: {
      auto& c = cfg.cournot;
      rd.allow(j, p, {"N", "c", "w1", "w2", "x_max", "demand_min", "xi_lo", "xi_hi", "levy"});
      rd.integer(j, p, "N", c.N);
      rd.vector(j, p, "c", c.c);
      rd.number(j, p, "w1", c.w1);
      rd.number(j, p, "w2", c.w2);
      rd.number(j, p, "x_max", c.x_max);
      rd.number(j, p, "demand_min", c.demand_min);
      rd.number(j, p, "xi_lo", c.xi_lo);
      rd.number(j, p, "xi_hi", c.xi_hi);
      rd.number(j, p, "levy", cfg.levy);
      break;
    }
    case ModelKind::kP2P: {
      auto& q = cfg.p2p;
      rd.allow(j, p,
               {"N", "neighbors", "chi", "price", "omega1", "omega2", "D_star", "G_min", "G_max", "D_min", "D_max",
                "delta_G", "zeta_lo", "zeta_hi"});
      rd.integer(j, p, "N", q.N);
      if (const Json* nb = rd.find(j, "neighbors")) {
        const std::string pn = Reader::join(p, "neighbors");
        if (!nb->is_array()) {
          rd.issues.push_back(pn + ": expected an array of index lists");
        } else {
          q.neighbors.assign(nb->size(), {});
          for (std::size_t i = 0; i < nb->size(); ++i)
            rd.ints_at((*nb)[i], pn + "[" + std::to_string(i) + "]", q.neighbors[i]);
        }
      }
      rd.number(j, p, "chi", q.chi);
      rd.matrix(j, p, "price", q.price);
      rd.vector(j, p, "omega1", q.omega1);
      rd.vector(j, p, "omega2", q.omega2);
      rd.vector(j, p, "D_star", q.D_star);
      rd.number(j, p, "G_min", q.G_min);
      rd.number(j, p, "G_max", q.G_max);
      rd.number(j, p, "D_min", q.D_min);
      rd.number(j, p, "D_max", q.D_max);
      rd.vector(j, p, "delta_G", q.delta_G);
      rd.vector(j, p, "zeta_lo", q.zeta_lo);
      rd.vector(j, p, "zeta_hi", q.zeta_hi);
      break;
    }
    case ModelKind::kQuadratic: {
      auto& q = cfg.quadratic;
      rd.allow(j, p, {"q", "kappa", "r", "xi_lo", "xi_hi", "bound"});
      rd.vector(j, p, "q", q.q);
      rd.matrix(j, p, "kappa", q.kappa);
      rd.vector(j, p, "r", q.r);
      rd.vector(j, p, "xi_lo", q.xi_lo);
      rd.vector(j, p, "xi_hi", q.xi_hi);
      rd.number(j, p, "bound", q.bound);
      break;
    }
  }
}

Json params_json(const RunConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::kExample1: {
      const auto& e = cfg.example1;
      return Json{{"c11", e.c11}, {"c12", e.c12}, {"c21", e.c21}, {"c22", e.c22}, {"eps1", e.eps1},
                  {"eps2", e.eps2}, {"p1", e.p1},   {"p2", e.p2},   {"bound", e.bound}};
    }
    case ModelKind::kCournot: {
      const auto& c = cfg.cournot;
      return Json{{"N", c.N},           {"c", vec_json(c.c)},         {"w1", c.w1},       {"w2", c.w2},
                  {"x_max", c.x_max},   {"demand_min", c.demand_min}, {"xi_lo", c.xi_lo}, {"xi_hi", c.xi_hi},
                  {"levy", cfg.levy}};
    }
    case ModelKind::kP2P: {
      const auto& q = cfg.p2p;
      Json nb = Json::array();
      for (const auto& row : q.neighbors) nb.push_back(row);
      return Json{{"N", q.N},
                  {"neighbors", nb},
                  {"chi", q.chi},
                  {"price", mat_json(q.price)},
                  {"omega1", vec_json(q.omega1)},
                  {"omega2", vec_json(q.omega2)},
                  {"D_star", vec_json(q.D_star)},
                  {"G_min", q.G_min},
                  {"G_max", q.G_max},
                  {"D_min", q.D_min},
                  {"D_max", q.D_max},
                  {"delta_G", vec_json(q.delta_G)},
                  {"zeta_lo", vec_json(q.zeta_lo)},
                  {"zeta_hi", vec_json(q.zeta_hi)}};
    }
    case ModelKind::kQuadratic: {
      const auto& q = cfg.quadratic;
      return Json{{"q", vec_json(q.q)},         {"kappa", mat_json(q.kappa)},   {"r", vec_json(q.r)},
                  {"xi_lo", vec_json(q.xi_lo)}, {"xi_hi", vec_json(q.xi_hi)}, {"bound", q.bound}};
    }
  }
  return Json::object();
}

int model_agents(const RunConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::kExample1: return 2;
    case ModelKind::kCournot: return cfg.cournot.N;
    case ModelKind::kP2P: return cfg.p2p.N;
    case ModelKind::kQuadratic: return static_cast<int>(cfg.quadratic.q.size());
  }
  return 0;
}

void check_config(const RunConfig& cfg, std::vector<std::string>& issues) {
  const int N = model_agents(cfg);
  if (!cfg.agents.empty() && static_cast<int>(cfg.agents.size()) != N)
    issues.push_back("agents: " + std::to_string(cfg.agents.size()) + " entries for a " + std::to_string(N) +
                     "-agent model");
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    const auto& a = cfg.agents[i];
    const std::string label = "agents[" + std::to_string(i) + "]" + (a.name.empty() ? "" : " (" + a.name + ")");
    if (!a.radius && !a.calibration && !cfg.radius && !cfg.calibration)
      issues.push_back(label + ": needs a radius or a calibration block");
    if (a.radius && a.calibration) issues.push_back(label + ": give either radius or calibration, not both");
    if (a.radius && !(*a.radius >= 0.0)) issues.push_back(label + ".radius: must be nonnegative");
  }
  if (cfg.radius && cfg.calibration)
    issues.push_back("ambiguity: give either radius or calibration, not both");
  if (cfg.radius && !(*cfg.radius >= 0.0)) issues.push_back("ambiguity.radius: must be nonnegative");
  if (cfg.samples_per_agent < 0) issues.push_back("ambiguity.samples_per_agent: must be nonnegative");
  if (cfg.mode == AmbiguityMode::kCommon) {
    if (cfg.model != ModelKind::kCournot) issues.push_back("game.mode: common ambiguity is only built for cournot");
    if (cfg.calibration) issues.push_back("ambiguity.calibration: not available in common mode");
    for (const auto& a : cfg.agents)
      if (!a.samples.empty() || a.calibration) {
        issues.push_back("agents: per-agent samples or calibration conflict with common mode");
        break;
      }
  }
  const auto& x = cfg.experiment;
  static const std::set<std::string> kinds{"solve", "studies", "sweep_radius", "sweep_samples"};
  if (!kinds.count(x.kind)) issues.push_back("experiment.kind: unknown kind '" + x.kind + "'");
  if (x.studies < 1) issues.push_back("experiment.studies: must be positive");
  if (x.threads < 0) issues.push_back("experiment.threads: must be nonnegative");
  for (double e : x.eps_grid)
    if (!(e >= 0.0)) issues.push_back("experiment.eps_grid: radii must be nonnegative");
  for (int K : x.K_grid)
    if (K < 1) issues.push_back("experiment.K_grid: sample counts must be positive");
  try {
    cfg.solver.validate();
  } catch (const Error& e) {
    issues.push_back(std::string("solver: ") + e.what());
  }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

int default_samples(const RunConfig& cfg) {
  if (cfg.samples_per_agent > 0) return cfg.samples_per_agent;
  switch (cfg.model) {
    case ModelKind::kP2P: return defaults::kP2PSamples;
    default: return defaults::kCournotSamples;
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(ErrorCode::kParse, join_issues(issues)), issues_(std::move(issues)) {}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kExample1: return "example1";
    case ModelKind::kCournot: return "cournot";
    case ModelKind::kP2P: return "p2p";
    case ModelKind::kQuadratic: return "quadratic";
  }
  return "?";
}

QuadraticGameParams default_quadratic_params() {
  QuadraticGameParams q;
  q.q = Vec::Constant(2, 2.0);
  q.kappa = Mat::Zero(2, 2);
  q.kappa(0, 1) = 0.5;
  q.kappa(1, 0) = 0.5;
  q.r = (Vec(2) << -3.0, -2.0).finished();
  q.xi_lo = Vec::Constant(2, 0.5);
  q.xi_hi = Vec::Constant(2, 1.5);
  q.bound = 5.0;
  return q;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError({origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what()});
  }
  Reader rd;
  RunConfig cfg;
  if (!rd.object(root, "<root>")) throw ConfigError(rd.issues);
  rd.allow(root, "", {"game", "agents", "ambiguity", "solver", "experiment"});

  const Json* game = rd.find(root, "game");
  if (!game) {
    rd.issues.push_back("game: missing section");
    throw ConfigError(rd.issues);
  }
  if (rd.object(*game, "game")) {
    rd.allow(*game, "game", {"model", "norm", "mode", "params"});
    std::string model = "cournot", norm = "2", mode = "heterogeneous";
    rd.string(*game, "game", "model", model);
    rd.string(*game, "game", "norm", norm);
    rd.string(*game, "game", "mode", mode);
    try {
      cfg.model = parse_model(model);
    } catch (const Error& e) {
      rd.issues.push_back(std::string("game.model: ") + e.what());
    }
    try {
      cfg.norm = parse_norm(norm);
    } catch (const Error& e) {
      rd.issues.push_back(std::string("game.norm: ") + e.what());
    }
    try {
      cfg.mode = parse_ambiguity_mode(mode);
    } catch (const Error& e) {
      rd.issues.push_back(std::string("game.mode: ") + e.what());
    }
    if (cfg.model == ModelKind::kQuadratic) cfg.quadratic = default_quadratic_params();
    if (const Json* prm = rd.find(*game, "params"))
      if (rd.object(*prm, "game.params")) read_params(rd, *prm, "game.params", cfg);
  }

  if (const Json* amb = rd.find(root, "ambiguity")) {
    if (rd.object(*amb, "ambiguity")) {
      rd.allow(*amb, "ambiguity", {"samples_per_agent", "seed", "radius", "calibration"});
      rd.integer(*amb, "ambiguity", "samples_per_agent", cfg.samples_per_agent);
      rd.unsigned64(*amb, "ambiguity", "seed", cfg.seed);
      if (const Json* r = rd.find(*amb, "radius")) {
        double v = 0.0;
        rd.number(*amb, "ambiguity", "radius", v);
        if (r->is_number()) cfg.radius = v;
      }
      if (const Json* c = rd.find(*amb, "calibration")) rd.calibration(*c, "ambiguity.calibration", cfg.calibration);
    }
  }

  if (const Json* agents = rd.find(root, "agents")) {
    if (!agents->is_array()) {
      rd.issues.push_back("agents: expected an array");
    } else {
      for (std::size_t i = 0; i < agents->size(); ++i) {
        const Json& a = (*agents)[i];
        const std::string p = "agents[" + std::to_string(i) + "]";
        AgentOverride ov;
        if (rd.object(a, p)) {
          rd.allow(a, p, {"name", "samples", "radius", "calibration"});
          rd.string(a, p, "name", ov.name);
          if (const Json* s = rd.find(a, "samples")) rd.samples(*s, p + ".samples", ov.samples);
          if (const Json* r = rd.find(a, "radius")) {
            double v = 0.0;
            rd.number(a, p, "radius", v);
            if (r->is_number()) ov.radius = v;
          }
          if (const Json* c = rd.find(a, "calibration")) rd.calibration(*c, p + ".calibration", ov.calibration);
        }
        cfg.agents.push_back(std::move(ov));
      }
    }
  }

  // Model-specific step defaults; an explicit solver entry overrides them.
  if (cfg.model == ModelKind::kCournot) cfg.solver.tau_default = defaults::kCournotStep;
  if (cfg.model == ModelKind::kP2P) cfg.solver.tau_default = defaults::kP2PStep;
  if (const Json* s = rd.find(root, "solver")) {
    if (rd.object(*s, "solver")) {
      rd.allow(*s, "solver",
               {"tau", "tau_default", "delta", "max_iter", "tol_step", "tol_residual", "seed", "randomize_start",
                "feasible_start", "log_stride"});
      auto& c = cfg.solver;
      rd.doubles(*s, "solver", "tau", c.tau);
      rd.number(*s, "solver", "tau_default", c.tau_default);
      rd.number(*s, "solver", "delta", c.delta);
      rd.integer(*s, "solver", "max_iter", c.max_iter);
      rd.number(*s, "solver", "tol_step", c.tol_step);
      rd.number(*s, "solver", "tol_residual", c.tol_residual);
      rd.unsigned64(*s, "solver", "seed", c.seed);
      rd.boolean(*s, "solver", "randomize_start", c.randomize_start);
      rd.boolean(*s, "solver", "feasible_start", c.feasible_start);
      rd.integer(*s, "solver", "log_stride", c.log_stride);
    }
  }

  if (const Json* x = rd.find(root, "experiment")) {
    if (rd.object(*x, "experiment")) {
      rd.allow(*x, "experiment", {"kind", "studies", "eps_grid", "K_grid", "threads"});
      auto& e = cfg.experiment;
      rd.string(*x, "experiment", "kind", e.kind);
      rd.integer(*x, "experiment", "studies", e.studies);
      rd.doubles(*x, "experiment", "eps_grid", e.eps_grid);
      rd.ints(*x, "experiment", "K_grid", e.K_grid);
      rd.integer(*x, "experiment", "threads", e.threads);
    }
  }

  if (rd.issues.empty()) check_config(cfg, rd.issues);
  if (!rd.issues.empty()) throw ConfigError(rd.issues);

  // The game itself must pass the model invariants.
  try {
    const GameSpec spec = build_spec(cfg, cfg.seed);
    std::vector<std::string> issues;
    for (const auto& v : validate_game(spec))
      issues.push_back("game (" + v.kind + (v.agent >= 0 ? ", agent " + std::to_string(v.agent) : "") +
                       "): " + v.message);
    if (!issues.empty()) throw ConfigError(issues);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError({std::string("game: ") + e.what()});
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_text(path), path.string());
}

Json to_json(const RunConfig& cfg) {
  Json root;
  root["game"] = Json{{"model", to_string(cfg.model)},
                      {"norm", to_string(cfg.norm)},
                      {"mode", to_string(cfg.mode)},
                      {"params", params_json(cfg)}};
  Json agents = Json::array();
  for (const auto& a : cfg.agents) {
    Json j;
    j["name"] = a.name;
    Json s = Json::array();
    for (const Vec& v : a.samples) s.push_back(vec_json(v));
    j["samples"] = s;
    if (a.radius) j["radius"] = *a.radius;
    if (a.calibration) j["calibration"] = calibration_json(*a.calibration);
    agents.push_back(j);
  }
  root["agents"] = agents;
  Json amb{{"samples_per_agent", cfg.samples_per_agent}, {"seed", cfg.seed}};
  if (cfg.radius) amb["radius"] = *cfg.radius;
  if (cfg.calibration) amb["calibration"] = calibration_json(*cfg.calibration);
  root["ambiguity"] = amb;
  const auto& s = cfg.solver;
  root["solver"] = Json{{"tau", s.tau},
                        {"tau_default", s.tau_default},
                        {"delta", s.delta},
                        {"max_iter", s.max_iter},
                        {"tol_step", s.tol_step},
                        {"tol_residual", s.tol_residual},
                        {"seed", s.seed},
                        {"randomize_start", s.randomize_start},
                        {"feasible_start", s.feasible_start},
                        {"log_stride", s.log_stride}};
  const auto& e = cfg.experiment;
  root["experiment"] = Json{{"kind", e.kind},
                            {"studies", e.studies},
                            {"eps_grid", e.eps_grid},
                            {"K_grid", e.K_grid},
                            {"threads", e.threads}};
  return root;
}

GameSpec build_spec(const RunConfig& cfg, std::uint64_t seed) {
  const int K = default_samples(cfg);
  GameSpec spec;
  switch (cfg.model) {
    case ModelKind::kExample1:
      spec = build_example1(cfg.example1);
      break;
    case ModelKind::kCournot:
      if (cfg.mode == AmbiguityMode::kCommon) {
        CournotParams prm = cfg.cournot;
        prm.complete();
        std::vector<double> common;
        for (const Vec& v : draw_samples(cournot_truth(prm, std::min(1, prm.N - 1)), K, derive_seed(seed, 0)))
          common.push_back(v[0]);
        spec = build_cournot_common(prm, cfg.levy, common, cfg.radius.value_or(defaults::kCournotRadius[1]));
      } else {
        spec = cournot_study(cfg.cournot, K, seed);
      }
      break;
    case ModelKind::kP2P:
      spec = p2p_study(cfg.p2p, K, seed);
      break;
    case ModelKind::kQuadratic: {
      QuadraticGameParams prm = cfg.quadratic;
      const int N = static_cast<int>(prm.q.size());
      prm.samples.assign(N, {});
      prm.radius.assign(N, 0.1);
      for (int i = 0; i < N; ++i)
        for (const Vec& v : draw_samples(quadratic_truth(prm, i), K, derive_seed(seed, i)))
          prm.samples[i].push_back(v[0]);
      spec = build_quadratic_game(prm);
      break;
    }
  }
  spec.norm = cfg.norm;

  // Config-wide radius or calibration, then per-agent overrides.
  for (auto& ag : spec.agents) {
    if (cfg.radius) {
      ag.radius = *cfg.radius;
      ag.calibration.reset();
    } else if (cfg.calibration) {
      ag.calibration = *cfg.calibration;
      ag.radius.reset();
    }
  }
  for (std::size_t i = 0; i < cfg.agents.size() && i < spec.agents.size(); ++i) {
    const auto& ov = cfg.agents[i];
    auto& ag = spec.agents[i];
    if (!ov.name.empty()) ag.name = ov.name;
    if (!ov.samples.empty()) ag.samples = ov.samples;
    if (ov.radius) {
      ag.radius = *ov.radius;
      ag.calibration.reset();
    } else if (ov.calibration) {
      ag.calibration = *ov.calibration;
      ag.radius.reset();
    }
  }
  return spec;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIo, "sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 15]);
  }
  return out;
}

Json RunRecord::to_json() const {
  return Json{{"config_hash", config_hash},   {"seed", seed}, {"tool_version", tool_version},
              {"seconds", seconds},           {"status", status}, {"config", config}};
}

RunRecord RunRecord::from_json(const Json& j) {
  try {
    RunRecord r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tool_version = j.at("tool_version").get<std::string>();
    r.seconds = j.at("seconds").get<double>();
    r.status = j.at("status").get<std::string>();
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("run record: ") + e.what());
  }
}

bool RunRecord::verify() const { return sha256_hex(config.dump()) == config_hash; }

RunRecord make_run_record(const RunConfig& cfg, const std::string& status, double seconds) {
  RunRecord r;
  r.config = to_json(cfg);
  r.config_hash = sha256_hex(r.config.dump());
  r.seed = cfg.seed;
  r.tool_version = kToolVersion;
  r.seconds = seconds;
  r.status = status;
  return r;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iterates_csv(const IterateLog& log, int N) {
  std::ostringstream os;
  os << "iter,step_norm,residual";
  for (int i = 1; i <= N; ++i) os << ",J_" << i;
  os << ",max_violation,mu_norm\n";
  for (const auto& r : log.records) {
    os << r.iter << ',' << format_double(r.step_norm) << ',' << format_double(r.residual);
    for (int i = 0; i < N; ++i) os << ',' << format_double(i < static_cast<int>(r.J.size()) ? r.J[i] : NAN);
    os << ',' << format_double(r.max_violation) << ',' << format_double(r.mu_norm) << '\n';
  }
  return os.str();
}

Json solution_json(const ReformulatedGame& game, const EquilibriumResult& res) {
  Json agents = Json::array();
  for (int i = 0; i < game.N() && i < static_cast<int>(res.y.size()); ++i) {
    const auto y = ExtendedDecision::unpack(res.y[i], game.layout(i));
    Json a{{"name", game.spec().agents[i].name},
           {"x", vec_json(y.x)},
           {"lambda", y.lambda},
           {"s", vec_json(y.s)},
           {"gamma", vec_json(y.gamma)},
           {"mu", i < static_cast<int>(res.mu.size()) ? vec_json(res.mu[i]) : Json::array()},
           {"epsilon", game.epsilon(i)}};
    if (res.x.size() == game.spec().total_dim() && res.x.allFinite()) a["J"] = game.eval_agent(i, res.y[i], res.x).J;
    agents.push_back(a);
  }
  return Json{{"status", to_string(res.status)},
              {"iterations", res.iterations},
              {"step_norm", res.step_norm},
              {"residual", res.residual},
              {"max_violation", res.max_violation},
              {"x", vec_json(res.x)},
              {"agents", agents}};
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".drne.lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw Error(ErrorCode::kIo, "output directory " + dir.string() + " is locked by another run");
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    os << text;
    if (!os) throw Error(ErrorCode::kIo, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void emit_results(const ReformulatedGame& game, const EquilibriumResult& result, const RunRecord& record,
                  const std::filesystem::path& out_dir) {
  DirectoryLock lock(out_dir);
  write_text(out_dir / "iterates.csv", iterates_csv(result.log, game.N()));
  write_text(out_dir / "solution.json", solution_json(game, result).dump(2) + "\n");
  write_text(out_dir / "run_record.json", record.to_json().dump(2) + "\n");
}

std::string band_csv(const TrajectoryBand& band, int stride) {
  std::ostringstream os;
  os << "iter,mean,min,max\n";
  for (std::size_t t = 0; t < band.mean.size(); ++t)
    os << t * static_cast<std::size_t>(std::max(1, stride)) << ',' << format_double(band.mean[t]) << ','
       << format_double(band.min[t]) << ',' << format_double(band.max[t]) << '\n';
  return os.str();
}

EquilibriumResult solve_configured(const ReformulatedGame& game, const SolverConfig& cfg) {
  if (game.spec().mode == AmbiguityMode::kCommon) return solve_common_vi(build_common_vi(game), cfg);
  return solve_drne(game, cfg);
}

StudyBuilder study_builder(const RunConfig& cfg) {
  return [cfg](int, std::uint64_t seed) { return build_spec(cfg, seed); };
}

SweepBuilder radius_sweep_builder(const RunConfig& cfg) {
  return [cfg](double eps, int, std::uint64_t seed) {
    RunConfig c = cfg;
    c.radius = eps;
    c.calibration.reset();
    for (auto& a : c.agents) {
      a.radius.reset();
      a.calibration.reset();
    }
    return build_spec(c, seed);
  };
}

SweepBuilder samples_sweep_builder(const RunConfig& cfg) {
  return [cfg](double K, int, std::uint64_t seed) {
    RunConfig c = cfg;
    c.samples_per_agent = static_cast<int>(std::lround(K));
    for (auto& a : c.agents) a.samples.clear();
    return build_spec(c, seed);
  };
}

SampleBuilder sample_builder(const RunConfig& cfg) {
  return [cfg](const std::vector<std::vector<Vec>>& samples, const std::vector<double>& eps) {
    RunConfig c = cfg;
    const int N = static_cast<int>(samples.size());
    c.agents.resize(N);
    c.radius.reset();
    c.calibration.reset();
    for (int i = 0; i < N; ++i) {
      c.agents[i].samples = samples[i];
      c.agents[i].radius = eps[i];
      c.agents[i].calibration.reset();
    }
    if (N > 0) c.samples_per_agent = static_cast<int>(samples[0].size());
    return build_spec(c, c.seed);
  };
}

std::vector<DiscreteDistribution> model_truths(const RunConfig& cfg) {
  std::vector<DiscreteDistribution> out;
  switch (cfg.model) {
    case ModelKind::kCournot: {
      CournotParams prm = cfg.cournot;
      prm.complete();
      for (int i = 0; i < prm.N; ++i) out.push_back(cournot_truth(prm, i));
      break;
    }
    case ModelKind::kQuadratic:
      for (int i = 0; i < static_cast<int>(cfg.quadratic.q.size()); ++i) out.push_back(quadratic_truth(cfg.quadratic, i));
      break;
    default:
      throw Error(ErrorCode::kUnsupported,
                  std::string("model_truths: no discretized truth for model ") + to_string(cfg.model));
  }
  return out;
}

void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> max_iter,
                     std::optional<double> tol) {
  if (seed) cfg.seed = *seed;
  if (max_iter && *max_iter > 0) cfg.solver.max_iter = *max_iter;
  if (tol && *tol > 0.0) {
    cfg.solver.tol_step = *tol;
    cfg.solver.tol_residual = *tol;
  }
}

}  // namespace drne
