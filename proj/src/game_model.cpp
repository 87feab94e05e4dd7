#include "drne/game_model.hpp"

#include <cmath>
#include <random>

#include "drne/lp.hpp"

namespace drne {

UncertaintyPolytope::UncertaintyPolytope(Mat C, Vec d) : C_(std::move(C)), d_(std::move(d)) {
  if (C_.cols() < 1) throw Error(ErrorCode::kDimensionMismatch, "UncertaintyPolytope: p must be positive");
  if (C_.rows() != d_.size()) throw Error(ErrorCode::kDimensionMismatch, "UncertaintyPolytope: C and d disagree");
  const int p = this->p();
  lower_.resize(p);
  upper_.resize(p);
  lp::Problem pb;
  pb.A_ub = C_;
  pb.b_ub = d_;
  pb.lower = Vec::Constant(p, -kInf);
  pb.upper = Vec::Constant(p, kInf);
  for (int j = 0; j < p; ++j) {
    for (int sign : {-1, 1}) {
      pb.c = Vec::Zero(p);
      pb.c[j] = sign;
      const lp::Solution sol = lp::solve(pb);
      if (sol.status == lp::Status::kInfeasible) {
        throw Error(ErrorCode::kInfeasible, "UncertaintyPolytope: the set is empty");
      }
      if (sol.status != lp::Status::kOptimal) {
        throw Error(ErrorCode::kUnbounded, "UncertaintyPolytope: the set is unbounded in coordinate " +
                                               std::to_string(j));
      }
      if (sign < 0) upper_[j] = sol.x[j];
      else lower_[j] = sol.x[j];
    }
  }
  // Chebyshev center: maximize the uniform slack.
  lp::Problem cheb;
  cheb.c = Vec::Zero(p + 1);
  cheb.c[p] = -1.0;
  cheb.A_ub = Mat::Zero(C_.rows(), p + 1);
  cheb.b_ub = d_;
  for (Eigen::Index r = 0; r < C_.rows(); ++r) {
    const double nr = C_.row(r).norm();
    cheb.A_ub.row(r).head(p) = C_.row(r);
    cheb.A_ub(r, p) = nr;
  }
  cheb.lower = Vec::Constant(p + 1, -kInf);
  cheb.upper = Vec::Constant(p + 1, kInf);
  cheb.lower[p] = 0.0;
  const lp::Solution cs = lp::solve(cheb);
  interior_ = cs.status == lp::Status::kOptimal ? Vec(cs.x.head(p)) : Vec(0.5 * (lower_ + upper_));
}

UncertaintyPolytope UncertaintyPolytope::box(const Vec& lower, const Vec& upper) {
  const int p = static_cast<int>(lower.size());
  Mat C(2 * p, p);
  C << Mat::Identity(p, p), -Mat::Identity(p, p);
  Vec d(2 * p);
  d << upper, -lower;
  return UncertaintyPolytope(C, d);
}

bool UncertaintyPolytope::contains(const Vec& xi, double tol) const {
  if (xi.size() != p()) return false;
  return m() == 0 || (C_ * xi - d_).maxCoeff() <= tol;
}

double UncertaintyPolytope::diameter_bound(Norm n) const { return norm(upper_ - lower_, n); }

double AgentSpec::epsilon() const {
  if (radius) return *radius;
  if (calibration) return radius_from_confidence(K(), calibration->beta, calibration->constants);
  throw Error(ErrorCode::kInvalidArgument, "agent '" + name + "' has neither a radius nor a calibration block");
}

const char* to_string(AmbiguityMode mode) {
  return mode == AmbiguityMode::kCommon ? "common" : "heterogeneous";
}

AmbiguityMode parse_ambiguity_mode(const std::string& text) {
  if (text == "common") return AmbiguityMode::kCommon;
  if (text == "heterogeneous") return AmbiguityMode::kHeterogeneous;
  throw Error(ErrorCode::kParse, "unknown ambiguity mode '" + text + "'");
}

int GameSpec::total_dim() const {
  int n = 0;
  for (const auto& a : agents) n += a.n();
  return n;
}

int GameSpec::offset(int i) const {
  int n = 0;
  for (int j = 0; j < i; ++j) n += agents[j].n();
  return n;
}

Vec GameSpec::center() const {
  Vec x(total_dim());
  for (int i = 0; i < N(); ++i) x.segment(offset(i), agents[i].n()) = agents[i].X.center();
  return x;
}

Vec GameSpec::with_block(const Vec& x, int i, const Vec& xi) const {
  Vec y = x;
  y.segment(offset(i), agents[i].n()) = xi;
  return y;
}

double uncertain_part(const AgentSpec& agent, const Vec& x, const Vec& xi, int* active) {
  if (!agent.cost.pieces || agent.cost.pieces->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "agent '" + agent.name + "' has no uncertain pieces");
  }
  double best = -kInf;
  int arg = 0;
  const auto& pieces = *agent.cost.pieces;
  for (std::size_t l = 0; l < pieces.size(); ++l) {
    const Vec a = pieces[l].a(x);
    if (a.size() != xi.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "agent '" + agent.name + "': piece and xi dimensions differ");
    }
    const double v = a.dot(xi) + pieces[l].b(x);
    if (v > best) {
      best = v;
      arg = static_cast<int>(l);
    }
  }
  if (active) *active = arg;
  return best;
}

double evaluate_cost(const AgentSpec& agent, const Vec& x, const Vec& xi) {
  if (agent.support && xi.size() != agent.support->p()) {
    throw Error(ErrorCode::kDimensionMismatch, "evaluate_cost: xi has dimension " + std::to_string(xi.size()) +
                                                   ", support has " + std::to_string(agent.support->p()));
  }
  if (agent.support && !agent.support->contains(xi)) {
    throw Error(ErrorCode::kSupportViolation, "evaluate_cost: xi lies outside the support of agent '" +
                                                  agent.name + "'");
  }
  return agent.cost.f(x) + uncertain_part(agent, x, xi);
}

Vec cost_gradient(const AgentSpec& agent, int offset, const Vec& x, const Vec& xi) {
  int l = 0;
  uncertain_part(agent, x, xi, &l);
  const auto& piece = (*agent.cost.pieces)[l];
  return agent.cost.f_gradient(x) + piece.a_jacobian(x).middleCols(offset, agent.n()).transpose() * xi +
         piece.b_gradient(x).segment(offset, agent.n());
}

namespace {

bool close(double analytic, double numeric) {
  return std::abs(analytic - numeric) <= 1e-5 * std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

void check_agent_gradients(const GameSpec& spec, int i, std::mt19937_64& rng, std::vector<Violation>& out) {
  const AgentSpec& ag = spec.agents[i];
  const int off = spec.offset(i);
  const double h = 1e-6;
  for (int probe = 0; probe < 20; ++probe) {
    Vec x(spec.total_dim());
    for (int j = 0; j < spec.N(); ++j) {
      const auto& X = spec.agents[j].X;
      for (int c = 0; c < X.dim(); ++c) {
        std::uniform_real_distribution<double> u(X.lower()[c], X.upper()[c]);
        x[spec.offset(j) + c] = u(rng);
      }
    }
    const Vec gf = ag.cost.f_gradient(x);
    for (int c = 0; c < ag.n(); ++c) {
      Vec xp = x, xm = x;
      xp[off + c] += h;
      xm[off + c] -= h;
      const double num = (ag.cost.f(xp) - ag.cost.f(xm)) / (2 * h);
      if (!close(gf[c], num)) {
        out.push_back({"gradient", i, c, "f gradient disagrees with central differences"});
        return;
      }
      for (std::size_t l = 0; l < ag.cost.pieces->size(); ++l) {
        const auto& pc = (*ag.cost.pieces)[l];
        const Mat J = pc.a_jacobian(x);
        const Vec da = (pc.a(xp) - pc.a(xm)) / (2 * h);
        for (Eigen::Index r = 0; r < da.size(); ++r) {
          if (!close(J(r, off + c), da[r])) {
            out.push_back({"gradient", i, static_cast<int>(l), "a Jacobian disagrees with central differences"});
            return;
          }
        }
        if (!close(pc.b_gradient(x)[off + c], (pc.b(xp) - pc.b(xm)) / (2 * h))) {
          out.push_back({"gradient", i, static_cast<int>(l), "b gradient disagrees with central differences"});
          return;
        }
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_game(const GameSpec& spec, bool check_gradients, std::uint64_t seed) {
  std::vector<Violation> out;
  if (spec.agents.empty()) {
    out.push_back({"dimension", -1, -1, "game has no agents"});
    return out;
  }
  for (int i = 0; i < spec.N(); ++i) {
    const AgentSpec& ag = spec.agents[i];
    const std::string who = "agent " + std::to_string(i) + " ('" + ag.name + "')";
    if (!ag.support) {
      out.push_back({"support", i, -1, who + " has no support polytope"});
      continue;
    }
    if (!ag.cost.f || !ag.cost.f_gradient) out.push_back({"dimension", i, -1, who + " lacks f or its gradient"});
    if (ag.cost.num_pieces() == 0) out.push_back({"dimension", i, -1, who + " has no uncertain pieces"});
    if (ag.cost.lipschitz.size() != ag.n()) {
      out.push_back({"dimension", i, -1, who + " needs one Lipschitz constant per decision"});
    } else if ((ag.cost.lipschitz.array() < 0.0).any()) {
      out.push_back({"dimension", i, -1, who + " has a negative Lipschitz constant"});
    }
    if (ag.samples.empty()) out.push_back({"dimension", i, -1, who + " has no samples"});
    for (int k = 0; k < ag.K(); ++k) {
      if (ag.samples[k].size() != ag.support->p()) {
        out.push_back({"dimension", i, k, who + ": sample " + std::to_string(k) + " has the wrong dimension"});
      } else if (!ag.support->contains(ag.samples[k])) {
        out.push_back({"support", i, k, who + ": sample " + std::to_string(k) + " lies outside the support"});
      }
    }
    if (!ag.radius && !ag.calibration) {
      out.push_back({"radius", i, -1, who + " has neither a radius nor a calibration block"});
    } else if (ag.radius && !(*ag.radius >= 0.0)) {
      out.push_back({"radius", i, -1, who + " has a negative radius"});
    } else if (!ag.radius) {
      try {
        ag.calibration->constants.validate();
        (void)ag.epsilon();
      } catch (const Error& e) {
        out.push_back({"radius", i, -1, who + ": " + e.what()});
      }
    }
  }
  const int n = spec.total_dim();
  if (spec.coupling_rows() > 0) {
    if (spec.A_c.cols() != n || spec.b_c.size() != spec.A_c.rows()) {
      out.push_back({"dimension", -1, -1, "coupling matrix has the wrong shape"});
    } else {
      // Feasibility of the coupling rows on the product of local sets.
      int rows = spec.coupling_rows();
      for (const auto& ag : spec.agents) rows += static_cast<int>(ag.X.A().rows());
      lp::Problem pb;
      pb.c = Vec::Zero(n);
      pb.A_ub = Mat::Zero(rows, n);
      pb.b_ub = Vec::Zero(rows);
      pb.A_ub.topRows(spec.coupling_rows()) = spec.A_c;
      pb.b_ub.head(spec.coupling_rows()) = spec.b_c;
      pb.lower.resize(n);
      pb.upper.resize(n);
      int r = spec.coupling_rows();
      for (int i = 0; i < spec.N(); ++i) {
        const auto& X = spec.agents[i].X;
        const int off = spec.offset(i);
        pb.lower.segment(off, X.dim()) = X.lower();
        pb.upper.segment(off, X.dim()) = X.upper();
        for (Eigen::Index q = 0; q < X.A().rows(); ++q, ++r) {
          pb.A_ub.row(r).segment(off, X.dim()) = X.A().row(q);
          pb.b_ub[r] = X.b()[q];
        }
      }
      if (lp::solve(pb).status != lp::Status::kOptimal) {
        out.push_back({"coupling", -1, -1, "coupling constraints are infeasible on the local sets"});
      }
    }
  }
  if (spec.mode == AmbiguityMode::kCommon) {
    const AgentSpec& a0 = spec.agents.front();
    for (int i = 1; i < spec.N(); ++i) {
      const AgentSpec& ag = spec.agents[i];
      const std::string who = "agent " + std::to_string(i);
      if (!ag.support || !a0.support || !(*ag.support == *a0.support)) {
        out.push_back({"mode", i, -1, who + ": common mode requires an identical support"});
      }
      if (ag.samples != a0.samples) out.push_back({"mode", i, -1, who + ": common mode requires identical samples"});
      bool same_radius = false;
      try {
        same_radius = ag.epsilon() == a0.epsilon();
      } catch (const Error&) {
      }
      if (!same_radius) out.push_back({"mode", i, -1, who + ": common mode requires an identical radius"});
      if (ag.cost.pieces != a0.cost.pieces) {
        out.push_back({"mode", i, -1, who + ": common mode requires the shared uncertain piece list"});
      }
    }
  }
  if (check_gradients && out.empty()) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < spec.N(); ++i) check_agent_gradients(spec, i, rng, out);
  }
  return out;
}

void require_valid(const GameSpec& spec) {
  const auto report = validate_game(spec);
  if (!report.empty()) throw Error(ErrorCode::kInvalidArgument, "invalid game: " + report.front().message);
}

}  // namespace drne
