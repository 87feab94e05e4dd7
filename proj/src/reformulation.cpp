#include "drne/reformulation.hpp"

#include <cmath>

namespace drne {

Vec ExtendedDecision::pack() const {
  Vec y(x.size() + 1 + s.size() + gamma.size());
  y << x, lambda, s, gamma;
  return y;
}

ExtendedDecision ExtendedDecision::unpack(const Vec& y, const AgentLayout& lay) {
  if (y.size() != lay.dim()) throw Error(ErrorCode::kDimensionMismatch, "ExtendedDecision::unpack: wrong size");
  ExtendedDecision e;
  e.x = y.head(lay.n);
  e.lambda = y[lay.n];
  e.s = y.segment(lay.n + 1, lay.K);
  e.gamma = y.tail(lay.K * lay.L * lay.m);
  return e;
}

ReformulatedGame::ReformulatedGame(GameSpec spec) : spec_(std::move(spec)) {
  const auto report = validate_game(spec_);
  if (!report.empty()) throw Error(ErrorCode::kInvalidArgument, "build_gnep: " + report.front().message);
  for (int i = 0; i < spec_.N(); ++i) {
    const AgentSpec& ag = spec_.agents[i];
    AgentLayout lay;
    lay.n = ag.n();
    lay.K = ag.K();
    lay.L = ag.cost.num_pieces();
    lay.m = ag.support->m();
    lay.p = ag.support->p();
    layouts_.push_back(lay);
    eps_.push_back(ag.epsilon());
    offsets_.push_back(spec_.offset(i));
    Mat S(lay.m, lay.K);
    for (int k = 0; k < lay.K; ++k) S.col(k) = ag.support->d() - ag.support->C() * ag.samples[k];
    slack_.push_back(std::move(S));
  }
}

ReformulatedGame build_gnep(const GameSpec& spec) { return ReformulatedGame(spec); }

Vec ReformulatedGame::merged_x(int i, const Vec& y_i, const Vec& x) const {
  Vec xm = x;
  xm.segment(offsets_[i], layouts_[i].n) = y_i.head(layouts_[i].n);
  return xm;
}

std::vector<ReformulatedGame::PieceEval> ReformulatedGame::eval_pieces(int i, const Vec& x,
                                                                       bool derivatives) const {
  const AgentSpec& ag = spec_.agents[i];
  const int n = layouts_[i].n;
  std::vector<PieceEval> out(ag.cost.pieces->size());
  for (std::size_t l = 0; l < out.size(); ++l) {
    const auto& pc = (*ag.cost.pieces)[l];
    out[l].a = pc.a(x);
    out[l].b = pc.b(x);
    if (derivatives) {
      out[l].Ja = pc.a_jacobian(x).middleCols(offsets_[i], n);
      out[l].gb = pc.b_gradient(x).segment(offsets_[i], n);
    }
  }
  return out;
}

AgentEval ReformulatedGame::eval_agent(int i, const Vec& y_i, const Vec& x) const {
  const AgentLayout& lay = layouts_[i];
  if (y_i.size() != lay.dim() || x.size() != spec_.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "eval_agent: dimension mismatch");
  }
  const AgentSpec& ag = spec_.agents[i];
  const Vec xm = merged_x(i, y_i, x);
  const auto pieces = eval_pieces(i, xm, false);
  const Mat& C = ag.support->C();
  const Vec& d = ag.support->d();
  AgentEval ev;
  ev.J = ag.cost.f(xm) + y_i[lay.n] * eps_[i] + y_i.segment(lay.n + 1, lay.K).mean();
  ev.g1.resize(lay.pairs());
  ev.g2.resize(lay.pairs());
  const Norm dn = dual_norm();
  for (int k = 0; k < lay.K; ++k) {
    const Vec& xi = ag.samples[k];
    const Vec slack = d - C * xi;
    for (int l = 0; l < lay.L; ++l) {
      const auto gamma = y_i.segment(lay.gamma_index(k, l), lay.m);
      const int idx = k * lay.L + l;
      ev.g1[idx] = pieces[l].b + pieces[l].a.dot(xi) + gamma.dot(slack) - y_i[lay.s_index(k)];
      ev.g2[idx] = norm(C.transpose() * gamma - pieces[l].a, dn) - y_i[lay.n];
    }
  }
  return ev;
}

Vec ReformulatedGame::constraints(int i, const Vec& y_i, const Vec& x) const {
  const AgentEval ev = eval_agent(i, y_i, x);
  Vec g(num_constraints(i));
  g << ev.g1, ev.g2, Vec::Zero(coupling_rows());
  if (coupling_rows() > 0) g.tail(coupling_rows()) = spec_.A_c * merged_x(i, y_i, x) - spec_.b_c;
  return g;
}

void ReformulatedGame::lagrangian(int i, const Vec& y_i, const Vec& x, const Vec& mu, Vec& grad, Vec& g,
                                  double* J) const {
  const AgentLayout& lay = layouts_[i];
  const AgentSpec& ag = spec_.agents[i];
  const Vec xm = merged_x(i, y_i, x);
  const auto pieces = eval_pieces(i, xm, true);
  const Mat& C = ag.support->C();
  const Norm dn = dual_norm();
  const int KL = lay.pairs();

  grad = Vec::Zero(lay.dim());
  g.resize(num_constraints(i));
  grad.head(lay.n) = ag.cost.f_gradient(xm);
  grad[lay.n] = eps_[i];
  grad.segment(lay.n + 1, lay.K).setConstant(1.0 / lay.K);
  if (J) *J = ag.cost.f(xm) + y_i[lay.n] * eps_[i] + y_i.segment(lay.n + 1, lay.K).mean();

  Vec v(lay.p), u(lay.p);
  for (int k = 0; k < lay.K; ++k) {
    const Vec& xi = ag.samples[k];
    const auto slack = slack_[i].col(k);
    for (int l = 0; l < lay.L; ++l) {
      const int gi = lay.gamma_index(k, l);
      const auto gamma = y_i.segment(gi, lay.m);
      const int idx = k * lay.L + l;
      const PieceEval& pe = pieces[l];
      g[idx] = pe.b + pe.a.dot(xi) + gamma.dot(slack) - y_i[lay.s_index(k)];
      v.noalias() = C.transpose() * gamma;
      v -= pe.a;
      g[KL + idx] = norm(v, dn) - y_i[lay.n];
      const double m1 = mu[idx];
      if (m1 != 0.0) {
        grad.head(lay.n) += m1 * pe.gb;
        grad.head(lay.n).noalias() += m1 * (pe.Ja.transpose() * xi);
        grad.segment(gi, lay.m) += m1 * slack;
        grad[lay.s_index(k)] -= m1;
      }
      const double m2 = mu[KL + idx];
      if (m2 != 0.0) {
        if (dn == Norm::kL2) {
          const double nv = v.norm();
          if (nv > 0.0) u = v / nv;
          else u.setZero();
        } else {
          u = norm_subgradient(v, dn);
        }
        grad.head(lay.n).noalias() -= m2 * (pe.Ja.transpose() * u);
        grad.segment(gi, lay.m).noalias() += m2 * (C * u);
        grad[lay.n] -= m2;
      }
    }
  }
  const int R = coupling_rows();
  if (R > 0) {
    g.tail(R) = spec_.A_c * xm - spec_.b_c;
    grad.head(lay.n) += spec_.A_c.middleCols(offsets_[i], lay.n).transpose() * mu.tail(R);
  }
}

Vec ReformulatedGame::project(int i, const Vec& v) const {
  const AgentLayout& lay = layouts_[i];
  Vec y = v;
  y.head(lay.n) = spec_.agents[i].X.project(v.head(lay.n));
  y[lay.n] = std::max(0.0, v[lay.n]);
  const int gs = lay.n + 1 + lay.K;
  y.tail(lay.dim() - gs) = v.tail(lay.dim() - gs).cwiseMax(0.0);
  return y;
}

Vec ReformulatedGame::initial_point(int i, const Vec& x) const {
  const AgentLayout& lay = layouts_[i];
  const AgentSpec& ag = spec_.agents[i];
  ExtendedDecision e;
  e.x = x.segment(offsets_[i], lay.n);
  e.lambda = 1.0;
  e.s.resize(lay.K);
  for (int k = 0; k < lay.K; ++k) e.s[k] = uncertain_part(ag, x, ag.samples[k]);
  e.gamma = Vec::Zero(lay.K * lay.L * lay.m);
  return e.pack();
}

double ReformulatedGame::max_violation(int i, const Vec& y_i, const Vec& x) const {
  const AgentLayout& lay = layouts_[i];
  double v = spec_.agents[i].X.max_violation(y_i.head(lay.n));
  v = std::max(v, -y_i[lay.n]);
  const int gs = lay.n + 1 + lay.K;
  if (lay.dim() > gs) v = std::max(v, -y_i.tail(lay.dim() - gs).minCoeff());
  const Vec g = constraints(i, y_i, x);
  if (g.size() > 0) v = std::max(v, g.maxCoeff());
  return std::max(0.0, v);
}

conic::ConvexProgram ReformulatedGame::inner_program(int i, const Vec& x, bool with_x, Vec& z0,
                                                     int& aux_offset) const {
  const AgentLayout& lay = layouts_[i];
  const AgentSpec& ag = spec_.agents[i];
  const Mat& C = ag.support->C();
  const Vec& d = ag.support->d();
  const Norm dn = dual_norm();
  const int nx = with_x ? lay.n : 0;
  const int K = lay.K, L = lay.L, m = lay.m, p = lay.p;
  const int lo = nx, so = nx + 1, go = nx + 1 + K, uo = go + K * L * m;
  const int naux = dn == Norm::kL1 ? K * L * p : 0;
  const int dim = uo + naux;
  aux_offset = uo;
  const Vec xbar_i = x.segment(offsets_[i], lay.n);
  const auto pieces = eval_pieces(i, x, with_x);

  std::vector<std::pair<Vec, double>> rows;
  Mat E;
  Vec e;
  auto unit = [&](int j, double val) {
    Vec r = Vec::Zero(dim);
    r[j] = val;
    return r;
  };

  // Own-decision constraints and a strictly feasible x0.
  Vec x0 = xbar_i;
  if (with_x) {
    const Polyhedron& X = ag.X;
    const auto eq_pairs = X.equality_pairs();
    std::vector<char> is_eq(X.A().rows(), 0);
    for (const auto& [r, s] : eq_pairs) is_eq[r] = is_eq[s] = 1;
    std::vector<std::pair<Vec, double>> xrows;
    for (Eigen::Index r = 0; r < X.A().rows(); ++r)
      if (!is_eq[r]) xrows.emplace_back(X.A().row(r).transpose(), X.b()[r]);
    for (int r = 0; r < coupling_rows(); ++r) {
      const Vec own = spec_.A_c.row(r).segment(offsets_[i], lay.n).transpose();
      if (own.cwiseAbs().maxCoeff() == 0.0) continue;
      const double rest = spec_.A_c.row(r).dot(x) - own.dot(xbar_i);
      xrows.emplace_back(own, spec_.b_c[r] - rest);
    }
    Mat Ex(static_cast<Eigen::Index>(eq_pairs.size()), lay.n);
    Vec ex(static_cast<Eigen::Index>(eq_pairs.size()));
    for (std::size_t q = 0; q < eq_pairs.size(); ++q) {
      Ex.row(static_cast<Eigen::Index>(q)) = X.A().row(eq_pairs[q].first);
      ex[static_cast<Eigen::Index>(q)] = X.b()[eq_pairs[q].first];
    }
    Mat Gx(static_cast<Eigen::Index>(xrows.size()), lay.n);
    Vec hx(static_cast<Eigen::Index>(xrows.size()));
    for (std::size_t q = 0; q < xrows.size(); ++q) {
      Gx.row(static_cast<Eigen::Index>(q)) = xrows[q].first.transpose();
      hx[static_cast<Eigen::Index>(q)] = xrows[q].second;
    }
    Vec lower = X.lower(), upper = X.upper();
    double margin = 0.0;
    auto start = conic::interior_point(Gx, hx, Ex, ex, lower, upper, &margin);
    if (!start) throw Error(ErrorCode::kInfeasible, "best response: agent " + std::to_string(i) + " has no feasible decision");
    if (margin < 1e-9) {
      // No strict interior (e.g. a coupling row pins the decision): relax slightly.
      const double relax = 1e-9;
      hx.array() += relax * (1.0 + hx.cwiseAbs().array());
      lower.array() -= relax * (1.0 + lower.cwiseAbs().array());
      upper.array() += relax * (1.0 + upper.cwiseAbs().array());
      start = conic::interior_point(Gx, hx, Ex, ex, lower, upper, &margin);
      if (!start || margin <= 0.0) {
        throw Error(ErrorCode::kInfeasible, "best response: agent " + std::to_string(i) + " has no interior");
      }
    }
    x0 = *start;
    for (int j = 0; j < lay.n; ++j) {
      rows.emplace_back(unit(j, 1.0), upper[j]);
      rows.emplace_back(unit(j, -1.0), -lower[j]);
    }
    for (Eigen::Index q = 0; q < Gx.rows(); ++q) {
      Vec r = Vec::Zero(dim);
      r.head(lay.n) = Gx.row(q).transpose();
      rows.emplace_back(r, hx[q]);
    }
    E = Mat::Zero(Ex.rows(), dim);
    E.leftCols(lay.n) = Ex;
    e = ex;
  }

  // a_l(x_i) = a0_l + Ja (x_i - xbar_i), exact for own-affine pieces.
  std::vector<Vec> a_at0(L);
  std::vector<double> b_at0(L);
  double cap = 0.0;
  for (int l = 0; l < L; ++l) {
    a_at0[l] = pieces[l].a;
    b_at0[l] = pieces[l].b;
    double bound = norm(pieces[l].a, dn);
    if (with_x) {
      a_at0[l] += pieces[l].Ja * (x0 - xbar_i);
      b_at0[l] += pieces[l].gb.dot(x0 - xbar_i);
      for (int j = 0; j < lay.n; ++j) {
        const double span = std::max(std::abs(ag.X.upper()[j] - xbar_i[j]), std::abs(ag.X.lower()[j] - xbar_i[j]));
        bound += norm(pieces[l].Ja.col(j), dn) * span;
      }
    }
    cap = std::max(cap, bound);
  }
  cap += 1.0;

  conic::ConvexProgram prog;
  prog.c = Vec::Zero(dim);
  prog.c[lo] = eps_[i];
  prog.c.segment(so, K).setConstant(1.0 / K);
  rows.emplace_back(unit(lo, -1.0), 0.0);
  rows.emplace_back(unit(lo, 1.0), cap);
  for (int j = go; j < uo; ++j) rows.emplace_back(unit(j, -1.0), 0.0);

  // Strictly feasible (gamma, lambda, s, u) around x0.
  const Vec ones = Vec::Ones(m);
  const double ct1 = norm(C.transpose() * ones, dn);
  const double theta = std::min(0.1, ct1 > 0.0 ? 0.25 / ct1 : 0.1);
  z0 = Vec::Zero(dim);
  if (with_x) z0.head(lay.n) = x0;
  z0.segment(go, K * L * m).setConstant(theta);
  const Vec gamma0 = Vec::Constant(m, theta);
  double lam0 = 0.0;

  for (int k = 0; k < K; ++k) {
    const Vec& xi = ag.samples[k];
    const Vec slack = d - C * xi;
    double s0 = -kInf;
    for (int l = 0; l < L; ++l) {
      const int gi = go + (k * L + l) * m;
      const PieceEval& pe = pieces[l];
      // g1 row.
      Vec r = Vec::Zero(dim);
      double rhs = -(pe.b + pe.a.dot(xi));
      if (with_x) {
        const Vec gx = pe.gb + pe.Ja.transpose() * xi;
        r.head(lay.n) = gx;
        rhs += gx.dot(xbar_i);
      }
      r[so + k] = -1.0;
      r.segment(gi, m) = slack;
      rows.emplace_back(r, rhs);
      s0 = std::max(s0, b_at0[l] + a_at0[l].dot(xi) + gamma0.dot(slack) + 1.0);

      // g2: || C' gamma - a(x) ||_* <= lambda, with v = Ag z + bg.
      Mat Av = Mat::Zero(p, dim);
      Av.middleCols(gi, m) = C.transpose();
      Vec bv = -pe.a;
      if (with_x) {
        Av.leftCols(lay.n) = -pe.Ja;
        bv += pe.Ja * xbar_i;
      }
      const Vec v0 = C.transpose() * gamma0 - a_at0[l];
      switch (dn) {
        case Norm::kL2: {
          conic::SocConstraint cone;
          cone.A = Av;
          cone.b = bv;
          cone.c = unit(lo, 1.0);
          cone.d = 0.0;
          prog.cones.push_back(std::move(cone));
          lam0 = std::max(lam0, v0.norm());
          break;
        }
        case Norm::kLinf:
          for (int j = 0; j < p; ++j) {
            for (double sg : {1.0, -1.0}) {
              Vec rr = sg * Av.row(j).transpose();
              rr[lo] -= 1.0;
              rows.emplace_back(rr, -sg * bv[j]);
            }
          }
          lam0 = std::max(lam0, v0.cwiseAbs().maxCoeff());
          break;
        case Norm::kL1: {
          const int ui = uo + (k * L + l) * p;
          Vec sum = Vec::Zero(dim);
          double usum = 0.0;
          for (int j = 0; j < p; ++j) {
            for (double sg : {1.0, -1.0}) {
              Vec rr = sg * Av.row(j).transpose();
              rr[ui + j] -= 1.0;
              rows.emplace_back(rr, -sg * bv[j]);
            }
            sum[ui + j] = 1.0;
            z0[ui + j] = std::abs(v0[j]) + 0.25 / p;
            usum += z0[ui + j];
          }
          sum[lo] = -1.0;
          rows.emplace_back(sum, 0.0);
          lam0 = std::max(lam0, usum);
          break;
        }
      }
    }
    z0[so + k] = s0;
  }
  z0[lo] = lam0 + 0.25;

  prog.G.resize(static_cast<Eigen::Index>(rows.size()), dim);
  prog.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t q = 0; q < rows.size(); ++q) {
    prog.G.row(static_cast<Eigen::Index>(q)) = rows[q].first.transpose();
    prog.h[static_cast<Eigen::Index>(q)] = rows[q].second;
  }
  prog.E = E;
  prog.e = e;

  if (with_x) {
    const int n = lay.n;
    const int off = offsets_[i];
    const Vec xfull = x;
    const CostModel* cost = &ag.cost;
    conic::SmoothTerm term;
    term.value = [cost, xfull, off, n](const Vec& z) {
      Vec xx = xfull;
      xx.segment(off, n) = z.head(n);
      return cost->f(xx);
    };
    term.gradient = [cost, xfull, off, n, dim](const Vec& z) {
      Vec xx = xfull;
      xx.segment(off, n) = z.head(n);
      Vec gz = Vec::Zero(dim);
      gz.head(n) = cost->f_gradient(xx);
      return gz;
    };
    term.hessian = [cost, xfull, off, n, dim](const Vec& z) {
      Vec xx = xfull;
      xx.segment(off, n) = z.head(n);
      Mat H = Mat::Zero(dim, dim);
      if (cost->f_hessian) {
        H.topLeftCorner(n, n) = cost->f_hessian(xx);
      } else {
        const double hstep = 1e-5;
        for (int j = 0; j < n; ++j) {
          Vec xp = xx, xm = xx;
          xp[off + j] += hstep;
          xm[off + j] -= hstep;
          H.block(0, j, n, 1) = (cost->f_gradient(xp) - cost->f_gradient(xm)) / (2 * hstep);
        }
        H.topLeftCorner(n, n) = 0.5 * (H.topLeftCorner(n, n) + H.topLeftCorner(n, n).transpose()).eval();
      }
      return H;
    };
    prog.smooth = std::move(term);
  }
  return prog;
}

WorstCase ReformulatedGame::worst_case(int i, const Vec& x, double tol) const {
  if (x.size() != spec_.total_dim()) throw Error(ErrorCode::kDimensionMismatch, "worst_case: x has wrong size");
  const AgentLayout& lay = layouts_[i];
  Vec z0;
  int aux = 0;
  const conic::ConvexProgram prog = inner_program(i, x, false, z0, aux);
  conic::BarrierOptions opt;
  opt.tol = tol;
  const conic::BarrierResult res = conic::solve(prog, z0, opt);
  WorstCase wc;
  wc.value = spec_.agents[i].cost.f(x) + res.objective;
  wc.gap = res.gap;
  wc.converged = res.converged;
  wc.y.x = x.segment(offsets_[i], lay.n);
  wc.y.lambda = res.z[0];
  wc.y.s = res.z.segment(1, lay.K);
  wc.y.gamma = res.z.segment(1 + lay.K, lay.K * lay.L * lay.m);
  return wc;
}

WorstCase ReformulatedGame::joint_best_response(int i, const Vec& x, double tol) const {
  if (!spec_.agents[i].cost.own_affine) {
    throw Error(ErrorCode::kUnsupported, "joint_best_response: pieces of agent " + std::to_string(i) +
                                             " are not affine in its own decision");
  }
  const AgentLayout& lay = layouts_[i];
  Vec z0;
  int aux = 0;
  const conic::ConvexProgram prog = inner_program(i, x, true, z0, aux);
  conic::BarrierOptions opt;
  opt.tol = tol;
  const conic::BarrierResult res = conic::solve(prog, z0, opt);
  WorstCase wc;
  wc.value = prog.objective(res.z);
  wc.gap = res.gap;
  wc.converged = res.converged;
  wc.y.x = res.z.head(lay.n);
  wc.y.lambda = res.z[lay.n];
  wc.y.s = res.z.segment(lay.n + 1, lay.K);
  wc.y.gamma = res.z.segment(lay.n + 1 + lay.K, lay.K * lay.L * lay.m);
  return wc;
}

double worst_case_value(const ReformulatedGame& game, int i, const Vec& x) {
  const WorstCase wc = game.worst_case(i, x);
  if (!wc.converged) {
    throw Error(ErrorCode::kNotConverged, "worst_case_value: inner solve stopped with gap " + std::to_string(wc.gap));
  }
  return wc.value;
}

// ---------------------------------------------------------------------------

CommonVIProblem::CommonVIProblem(const ReformulatedGame& game) : game_(&game) {
  if (game.spec().mode != AmbiguityMode::kCommon) {
    throw Error(ErrorCode::kInvalidArgument, "build_common_vi: game is not in common ambiguity mode");
  }
  layout_ = game.layout(0);
  layout_.n = 0;
  n_x_ = game.spec().total_dim();
}

CommonVIProblem build_common_vi(const ReformulatedGame& game) { return CommonVIProblem(game); }

Vec CommonVIProblem::T(const Vec& omega) const {
  const GameSpec& spec = game_->spec();
  const Vec x = omega.head(n_x_);
  Vec t = Vec::Zero(dim());
  for (int i = 0; i < spec.N(); ++i) t.segment(spec.offset(i), spec.agents[i].n()) = spec.agents[i].cost.f_gradient(x);
  t[n_x_] = game_->epsilon(0);
  t.segment(n_x_ + 1, layout_.K).setConstant(1.0 / layout_.K);
  return t;
}

void CommonVIProblem::lagrangian(const Vec& omega, const Vec& mu, Vec& grad, Vec& g) const {
  const GameSpec& spec = game_->spec();
  const AgentSpec& ag = spec.agents.front();
  const Vec x = omega.head(n_x_);
  const Mat& C = ag.support->C();
  const Vec& d = ag.support->d();
  const Norm dn = game_->dual_norm();
  const int K = layout_.K, L = layout_.L, m = layout_.m, KL = layout_.pairs();
  const int lam = n_x_;
  auto gidx = [&](int k, int l) { return n_x_ + 1 + K + (k * L + l) * m; };

  grad = T(omega);
  g.resize(num_constraints());
  const auto& pieces = *ag.cost.pieces;
  for (int l = 0; l < L; ++l) {
    const Vec a = pieces[l].a(x);
    const double b = pieces[l].b(x);
    const Mat Ja = pieces[l].a_jacobian(x);
    const Vec gb = pieces[l].b_gradient(x);
    for (int k = 0; k < K; ++k) {
      const Vec& xi = ag.samples[k];
      const Vec slack = d - C * xi;
      const auto gamma = omega.segment(gidx(k, l), m);
      const int idx = k * L + l;
      g[idx] = b + a.dot(xi) + gamma.dot(slack) - omega[n_x_ + 1 + k];
      const Vec v = C.transpose() * gamma - a;
      g[KL + idx] = norm(v, dn) - omega[lam];
      const double m1 = mu[idx];
      if (m1 != 0.0) {
        grad.head(n_x_) += m1 * (gb + Ja.transpose() * xi);
        grad.segment(gidx(k, l), m) += m1 * slack;
        grad[n_x_ + 1 + k] -= m1;
      }
      const double m2 = mu[KL + idx];
      if (m2 != 0.0) {
        const Vec u = norm_subgradient(v, dn);
        grad.head(n_x_) -= m2 * (Ja.transpose() * u);
        grad.segment(gidx(k, l), m) += m2 * (C * u);
        grad[lam] -= m2;
      }
    }
  }
  const int R = game_->coupling_rows();
  if (R > 0) {
    g.tail(R) = spec.A_c * x - spec.b_c;
    grad.head(n_x_) += spec.A_c.transpose() * mu.tail(R);
  }
}

Vec CommonVIProblem::project(const Vec& v) const {
  const GameSpec& spec = game_->spec();
  Vec w = v;
  for (int i = 0; i < spec.N(); ++i) {
    const int off = spec.offset(i);
    const int n = spec.agents[i].n();
    w.segment(off, n) = spec.agents[i].X.project(v.segment(off, n));
  }
  w[n_x_] = std::max(0.0, v[n_x_]);
  const int gs = n_x_ + 1 + layout_.K;
  w.tail(dim() - gs) = v.tail(dim() - gs).cwiseMax(0.0);
  return w;
}

Vec CommonVIProblem::initial_point() const {
  const Vec x = game_->spec().center();
  const Vec y0 = game_->initial_point(0, x);
  Vec omega(dim());
  omega << x, y0.tail(y0.size() - game_->layout(0).n);
  return omega;
}

Vec CommonVIProblem::agent_view(int i, const Vec& omega) const {
  const GameSpec& spec = game_->spec();
  Vec y(game_->layout(i).dim());
  y << omega.segment(spec.offset(i), spec.agents[i].n()), omega.tail(dim() - n_x_);
  return y;
}

}  // namespace drne
