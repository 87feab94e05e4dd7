#include "drne/case_studies.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drne {

namespace {

std::shared_ptr<const PieceList> single_piece(AffinePiece piece) {
  return std::make_shared<const PieceList>(PieceList{std::move(piece)});
}

Vec vec1(double v) { return Vec::Constant(1, v); }

}  // namespace

// --- Example 1 ------------------------------------------------------------

GameSpec build_example1(const Example1Params& prm) {
  if (!(prm.c11 > 0.0) || !(prm.c22 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "build_example1: c11 and c22 must be positive");
  }
  const double B = prm.bound;
  auto support = std::make_shared<const UncertaintyPolytope>(
      UncertaintyPolytope::box(Vec::Constant(2, -B), Vec::Constant(2, B)));
  AffinePiece piece;
  piece.a = [](const Vec& x) { return Vec(x); };
  piece.a_jacobian = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  piece.b = [](const Vec&) { return 0.0; };
  piece.b_gradient = [](const Vec&) { return Vec(Vec::Zero(2)); };
  auto pieces = single_piece(piece);

  GameSpec spec;
  const double c11 = prm.c11, c12 = prm.c12, c21 = prm.c21, c22 = prm.c22;
  for (int i = 0; i < 2; ++i) {
    AgentSpec ag;
    ag.name = "agent" + std::to_string(i + 1);
    ag.X = Polyhedron::box(vec1(-B), vec1(B));
    if (i == 0) {
      ag.cost.f = [=](const Vec& x) { return c11 * x[0] * x[0] + c12 * x[0] * x[1]; };
      ag.cost.f_gradient = [=](const Vec& x) { return vec1(2 * c11 * x[0] + c12 * x[1]); };
      ag.cost.f_hessian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, 2 * c11)); };
    } else {
      ag.cost.f = [=](const Vec& x) { return c21 * x[0] * x[1] + c22 * x[1] * x[1]; };
      ag.cost.f_gradient = [=](const Vec& x) { return vec1(c21 * x[0] + 2 * c22 * x[1]); };
      ag.cost.f_hessian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, 2 * c22)); };
    }
    ag.cost.pieces = pieces;
    ag.cost.lipschitz = vec1(1.0);
    ag.cost.own_affine = true;
    ag.support = support;
    const double mass = i == 0 ? prm.p1 : prm.p2;
    ag.samples = {Vec::Constant(2, mass)};
    ag.radius = i == 0 ? prm.eps1 : prm.eps2;
    spec.agents.push_back(std::move(ag));
  }
  return spec;
}

Vec example1_stationarity_residual(const Example1Params& prm, const Vec& x) {
  const double nx = x.norm();
  Vec r(2);
  r[0] = 2 * prm.c11 * x[0] + prm.c12 * x[1] + prm.eps1 * x[0] / nx + prm.p1;
  r[1] = prm.c21 * x[0] + 2 * prm.c22 * x[1] + prm.eps2 * x[1] / nx + prm.p2;
  return r;
}

Vec solve_example1_stationarity(const Example1Params& prm) {
  auto F = [&](const Vec& x) { return example1_stationarity_residual(prm, x); };
  auto jac = [&](const Vec& x) {
    const double n = x.norm();
    const double n3 = n * n * n;
    Mat Jm(2, 2);
    Jm(0, 0) = 2 * prm.c11 + prm.eps1 * x[1] * x[1] / n3;
    Jm(0, 1) = prm.c12 - prm.eps1 * x[0] * x[1] / n3;
    Jm(1, 0) = prm.c21 - prm.eps2 * x[0] * x[1] / n3;
    Jm(1, 1) = 2 * prm.c22 + prm.eps2 * x[0] * x[0] / n3;
    return Jm;
  };
  const std::vector<Vec> starts = {
      (Vec(2) << -1.0, -1.0).finished(), (Vec(2) << 1.0, -1.0).finished(), (Vec(2) << -1.0, 1.0).finished(),
      (Vec(2) << 1.0, 1.0).finished(),   (Vec(2) << 2.0, -8.0).finished(), (Vec(2) << -8.0, 2.0).finished(),
      (Vec(2) << -5.0, -5.0).finished(), (Vec(2) << 5.0, 5.0).finished()};
  for (const Vec& start : starts) {
    Vec x = start;
    for (int it = 0; it < 200; ++it) {
      const Vec r = F(x);
      const double rn = r.norm();
      if (rn <= 1e-12) return x;
      const Vec dx = jac(x).fullPivLu().solve(-r);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 50; ++ls) {
        const Vec trial = x + t * dx;
        if (trial.norm() > 0.0 && F(trial).norm() < (1.0 - 1e-4 * t) * rn) {
          x = trial;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    if (x.norm() > 0.0 && F(x).norm() <= 1e-10) return x;
  }
  throw Error(ErrorCode::kNotConverged, "solve_example1_stationarity: Newton failed from every start");
}

// --- Quadratic test games -------------------------------------------------

GameSpec build_quadratic_game(const QuadraticGameParams& prm) {
  const int N = static_cast<int>(prm.q.size());
  if (prm.kappa.rows() != N || prm.kappa.cols() != N || prm.r.size() != N || prm.xi_lo.size() != N ||
      prm.xi_hi.size() != N || static_cast<int>(prm.samples.size()) != N ||
      static_cast<int>(prm.radius.size()) != N) {
    throw Error(ErrorCode::kDimensionMismatch, "build_quadratic_game: parameter sizes disagree");
  }
  GameSpec spec;
  for (int i = 0; i < N; ++i) {
    AgentSpec ag;
    ag.name = "player" + std::to_string(i + 1);
    ag.X = Polyhedron::box(vec1(-prm.bound), vec1(prm.bound));
    const double qi = prm.q[i];
    const double ri = prm.r[i];
    const Vec ki = prm.kappa.row(i).transpose();
    ag.cost.f = [=](const Vec& x) {
      double cross = 0.0;
      for (int j = 0; j < N; ++j)
        if (j != i) cross += ki[j] * x[j];
      return 0.5 * qi * x[i] * x[i] + x[i] * cross + ri * x[i];
    };
    ag.cost.f_gradient = [=](const Vec& x) {
      double g = qi * x[i] + ri;
      for (int j = 0; j < N; ++j)
        if (j != i) g += ki[j] * x[j];
      return vec1(g);
    };
    ag.cost.f_hessian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, qi)); };
    AffinePiece piece;
    piece.a = [i](const Vec& x) { return vec1(x[i]); };
    piece.a_jacobian = [i, N](const Vec&) {
      Mat Jm = Mat::Zero(1, N);
      Jm(0, i) = 1.0;
      return Jm;
    };
    piece.b = [](const Vec&) { return 0.0; };
    piece.b_gradient = [N](const Vec&) { return Vec(Vec::Zero(N)); };
    ag.cost.pieces = single_piece(piece);
    ag.cost.lipschitz = vec1(1.0);
    ag.cost.own_affine = true;
    ag.support = std::make_shared<const UncertaintyPolytope>(
        UncertaintyPolytope::box(vec1(prm.xi_lo[i]), vec1(prm.xi_hi[i])));
    for (double s : prm.samples[i]) ag.samples.push_back(vec1(s));
    ag.radius = prm.radius[i];
    spec.agents.push_back(std::move(ag));
  }
  return spec;
}

Vec quadratic_mean_equilibrium(const QuadraticGameParams& prm, const Vec& mean_xi) {
  const int N = static_cast<int>(prm.q.size());
  Mat M = prm.kappa;
  for (int i = 0; i < N; ++i) M(i, i) = prm.q[i];
  const Vec rhs = -(prm.r + mean_xi);
  Vec x = M.fullPivLu().solve(rhs);
  if (x.cwiseAbs().maxCoeff() <= prm.bound) return x;
  // Projected Gauss-Seidel on the box (contractive for diagonally dominant M).
  x = x.cwiseMax(-prm.bound).cwiseMin(prm.bound);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < N; ++i) {
      double s = rhs[i];
      for (int j = 0; j < N; ++j)
        if (j != i) s -= M(i, j) * x[j];
      const double xi = std::clamp(s / M(i, i), -prm.bound, prm.bound);
      change = std::max(change, std::abs(xi - x[i]));
      x[i] = xi;
    }
    if (change <= 1e-15) break;
  }
  return x;
}

DiscreteDistribution quadratic_truth(const QuadraticGameParams& prm, int i) {
  const double lo = prm.xi_lo[i], hi = prm.xi_hi[i];
  return discretized_normal(0.5 * (lo + hi), (hi - lo) / 6.0, lo, hi, defaults::kTruthAtoms);
}

// --- Peer-to-peer market --------------------------------------------------

void P2PParams::complete() {
  if (neighbors.empty()) {
    neighbors.assign(N, {});
    for (int m = 1; m < N; ++m) {
      neighbors[0].push_back(m);
      neighbors[m].push_back(0);
    }
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());
  if (price.size() == 0) {
    price = Mat::Zero(N, N);
    for (int m = 0; m < N; ++m)
      for (int i = 0; i < N; ++i) price(m, i) = defaults::kP2PPrice + defaults::kP2PPriceSpread * ((i + 2 * m) % 5);
  }
  if (omega1.size() == 0) omega1 = Vec::Constant(N, defaults::kP2POmega1);
  if (omega2.size() == 0) omega2 = Vec::Constant(N, defaults::kP2POmega2);
  if (D_star.size() == 0) {
    D_star.resize(N);
    for (int i = 0; i < N; ++i) D_star[i] = defaults::kP2PDemandTarget[i % 5];
  }
  if (delta_G.size() == 0) {
    delta_G.resize(N);
    for (int i = 0; i < N; ++i) delta_G[i] = defaults::kP2PRenewable[i % 5];
  }
  if (zeta_lo.size() == 0) zeta_lo = (Vec(2) << defaults::kP2PZetaLo[0], defaults::kP2PZetaLo[1]).finished();
  if (zeta_hi.size() == 0) zeta_hi = (Vec(2) << defaults::kP2PZetaHi[0], defaults::kP2PZetaHi[1]).finished();
  if (radius.empty()) radius.assign(N, 0.5 * (defaults::kP2PRadiusLo + defaults::kP2PRadiusHi));
}

void P2PParams::validate() const {
  if (static_cast<int>(neighbors.size()) != N) throw Error(ErrorCode::kInvalidArgument, "p2p: one neighbor list per agent");
  for (int i = 0; i < N; ++i) {
    for (int m : neighbors[i]) {
      if (m < 0 || m >= N || m == i) throw Error(ErrorCode::kInvalidArgument, "p2p: invalid neighbor index");
      const auto& back = neighbors[m];
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        throw Error(ErrorCode::kInvalidArgument, "p2p: neighbor sets are not symmetric (" + std::to_string(i) +
                                                     ", " + std::to_string(m) + ")");
      }
    }
  }
  if (chi < 0.0) throw Error(ErrorCode::kInvalidArgument, "p2p: trade cap must be nonnegative");
  if ((omega1.array() <= 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "p2p: omega1 must be positive");
  if (G_min > G_max || D_min > D_max) throw Error(ErrorCode::kInvalidArgument, "p2p: bounds are not ordered");
  if (static_cast<int>(samples.size()) != N || static_cast<int>(radius.size()) != N) {
    throw Error(ErrorCode::kInvalidArgument, "p2p: samples and radius needed for every agent");
  }
}

int p2p_trade_index(const P2PParams& prm, int i, int m) {
  const auto& nb = prm.neighbors[i];
  const auto it = std::find(nb.begin(), nb.end(), m);
  return it == nb.end() ? -1 : 2 + static_cast<int>(it - nb.begin());
}

GameSpec build_p2p(P2PParams prm) {
  prm.complete();
  prm.validate();
  const int N = prm.N;
  std::vector<int> offsets(N + 1, 0);
  for (int i = 0; i < N; ++i) offsets[i + 1] = offsets[i] + 2 + static_cast<int>(prm.neighbors[i].size());
  const int total = offsets[N];
  auto support = std::make_shared<const UncertaintyPolytope>(UncertaintyPolytope::box(prm.zeta_lo, prm.zeta_hi));

  GameSpec spec;
  for (int i = 0; i < N; ++i) {
    const int n = 2 + static_cast<int>(prm.neighbors[i].size());
    const int off = offsets[i];
    Vec lo(n), hi(n);
    lo.head(2) << prm.G_min, prm.D_min;
    hi.head(2) << prm.G_max, prm.D_max;
    lo.tail(n - 2).setConstant(-prm.chi);
    hi.tail(n - 2).setConstant(prm.chi);
    // D = G + dG + sum nu as two opposing inequalities.
    Mat A(2, n);
    Vec row = Vec::Zero(n);
    row[0] = -1.0;
    row[1] = 1.0;
    row.tail(n - 2).setConstant(-1.0);
    A.row(0) = row.transpose();
    A.row(1) = -row.transpose();
    Vec b(2);
    b << prm.delta_G[i], -prm.delta_G[i];

    Vec prices(n - 2);
    for (int k = 0; k < n - 2; ++k) prices[k] = prm.price(prm.neighbors[i][k], i);
    const double w1 = prm.omega1[i], w2 = prm.omega2[i], Dst = prm.D_star[i];

    AgentSpec ag;
    ag.name = "participant" + std::to_string(i + 1);
    ag.X = Polyhedron(lo, hi, A, b);
    ag.cost.f = [=](const Vec& x) {
      const auto xi = x.segment(off, n);
      return prices.dot(xi.tail(n - 2)) + w1 * (xi[1] - Dst) * (xi[1] - Dst) - w2;
    };
    ag.cost.f_gradient = [=](const Vec& x) {
      Vec g = Vec::Zero(n);
      g[1] = 2 * w1 * (x[off + 1] - Dst);
      g.tail(n - 2) = prices;
      return g;
    };
    ag.cost.f_hessian = [=](const Vec&) {
      Mat H = Mat::Zero(n, n);
      H(1, 1) = 2 * w1;
      return H;
    };
    AffinePiece piece;
    piece.a = [off](const Vec& x) { return Vec((Vec(2) << x[off], 1.0).finished()); };
    piece.a_jacobian = [off, total](const Vec&) {
      Mat Jm = Mat::Zero(2, total);
      Jm(0, off) = 1.0;
      return Jm;
    };
    piece.b = [](const Vec&) { return 0.0; };
    piece.b_gradient = [total](const Vec&) { return Vec(Vec::Zero(total)); };
    ag.cost.pieces = single_piece(piece);
    ag.cost.lipschitz = Vec::Zero(n);
    ag.cost.lipschitz[0] = 1.0;
    ag.cost.own_affine = true;
    ag.support = support;
    ag.samples = prm.samples[i];
    ag.radius = prm.radius[i];
    spec.agents.push_back(std::move(ag));
  }
  // Reciprocity nu_mi + nu_im <= 0, one row per unordered pair.
  std::vector<Vec> rows;
  for (int i = 0; i < N; ++i) {
    for (int m : prm.neighbors[i]) {
      if (m < i) continue;
      Vec r = Vec::Zero(total);
      r[offsets[i] + p2p_trade_index(prm, i, m)] = 1.0;
      r[offsets[m] + p2p_trade_index(prm, m, i)] = 1.0;
      rows.push_back(r);
    }
  }
  spec.A_c.resize(static_cast<Eigen::Index>(rows.size()), total);
  for (std::size_t r = 0; r < rows.size(); ++r) spec.A_c.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  spec.b_c = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  return spec;
}

// --- Nash-Cournot ---------------------------------------------------------

void CournotParams::complete() {
  if (c.size() == 0) c = Vec::Constant(N, defaults::kCournotProduction);
  if (radius.empty()) {
    radius.resize(N);
    for (int i = 0; i < N; ++i) radius[i] = defaults::kCournotRadius[i % 3];
  }
}

void CournotParams::validate() const {
  if (!(w2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cournot: w2 must be positive");
  if (c.size() != N || (c.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "cournot: production coefficients must be positive");
  }
  if (!(x_max > 0.0) || !(xi_lo <= xi_hi)) throw Error(ErrorCode::kInvalidArgument, "cournot: bounds are not ordered");
  if (static_cast<int>(samples.size()) != N || static_cast<int>(radius.size()) != N) {
    throw Error(ErrorCode::kInvalidArgument, "cournot: samples and radius needed for every firm");
  }
}

namespace {

Mat demand_row(int N, double demand_min, Vec& b) {
  b = Vec::Constant(1, -demand_min);
  return Mat::Constant(1, N, -1.0);
}

}  // namespace

GameSpec build_cournot(CournotParams prm) {
  prm.complete();
  prm.validate();
  const int N = prm.N;
  const double w1 = prm.w1, w2 = prm.w2;
  GameSpec spec;
  const double slope_bound = std::max(std::abs(w1), std::abs(-w1 + w2 * (N + 1) * prm.x_max));
  for (int i = 0; i < N; ++i) {
    const double ci = prm.c[i];
    AgentSpec ag;
    ag.name = "firm" + std::to_string(i + 1);
    ag.X = Polyhedron::box(vec1(0.0), vec1(prm.x_max));
    ag.cost.f = [=](const Vec& x) { return ci * x[i] * x[i]; };
    ag.cost.f_gradient = [=](const Vec& x) { return vec1(2 * ci * x[i]); };
    ag.cost.f_hessian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, 2 * ci)); };
    AffinePiece piece;
    piece.a = [=](const Vec& x) { return vec1(-(w1 - w2 * x.sum()) * x[i]); };
    piece.a_jacobian = [=](const Vec& x) {
      Mat Jm = Mat::Constant(1, N, w2 * x[i]);
      Jm(0, i) = -w1 + w2 * x.sum() + w2 * x[i];
      return Jm;
    };
    piece.b = [](const Vec&) { return 0.0; };
    piece.b_gradient = [N](const Vec&) { return Vec(Vec::Zero(N)); };
    ag.cost.pieces = single_piece(piece);
    ag.cost.lipschitz = vec1(slope_bound);
    ag.cost.own_affine = false;
    ag.support = std::make_shared<const UncertaintyPolytope>(UncertaintyPolytope::box(vec1(prm.xi_lo), vec1(prm.xi_hi)));
    for (double s : prm.samples[i]) ag.samples.push_back(vec1(s));
    ag.radius = prm.radius[i];
    spec.agents.push_back(std::move(ag));
  }
  spec.A_c = demand_row(N, prm.demand_min, spec.b_c);
  return spec;
}

GameSpec build_cournot_common(const CournotParams& base, double levy, const std::vector<double>& samples,
                              double radius) {
  CournotParams prm = base;
  prm.samples.assign(prm.N, samples);
  prm.radius.assign(prm.N, radius);
  prm.complete();
  prm.validate();
  const int N = prm.N;
  const double w1 = prm.w1, w2 = prm.w2;
  AffinePiece piece;
  piece.a = [levy](const Vec& x) { return vec1(levy * x.sum()); };
  piece.a_jacobian = [levy, N](const Vec&) { return Mat(Mat::Constant(1, N, levy)); };
  piece.b = [](const Vec&) { return 0.0; };
  piece.b_gradient = [N](const Vec&) { return Vec(Vec::Zero(N)); };
  auto pieces = single_piece(piece);
  auto support = std::make_shared<const UncertaintyPolytope>(UncertaintyPolytope::box(vec1(prm.xi_lo), vec1(prm.xi_hi)));
  std::vector<Vec> xs;
  for (double s : samples) xs.push_back(vec1(s));

  GameSpec spec;
  spec.mode = AmbiguityMode::kCommon;
  for (int i = 0; i < N; ++i) {
    const double ci = prm.c[i];
    AgentSpec ag;
    ag.name = "firm" + std::to_string(i + 1);
    ag.X = Polyhedron::box(vec1(0.0), vec1(prm.x_max));
    ag.cost.f = [=](const Vec& x) { return ci * x[i] * x[i] - (w1 - w2 * x.sum()) * x[i]; };
    ag.cost.f_gradient = [=](const Vec& x) { return vec1(2 * ci * x[i] - w1 + w2 * x.sum() + w2 * x[i]); };
    ag.cost.f_hessian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, 2 * ci + 2 * w2)); };
    ag.cost.pieces = pieces;
    ag.cost.lipschitz = vec1(std::abs(levy));
    ag.cost.own_affine = true;
    ag.support = support;
    ag.samples = xs;
    ag.radius = radius;
    spec.agents.push_back(std::move(ag));
  }
  spec.A_c = demand_row(N, prm.demand_min, spec.b_c);
  return spec;
}

DiscreteDistribution discretized_normal(double mean, double sigma, double lo, double hi, int atoms) {
  if (atoms < 1 || !(sigma > 0.0) || !(lo <= hi)) {
    throw Error(ErrorCode::kInvalidArgument, "discretized_normal: invalid parameters");
  }
  DiscreteDistribution d;
  d.weights.resize(atoms);
  for (int k = 0; k < atoms; ++k) {
    const double t = atoms == 1 ? lo : lo + (hi - lo) * k / (atoms - 1);
    d.points.push_back(vec1(t));
    const double z = (t - mean) / sigma;
    d.weights[k] = std::exp(-0.5 * z * z);
  }
  d.weights /= d.weights.sum();
  return d;
}

std::vector<Vec> draw_samples(const DiscreteDistribution& dist, int K, std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(dist.weights.data(), dist.weights.data() + dist.weights.size());
  std::vector<Vec> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) out.push_back(dist.points[pick(rng)]);
  return out;
}

DiscreteDistribution cournot_truth(const CournotParams& prm, int i) {
  return discretized_normal(defaults::kCournotTruthMean[i % 3], defaults::kCournotTruthSigma, prm.xi_lo, prm.xi_hi,
                            defaults::kTruthAtoms);
}

GameSpec cournot_study(CournotParams prm, int K, std::uint64_t seed) {
  prm.samples.assign(prm.N, {});
  for (int i = 0; i < prm.N; ++i) {
    for (const Vec& v : draw_samples(cournot_truth(prm, i), K, derive_seed(seed, i))) prm.samples[i].push_back(v[0]);
  }
  return build_cournot(std::move(prm));
}

GameSpec p2p_study(P2PParams prm, int K, std::uint64_t seed) {
  const bool keep_radius = !prm.radius.empty();
  prm.complete();
  std::mt19937_64 rng(derive_seed(seed, 1000));
  std::uniform_real_distribution<double> spread(-defaults::kP2PRenewableSpread, defaults::kP2PRenewableSpread);
  std::uniform_real_distribution<double> rad(defaults::kP2PRadiusLo, defaults::kP2PRadiusHi);
  for (int i = 0; i < prm.N; ++i) prm.delta_G[i] *= 1.0 + spread(rng);
  if (!keep_radius)
    for (int i = 0; i < prm.N; ++i) prm.radius[i] = rad(rng);
  const DiscreteDistribution z1 = discretized_normal(defaults::kP2PZetaMean[0], defaults::kP2PZetaSigma[0],
                                                     prm.zeta_lo[0], prm.zeta_hi[0], defaults::kTruthAtoms);
  const DiscreteDistribution z2 = discretized_normal(defaults::kP2PZetaMean[1], defaults::kP2PZetaSigma[1],
                                                     prm.zeta_lo[1], prm.zeta_hi[1], defaults::kTruthAtoms);
  prm.samples.assign(prm.N, {});
  for (int i = 0; i < prm.N; ++i) {
    const auto a = draw_samples(z1, K, derive_seed(seed, 2 * i));
    const auto b = draw_samples(z2, K, derive_seed(seed, 2 * i + 1));
    for (int k = 0; k < K; ++k) prm.samples[i].push_back((Vec(2) << a[k][0], b[k][0]).finished());
  }
  return build_p2p(std::move(prm));
}

// --- Studies and sweeps ---------------------------------------------------

namespace {

void aggregate(const std::vector<std::vector<double>>& series, const std::vector<char>& ok, TrajectoryBand& band) {
  std::size_t len = 0;
  for (std::size_t s = 0; s < series.size(); ++s)
    if (ok[s]) len = std::max(len, series[s].size());
  band.mean.assign(len, 0.0);
  band.min.assign(len, kInf);
  band.max.assign(len, -kInf);
  int count = 0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (!ok[s] || series[s].empty()) continue;
    ++count;
    for (std::size_t t = 0; t < len; ++t) {
      const double v = series[s][std::min(t, series[s].size() - 1)];
      band.mean[t] += v;
      band.min[t] = std::min(band.min[t], v);
      band.max[t] = std::max(band.max[t], v);
    }
  }
  for (auto& m : band.mean) m /= std::max(1, count);
}

}  // namespace

StudySummary run_mc_studies(const StudyBuilder& builder, const SolverConfig& cfg, int num_studies,
                            std::uint64_t seed, int threads) {
  StudySummary sum;
  sum.studies = num_studies;
  sum.seeds.resize(num_studies);
  sum.status.assign(num_studies, SolveStatus::kDiverged);
  sum.iterations.assign(num_studies, 0);
  sum.equilibria.resize(num_studies);
  sum.final_costs.resize(num_studies);
  std::vector<std::vector<double>> steps(num_studies), resid(num_studies), gaps(num_studies);
  std::vector<char> ok(num_studies, 0);
  parallel_for(num_studies, threads, [&](int s) {
    const std::uint64_t sd = derive_seed(seed, static_cast<std::uint64_t>(s));
    sum.seeds[s] = sd;
    try {
      const ReformulatedGame game(builder(s, sd));
      const EquilibriumResult res = solve_drne(game, cfg);
      sum.status[s] = res.status;
      sum.iterations[s] = res.iterations;
      sum.equilibria[s] = res.x;
      if (res.status == SolveStatus::kDiverged) return;
      const auto& recs = res.log.records;
      double final_total = 0.0;
      for (double j : recs.back().J) final_total += j;
      sum.final_costs[s] = recs.back().J;
      for (const auto& r : recs) {
        steps[s].push_back(r.step_norm);
        resid[s].push_back(r.residual);
        double total = 0.0;
        for (double j : r.J) total += j;
        gaps[s].push_back(std::abs(total - final_total));
      }
      ok[s] = 1;
    } catch (const Error&) {
      ok[s] = 0;
    }
  });
  for (char o : ok) sum.failed += o ? 0 : 1;
  aggregate(steps, ok, sum.step_norm);
  aggregate(resid, ok, sum.residual);
  aggregate(gaps, ok, sum.cost_gap);
  return sum;
}

namespace {

SweepPoint sweep_point(const SweepBuilder& builder, double value, int studies, std::uint64_t seed,
                       const EquilibriumSolver& solver, int threads) {
  std::vector<std::vector<double>> costs(studies);
  std::vector<char> ok(studies, 0);
  parallel_for(studies, threads, [&](int s) {
    try {
      const std::uint64_t sd = derive_seed(seed, static_cast<std::uint64_t>(s));
      const ReformulatedGame game(builder(value, s, sd));
      const EquilibriumResult res = solver(game);
      if (res.status != SolveStatus::kConverged) return;
      for (int i = 0; i < game.N(); ++i) costs[s].push_back(worst_case_value(game, i, res.x));
      ok[s] = 1;
    } catch (const Error&) {
      ok[s] = 0;
    }
  });
  SweepPoint pt;
  pt.parameter = value;
  pt.studies = studies;
  std::size_t N = 0;
  for (int s = 0; s < studies; ++s)
    if (ok[s]) N = costs[s].size();
  pt.mean.assign(N, 0.0);
  pt.min.assign(N, kInf);
  pt.max.assign(N, -kInf);
  int count = 0;
  for (int s = 0; s < studies; ++s) {
    if (!ok[s]) {
      ++pt.failed;
      continue;
    }
    ++count;
    for (std::size_t i = 0; i < N; ++i) {
      pt.mean[i] += costs[s][i];
      pt.min[i] = std::min(pt.min[i], costs[s][i]);
      pt.max[i] = std::max(pt.max[i], costs[s][i]);
    }
  }
  for (auto& m : pt.mean) m /= std::max(1, count);
  return pt;
}

}  // namespace

SweepResult sweep_radius(const SweepBuilder& builder, const std::vector<double>& eps_grid, int studies,
                         std::uint64_t seed, const EquilibriumSolver& solver, int threads) {
  SweepResult out;
  for (double eps : eps_grid) out.points.push_back(sweep_point(builder, eps, studies, seed, solver, threads));
  out.trend = "per-agent mean equilibrium cost nondecreasing in eps";
  out.trend_holds = !out.points.empty();
  for (std::size_t g = 1; g < out.points.size(); ++g) {
    for (std::size_t i = 0; i < out.points[g].mean.size(); ++i) {
      const double prev = out.points[g - 1].mean[i];
      if (out.points[g].mean[i] < prev - 1e-9 * std::max(1.0, std::abs(prev))) out.trend_holds = false;
    }
  }
  return out;
}

SweepResult sweep_samples(const SweepBuilder& builder, const std::vector<int>& K_grid, int studies,
                          std::uint64_t seed, const EquilibriumSolver& solver, int threads) {
  SweepResult out;
  for (int K : K_grid) out.points.push_back(sweep_point(builder, static_cast<double>(K), studies, seed, solver, threads));
  out.trend = "per-agent max-min cost band at the largest K below the band at the smallest K";
  out.trend_holds = out.points.size() >= 2;
  if (out.trend_holds) {
    const SweepPoint& first = out.points.front();
    const SweepPoint& last = out.points.back();
    for (std::size_t i = 0; i < first.mean.size(); ++i) {
      if (!(last.max[i] - last.min[i] < first.max[i] - first.min[i])) out.trend_holds = false;
    }
  }
  return out;
}

}  // namespace drne
