#include "drne/lp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace drne::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;

// x_j = shift + sum(coef * column)
struct VarMap {
  double shift = 0.0;
  int col_a = -1;
  double coef_a = 0.0;
  int col_b = -1;
  double coef_b = 0.0;
};

class Tableau {
 public:
  Tableau(Mat rows, Vec rhs, std::vector<int> basis, int num_struct, int num_art)
      : m_(static_cast<int>(rows.rows())),
        n_(static_cast<int>(rows.cols())),
        num_struct_(num_struct),
        num_art_(num_art),
        t_(Mat::Zero(m_ + 1, n_ + 1)),
        basis_(std::move(basis)) {
    t_.topLeftCorner(m_, n_) = rows;
    t_.block(0, n_, m_, 1) = rhs;
  }

  bool is_artificial(int col) const { return col >= n_ - num_art_; }

  void set_objective(const Vec& cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = cost.transpose();
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void pivot(int row, int col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // Runs simplex iterations on the current objective row.
  Status optimize(bool allow_artificial, int& iterations, int limit) {
    int degenerate_run = 0;
    while (iterations < limit) {
      const bool bland = degenerate_run > 50;
      int enter = -1;
      double best = -kCostTol;
      for (int j = 0; j < n_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        const double r = t_(m_, j);
        if (r < best) {
          enter = j;
          best = r;
          if (bland) break;
        }
      }
      if (enter < 0) return Status::kOptimal;
      int leave = -1;
      double ratio = kInf;
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a > kPivotTol) {
          const double q = t_(i, n_) / a;
          if (q < ratio - 1e-14 ||
              (std::abs(q - ratio) <= 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
            ratio = q;
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::kUnbounded;
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
      ++iterations;
    }
    return Status::kIterationLimit;
  }

  // After phase I: pivot basic artificials out where possible.
  void expel_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      int col = -1;
      double best = kPivotTol;
      for (int j = 0; j < n_ - num_art_; ++j) {
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          col = j;
        }
      }
      if (col >= 0) pivot(i, col);
    }
  }

  double value() const { return -t_(m_, n_); }

  Vec primal() const {
    Vec y = Vec::Zero(n_);
    for (int i = 0; i < m_; ++i) y[basis_[i]] = t_(i, n_);
    return y;
  }

  int columns() const { return n_; }

 private:
  int m_;
  int n_;
  int num_struct_;
  int num_art_;
  Mat t_;
  std::vector<int> basis_;
};

}  // namespace

Solution solve(const Problem& pb) {
  const int n = static_cast<int>(pb.c.size());
  const int m_ub = static_cast<int>(pb.A_ub.rows());
  const int m_eq = static_cast<int>(pb.A_eq.rows());
  if ((m_ub > 0 && pb.A_ub.cols() != n) || (m_eq > 0 && pb.A_eq.cols() != n) ||
      pb.b_ub.size() != m_ub || pb.b_eq.size() != m_eq) {
    throw Error(ErrorCode::kDimensionMismatch, "lp::solve: constraint shapes disagree with c");
  }
  const Vec lower = pb.lower.size() == n ? pb.lower : Vec::Zero(n);
  const Vec upper = pb.upper.size() == n ? pb.upper : Vec::Constant(n, kInf);

  std::vector<VarMap> map(n);
  int cols = 0;
  std::vector<std::pair<int, double>> box_rows;  // (column, width)
  for (int j = 0; j < n; ++j) {
    const bool lo = std::isfinite(lower[j]);
    const bool hi = std::isfinite(upper[j]);
    if (lo && hi && upper[j] < lower[j]) {
      Solution s;
      s.status = Status::kInfeasible;
      return s;
    }
    if (lo) {
      map[j] = {lower[j], cols, 1.0, -1, 0.0};
      if (hi) box_rows.emplace_back(cols, upper[j] - lower[j]);
      ++cols;
    } else if (hi) {
      map[j] = {upper[j], cols, -1.0, -1, 0.0};
      ++cols;
    } else {
      map[j] = {0.0, cols, 1.0, cols + 1, -1.0};
      cols += 2;
    }
  }
  const int num_struct = cols;
  const int rows = m_ub + m_eq + static_cast<int>(box_rows.size());
  const int num_slack = m_ub + static_cast<int>(box_rows.size());

  Mat a = Mat::Zero(rows, num_struct + num_slack);
  Vec rhs = Vec::Zero(rows);
  Vec cost = Vec::Zero(num_struct + num_slack);
  double cost_shift = 0.0;
  for (int j = 0; j < n; ++j) {
    cost_shift += pb.c[j] * map[j].shift;
    cost[map[j].col_a] += pb.c[j] * map[j].coef_a;
    if (map[j].col_b >= 0) cost[map[j].col_b] += pb.c[j] * map[j].coef_b;
  }
  auto fill_row = [&](int r, const auto& coeffs, double b) {
    double shift = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = coeffs(j);
      if (v == 0.0) continue;
      shift += v * map[j].shift;
      a(r, map[j].col_a) += v * map[j].coef_a;
      if (map[j].col_b >= 0) a(r, map[j].col_b) += v * map[j].coef_b;
    }
    rhs[r] = b - shift;
  };
  int r = 0;
  int slack = num_struct;
  for (int i = 0; i < m_ub; ++i, ++r) {
    fill_row(r, pb.A_ub.row(i), pb.b_ub[i]);
    a(r, slack++) = 1.0;
  }
  for (int i = 0; i < m_eq; ++i, ++r) fill_row(r, pb.A_eq.row(i), pb.b_eq[i]);
  for (const auto& [col, width] : box_rows) {
    a(r, col) = 1.0;
    a(r, slack++) = 1.0;
    rhs[r] = width;
    ++r;
  }

  // Nonnegative right-hand sides; rows without a +1 slack get an artificial.
  std::vector<int> basis(rows, -1);
  std::vector<int> need_art;
  for (int i = 0; i < rows; ++i) {
    if (rhs[i] < 0.0) {
      a.row(i) *= -1.0;
      rhs[i] = -rhs[i];
    }
    int basic = -1;
    for (int s = num_struct; s < num_struct + num_slack; ++s) {
      if (a(i, s) == 1.0) {
        basic = s;
        break;
      }
    }
    if (basic >= 0) basis[i] = basic;
    else need_art.push_back(i);
  }
  const int num_art = static_cast<int>(need_art.size());
  const int total = num_struct + num_slack + num_art;
  Mat full = Mat::Zero(rows, total);
  full.leftCols(num_struct + num_slack) = a;
  for (int k = 0; k < num_art; ++k) {
    full(need_art[k], num_struct + num_slack + k) = 1.0;
    basis[need_art[k]] = num_struct + num_slack + k;
  }

  Tableau tab(full, rhs, basis, num_struct, num_art);
  Solution sol;
  const int limit = 50 * (rows + total) + 1000;
  if (num_art > 0) {
    Vec phase1 = Vec::Zero(total);
    phase1.tail(num_art).setOnes();
    tab.set_objective(phase1);
    const Status st = tab.optimize(true, sol.iterations, limit);
    if (st == Status::kIterationLimit) {
      sol.status = st;
      return sol;
    }
    const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    if (tab.value() > 1e-9 * scale) {
      sol.status = Status::kInfeasible;
      return sol;
    }
    tab.expel_artificials();
  }
  Vec phase2 = Vec::Zero(total);
  phase2.head(num_struct + num_slack) = cost;
  tab.set_objective(phase2);
  sol.status = tab.optimize(false, sol.iterations, limit);
  if (sol.status != Status::kOptimal) return sol;

  const Vec y = tab.primal();
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) {
    double v = map[j].shift + map[j].coef_a * y[map[j].col_a];
    if (map[j].col_b >= 0) v += map[j].coef_b * y[map[j].col_b];
    sol.x[j] = v;
  }
  sol.objective = pb.c.dot(sol.x);
  (void)cost_shift;
  return sol;
}

TransportPlan solve_transport(const Vec& supply, const Vec& demand, const Mat& cost) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  if (n == 0 || m == 0 || cost.rows() != n || cost.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "solve_transport: cost must be supply x demand");
  }
  if ((supply.array() < 0.0).any() || (demand.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "solve_transport: negative mass");
  }
  const double total = supply.sum();
  if (std::abs(total - demand.sum()) > 1e-9 * std::max(1.0, total)) {
    throw Error(ErrorCode::kInvalidArgument, "solve_transport: unbalanced masses");
  }
  Vec s = supply;
  Vec d = demand * (total / demand.sum());

  Mat flow = Mat::Zero(n, m);
  std::vector<std::vector<char>> basic(n, std::vector<char>(m, 0));
  // Northwest corner; exactly n + m - 1 basic cells (zero flows allowed).
  {
    int i = 0;
    int j = 0;
    Vec sr = s;
    Vec dr = d;
    while (true) {
      const double f = std::min(sr[i], dr[j]);
      flow(i, j) = f;
      basic[i][j] = 1;
      sr[i] -= f;
      dr[j] -= f;
      if (i == n - 1 && j == m - 1) break;
      if (j == m - 1) ++i;
      else if (i == n - 1) ++j;
      else if (sr[i] <= dr[j]) ++i;
      else ++j;
    }
  }

  const double cmax = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * cmax;
  TransportPlan plan;
  Vec u(n);
  Vec v(m);
  std::vector<std::vector<int>> row_cells(n);
  std::vector<std::vector<int>> col_cells(m);
  const int limit = 200 * (n + m) * std::max(n, m) + 1000;

  while (plan.iterations < limit) {
    for (auto& rc : row_cells) rc.clear();
    for (auto& cc : col_cells) cc.clear();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (basic[i][j]) {
          row_cells[i].push_back(j);
          col_cells[j].push_back(i);
        }
    // Potentials over the basis spanning tree: u_i + v_j = c_ij.
    std::vector<char> seen_r(n, 0);
    std::vector<char> seen_c(m, 0);
    std::deque<int> queue;  // >= 0: row, < 0: column -(j+1)
    u[0] = 0.0;
    seen_r[0] = 1;
    queue.push_back(0);
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      if (node >= 0) {
        for (int j : row_cells[node])
          if (!seen_c[j]) {
            v[j] = cost(node, j) - u[node];
            seen_c[j] = 1;
            queue.push_back(-(j + 1));
          }
      } else {
        const int j = -node - 1;
        for (int i : col_cells[j])
          if (!seen_r[i]) {
            u[i] = cost(i, j) - v[j];
            seen_r[i] = 1;
            queue.push_back(i);
          }
      }
    }
    int ei = -1;
    int ej = -1;
    double best = -tol;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (basic[i][j]) continue;
        const double rc = cost(i, j) - u[i] - v[j];
        if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
        }
      }
    if (ei < 0) break;

    // Tree path from column ej to row ei; cells alternate -, +, -, ...
    std::vector<int> parent_r(n, -2);  // parent column of a row node
    std::vector<int> parent_c(m, -2);  // parent row of a column node
    parent_c[ej] = -1;
    queue.clear();
    queue.push_back(-(ej + 1));
    bool found = false;
    while (!queue.empty() && !found) {
      const int node = queue.front();
      queue.pop_front();
      if (node >= 0) {
        for (int j : row_cells[node])
          if (parent_c[j] == -2) {
            parent_c[j] = node;
            queue.push_back(-(j + 1));
          }
      } else {
        const int j = -node - 1;
        for (int i : col_cells[j])
          if (parent_r[i] == -2) {
            parent_r[i] = j;
            if (i == ei) {
              found = true;
              break;
            }
            queue.push_back(i);
          }
      }
    }
    if (!found) throw Error(ErrorCode::kNotConverged, "solve_transport: broken basis tree");
    std::vector<std::pair<int, int>> cycle;  // excluding the entering cell
    {
      int i = ei;
      while (true) {
        const int j = parent_r[i];
        cycle.emplace_back(i, j);
        if (j == ej) break;
        const int i2 = parent_c[j];
        cycle.emplace_back(i2, j);
        i = i2;
      }
    }
    // Walking back from row ei: cells reached from the row are '-'.
    std::reverse(cycle.begin(), cycle.end());
    // Now cycle[0] touches column ej ('-'), cycle[1] is '+', ...
    double theta = kInf;
    int leave = -1;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const auto [i, j] = cycle[k];
      if (flow(i, j) < theta) {
        theta = flow(i, j);
        leave = static_cast<int>(k);
      }
    }
    flow(ei, ej) = theta;
    basic[ei][ej] = 1;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      const auto [i, j] = cycle[k];
      flow(i, j) += (k % 2 == 0) ? -theta : theta;
    }
    const auto [li, lj] = cycle[leave];
    basic[li][lj] = 0;
    flow(li, lj) = 0.0;
    ++plan.iterations;
  }
  if (plan.iterations >= limit) {
    throw Error(ErrorCode::kNotConverged, "solve_transport: iteration limit");
  }
  flow = flow.cwiseMax(0.0);
  plan.flow = flow;
  plan.cost = (flow.array() * cost.array()).sum();
  return plan;
}

}  // namespace drne::lp
