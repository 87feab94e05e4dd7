#pragma once

// Small dense linear programming: a two-phase tableau simplex for general
// LPs and a transportation simplex for discrete optimal transport.

#include "drne/common.hpp"

namespace drne::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(Status status);

/// minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
/// Empty matrices mean "no constraints of that kind"; empty bound vectors
/// mean x >= 0. Bounds may be +-infinity.
struct Problem {
  Vec c;
  Mat A_ub;
  Vec b_ub;
  Mat A_eq;
  Vec b_eq;
  Vec lower;
  Vec upper;
};

struct Solution {
  Status status = Status::kIterationLimit;
  Vec x;
  double objective = 0.0;
  int iterations = 0;
};

Solution solve(const Problem& problem);

struct TransportPlan {
  double cost = 0.0;
  Mat flow;  // supply.size() x demand.size()
  int iterations = 0;
};

/// Exact balanced transportation problem (MODI / stepping-stone). The two
/// totals must agree to 1e-9; demand is rescaled onto the supply total.
TransportPlan solve_transport(const Vec& supply, const Vec& demand, const Mat& cost);

}  // namespace drne::lp
