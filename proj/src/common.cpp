#include "drne/common.hpp"

#include <cmath>

namespace drne {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kSupportViolation: return "support-violation";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kUnbounded: return "unbounded";
    case ErrorCode::kNotConverged: return "not-converged";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Norm dual(Norm norm) {
  switch (norm) {
    case Norm::kL1: return Norm::kLinf;
    case Norm::kL2: return Norm::kL2;
    case Norm::kLinf: return Norm::kL1;
  }
  return Norm::kL2;
}

double norm(const Vec& v, Norm norm) {
  if (v.size() == 0) return 0.0;
  switch (norm) {
    case Norm::kL1: return v.lpNorm<1>();
    case Norm::kL2: return v.norm();
    case Norm::kLinf: return v.lpNorm<Eigen::Infinity>();
  }
  return v.norm();
}

const char* to_string(Norm norm) {
  switch (norm) {
    case Norm::kL1: return "1";
    case Norm::kL2: return "2";
    case Norm::kLinf: return "inf";
  }
  return "2";
}

Norm parse_norm(const std::string& text) {
  if (text == "1") return Norm::kL1;
  if (text == "2") return Norm::kL2;
  if (text == "inf") return Norm::kLinf;
  throw Error(ErrorCode::kParse, "unknown norm '" + text + "' (expected 1, 2 or inf)");
}

Vec norm_subgradient(const Vec& v, Norm norm) {
  Vec g = Vec::Zero(v.size());
  switch (norm) {
    case Norm::kL2: {
      const double n = v.norm();
      if (n > 0.0) g = v / n;
      break;
    }
    case Norm::kL1:
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v[j] > 0.0) g[j] = 1.0;
        else if (v[j] < 0.0) g[j] = -1.0;
      }
      break;
    case Norm::kLinf: {
      if (v.size() == 0) break;
      Eigen::Index j = 0;
      const double n = v.cwiseAbs().maxCoeff(&j);
      if (n > 0.0) g[j] = v[j] > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  return g;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (index * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace drne
