#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace drne {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  kDimensionMismatch,
  kSupportViolation,
  kInvalidArgument,
  kInfeasible,
  kUnbounded,
  kNotConverged,
  kUnsupported,
  kParse,
  kIo,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. The code classifies the failure; the message
/// carries the context (agent index, field name, residual, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Ground norm of the transport cost.
enum class Norm { kL1, kL2, kLinf };

/// Dual pairing: 2 <-> 2, 1 <-> inf, inf <-> 1.
Norm dual(Norm norm);
double norm(const Vec& v, Norm norm);
const char* to_string(Norm norm);
Norm parse_norm(const std::string& text);

/// A subgradient of the given norm at v; the zero vector at v = 0.
Vec norm_subgradient(const Vec& v, Norm norm);

/// SplitMix64 mixing of (seed, index): independent stream seeds for
/// concurrently run trials.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Golden ratio, (1 + sqrt 5) / 2.
inline const double kGoldenRatio = 1.6180339887498948482;

}  // namespace drne
