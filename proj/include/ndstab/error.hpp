#pragma once

#include <stdexcept>
#include <string>

namespace ndstab {

/// Stable error categories. The numeric values are shared with the C API
/// status codes and, for the first four, with the CLI exit codes.
enum class ErrorCode : int {
  Config = 1,
  RankCondition = 2,
  BlowUp = 3,
  Verification = 4,
  SolverFailure = 5,
  IllConditionedBasis = 6,
  IndexOutOfRange = 7,
  BasisInconsistency = 8,
  GammaTooSmall = 9,
  Causality = 10,
  Io = 11,
  InvalidArgument = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Root finder gave up; carries the bracket it was working on.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double lo, double hi, double residual)
      : Error(ErrorCode::SolverFailure, what), lo_(lo), hi_(hi), residual_(residual) {}
  [[nodiscard]] double bracket_lo() const noexcept { return lo_; }
  [[nodiscard]] double bracket_hi() const noexcept { return hi_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double lo_, hi_, residual_;
};

/// Sum of the B_k matrices is numerically singular.
class RankConditionViolated : public Error {
 public:
  RankConditionViolated(const std::string& what, double min_sv, double max_sv)
      : Error(ErrorCode::RankCondition, what), min_sv_(min_sv), max_sv_(max_sv) {}
  [[nodiscard]] double min_singular_value() const noexcept { return min_sv_; }
  [[nodiscard]] double max_singular_value() const noexcept { return max_sv_; }

 private:
  double min_sv_, max_sv_;
};

class BlowUp : public Error {
 public:
  BlowUp(const std::string& what, double time, double ratio)
      : Error(ErrorCode::BlowUp, what), time_(time), ratio_(ratio) {}
  [[nodiscard]] double time() const noexcept { return time_; }
  [[nodiscard]] double ratio() const noexcept { return ratio_; }

 private:
  double time_, ratio_;
};

}  // namespace ndstab
