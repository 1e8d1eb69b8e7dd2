#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lipexp {

enum class ErrorKind {
  InvalidArgument,
  SingularMetric,
  SignatureMismatch,
  OutOfDomain,
  InsufficientRegularity,
  DegeneratePlane,
  UnderResolved,
  LeftDomain,
  StepTooLarge,
  OutsideCommonDomain,
  NonpositiveK,
  NoFeasibleMu,
  InfeasibleBounds,
  InfeasibleR3,
  CurvatureOutOfRange,
  PairBudgetExceeded,
  ShootingFailed,
  NoUniformRadius,
  ParseError,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::InsufficientRegularity: return "InsufficientRegularity";
    case ErrorKind::DegeneratePlane: return "DegeneratePlane";
    case ErrorKind::UnderResolved: return "UnderResolved";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::OutsideCommonDomain: return "OutsideCommonDomain";
    case ErrorKind::NonpositiveK: return "NonpositiveK";
    case ErrorKind::NoFeasibleMu: return "NoFeasibleMu";
    case ErrorKind::InfeasibleBounds: return "InfeasibleBounds";
    case ErrorKind::InfeasibleR3: return "InfeasibleR3";
    case ErrorKind::CurvatureOutOfRange: return "CurvatureOutOfRange";
    case ErrorKind::PairBudgetExceeded: return "PairBudgetExceeded";
    case ErrorKind::ShootingFailed: return "ShootingFailed";
    case ErrorKind::NoUniformRadius: return "NoUniformRadius";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Library error. `exit_time` is set for LeftDomain (parameter value at which
/// the integrated path left the chart).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<double> exit_time = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        message_(what),
        exit_time_(exit_time) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<double> exit_time() const noexcept { return exit_time_; }
  // what() without the kind prefix
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<double> exit_time_;
};

}  // namespace lipexp
