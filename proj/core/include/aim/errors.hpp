#pragma once

#include <stdexcept>
#include <string>

namespace aim {

// Base class for all recoverable engine errors. Each concrete error carries a
// stable code string so transport layers can map it without RTTI.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

struct OutOfBoundsError : Error {
  explicit OutOfBoundsError(const std::string& msg) : Error("out_of_bounds", msg) {}
};

struct GridMismatchError : Error {
  explicit GridMismatchError(const std::string& msg) : Error("grid_mismatch", msg) {}
};

struct TimeRangeMismatchError : Error {
  explicit TimeRangeMismatchError(const std::string& msg)
      : Error("time_range_mismatch", msg) {}
};

struct CflViolationError : Error {
  explicit CflViolationError(const std::string& msg) : Error("cfl_violation", msg) {}
};

struct ControlOutOfBoundsError : Error {
  explicit ControlOutOfBoundsError(const std::string& msg)
      : Error("control_out_of_bounds", msg) {}
};

struct UnboundPropositionError : Error {
  explicit UnboundPropositionError(const std::string& msg)
      : Error("unbound_proposition", msg) {}
};

struct UnsupportedPatternError : Error {
  explicit UnsupportedPatternError(const std::string& msg)
      : Error("unsupported_pattern", msg) {}
};

struct UnknownRouteError : Error {
  explicit UnknownRouteError(const std::string& msg) : Error("unknown_route", msg) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& msg) : Error("solver", msg) {}
};

// Admission failures carry the worst containment margin so callers can report
// how far from feasible the request was.
struct EntryInfeasibleError : Error {
  EntryInfeasibleError(const std::string& msg, double margin)
      : Error("entry_infeasible", msg), margin(margin) {}
  double margin;
};

struct ExitInfeasibleError : Error {
  ExitInfeasibleError(const std::string& msg, double margin)
      : Error("exit_infeasible", msg), margin(margin) {}
  double margin;
};

struct HorizonExceededError : Error {
  explicit HorizonExceededError(const std::string& msg)
      : Error("horizon_exceeded", msg) {}
};

struct UnknownReservationError : Error {
  explicit UnknownReservationError(const std::string& msg)
      : Error("unknown_reservation", msg) {}
};

struct OutOfCorridorTimeError : Error {
  explicit OutOfCorridorTimeError(const std::string& msg)
      : Error("out_of_corridor_time", msg) {}
};

struct InfeasibleAtStartError : Error {
  explicit InfeasibleAtStartError(const std::string& msg)
      : Error("infeasible_at_start", msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace aim
