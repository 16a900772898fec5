#pragma once

#include <stdexcept>
#include <string>

namespace spotsgd {

// Process exit codes used by the CLI. Every typed error below maps onto one.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  infeasible_deadline = 3,
  error_floor = 4,
  q_range = 5,
  trace_truncation = 6,
  check_failed = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// The deadline cannot be met even with bids that are never interrupted.
class InfeasibleDeadline : public Error {
 public:
  InfeasibleDeadline(const std::string& what, double minimal_deadline)
      : Error(ExitCode::infeasible_deadline, what), minimal_deadline_(minimal_deadline) {}
  double minimal_deadline() const noexcept { return minimal_deadline_; }

 private:
  double minimal_deadline_;
};

/// A bid with F(b) = 0 never runs; the completion time is unbounded.
class InfeasibleBid : public Error {
 public:
  InfeasibleBid(const std::string& what, double bid)
      : Error(ExitCode::infeasible_deadline, what), bid_(bid) {}
  double bid() const noexcept { return bid_; }

 private:
  double bid_;
};

/// The requested error target is at or below what the bound can reach.
/// `floor` is the smallest admissible target (exclusive).
class ErrorFloor : public Error {
 public:
  ErrorFloor(const std::string& what, double floor) : Error(ExitCode::error_floor, what), floor_(floor) {}
  double floor() const noexcept { return floor_; }

 private:
  double floor_;
};

/// Q(eps) falls outside the interval a two-bid plan can realise.
class QRangeError : public Error {
 public:
  QRangeError(const std::string& what, double q, double lo, double hi)
      : Error(ExitCode::q_range, what), q_(q), lo_(lo), hi_(hi) {}
  double q() const noexcept { return q_; }
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

 private:
  double q_;
  double lo_;
  double hi_;
};

class CheckFailed : public Error {
 public:
  explicit CheckFailed(const std::string& what) : Error(ExitCode::check_failed, what) {}
};

}  // namespace spotsgd
