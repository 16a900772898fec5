#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace spotsgd {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string tolerance_kind;  // "relative", "absolute" or "std_errors"
  std::string detail;
};

struct ValidationOptions {
  std::int64_t trials = 20'000;  // simulation trials per check
  int replications = 40;          // SGD replications per schedule
  std::uint64_t seed = 1;
};

/// Suites: formulas, bounds, optimizers, all.
bool is_known_suite(std::string_view name);
std::vector<CheckResult> run_validation(std::string_view suite, const ValidationOptions& options);

/// `suite,check,passed,observed,expected,tolerance,tolerance_kind`
void write_validation_csv(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace spotsgd
