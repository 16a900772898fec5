#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "spotsgd/rng.hpp"

namespace spotsgd {

enum class RuntimeFamily { exponential, shifted_exponential, deterministic };

std::string_view to_string(RuntimeFamily family);

/// Per-iteration runtime: max over active workers of their gradient times,
/// plus the server overhead. Worker times are i.i.d.
struct RuntimeModel {
  RuntimeFamily family = RuntimeFamily::exponential;
  double rate = 1.0;             // lambda, 1/seconds (exponential families)
  double shift = 0.0;            // delta_0, seconds (shifted family)
  double fixed_time = 1.0;       // seconds (deterministic family)
  double server_overhead = 0.0;  // Delta, seconds
  /// Use (ln m) / lambda in place of the exact H_m / lambda.
  bool log_approximation = false;

  static RuntimeModel exponential(double rate, double overhead = 0.0);
  static RuntimeModel shifted_exponential(double rate, double shift, double overhead = 0.0);
  static RuntimeModel deterministic(double time, double overhead = 0.0);

  void validate() const;
};

/// E[R(m)] for m active workers. Real m is accepted so that expected active
/// counts can be plugged in; the harmonic number is then psi(m + 1) + gamma.
double expected_iteration_runtime(double m, const RuntimeModel& model);

/// One draw of R(m). The maximum of m exponentials is drawn by inverting its
/// CDF (1 - e^{-lambda x})^m, which has the same law as m separate draws.
double sample_iteration_runtime(std::int64_t m, const RuntimeModel& model, Rng& rng);

/// E[y | y > 0] = n (1 - q) / (1 - q^n) for y ~ Binomial(n, 1 - q).
double conditional_mean_active(std::int64_t n, double q);

/// sum_{j=1}^{J} E[R(ybar)] / (1 - q^n), where ybar defaults to the
/// conditional mean active count.
double expected_completion_time_preemption(std::int64_t J, std::int64_t n, double q, const RuntimeModel& model,
                                           std::optional<double> mean_active = std::nullopt);

/// Iterations per second of wall clock, (1 - q^n) / R, for the deterministic
/// runtime case.
double completion_rate(std::int64_t n, double q, double runtime);

}  // namespace spotsgd
