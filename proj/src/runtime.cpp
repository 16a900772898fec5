#include "spotsgd/runtime.hpp"

#include <cmath>
#include <stdexcept>

#include "spotsgd/numerics.hpp"

namespace spotsgd {

std::string_view to_string(RuntimeFamily family) {
  switch (family) {
    case RuntimeFamily::exponential:
      return "exponential";
    case RuntimeFamily::shifted_exponential:
      return "shifted-exponential";
    case RuntimeFamily::deterministic:
      return "deterministic";
  }
  return "unknown";
}

RuntimeModel RuntimeModel::exponential(double rate, double overhead) {
  RuntimeModel m;
  m.family = RuntimeFamily::exponential;
  m.rate = rate;
  m.server_overhead = overhead;
  m.validate();
  return m;
}

RuntimeModel RuntimeModel::shifted_exponential(double rate, double shift, double overhead) {
  RuntimeModel m;
  m.family = RuntimeFamily::shifted_exponential;
  m.rate = rate;
  m.shift = shift;
  m.server_overhead = overhead;
  m.validate();
  return m;
}

RuntimeModel RuntimeModel::deterministic(double time, double overhead) {
  RuntimeModel m;
  m.family = RuntimeFamily::deterministic;
  m.fixed_time = time;
  m.server_overhead = overhead;
  m.validate();
  return m;
}

void RuntimeModel::validate() const {
  if (!(server_overhead >= 0.0)) throw std::invalid_argument("server overhead must be non-negative");
  switch (family) {
    case RuntimeFamily::shifted_exponential:
      if (!(shift >= 0.0)) throw std::invalid_argument("runtime shift must be non-negative");
      [[fallthrough]];
    case RuntimeFamily::exponential:
      if (!(rate > 0.0)) throw std::invalid_argument("runtime rate must be positive");
      break;
    case RuntimeFamily::deterministic:
      if (!(fixed_time >= 0.0)) throw std::invalid_argument("deterministic runtime must be non-negative");
      break;
  }
}

double expected_iteration_runtime(double m, const RuntimeModel& model) {
  if (!(m >= 1.0)) throw std::invalid_argument("expected_iteration_runtime requires m >= 1");
  if (model.family == RuntimeFamily::deterministic) return model.fixed_time + model.server_overhead;
  const double growth = model.log_approximation ? std::log(m) : numerics::harmonic_number(m);
  const double shift = model.family == RuntimeFamily::shifted_exponential ? model.shift : 0.0;
  return shift + growth / model.rate + model.server_overhead;
}

double sample_iteration_runtime(std::int64_t m, const RuntimeModel& model, Rng& rng) {
  if (m < 1) throw std::invalid_argument("sample_iteration_runtime requires m >= 1");
  if (model.family == RuntimeFamily::deterministic) return model.fixed_time + model.server_overhead;
  const double u = rng.uniform_open();
  double max_time;
  if (m == 1) {
    max_time = -std::log(u) / model.rate;
  } else {
    // x = -ln(1 - u^{1/m}) / lambda with 1 - u^{1/m} = -expm1(ln(u) / m).
    max_time = -std::log(-std::expm1(std::log(u) / static_cast<double>(m))) / model.rate;
  }
  const double shift = model.family == RuntimeFamily::shifted_exponential ? model.shift : 0.0;
  return shift + max_time + model.server_overhead;
}

double conditional_mean_active(std::int64_t n, double q) {
  if (n < 1) throw std::invalid_argument("provisioned count must be >= 1");
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("preemption probability must lie in [0, 1)");
  const double idle = std::pow(q, static_cast<double>(n));
  return static_cast<double>(n) * (1.0 - q) / (1.0 - idle);
}

double expected_completion_time_preemption(std::int64_t J, std::int64_t n, double q, const RuntimeModel& model,
                                           std::optional<double> mean_active) {
  if (J < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (n < 1) throw std::invalid_argument("provisioned count must be >= 1");
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("preemption probability must lie in [0, 1)");
  const double ybar = mean_active.value_or(conditional_mean_active(n, q));
  const double per_iteration = expected_iteration_runtime(std::max(1.0, ybar), model);
  return static_cast<double>(J) * per_iteration / (1.0 - std::pow(q, static_cast<double>(n)));
}

double completion_rate(std::int64_t n, double q, double runtime) {
  if (!(runtime > 0.0)) throw std::invalid_argument("runtime must be positive");
  return (1.0 - std::pow(q, static_cast<double>(n))) / runtime;
}

}  // namespace spotsgd
