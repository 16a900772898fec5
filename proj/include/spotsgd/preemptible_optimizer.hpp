#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spotsgd/convergence.hpp"

namespace spotsgd {

/// The two preemption laws for the active count y of n provisioned workers.
enum class PreemptionKind { uniform_active, binomial };

struct PreemptionLaw {
  PreemptionKind kind = PreemptionKind::binomial;
  double q = 0.0;    // per-worker preemption probability (binomial)
  double chi = 1.0;  // E[1/y] <= d / n^chi
  double d = 1.0;

  void validate() const;
};

/// E[1/y] for y uniform on {1, ..., n}: H_n / n.
double inverse_moment_uniform(std::int64_t n);

/// E[1/y | y > 0] for y ~ Binomial(n, 1 - q), summed with log-space
/// binomial coefficients.
double inverse_moment_binomial(std::int64_t n, double q);

/// E[1/(y + 1)] = (1 - q^{n+1}) / ((n + 1)(1 - q)) (unconditional on y > 0).
double inverse_moment_binomial_shifted(std::int64_t n, double q);

double inverse_moment(const PreemptionLaw& law, std::int64_t n);

/// Smallest d with E[1/y](n) <= d / n^chi for every n in [1, n_max].
PreemptionLaw fit_preemption_bound(PreemptionKind kind, double q, double chi, std::int64_t n_max = 128);

/// A, beta, B of the provisioning bounds: A = G0, beta = 1 - alpha c mu,
/// B = alpha^2 L M d / 2.
struct BoundTerms {
  double A = 1.0;
  double beta = 0.9;
  double B = 0.0;

  static BoundTerms from(const SgdConstants& k, double d);
  void validate() const;
};

/// Static-provisioning bound A beta^J + B (1 - beta^J) / (n^chi (1 - beta)).
double static_error_bound(const BoundTerms& t, double n, double chi, std::int64_t J);

// ---------------------------------------------------------------------------
// Joint choice of a static worker count n and iteration count J.

struct WorkersIterationsPlan {
  std::int64_t n = 0;           // minimises n J subject to the error bound
  std::int64_t J = 0;
  std::int64_t product = 0;     // n J
  double error = 0.0;           // bound at (n, J)
  double J_tilde = 0.0;         // root of H(J~) = eps
  double h_residual = 0.0;      // |H(J~) - eps|
  std::int64_t closed_form_n = 0;  // ceil(B (1 - beta^J~) / ((1 - beta)(eps - A beta^J~)))
  std::int64_t closed_form_J = 0;  // best of floor/ceil J~, capped at the deadline
  bool closed_form_matches = false;
};

/// H(J) = A beta^J (J ln(1/beta) + 1 - beta^J) / (1 + beta^J (J ln(1/beta) - 1)).
double h_function(const BoundTerms& t, double J);

/// Minimises n J subject to A beta^J + B (1 - beta^J) / (n (1 - beta)) <= eps
/// and J <= max_iterations. Throws ErrorFloor when no J in range works.
WorkersIterationsPlan co_optimize_workers_iterations(const BoundTerms& t, double epsilon,
                                                     std::int64_t max_iterations);

/// Front end with the deadline expressed as J <= theta delta.
WorkersIterationsPlan co_optimize_workers_iterations(const SgdConstants& k, double epsilon, double deadline,
                                                     double delta, double d);

// ---------------------------------------------------------------------------
// Geometric worker growth n_j = ceil(n0 eta^(j-1)).

enum class ScheduleKind { static_workers, geometric };

struct WorkerSchedule {
  ScheduleKind kind = ScheduleKind::static_workers;
  std::int64_t n0 = 1;
  double eta = 1.0;
  std::int64_t J = 0;

  static WorkerSchedule fixed(std::int64_t n, std::int64_t J);
  static WorkerSchedule geometric(std::int64_t n0, double eta, std::int64_t J);

  /// Provisioned workers at 1-based iteration j.
  std::int64_t workers_at(std::int64_t j) const;
  /// Sum of workers_at over all iterations.
  double total_provisioned() const;
  void validate() const;
};

/// ceil(log_{eta^chi}(1 + (eta - 1) J)).
std::int64_t dynamic_iteration_count(std::int64_t J, double eta, double chi);

/// The same count with logarithm base eta (the form substituted in the
/// asymptotic comparison); exposed for comparison only.
std::int64_t dynamic_iteration_count_base_eta(std::int64_t J, double eta);

/// A beta^J' + (B / n0^chi) beta^(J'-1) (1 - x^J') / (1 - x), x = 1 / (eta^chi beta),
/// with the x = 1 limit J' beta^(J'-1).
double error_bound_dynamic(const BoundTerms& t, double n0, double eta, double chi, std::int64_t J_prime);
double error_bound_dynamic(const SgdConstants& k, double n0, double eta, double chi, std::int64_t J_prime, double d);

struct DynamicStaticComparison {
  std::int64_t J = 0;
  std::int64_t J_dynamic = 0;
  double dynamic_bound = 0.0;
  double static_bound = 0.0;
  double static_asymptote = 0.0;  // B / ((1 - beta) n0^chi)
  bool growth_condition = false;  // eta^chi beta > 1
  bool dynamic_not_worse = false;
};

DynamicStaticComparison compare_dynamic_static(const BoundTerms& t, std::int64_t n0, double eta, double chi,
                                               std::int64_t J);

/// Smallest J_min such that the dynamic bound is <= the static bound for
/// every J in [J_min, scan_limit]. Empty when it fails at scan_limit.
std::optional<std::int64_t> dynamic_threshold(const BoundTerms& t, std::int64_t n0, double eta, double chi,
                                              std::int64_t scan_limit = 100'000);

// ---------------------------------------------------------------------------
// Growth-rate program: minimise (1 - eta^J)/(1 - eta) subject to
//   sum_j R_j / (1 - q^{n0 eta^j}) <= theta,
//   A beta^J + B beta^(J-1) (1 - x^J) / (n0^chi (1 - x)) <= eps,  x = 1/(beta eta^chi),
//   eta^chi > 1 / beta.

struct EtaProblem {
  BoundTerms terms;
  std::int64_t n0 = 1;
  double q = 0.0;
  double chi = 1.0;
  std::int64_t J = 1;
  double runtime = 1.0;                  // constant R per iteration
  std::optional<double> straggler_rate;  // if set: R_j = overhead + (ln n0 + (j-1) ln eta) / rate
  double overhead = 0.0;
  double deadline = 0.0;
  double epsilon = 0.0;
  double eta_max = 100.0;  // upper end of the search interval
  double tolerance = 1e-8;

  void validate() const;
};

double eta_objective(double eta, std::int64_t J);
double eta_completion(const EtaProblem& p, double eta);
double eta_error(const EtaProblem& p, double eta);

struct EtaPlan {
  double eta = 0.0;
  std::int64_t J = 0;
  double objective = 0.0;
  double completion = 0.0;
  double error = 0.0;
  double feasible_lo = 0.0;  // feasible eta interval for this J
  double feasible_hi = 0.0;
  int iterations = 0;        // golden-section steps
};

/// Fixed-J solve. Throws ErrorFloor if the error target is unreachable,
/// InfeasibleDeadline if the deadline is, for every admissible eta.
EtaPlan optimize_eta(const EtaProblem& p);

/// Iterates J = 1, 2, ... up to the largest J for which the deadline can be
/// met (or max_J) and returns the plan with the smallest objective (ties:
/// smallest J).
EtaPlan optimize_eta_joint(EtaProblem p, std::int64_t max_J = 100'000);

}  // namespace spotsgd
