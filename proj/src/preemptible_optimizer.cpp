#include "spotsgd/preemptible_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spotsgd/errors.hpp"
#include "spotsgd/numerics.hpp"

namespace spotsgd {

namespace {

void require_q(double q) {
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("preemption probability must lie in [0, 1)");
}

// Returns the feasible end of a bracket [feasible, infeasible] (either order)
// after shrinking it below `tol`.
template <class F>
double boundary(F&& feasible, double good, double bad, double tol) {
  for (int i = 0; i < 400 && std::abs(bad - good) > tol; ++i) {
    const double mid = 0.5 * (good + bad);
    if (mid == good || mid == bad) break;
    if (feasible(mid)) {
      good = mid;
    } else {
      bad = mid;
    }
  }
  return good;
}

}  // namespace

void PreemptionLaw::validate() const {
  require_q(q);
  if (!(chi > 0.0)) throw std::invalid_argument("inverse-moment exponent chi must be positive");
  if (!(d > 0.0)) throw std::invalid_argument("inverse-moment coefficient d must be positive");
}

double inverse_moment_uniform(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("provisioned count must be >= 1");
  return numerics::harmonic_number(n) / static_cast<double>(n);
}

double inverse_moment_binomial(std::int64_t n, double q) {
  if (n < 1) throw std::invalid_argument("provisioned count must be >= 1");
  require_q(q);
  if (q == 0.0) return 1.0 / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double log_q = std::log(q);
  const double log_p = std::log1p(-q);
  const double log_n_fact = std::lgamma(nn + 1.0);
  double sum = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double log_c = log_n_fact - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
    sum += std::exp(log_c + kk * log_p + (nn - kk) * log_q) / kk;
  }
  return sum / -std::expm1(nn * log_q);
}

double inverse_moment_binomial_shifted(std::int64_t n, double q) {
  if (n < 0) throw std::invalid_argument("provisioned count must be >= 0");
  require_q(q);
  const double m = static_cast<double>(n) + 1.0;
  if (q == 0.0) return 1.0 / m;
  return -std::expm1(m * std::log(q)) / (m * (1.0 - q));
}

double inverse_moment(const PreemptionLaw& law, std::int64_t n) {
  return law.kind == PreemptionKind::uniform_active ? inverse_moment_uniform(n) : inverse_moment_binomial(n, law.q);
}

PreemptionLaw fit_preemption_bound(PreemptionKind kind, double q, double chi, std::int64_t n_max) {
  if (n_max < 1) throw std::invalid_argument("fit range must contain n = 1");
  PreemptionLaw law;
  law.kind = kind;
  law.q = q;
  law.chi = chi;
  law.d = 1.0;
  law.validate();
  double d = 0.0;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    d = std::max(d, inverse_moment(law, n) * std::pow(static_cast<double>(n), chi));
  }
  law.d = d;
  return law;
}

BoundTerms BoundTerms::from(const SgdConstants& k, double d) {
  k.validate();
  if (!(d > 0.0)) throw std::invalid_argument("inverse-moment coefficient d must be positive");
  return BoundTerms{k.G0, k.beta(), k.noise_coefficient() * d};
}

void BoundTerms::validate() const {
  if (!(A >= 0.0)) throw std::invalid_argument("A must be non-negative");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(B >= 0.0)) throw std::invalid_argument("B must be non-negative");
}

double static_error_bound(const BoundTerms& t, double n, double chi, std::int64_t J) {
  const double bJ = std::pow(t.beta, static_cast<double>(J));
  return t.A * bJ + t.B * (1.0 - bJ) / (std::pow(n, chi) * (1.0 - t.beta));
}

double h_function(const BoundTerms& t, double J) {
  const double bJ = std::pow(t.beta, J);
  const double jl = J * -std::log(t.beta);
  return t.A * bJ * (jl + 1.0 - bJ) / (1.0 + bJ * (jl - 1.0));
}

namespace {

// Smallest n with the static bound at (n, J) <= eps; requires eps > A beta^J.
std::int64_t workers_for(const BoundTerms& t, double epsilon, std::int64_t J) {
  const double bJ = std::pow(t.beta, static_cast<double>(J));
  const double raw = t.B * (1.0 - bJ) / ((1.0 - t.beta) * (epsilon - t.A * bJ));
  auto n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw)));
  while (n > 1 && static_error_bound(t, static_cast<double>(n - 1), 1.0, J) <= epsilon) --n;
  while (static_error_bound(t, static_cast<double>(n), 1.0, J) > epsilon) ++n;
  return n;
}

double product_objective(const BoundTerms& t, double epsilon, double J) {
  const double bJ = std::pow(t.beta, J);
  return t.B * J * (1.0 - bJ) / ((1.0 - t.beta) * (epsilon - t.A * bJ));
}

}  // namespace

WorkersIterationsPlan co_optimize_workers_iterations(const BoundTerms& t, double epsilon,
                                                     std::int64_t max_iterations) {
  t.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("target error must be positive");
  WorkersIterationsPlan plan;
  if (epsilon >= t.A) {
    plan.n = 1;
    plan.error = t.A;
    return plan;
  }
  // Smallest J with A beta^J < eps.
  const auto j_first = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(std::log(epsilon / t.A) / std::log(t.beta))) );
  std::int64_t j_lo = j_first;
  while (j_lo > 1 && t.A * std::pow(t.beta, static_cast<double>(j_lo - 1)) < epsilon) --j_lo;
  while (t.A * std::pow(t.beta, static_cast<double>(j_lo)) >= epsilon) ++j_lo;
  if (j_lo > max_iterations) {
    const double floor_value = t.A * std::pow(t.beta, static_cast<double>(std::max<std::int64_t>(max_iterations, 0)));
    throw ErrorFloor("target " + std::to_string(epsilon) + " needs more than " + std::to_string(max_iterations) +
                         " iterations",
                     floor_value);
  }

  std::int64_t best_product = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t J = j_lo; J <= max_iterations; ++J) {
    if (J >= best_product) break;
    const double n_floor = t.B * (1.0 - std::pow(t.beta, static_cast<double>(J))) / ((1.0 - t.beta) * epsilon);
    if (static_cast<double>(J) * std::max(1.0, std::ceil(n_floor)) > static_cast<double>(best_product)) break;
    const std::int64_t n = workers_for(t, epsilon, J);
    if (n * J < best_product) {
      best_product = n * J;
      plan.n = n;
      plan.J = J;
    }
  }
  plan.product = best_product;
  plan.error = static_error_bound(t, static_cast<double>(plan.n), 1.0, plan.J);

  // Stationary point of the relaxed problem.
  double hi = 1.0;
  while (h_function(t, hi) > epsilon && hi < 1e12) hi *= 2.0;
  plan.J_tilde = numerics::bisect_threshold([&](double J) { return h_function(t, J) <= epsilon; }, 0.0, hi, 1e-12);
  plan.h_residual = std::abs(h_function(t, plan.J_tilde) - epsilon);
  if (t.B > 0.0) {
    plan.closed_form_n = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(product_objective(t, epsilon, plan.J_tilde) / plan.J_tilde)));
  } else {
    plan.closed_form_n = 1;
  }
  double best_f = std::numeric_limits<double>::infinity();
  for (double cand : {std::floor(plan.J_tilde), std::ceil(plan.J_tilde)}) {
    const auto J = std::min<std::int64_t>(static_cast<std::int64_t>(cand), max_iterations);
    if (J < 1 || t.A * std::pow(t.beta, static_cast<double>(J)) >= epsilon) continue;
    const double f = product_objective(t, epsilon, static_cast<double>(J));
    if (f < best_f) {
      best_f = f;
      plan.closed_form_J = J;
    }
  }
  plan.closed_form_matches = plan.closed_form_n == plan.n && plan.closed_form_J == plan.J;
  return plan;
}

WorkersIterationsPlan co_optimize_workers_iterations(const SgdConstants& k, double epsilon, double deadline,
                                                     double delta, double d) {
  if (!(deadline > 0.0) || !(delta > 0.0)) throw std::invalid_argument("deadline and delta must be positive");
  const auto max_iterations = static_cast<std::int64_t>(std::floor(deadline * delta));
  return co_optimize_workers_iterations(BoundTerms::from(k, d), epsilon, max_iterations);
}

WorkerSchedule WorkerSchedule::fixed(std::int64_t n, std::int64_t J) {
  WorkerSchedule s{ScheduleKind::static_workers, n, 1.0, J};
  s.validate();
  return s;
}

WorkerSchedule WorkerSchedule::geometric(std::int64_t n0, double eta, std::int64_t J) {
  WorkerSchedule s{ScheduleKind::geometric, n0, eta, J};
  s.validate();
  return s;
}

void WorkerSchedule::validate() const {
  if (n0 < 1) throw std::invalid_argument("initial worker count must be >= 1");
  if (J < 0) throw std::invalid_argument("iteration count must be >= 0");
  if (kind == ScheduleKind::geometric && !(eta > 1.0)) throw std::invalid_argument("geometric growth needs eta > 1");
}

std::int64_t WorkerSchedule::workers_at(std::int64_t j) const {
  if (j < 1) throw std::invalid_argument("iterations are numbered from 1");
  if (kind == ScheduleKind::static_workers) return n0;
  const double v = static_cast<double>(n0) * std::pow(eta, static_cast<double>(j - 1));
  // Absorb rounding on exact powers (2^k, ...).
  return static_cast<std::int64_t>(std::ceil(v * (1.0 - 4.0 * std::numeric_limits<double>::epsilon())));
}

double WorkerSchedule::total_provisioned() const {
  double total = 0.0;
  for (std::int64_t j = 1; j <= J; ++j) total += static_cast<double>(workers_at(j));
  return total;
}

std::int64_t dynamic_iteration_count(std::int64_t J, double eta, double chi) {
  if (J < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (!(eta > 1.0)) throw std::invalid_argument("growth rate must exceed 1");
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  const double target = std::log1p((eta - 1.0) * static_cast<double>(J));
  const double step = chi * std::log(eta);
  auto count = static_cast<std::int64_t>(std::ceil(target / step));
  while (count > 1 && static_cast<double>(count - 1) * step >= target) --count;
  return std::max<std::int64_t>(count, 1);
}

std::int64_t dynamic_iteration_count_base_eta(std::int64_t J, double eta) {
  return dynamic_iteration_count(J, eta, 1.0);
}

double error_bound_dynamic(const BoundTerms& t, double n0, double eta, double chi, std::int64_t J_prime) {
  t.validate();
  if (!(n0 >= 1.0)) throw std::invalid_argument("initial worker count must be >= 1");
  if (!(eta >= 1.0)) throw std::invalid_argument("growth rate must be >= 1");
  if (J_prime < 0) throw std::invalid_argument("iteration count must be >= 0");
  if (J_prime == 0) return t.A;
  const double Jp = static_cast<double>(J_prime);
  const double log_beta = std::log(t.beta);
  const double log_x = -chi * std::log(eta) - log_beta;
  // sum_{j=1}^{J'} beta^(J'-j) eta^(-chi (j-1)) = beta^(J'-1) (x^J' - 1) / (x - 1)
  double sum;
  if (log_x == 0.0) {
    sum = Jp * std::exp((Jp - 1.0) * log_beta);
  } else if (Jp * log_x > 50.0) {
    sum = std::exp((Jp - 1.0) * log_beta + Jp * log_x) / std::expm1(log_x);
  } else {
    sum = std::exp((Jp - 1.0) * log_beta) * std::expm1(Jp * log_x) / std::expm1(log_x);
  }
  return t.A * std::exp(Jp * log_beta) + t.B / std::pow(n0, chi) * sum;
}

double error_bound_dynamic(const SgdConstants& k, double n0, double eta, double chi, std::int64_t J_prime, double d) {
  return error_bound_dynamic(BoundTerms::from(k, d), n0, eta, chi, J_prime);
}

DynamicStaticComparison compare_dynamic_static(const BoundTerms& t, std::int64_t n0, double eta, double chi,
                                               std::int64_t J) {
  DynamicStaticComparison r;
  r.J = J;
  r.J_dynamic = dynamic_iteration_count(J, eta, chi);
  r.dynamic_bound = error_bound_dynamic(t, static_cast<double>(n0), eta, chi, r.J_dynamic);
  r.static_bound = static_error_bound(t, static_cast<double>(n0), chi, J);
  r.static_asymptote = t.B / ((1.0 - t.beta) * std::pow(static_cast<double>(n0), chi));
  r.growth_condition = std::pow(eta, chi) * t.beta > 1.0;
  r.dynamic_not_worse = r.dynamic_bound <= r.static_bound;
  return r;
}

std::optional<std::int64_t> dynamic_threshold(const BoundTerms& t, std::int64_t n0, double eta, double chi,
                                              std::int64_t scan_limit) {
  if (scan_limit < 1) throw std::invalid_argument("scan limit must be >= 1");
  std::optional<std::int64_t> j_min;
  for (std::int64_t J = scan_limit; J >= 1; --J) {
    if (!compare_dynamic_static(t, n0, eta, chi, J).dynamic_not_worse) break;
    j_min = J;
  }
  return j_min;
}

void EtaProblem::validate() const {
  terms.validate();
  if (n0 < 1) throw std::invalid_argument("initial worker count must be >= 1");
  require_q(q);
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  if (J < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (straggler_rate) {
    if (!(*straggler_rate > 0.0)) throw std::invalid_argument("straggler rate must be positive");
  } else if (!(runtime > 0.0)) {
    throw std::invalid_argument("runtime must be positive");
  }
  if (!(overhead >= 0.0)) throw std::invalid_argument("overhead must be non-negative");
  if (!(deadline > 0.0)) throw std::invalid_argument("deadline must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("target error must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

double eta_objective(double eta, std::int64_t J) {
  if (!(eta > 0.0)) throw std::invalid_argument("growth rate must be positive");
  const double Jd = static_cast<double>(J);
  if (eta == 1.0) return Jd;
  const double l = std::log(eta);
  return std::expm1(Jd * l) / std::expm1(l);
}

double eta_completion(const EtaProblem& p, double eta) {
  const double log_eta = std::log(eta);
  const double log_n0 = std::log(static_cast<double>(p.n0));
  const double log_neg_log_q = p.q > 0.0 ? std::log(-std::log(p.q)) : 0.0;
  constexpr double kLogTiny = -690.7755278982137;  // ln(1e-300)
  double total = 0.0;
  for (std::int64_t j = 1; j <= p.J; ++j) {
    const double jd = static_cast<double>(j);
    const double runtime =
        p.straggler_rate ? p.overhead + (log_n0 + (jd - 1.0) * log_eta) / *p.straggler_rate : p.runtime;
    double idle = 0.0;
    if (p.q > 0.0) {
      // q^{n0 eta^j} = exp(-exp(ln n0 + j ln eta + ln(-ln q)))
      const double log_idle = -std::exp(log_n0 + jd * log_eta + log_neg_log_q);
      idle = log_idle < kLogTiny ? 0.0 : std::exp(log_idle);
    }
    total += runtime / (1.0 - idle);
  }
  return total;
}

double eta_error(const EtaProblem& p, double eta) {
  return error_bound_dynamic(p.terms, static_cast<double>(p.n0), eta, p.chi, p.J);
}

EtaPlan optimize_eta(const EtaProblem& p) {
  p.validate();
  const double lo = std::exp(-std::log(p.terms.beta) / p.chi) * (1.0 + 1e-12);
  const double hi = p.eta_max;
  if (!(hi > lo)) {
    throw std::invalid_argument("eta_max " + std::to_string(hi) + " is not above the growth threshold " +
                                std::to_string(lo));
  }
  const double tol = p.tolerance;

  auto error_ok = [&](double eta) { return eta_error(p, eta) <= p.epsilon; };
  if (!error_ok(hi)) {
    throw ErrorFloor("target " + std::to_string(p.epsilon) + " is below the bound " +
                         std::to_string(eta_error(p, hi)) + " reached at eta_max",
                     eta_error(p, hi));
  }
  const double error_lo = error_ok(lo) ? lo : boundary(error_ok, hi, lo, tol);

  auto completion = [&](double eta) { return eta_completion(p, eta); };
  const auto cmin = numerics::golden_section_minimize(completion, lo, hi, tol);
  if (cmin.value > p.deadline) {
    throw InfeasibleDeadline("deadline " + std::to_string(p.deadline) + " s is below the smallest expected completion " +
                                 std::to_string(cmin.value) + " s over eta",
                             cmin.value);
  }
  auto deadline_ok = [&](double eta) { return completion(eta) <= p.deadline; };
  const double c_lo = deadline_ok(lo) ? lo : boundary(deadline_ok, cmin.x, lo, tol);
  const double c_hi = deadline_ok(hi) ? hi : boundary(deadline_ok, cmin.x, hi, tol);

  EtaPlan plan;
  plan.J = p.J;
  plan.feasible_lo = std::max(error_lo, c_lo);
  plan.feasible_hi = c_hi;
  if (plan.feasible_lo > plan.feasible_hi) {
    throw InfeasibleDeadline("no eta meets both the target error (eta >= " + std::to_string(error_lo) +
                                 ") and the deadline (eta <= " + std::to_string(c_hi) + ")",
                             completion(error_lo));
  }
  const auto best = numerics::golden_section_minimize([&](double eta) { return eta_objective(eta, p.J); },
                                                      plan.feasible_lo, plan.feasible_hi, tol);
  plan.eta = best.x;
  plan.objective = best.value;
  plan.iterations = best.iterations;
  plan.completion = completion(plan.eta);
  plan.error = eta_error(p, plan.eta);
  return plan;
}

EtaPlan optimize_eta_joint(EtaProblem p, std::int64_t max_J) {
  if (max_J < 1) throw std::invalid_argument("max_J must be >= 1");
  std::optional<EtaPlan> best;
  std::optional<double> last_floor;
  double last_completion = 0.0;
  for (std::int64_t J = 1; J <= max_J; ++J) {
    // The objective is at least J, so larger J cannot improve on best.
    if (best && static_cast<double>(J) > best->objective) break;
    p.J = J;
    try {
      EtaPlan plan = optimize_eta(p);
      if (!best || plan.objective < best->objective) best = plan;
    } catch (const ErrorFloor& e) {
      last_floor = e.floor();
    } catch (const InfeasibleDeadline& e) {
      last_completion = e.minimal_deadline();
      // Completion only grows with J once even the best eta misses the deadline.
      const double lo = std::exp(-std::log(p.terms.beta) / p.chi) * (1.0 + 1e-12);
      const auto cmin = numerics::golden_section_minimize([&](double eta) { return eta_completion(p, eta); }, lo,
                                                          p.eta_max, p.tolerance);
      if (cmin.value > p.deadline) break;
    }
  }
  if (!best) {
    if (last_completion > 0.0) {
      throw InfeasibleDeadline("no (J, eta) pair meets the deadline " + std::to_string(p.deadline) + " s",
                               last_completion);
    }
    throw ErrorFloor("no J up to " + std::to_string(max_J) + " reaches the target " + std::to_string(p.epsilon),
                     last_floor.value_or(0.0));
  }
  return *best;
}

}  // namespace spotsgd
