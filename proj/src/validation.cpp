#include "spotsgd/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/numerics.hpp"
#include "spotsgd/preemptible_optimizer.hpp"
#include "spotsgd/serialize.hpp"
#include "spotsgd/sgd_lab.hpp"
#include "spotsgd/simulator.hpp"

namespace spotsgd {

namespace {

CheckResult named(const std::string& suite, const std::string& name) {
  CheckResult r;
  r.suite = suite;
  r.name = name;
  return r;
}

CheckResult relative(const std::string& suite, const std::string& name, double observed, double expected, double tol) {
  CheckResult r = named(suite, name);
  r.observed = observed;
  r.expected = expected;
  r.tolerance = tol;
  r.tolerance_kind = "relative";
  r.passed = std::abs(observed - expected) <= tol * std::abs(expected);
  return r;
}

CheckResult absolute(const std::string& suite, const std::string& name, double observed, double expected, double tol) {
  CheckResult r = named(suite, name);
  r.observed = observed;
  r.expected = expected;
  r.tolerance = tol;
  r.tolerance_kind = "absolute";
  r.passed = std::abs(observed - expected) <= tol;
  return r;
}

CheckResult within_se(const std::string& suite, const std::string& name, double observed, double expected, double se,
                      double k) {
  CheckResult r = named(suite, name);
  r.observed = observed;
  r.expected = expected;
  r.tolerance = k;
  r.tolerance_kind = "std_errors";
  r.passed = std::abs(observed - expected) <= k * se;
  r.detail = "std_error=" + format_double(se);
  return r;
}

SgdConstants reference_constants() {
  SgdConstants k;
  k.L = 1.0;
  k.c = 1.0;
  k.mu = k.mu_G = k.M_G = 1.0;
  k.M_V = 0.0;
  k.alpha = 0.01;
  k.M = 200.0;
  k.G0 = 1.0;
  return k;
}

SimOutcome run_bids(const BidPlan& plan, const PriceModel& price, const RuntimeModel& rt,
                    const ValidationOptions& o) {
  SimConfig c;
  c.plan = SimPlan::from_bids(plan);
  c.price = price;
  c.runtime = rt;
  c.trials = o.trials;
  c.seed = o.seed;
  return simulate(c);
}

std::vector<CheckResult> formulas(const ValidationOptions& o) {
  const std::string S = "formulas";
  std::vector<CheckResult> out;
  const PriceModel uniform = PriceModel::uniform(0.2, 1.0);
  const PriceModel gaussian = PriceModel::truncated_gaussian(0.6, 0.04, 0.2, 1.0);
  const RuntimeModel rt = RuntimeModel::exponential(1.0);
  const std::int64_t J = 1000;

  BidPlan one;
  one.b1 = one.b2 = 0.6;
  one.n1 = one.n = 4;
  one.J = J;
  auto sim = run_bids(one, uniform, rt, o);
  out.push_back(relative(S, "uniform_bid_completion", sim.completion.mean,
                         expected_completion_uniform(J, 4, 0.6, uniform, rt), 0.02));
  out.push_back(relative(S, "uniform_bid_cost", sim.cost.mean, expected_cost_uniform(J, 4, 0.6, uniform, rt), 0.02));

  sim = run_bids(one, gaussian, rt, o);
  out.push_back(relative(S, "uniform_bid_completion_gaussian", sim.completion.mean,
                         expected_completion_uniform(J, 4, 0.6, gaussian, rt), 0.02));
  out.push_back(
      relative(S, "uniform_bid_cost_gaussian", sim.cost.mean, expected_cost_uniform(J, 4, 0.6, gaussian, rt), 0.02));

  BidPlan two;
  two.b1 = 0.6;
  two.b2 = 0.4;
  two.n1 = 2;
  two.n = 4;
  two.J = J;
  sim = run_bids(two, uniform, rt, o);
  out.push_back(
      relative(S, "two_bid_completion", sim.completion.mean, expected_completion_two_bids(two, uniform, rt), 0.02));
  out.push_back(relative(S, "two_bid_cost", sim.cost.mean, expected_cost_two_bids(two, uniform, rt), 0.02));

  SimConfig pc;
  pc.plan = SimPlan::preemptible(WorkerSchedule::fixed(3, J), 0.3, 1.0);
  pc.runtime = RuntimeModel::deterministic(1.0);
  pc.trials = o.trials;
  pc.seed = o.seed;
  sim = simulate(pc);
  out.push_back(relative(S, "preemption_completion", sim.completion.mean,
                         expected_completion_time_preemption(J, 3, 0.3, pc.runtime), 0.02));

  pc.plan = SimPlan::preemptible(WorkerSchedule::fixed(2, 100), 0.5, 1.0);
  pc.runtime = RuntimeModel::exponential(1.0);
  sim = simulate(pc);
  const Summary inv = pooled_inverse_active(sim);
  out.push_back(within_se(S, "binomial_inverse_moment", inv.mean, inverse_moment_binomial(2, 0.5), inv.std_error, 3.0));
  return out;
}

double binomial_coefficient(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

std::vector<CheckResult> bounds(const ValidationOptions& o) {
  const std::string S = "bounds";
  std::vector<CheckResult> out;

  double worst = 0.0, worst_shift = 0.0;
  for (int n = 1; n <= 20; ++n) {
    for (int qi = 1; qi <= 9; ++qi) {
      const double q = qi / 10.0;
      double num = 0.0, shifted = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double pk = binomial_coefficient(n, k) * std::pow(1.0 - q, k) * std::pow(q, n - k);
        if (k > 0) num += pk / k;
        shifted += pk / (k + 1);
      }
      worst = std::max(worst, std::abs(num / (1.0 - std::pow(q, n)) - inverse_moment_binomial(n, q)));
      worst_shift = std::max(worst_shift, std::abs(shifted - inverse_moment_binomial_shifted(n, q)));
    }
  }
  out.push_back(absolute(S, "binomial_inverse_moment_enumeration", worst, 0.0, 1e-12));
  out.push_back(absolute(S, "shifted_inverse_moment_closed_form", worst_shift, 0.0, 1e-12));

  double cap_excess = -std::numeric_limits<double>::infinity();
  for (std::int64_t n = 1; n <= 10'000; ++n) {
    const double nn = static_cast<double>(n);
    cap_excess = std::max(cap_excess, inverse_moment_uniform(n) - (std::log(nn) + 1.0) / nn);
  }
  CheckResult cap = named(S, "uniform_inverse_moment_cap");
  cap.observed = cap_excess;
  cap.tolerance_kind = "absolute";
  cap.passed = cap_excess <= 0.0;
  cap.detail = "max over n <= 10^4 of H_n/n - (ln n + 1)/n";
  out.push_back(cap);

  double worst_rel = 0.0;
  for (double eta : {1.0, 1.05, 1.5, 2.0}) {
    for (double chi : {0.5, 1.0}) {
      SgdConstants k = reference_constants();
      k.alpha = 0.1;
      k.M = 2.0;
      const double d = 1.3;
      const double n0 = 2.0;
      for (std::int64_t Jp : {1, 5, 40, 200}) {
        std::vector<double> e(static_cast<std::size_t>(Jp));
        for (std::int64_t j = 0; j < Jp; ++j) e[static_cast<std::size_t>(j)] = d / std::pow(n0 * std::pow(eta, j), chi);
        const double ref = error_bound(k, e);
        worst_rel = std::max(worst_rel, std::abs(error_bound_dynamic(k, n0, eta, chi, Jp, d) - ref) / ref);
      }
    }
  }
  out.push_back(absolute(S, "dynamic_bound_recursion", worst_rel, 0.0, 1e-10));

  const BoundTerms t{1.0, 0.9, 0.05};
  out.push_back(absolute(S, "static_asymptote", compare_dynamic_static(t, 1, 2.0, 1.0, 100).static_asymptote, 0.5,
                         1e-15));

  const QuadraticProblem p = make_problem(10, 200, 10.0, o.seed);
  const ConstantEstimate est = estimate_constants(p, 0.0, 10, 32, o.seed + 1);
  const int J = 200;
  std::vector<std::vector<int>> schedules = {std::vector<int>(J, 1), std::vector<int>(J, 4)};
  std::mt19937_64 gen(o.seed + 2);
  for (int s = 0; s < 3; ++s) {
    std::vector<int> sched(J);
    for (auto& y : sched) y = 1 + static_cast<int>(gen() % 6);
    schedules.push_back(sched);
  }
  double worst_se = -std::numeric_limits<double>::infinity();
  bool valid = true;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    const BoundReport rep = validate_bound(p, est.constants, schedules[s], 10, o.replications, o.seed + 10 + s);
    valid = valid && rep.valid;
    worst_se = std::max(worst_se, rep.worst_excess_se);
  }
  CheckResult sgd = named(S, "sgd_bound_validity");
  sgd.observed = worst_se;
  sgd.tolerance = 3.0;
  sgd.tolerance_kind = "std_errors";
  sgd.passed = valid;
  sgd.detail = "largest (mean gap - bound) / SE over " + std::to_string(schedules.size()) + " schedules";
  out.push_back(sgd);
  return out;
}

std::vector<CheckResult> optimizers(const ValidationOptions&) {
  const std::string S = "optimizers";
  std::vector<CheckResult> out;
  const PriceModel price = PriceModel::uniform(0.2, 1.0);
  const RuntimeModel rt = RuntimeModel::exponential(1.0);
  const SgdConstants k = reference_constants();

  {
    const int n = 4;
    const double eps = 0.3;
    const std::int64_t J = iterations_for_error(k, eps, 1.0 / n);
    const double theta = 2.0 * static_cast<double>(J) * expected_iteration_runtime(n, rt);
    const BidPlan best = optimal_uniform_bid({eps, theta}, n, k, price, rt);
    double grid_min = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 500; ++i) {
      const double b = price.lower() + (price.upper() - price.lower()) * i / 500.0;
      if (expected_completion_uniform(J, n, b, price, rt) > theta * (1.0 + 1e-12)) continue;
      grid_min = std::min(grid_min, expected_cost_uniform(J, n, b, price, rt));
    }
    CheckResult r = relative(S, "uniform_bid_grid", best.expected_cost, grid_min, 1e-12);
    r.passed = best.expected_cost <= grid_min * (1.0 + 1e-12);
    r.detail = "b*=" + format_double(best.b1);
    out.push_back(r);
  }

  {
    const int n1 = 2, n = 4;
    const std::int64_t J = 1000;
    const double bJ = std::pow(k.beta(), static_cast<double>(J));
    const double eps = bJ * k.G0 + 0.375 * k.noise_floor_coefficient() * (1.0 - bJ);
    const double theta = static_cast<double>(J) *
                         (expected_iteration_runtime(n, rt) + expected_iteration_runtime(n1, rt));
    const BidPlan best = optimal_two_bids({eps, theta}, n1, n, J, k, price, rt);
    double grid_min = std::numeric_limits<double>::infinity();
    BidPlan cand;
    cand.n1 = n1;
    cand.n = n;
    cand.J = J;
    const int G = 200;
    for (int i = 1; i <= G; ++i) {
      cand.b1 = price.lower() + (price.upper() - price.lower()) * i / G;
      for (int m = 0; m <= i; ++m) {
        cand.b2 = price.lower() + (price.upper() - price.lower()) * m / G;
        evaluate_plan(cand, k, price, rt);
        if (cand.expected_completion > theta * (1.0 + 1e-12) || cand.expected_error > eps * (1.0 + 1e-12)) continue;
        grid_min = std::min(grid_min, cand.expected_cost);
      }
    }
    CheckResult r = relative(S, "two_bid_grid", best.expected_cost, grid_min, 1e-12);
    r.passed = best.expected_cost <= grid_min * (1.0 + 1e-12);
    r.detail = "b1*=" + format_double(best.b1) + " b2*=" + format_double(best.b2);
    out.push_back(r);
  }

  {
    const BoundTerms t{1.0, 0.9, 0.05};
    const double eps = 0.2;
    const WorkersIterationsPlan plan = co_optimize_workers_iterations(t, eps, 300);
    std::int64_t brute = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t J = 1; J <= 300; ++J) {
      for (std::int64_t n = 1; n <= 200; ++n) {
        if (static_error_bound(t, static_cast<double>(n), 1.0, J) <= eps) {
          brute = std::min(brute, n * J);
          break;
        }
      }
    }
    CheckResult r = absolute(S, "workers_iterations_bruteforce", static_cast<double>(plan.product),
                             static_cast<double>(brute), 0.0);
    r.detail = "h_residual=" + format_double(plan.h_residual);
    r.passed = r.passed && plan.h_residual < 1e-10;
    out.push_back(r);
  }

  {
    const BoundTerms t{1.0, 0.9, 0.05};
    const auto j_min = dynamic_threshold(t, 1, 2.0, 1.0, 20'000);
    CheckResult r = named(S, "dynamic_threshold");
    r.observed = j_min ? static_cast<double>(*j_min) : -1.0;
    r.tolerance_kind = "absolute";
    r.passed = j_min.has_value();
    r.detail = "smallest J with dynamic <= static up to J = 20000";
    out.push_back(r);
  }

  {
    EtaProblem p;
    p.terms = BoundTerms{1.0, 0.9, 0.05};
    p.n0 = 1;
    p.q = 0.3;
    p.chi = 1.0;
    p.J = 50;
    p.runtime = 1.0;
    p.deadline = 80.0;
    p.eta_max = 3.0;
    p.epsilon = eta_error(p, 1.5);  // error constraint binds inside the interval
    const EtaPlan plan = optimize_eta(p);
    const int G = 10'000;
    const double lo = std::pow(p.terms.beta, -1.0 / p.chi);
    double best_eta = 0.0, best_obj = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= G; ++i) {
      const double eta = lo + (p.eta_max - lo) * i / G;
      if (eta_error(p, eta) > p.epsilon || eta_completion(p, eta) > p.deadline) continue;
      const double obj = eta_objective(eta, p.J);
      if (obj < best_obj) {
        best_obj = obj;
        best_eta = eta;
      }
    }
    out.push_back(absolute(S, "eta_grid", plan.eta, best_eta, (p.eta_max - lo) / G));
  }
  return out;
}

}  // namespace

bool is_known_suite(std::string_view name) {
  return name == "formulas" || name == "bounds" || name == "optimizers" || name == "all";
}

std::vector<CheckResult> run_validation(std::string_view suite, const ValidationOptions& options) {
  if (!is_known_suite(suite)) throw std::invalid_argument("unknown suite '" + std::string(suite) + "'");
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> part) { out.insert(out.end(), part.begin(), part.end()); };
  if (suite == "formulas" || suite == "all") append(formulas(options));
  if (suite == "bounds" || suite == "all") append(bounds(options));
  if (suite == "optimizers" || suite == "all") append(optimizers(options));
  return out;
}

void write_validation_csv(std::ostream& out, const std::vector<CheckResult>& checks) {
  out << "suite,check,passed,observed,expected,tolerance,tolerance_kind\n";
  for (const auto& c : checks) {
    out << c.suite << ',' << c.name << ',' << (c.passed ? "true" : "false") << ',' << format_double(c.observed) << ','
        << format_double(c.expected) << ',' << format_double(c.tolerance) << ',' << c.tolerance_kind << '\n';
  }
}

}  // namespace spotsgd
