#include "spotsgd/bid_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "spotsgd/errors.hpp"

namespace spotsgd {

namespace {

// Relative slack when testing Q(eps) against 1/n and 1/n1, so that targets
// constructed to hit an endpoint exactly are not rejected by rounding.
constexpr double kQSlack = 1e-12;

void require_group_sizes(int n1, int n) {
  if (n < 1 || n1 < 1 || n1 > n) throw std::invalid_argument("group sizes must satisfy 1 <= n1 <= n");
}

double feasible_cdf(const PriceModel& price, double b) {
  const double fb = price.cdf(b);
  if (!(fb > 0.0)) throw InfeasibleBid("bid " + std::to_string(b) + " never runs: F(b) = 0", b);
  return fb;
}

std::string window_text(const IterationWindow& w) {
  return "[" + std::to_string(w.lo) + ", " + (w.hi ? std::to_string(*w.hi) : std::string("inf")) + "]";
}

}  // namespace

void JobRequirements::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("target error must be positive");
  if (!(deadline > 0.0)) throw std::invalid_argument("deadline must be positive");
}

double expected_completion_uniform(std::int64_t J, int n, double b, const PriceModel& price,
                                   const RuntimeModel& rt) {
  const double fb = feasible_cdf(price, b);
  return static_cast<double>(J) * expected_iteration_runtime(n, rt) / fb;
}

double expected_cost_uniform(std::int64_t J, int n, double b, const PriceModel& price, const RuntimeModel& rt) {
  return static_cast<double>(J) * n * expected_iteration_runtime(n, rt) * price.mean_price_below(b);
}

BidPlan optimal_uniform_bid(const JobRequirements& req, int n, const SgdConstants& k, const PriceModel& price,
                            const RuntimeModel& rt) {
  req.validate();
  require_group_sizes(n, n);
  const std::int64_t J = iterations_for_error(k, req.epsilon, 1.0 / n);
  BidPlan plan;
  plan.n1 = n;
  plan.n = n;
  plan.J = J;
  if (J == 0) {
    // Already at the target: nothing to run.
    plan.b1 = plan.b2 = price.lower();
    plan.gamma = 1.0;
    plan.inverse_moment = 1.0 / n;
    plan.expected_error = k.G0;
    return plan;
  }
  const double busy = static_cast<double>(J) * expected_iteration_runtime(n, rt);
  if (busy > req.deadline) {
    throw InfeasibleDeadline("deadline " + std::to_string(req.deadline) + " s is shorter than J E[R(n)] = " +
                                 std::to_string(busy) + " s even without interruptions",
                             busy);
  }
  plan.b1 = plan.b2 = price.quantile(busy / req.deadline);
  evaluate_plan(plan, k, price, rt);
  return plan;
}

double expected_inverse_active(double b1, double b2, int n1, int n, const PriceModel& price) {
  require_group_sizes(n1, n);
  if (b2 > b1) throw std::invalid_argument("bids must satisfy b2 <= b1");
  const double f1 = feasible_cdf(price, b1);
  const double f2 = price.cdf(b2);
  return ((f1 - f2) / n1 + f2 / n) / f1;
}

double expected_cost_two_bids(const BidPlan& plan, const PriceModel& price, const RuntimeModel& rt) {
  require_group_sizes(plan.n1, plan.n);
  const double f1 = feasible_cdf(price, plan.b1);
  const double low = price.partial_expectation(price.lower(), plan.b2);
  const double high = price.partial_expectation(plan.b2, plan.b1);
  const double all_active = plan.n * expected_iteration_runtime(plan.n, rt) * low;
  const double first_group = plan.n1 * expected_iteration_runtime(plan.n1, rt) * high;
  return static_cast<double>(plan.J) / f1 * (all_active + first_group);
}

double expected_completion_two_bids(const BidPlan& plan, const PriceModel& price, const RuntimeModel& rt) {
  require_group_sizes(plan.n1, plan.n);
  const double f1 = feasible_cdf(price, plan.b1);
  const double gamma = price.cdf(plan.b2) / f1;
  const double per_iteration =
      gamma * expected_iteration_runtime(plan.n, rt) + (1.0 - gamma) * expected_iteration_runtime(plan.n1, rt);
  return static_cast<double>(plan.J) / f1 * per_iteration;
}

void evaluate_plan(BidPlan& plan, const SgdConstants& k, const PriceModel& price, const RuntimeModel& rt) {
  const double f1 = feasible_cdf(price, plan.b1);
  plan.gamma = price.cdf(plan.b2) / f1;
  plan.inverse_moment = expected_inverse_active(plan.b1, plan.b2, plan.n1, plan.n, price);
  plan.expected_cost = expected_cost_two_bids(plan, price, rt);
  plan.expected_completion = expected_completion_two_bids(plan, price, rt);
  plan.expected_error = error_bound_constant(k, plan.inverse_moment, plan.J);
}

IterationWindow two_bid_iteration_window(const SgdConstants& k, double epsilon, int n1, int n) {
  require_group_sizes(n1, n);
  IterationWindow w;
  w.lo = std::max<std::int64_t>(1, iterations_for_error(k, epsilon, 1.0 / n));
  try {
    const std::int64_t reach = iterations_for_error(k, epsilon, 1.0 / n1);
    // Q(J) <= 1/n1 holds strictly below `reach` and at `reach` only on equality.
    w.hi = std::max<std::int64_t>(w.lo - 1, reach);
  } catch (const ErrorFloor&) {
    w.hi.reset();
  }
  return w;
}

namespace {

BidPlan two_bids_with_gamma(const JobRequirements& req, int n1, int n, std::int64_t J, double q, double gamma,
                            const SgdConstants& k, const PriceModel& price, const RuntimeModel& rt) {
  const double r_all = expected_iteration_runtime(n, rt);
  const double r_first = expected_iteration_runtime(n1, rt);
  const double busy = static_cast<double>(J) * ((r_all - r_first) * gamma + r_first);
  if (busy > req.deadline * (1.0 + 1e-12)) {
    throw InfeasibleDeadline("deadline " + std::to_string(req.deadline) + " s is shorter than the " +
                                 std::to_string(busy) + " s the plan needs without interruptions",
                             busy);
  }
  BidPlan plan;
  plan.n1 = n1;
  plan.n = n;
  plan.J = J;
  plan.q_epsilon = q;
  plan.b1 = price.quantile(std::min(1.0, busy / req.deadline));
  plan.b2 = gamma >= 1.0 ? plan.b1 : price.quantile(gamma * price.cdf(plan.b1));
  evaluate_plan(plan, k, price, rt);
  return plan;
}

}  // namespace

BidPlan optimal_two_bids(const JobRequirements& req, int n1, int n, std::int64_t J, const SgdConstants& k,
                         const PriceModel& price, const RuntimeModel& rt) {
  req.validate();
  require_group_sizes(n1, n);
  if (J < 1) throw std::invalid_argument("iteration count must be >= 1");
  const double q = q_epsilon(k, req.epsilon, J);
  const double lo = 1.0 / n;
  const double hi = 1.0 / n1;
  if (n1 == n || q < lo * (1.0 - kQSlack) || q > hi * (1.0 + kQSlack)) {
    std::string hint;
    try {
      hint = "; feasible J window " + window_text(two_bid_iteration_window(k, req.epsilon, n1, n));
    } catch (const ErrorFloor&) {
      hint = "; no J reaches the target with n workers";
    }
    throw QRangeError("Q(eps) = " + std::to_string(q) + " is outside (1/n, 1/n1] = (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]" + hint,
                      q, lo, hi);
  }
  const double gamma = std::clamp((hi - q) / (hi - lo), 0.0, 1.0);
  return two_bids_with_gamma(req, n1, n, J, q, gamma, k, price, rt);
}

BidPlan clamped_two_bids(const JobRequirements& req, int n1, int n, std::int64_t J, const SgdConstants& k,
                         const PriceModel& price, const RuntimeModel& rt) {
  req.validate();
  require_group_sizes(n1, n);
  if (J < 1) throw std::invalid_argument("iteration count must be >= 1");
  double q;
  try {
    q = q_epsilon(k, req.epsilon, J);
  } catch (const ErrorFloor&) {
    q = 0.0;  // no inverse moment suffices; use every worker
  }
  const double lo = 1.0 / n;
  const double hi = 1.0 / n1;
  const double gamma = n1 == n ? 1.0 : std::clamp((hi - q) / (hi - lo), 0.0, 1.0);
  return two_bids_with_gamma(req, n1, n, J, q, gamma, k, price, rt);
}

bool plan_less(const BidPlan& a, const BidPlan& b) {
  return std::tie(a.expected_cost, a.J, a.n1, a.b1) < std::tie(b.expected_cost, b.J, b.n1, b.b1);
}

BidPlan co_optimize_group_size(const JobRequirements& req, int n, std::int64_t J, const SgdConstants& k,
                               const PriceModel& price, const RuntimeModel& rt) {
  req.validate();
  require_group_sizes(n, n);
  const double q = q_epsilon(k, req.epsilon, J);
  std::optional<BidPlan> best;
  bool deadline_failure = false;
  auto consider = [&](BidPlan plan) {
    if (plan.b2 == plan.b1) plan.n1 = plan.n;  // gamma = 1 is the uniform bid
    if (!best || plan_less(plan, *best)) best = plan;
  };
  for (int n1 = 1; n1 < n; ++n1) {
    try {
      consider(optimal_two_bids(req, n1, n, J, k, price, rt));
    } catch (const QRangeError&) {
    } catch (const InfeasibleDeadline&) {
      deadline_failure = true;
    }
  }
  if (q >= (1.0 / n) * (1.0 - kQSlack)) {
    const double busy = static_cast<double>(J) * expected_iteration_runtime(n, rt);
    if (busy <= req.deadline) {
      BidPlan plan;
      plan.n1 = plan.n = n;
      plan.J = J;
      plan.q_epsilon = q;
      plan.b1 = plan.b2 = price.quantile(busy / req.deadline);
      evaluate_plan(plan, k, price, rt);
      consider(plan);
    } else {
      deadline_failure = true;
    }
  }
  if (!best) {
    if (deadline_failure) {
      throw InfeasibleDeadline("no group size meets the deadline " + std::to_string(req.deadline) + " s",
                               static_cast<double>(J) * expected_iteration_runtime(1, rt));
    }
    throw QRangeError("no group size n1 in [1, " + std::to_string(n) + "] admits Q(eps) = " + std::to_string(q), q,
                      1.0 / n, 1.0);
  }
  return *best;
}

BidPlan co_optimize_iterations(const JobRequirements& req, int n1, int n, const SgdConstants& k,
                               const PriceModel& price, const RuntimeModel& rt) {
  req.validate();
  require_group_sizes(n1, n);
  const IterationWindow window = two_bid_iteration_window(k, req.epsilon, n1, n);
  // A plan needs at least J E[R(n1)] seconds of running time.
  const double min_per_iteration = std::min(expected_iteration_runtime(n1, rt), expected_iteration_runtime(n, rt));
  const auto deadline_cap = static_cast<std::int64_t>(std::floor(req.deadline / min_per_iteration));
  constexpr std::int64_t kMaxScan = 1'000'000;
  std::int64_t hi = window.hi ? std::min(*window.hi, deadline_cap) : deadline_cap;
  hi = std::min(hi, window.lo + kMaxScan);

  std::optional<BidPlan> best;
  for (std::int64_t J = window.lo; J <= hi; ++J) {
    try {
      BidPlan plan = optimal_two_bids(req, n1, n, J, k, price, rt);
      if (!best || plan_less(plan, *best)) best = plan;
    } catch (const QRangeError&) {
    } catch (const InfeasibleDeadline&) {
    }
  }
  if (!best) {
    throw QRangeError("empty feasible J range: window " + window_text(window) + ", deadline allows J <= " +
                          std::to_string(deadline_cap),
                      0.0, 1.0 / n, 1.0 / n1);
  }
  return *best;
}

}  // namespace spotsgd
