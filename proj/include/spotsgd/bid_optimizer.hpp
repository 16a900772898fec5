#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "spotsgd/convergence.hpp"
#include "spotsgd/price_model.hpp"
#include "spotsgd/runtime.hpp"

namespace spotsgd {

struct JobRequirements {
  double epsilon = 0.0;   // target expected optimality gap
  double deadline = 0.0;  // theta, seconds

  void validate() const;
};

/// Bids for two worker groups: n1 workers bid b1, the other n - n1 bid b2.
/// A uniform-bid plan has b1 = b2 and n1 = n.
struct BidPlan {
  double b1 = 0.0;
  double b2 = 0.0;
  int n1 = 1;
  int n = 1;
  std::int64_t J = 0;
  double expected_cost = 0.0;
  double expected_completion = 0.0;
  double expected_error = 0.0;
  double gamma = 1.0;             // F(b2) / F(b1)
  double inverse_moment = 1.0;    // E[1/y(b)]
  double q_epsilon = 0.0;         // Q(eps) at J (0 when not computed)

  bool is_uniform() const noexcept { return n1 == n || b1 == b2; }
};

/// J E[R(n)] / F(b).
double expected_completion_uniform(std::int64_t J, int n, double b, const PriceModel& price, const RuntimeModel& rt);

/// J n E[R(n)] E[p | p <= b].
double expected_cost_uniform(std::int64_t J, int n, double b, const PriceModel& price, const RuntimeModel& rt);

/// Cost-optimal identical bid for n workers: J is the smallest iteration
/// count meeting eps with E[1/y] = 1/n, b* = F^{-1}(J E[R(n)] / theta).
/// Throws InfeasibleDeadline (carrying J E[R(n)]) if theta is too short.
BidPlan optimal_uniform_bid(const JobRequirements& req, int n, const SgdConstants& k, const PriceModel& price,
                            const RuntimeModel& rt);

/// E[1/y] = (1/F(b1)) ((F(b1) - F(b2)) / n1 + F(b2) / n).
double expected_inverse_active(double b1, double b2, int n1, int n, const PriceModel& price);

/// (J / F(b1)) [n E[R(n)] int_{p_lo}^{b2} p f + n1 E[R(n1)] int_{b2}^{b1} p f].
double expected_cost_two_bids(const BidPlan& plan, const PriceModel& price, const RuntimeModel& rt);

/// (J / F(b1)) [gamma E[R(n)] + (1 - gamma) E[R(n1)]].
double expected_completion_two_bids(const BidPlan& plan, const PriceModel& price, const RuntimeModel& rt);

/// Fills the derived fields of a plan (gamma, E[1/y], cost, completion, error).
void evaluate_plan(BidPlan& plan, const SgdConstants& k, const PriceModel& price, const RuntimeModel& rt);

/// Iteration counts J for which 1/n <= Q(eps) <= 1/n1 holds (the upper end
/// is empty when the n1-worker noise floor is above eps).
struct IterationWindow {
  std::int64_t lo = 0;
  std::optional<std::int64_t> hi;
};
IterationWindow two_bid_iteration_window(const SgdConstants& k, double epsilon, int n1, int n);

/// Closed-form optimal bids for fixed (n1, n, J):
///   gamma* = (1/n1 - Q) / (1/n1 - 1/n)
///   b1*    = F^{-1}((J / theta) [(E[R(n)] - E[R(n1)]) gamma* + E[R(n1)]])
///   b2*    = F^{-1}(gamma* F(b1*)).
/// Throws QRangeError when Q(eps) is outside [1/n, 1/n1], InfeasibleDeadline
/// when F(b1*) would exceed one.
BidPlan optimal_two_bids(const JobRequirements& req, int n1, int n, std::int64_t J, const SgdConstants& k,
                         const PriceModel& price, const RuntimeModel& rt);

/// Same as optimal_two_bids, but gamma* is clamped to [0, 1] instead of
/// rejecting an out-of-range Q(eps). Used when re-bidding mid-job.
BidPlan clamped_two_bids(const JobRequirements& req, int n1, int n, std::int64_t J, const SgdConstants& k,
                         const PriceModel& price, const RuntimeModel& rt);

/// Exhaustive search over n1 in {1, ..., n} (n1 = n is the uniform bid).
BidPlan co_optimize_group_size(const JobRequirements& req, int n, std::int64_t J, const SgdConstants& k,
                               const PriceModel& price, const RuntimeModel& rt);

/// Scans J over the two-bid iteration window (clipped by the deadline) and
/// returns the cheapest optimal_two_bids plan.
BidPlan co_optimize_iterations(const JobRequirements& req, int n1, int n, const SgdConstants& k,
                               const PriceModel& price, const RuntimeModel& rt);

/// Deterministic order used by every search: cost, then J, n1, b1.
bool plan_less(const BidPlan& a, const BidPlan& b);

}  // namespace spotsgd
