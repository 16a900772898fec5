#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/errors.hpp"

using namespace spotsgd;

namespace {

SgdConstants constants() {
  SgdConstants k;
  k.alpha = 0.01;
  k.M = 200.0;
  return k;
}

const PriceModel kUniform = PriceModel::uniform(0.2, 1.0);
const RuntimeModel kExp = RuntimeModel::exponential(1.0);

// eps with Q(eps) = q at J for the default constants.
double eps_for_q(const SgdConstants& k, double q, std::int64_t J) {
  const double bJ = std::pow(k.beta(), double(J));
  return bJ * k.G0 + q * k.noise_floor_coefficient() * (1.0 - bJ);
}

}  // namespace

TEST_SUITE("bid_optimizer") {
  TEST_CASE("uniform-bid completion and cost") {
    CHECK(expected_completion_uniform(1000, 4, 0.6, kUniform, kExp) == doctest::Approx(1000.0 * 25.0 / 12.0 / 0.5));
    CHECK(expected_cost_uniform(1000, 4, 0.6, kUniform, kExp) == doctest::Approx(10000.0 / 3.0));
    CHECK(expected_completion_uniform(100, 4, 1.0, kUniform, kExp) == doctest::Approx(100.0 * 25.0 / 12.0));
    CHECK(expected_cost_uniform(100, 4, 1.0, kUniform, kExp) == doctest::Approx(100 * 4 * 25.0 / 12.0 * 0.6));
    CHECK_THROWS_AS(expected_completion_uniform(10, 4, 0.2, kUniform, kExp), InfeasibleBid);
  }

  TEST_CASE("completion and cost monotone in the bid") {
    const auto gau = PriceModel::truncated_gaussian(0.6, 0.04, 0.2, 1.0);
    for (const PriceModel* m : {&kUniform, &gau}) {
      double prev_cost = 0.0, prev_time = std::numeric_limits<double>::infinity();
      for (int i = 1; i <= 100; ++i) {
        const double b = 0.2 + 0.8 * i / 100.0;
        const double cost = expected_cost_uniform(500, 4, b, *m, kExp);
        const double time = expected_completion_uniform(500, 4, b, *m, kExp);
        CHECK(cost >= prev_cost - 1e-9);
        CHECK(time <= prev_time + 1e-9);
        CHECK(expected_cost_uniform(501, 4, b, *m, kExp) > cost);
        CHECK(expected_completion_uniform(501, 4, b, *m, kExp) > time);
        prev_cost = cost;
        prev_time = time;
      }
    }
  }

  TEST_CASE("optimal uniform bid") {
    const auto k = constants();
    const double eps = 0.3;
    const std::int64_t J = iterations_for_error(k, eps, 0.25);
    const double work = double(J) * 25.0 / 12.0;
    const auto plan = optimal_uniform_bid({eps, 2.0 * work}, 4, k, kUniform, kExp);
    CHECK(plan.J == J);
    CHECK(plan.b1 == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(plan.b2 == plan.b1);
    CHECK(plan.expected_completion == doctest::Approx(2.0 * work).epsilon(1e-12));
    CHECK(plan.expected_error <= eps);
    const auto tight = optimal_uniform_bid({eps, work}, 4, k, kUniform, kExp);
    CHECK(tight.b1 == doctest::Approx(1.0));
    try {
      optimal_uniform_bid({eps, 0.5 * work}, 4, k, kUniform, kExp);
      FAIL("expected infeasibility");
    } catch (const InfeasibleDeadline& e) {
      CHECK(e.minimal_deadline() == doctest::Approx(work));
    }
  }

  TEST_CASE("inverse active moment") {
    CHECK(expected_inverse_active(0.6, 0.6, 2, 4, kUniform) == doctest::Approx(0.25));
    CHECK(expected_inverse_active(0.6, 0.2, 2, 4, kUniform) == doctest::Approx(0.5));
    CHECK(expected_inverse_active(0.6, 0.4, 2, 4, kUniform) == doctest::Approx(0.375));
  }

  TEST_CASE("two-bid formulas collapse") {
    BidPlan same{0.7, 0.7, 2, 4, 800};
    CHECK(expected_cost_two_bids(same, kUniform, kExp) ==
          doctest::Approx(expected_cost_uniform(800, 4, 0.7, kUniform, kExp)).epsilon(1e-10));
    CHECK(expected_completion_two_bids(same, kUniform, kExp) ==
          doctest::Approx(expected_completion_uniform(800, 4, 0.7, kUniform, kExp)).epsilon(1e-10));
    BidPlan low{0.7, 0.2, 2, 4, 800};
    CHECK(expected_cost_two_bids(low, kUniform, kExp) ==
          doctest::Approx(expected_cost_uniform(800, 2, 0.7, kUniform, kExp)).epsilon(1e-10));
    CHECK(expected_completion_two_bids(low, kUniform, kExp) ==
          doctest::Approx(expected_completion_uniform(800, 2, 0.7, kUniform, kExp)).epsilon(1e-10));
  }

  TEST_CASE("two-bid cost by hand") {
    // (J / F(b1)) [4 E[R(4)] int_0.2^0.4 p/0.8 dp + 2 E[R(2)] int_0.4^0.6 p/0.8 dp]
    const double lowband = (0.4 * 0.4 - 0.2 * 0.2) / 2.0 / 0.8;
    const double highband = (0.6 * 0.6 - 0.4 * 0.4) / 2.0 / 0.8;
    const double expect = 1000.0 / 0.5 * (4.0 * 25.0 / 12.0 * lowband + 2.0 * 1.5 * highband);
    BidPlan p{0.6, 0.4, 2, 4, 1000};
    CHECK(expected_cost_two_bids(p, kUniform, kExp) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expected_completion_two_bids(p, kUniform, kExp) ==
          doctest::Approx(1000.0 / 0.5 * (0.5 * 25.0 / 12.0 + 0.5 * 1.5)).epsilon(1e-12));
  }

  TEST_CASE("optimal two bids worked instance") {
    const auto k = constants();
    const std::int64_t J = 1000;
    const double eps = eps_for_q(k, 0.375, J);
    const double theta = 2.0 * J * ((25.0 / 12.0 - 1.5) * 0.5 + 1.5);
    const auto plan = optimal_two_bids({eps, theta}, 2, 4, J, k, kUniform, kExp);
    CHECK(plan.gamma == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(plan.b1 == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(plan.b2 == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(plan.expected_error == doctest::Approx(eps).epsilon(1e-9));
    CHECK(plan.expected_completion == doctest::Approx(theta).epsilon(1e-9));

    const auto degenerate = optimal_two_bids({eps_for_q(k, 0.25, J), theta}, 2, 4, J, k, kUniform, kExp);
    CHECK(degenerate.gamma == doctest::Approx(1.0));
    CHECK(degenerate.b2 == doctest::Approx(degenerate.b1));

    CHECK_THROWS_AS(optimal_two_bids({eps_for_q(k, 0.2, J), theta}, 2, 4, J, k, kUniform, kExp), QRangeError);
    CHECK_THROWS_AS(optimal_two_bids({eps_for_q(k, 0.6, J), theta}, 2, 4, J, k, kUniform, kExp), QRangeError);
    CHECK_THROWS_AS(optimal_two_bids({eps, 0.5 * J * 25.0 / 12.0}, 2, 4, J, k, kUniform, kExp), InfeasibleDeadline);
  }

  TEST_CASE("plan metrics versus gamma") {
    // With F(b1) fixed, the error bound falls and cost and time rise with gamma.
    const auto k = constants();
    double prev_err = 1e9, prev_cost = 0.0, prev_time = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double gamma = i / 10.0;
      BidPlan p{0.6, std::min(0.6, kUniform.quantile(gamma * 0.5)), 2, 4, 1000};
      if (gamma == 0.0) p.b2 = 0.2;
      evaluate_plan(p, k, kUniform, kExp);
      CHECK(p.expected_error < prev_err);
      CHECK(p.expected_cost > prev_cost);
      CHECK(p.expected_completion > prev_time);
      prev_err = p.expected_error;
      prev_cost = p.expected_cost;
      prev_time = p.expected_completion;
    }
  }

  TEST_CASE("co-optimizing the group size") {
    const auto k = constants();
    const std::int64_t J = 1000;
    const double eps = eps_for_q(k, 0.3, J);
    const double theta = 3.0 * J;
    const auto best = co_optimize_group_size({eps, theta}, 4, J, k, kUniform, kExp);
    for (int n1 = 1; n1 <= 4; ++n1) {
      try {
        const auto p = optimal_two_bids({eps, theta}, n1, 4, J, k, kUniform, kExp);
        CHECK(best.expected_cost <= p.expected_cost * (1.0 + 1e-12));
      } catch (const Error&) {
      }
    }
    // 3-D brute force over (n1, b1, b2).
    double brute = std::numeric_limits<double>::infinity();
    for (int n1 = 1; n1 <= 4; ++n1) {
      for (int i = 1; i <= 120; ++i) {
        for (int m = 0; m <= i; ++m) {
          BidPlan p{0.2 + 0.8 * i / 120, 0.2 + 0.8 * m / 120, n1, 4, J};
          evaluate_plan(p, k, kUniform, kExp);
          if (p.expected_error <= eps * (1 + 1e-12) && p.expected_completion <= theta * (1 + 1e-12)) {
            brute = std::min(brute, p.expected_cost);
          }
        }
      }
    }
    CHECK(best.expected_cost <= brute * (1.0 + 1e-9));
    CHECK(best.expected_cost >= brute * 0.95);

    const auto uni = co_optimize_group_size({eps_for_q(k, 0.25, J), theta}, 4, J, k, kUniform, kExp);
    CHECK(uni.b1 == doctest::Approx(uni.b2));
  }

  TEST_CASE("co-optimizing the iteration count") {
    const auto k = constants();
    const double eps = 0.35;
    const double theta = 6000.0;
    const auto best = co_optimize_iterations({eps, theta}, 2, 4, k, kUniform, kExp);
    const auto w = two_bid_iteration_window(k, eps, 2, 4);
    for (std::int64_t J = w.lo; J <= w.hi.value_or(w.lo + 200); J += 7) {
      try {
        const auto p = optimal_two_bids({eps, theta}, 2, 4, J, k, kUniform, kExp);
        CHECK(best.expected_cost <= p.expected_cost * (1.0 + 1e-12));
      } catch (const Error&) {
      }
    }
    CHECK(best.J >= w.lo);
    // J is within a ceiling of the iterations needed at E[1/y].
    const auto need = iterations_for_error(k, eps, best.inverse_moment);
    CHECK(std::abs(need - best.J) <= 1);
  }

  TEST_CASE("plan order") {
    BidPlan a{0.5, 0.5, 2, 4, 10}, b{0.5, 0.5, 2, 4, 11};
    a.expected_cost = b.expected_cost = 1.0;
    CHECK(plan_less(a, b));
    CHECK_FALSE(plan_less(b, a));
  }
}
