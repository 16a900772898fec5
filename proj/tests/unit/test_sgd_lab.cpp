#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "spotsgd/errors.hpp"
#include "spotsgd/sgd_lab.hpp"

using namespace spotsgd;

TEST_SUITE("sgd_lab") {
  TEST_CASE("generated spectrum and optimum") {
    const auto p = make_problem(20, 500, 10.0, 7);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.X.transpose() * p.X / 500.0);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(10.0).epsilon(0.1));
    CHECK(p.lambda_max / p.lambda_min == doctest::Approx(10.0).epsilon(0.1));
    CHECK(std::abs(p.gap(p.w_star)) < 1e-12);
    CHECK(p.gradient(p.w_star).norm() < 1e-8);
    CHECK(p.objective(p.w0) - p.G_star == doctest::Approx(p.gap(p.w0)).epsilon(1e-8));
  }

  TEST_CASE("identity Hessian constants") {
    const auto p = make_problem(5, 200, 1.0, 3);
    const auto est = estimate_constants(p, 0.0, 200, 8, 11);
    CHECK(est.constants.L == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(est.constants.c == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(est.constants.M == doctest::Approx(0.0));
    CHECK(est.constants.M_V == doctest::Approx(0.0));
    CHECK_NOTHROW(est.constants.validate());
  }

  TEST_CASE("full-batch descent follows the linear recursion") {
    const auto p = make_problem(6, 100, 4.0, 5);
    const double alpha = 0.2;
    const int J = 40;
    const auto rec = run_sync_sgd(p, std::vector<int>(J, 3), alpha, 100, 1);
    Eigen::VectorXd e = p.w0 - p.w_star;
    const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(6, 6) - alpha * p.hessian;
    for (int j = 0; j <= J; ++j) {
      const double expect = 0.5 * e.dot(p.hessian * e);
      CHECK(rec.gap[j] == doctest::Approx(expect).epsilon(1e-8));
      e = step * e;
    }
  }

  TEST_CASE("gradient variance halves when workers double") {
    const auto p = make_problem(8, 300, 5.0, 9);
    Rng rng(21);
    const Eigen::VectorXd full = p.gradient(p.w0);
    auto spread = [&](int y, double& var, double& se) {
      const int N = 4000;
      std::vector<double> x(N);
      for (int i = 0; i < N; ++i) x[i] = (averaged_gradient(p, p.w0, y, 1, rng) - full).squaredNorm();
      double m = 0.0;
      for (double v : x) m += v;
      m /= N;
      double s = 0.0;
      for (double v : x) s += (v - m) * (v - m);
      var = m;
      se = std::sqrt(s / (N - 1) / N);
    };
    double v1, s1, v2, s2;
    spread(1, v1, s1);
    spread(2, v2, s2);
    CHECK(std::abs(v1 - 2.0 * v2) <= 3.0 * std::hypot(s1, 2.0 * s2));
  }

  TEST_CASE("bound holds for random schedules") {
    const auto p = make_problem(10, 200, 10.0, 13);
    const auto est = estimate_constants(p, 0.0, 10, 16, 17);
    Rng rng(5);
    for (int s = 0; s < 4; ++s) {
      std::vector<int> sched(150);
      for (auto& y : sched) y = 1 + static_cast<int>(rng.uniform() * 8.0);
      const auto rep = validate_bound(p, est.constants, sched, 10, 60, 100 + s);
      CHECK(rep.valid);
      CHECK(rep.terminal_mean_gap < rep.mean_gap.front());
    }
  }

  TEST_CASE("more workers lower the bound and the gap") {
    const auto p = make_problem(10, 200, 10.0, 13);
    const auto est = estimate_constants(p, 0.0, 10, 16, 17);
    const auto one = validate_bound(p, est.constants, std::vector<int>(300, 1), 10, 60, 3);
    const auto four = validate_bound(p, est.constants, std::vector<int>(300, 4), 10, 60, 3);
    CHECK(four.terminal_bound < one.terminal_bound);
    CHECK(four.terminal_mean_gap < one.terminal_mean_gap);
  }

  TEST_CASE("runs are reproducible") {
    const auto p = make_problem(10, 200, 10.0, 13);
    const std::vector<int> sched(50, 2);
    const auto a = run_sync_sgd(p, sched, 0.01, 1, 77);
    const auto b = run_sync_sgd(p, sched, 0.01, 1, 77);
    CHECK(a.gap == b.gap);
    const auto c = run_sync_sgd(p, sched, 0.01, 1, 78);
    CHECK(a.gap != c.gap);
  }

  TEST_CASE("divergence is reported") {
    const auto p = make_problem(10, 200, 10.0, 13);
    CHECK_THROWS_AS(run_sync_sgd(p, std::vector<int>(400, 1), 1.0, 1, 1), CheckFailed);
  }

  TEST_CASE("provisioned divisor needs the provisioned counts") {
    const auto p = make_problem(4, 50, 2.0, 1);
    SgdRunOptions o;
    o.divisor = UpdateDivisor::provisioned;
    CHECK_THROWS(run_sync_sgd(p, std::vector<int>(5, 1), 0.01, 1, 1, o));
    o.provisioned = std::vector<int>(5, 2);
    const auto rec = run_sync_sgd(p, std::vector<int>(5, 1), 0.01, 1, 1, o);
    CHECK(rec.gap.size() == 6);
  }
}
