#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "spotsgd/config.hpp"
#include "spotsgd/serialize.hpp"
#include "spotsgd/simulator.hpp"
#include "spotsgd/validation.hpp"

using namespace spotsgd;

namespace {

KeyValueConfig parse(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in, "cfg");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("values are applied") {
    const auto cfg = parse("# constants\nL = 2.5\nalpha=0.05   # step\n\nruntime.family = shifted-exponential\n"
                           "runtime.shift = 0.3\nruntime.log_approximation = true\n");
    SgdConstants k;
    apply_config(cfg, k);
    CHECK(k.L == 2.5);
    CHECK(k.alpha == 0.05);
    CHECK(k.c == 1.0);
    RuntimeModel rt;
    apply_config(cfg, rt);
    CHECK(rt.family == RuntimeFamily::shifted_exponential);
    CHECK(rt.shift == 0.3);
    CHECK(rt.log_approximation);
  }

  TEST_CASE("errors name the line") {
    CHECK(error_of("L = 1\nfoo = 2\n").find("cfg:2") != std::string::npos);
    CHECK(error_of("L = 1\nL = 2\n").find("repeated") != std::string::npos);
    CHECK(error_of("L 1\n").find("cfg:1") != std::string::npos);
    CHECK(error_of("M =\n").find("empty") != std::string::npos);
    const auto bad = parse("alpha = 0.1x\n");
    CHECK_THROWS_AS(bad.number("alpha"), ConfigError);
    RuntimeModel rt;
    CHECK_THROWS_AS(apply_config(parse("runtime.family = weibull\n"), rt), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/spotsgd.cfg"), ConfigError);
  }

  TEST_CASE("seed from the environment") {
    ::unsetenv("SPOTSGD_SEED");
    CHECK(default_seed(9) == 9);
    ::setenv("SPOTSGD_SEED", "0x10", 1);
    CHECK(default_seed(9) == 16);
    ::setenv("SPOTSGD_SEED", "123", 1);
    CHECK(default_seed(9) == 123);
    ::setenv("SPOTSGD_SEED", "12a", 1);
    CHECK_THROWS_AS(default_seed(9), ConfigError);
    ::unsetenv("SPOTSGD_SEED");
  }
}

TEST_SUITE("serialize") {
  TEST_CASE("price models round-trip") {
    for (const auto& m : {PriceModel::uniform(0.2, 1.0), PriceModel::truncated_gaussian(0.6, 0.04, 0.2, 1.0),
                          PriceModel::empirical({0.3, 0.1, 0.7, 0.7})}) {
      const auto back = price_model_from_json(price_model_to_json(m));
      CHECK(back.kind() == m.kind());
      for (double p : {0.15, 0.3, 0.55, 0.7, 0.95}) CHECK(back.cdf(p) == m.cdf(p));
      CHECK(dump(price_model_to_json(back)) == dump(price_model_to_json(m)));
    }
  }

  TEST_CASE("bid plans round-trip") {
    BidPlan p;
    p.b1 = 0.6;
    p.b2 = 0.4;
    p.n1 = 2;
    p.n = 4;
    p.J = 1000;
    p.expected_cost = 3333.25;
    p.gamma = 0.5;
    const auto q = bid_plan_from_json(to_json(p));
    CHECK(q.b1 == p.b1);
    CHECK(q.b2 == p.b2);
    CHECK(q.n1 == p.n1);
    CHECK(q.n == p.n);
    CHECK(q.J == p.J);
  }

  TEST_CASE("doubles print in shortest round-trip form") {
    for (double v : {0.1, 1.0 / 3.0, 4166.666666666667, 1e-300, 123456789.0}) {
      CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(dump(Json::parse("{\"a\":1}")).back() == '\n');
  }

  TEST_CASE("csv headers") {
    SimConfig c;
    c.plan = SimPlan::no_interruptions(2, 5);
    c.price = PriceModel::uniform(0.2, 1.0);
    c.trials = 3;
    const auto o = simulate(c);
    std::ostringstream trials, traj;
    write_trials_csv(trials, o);
    write_trajectory_csv(traj, o);
    CHECK(first_line(trials.str()) == "trial,cost,completion,iterations,idle");
    CHECK(first_line(traj.str()) == "iter,mean_active,mean_inverse_active,cum_cost_mean,cum_time_mean");
    int rows = 0;
    for (char ch : trials.str()) rows += ch == '\n';
    CHECK(rows == 4);
    const auto j = to_json(o);
    CHECK(j.contains("cost"));
  }
}

TEST_SUITE("validation") {
  TEST_CASE("suite names") {
    for (const char* s : {"formulas", "bounds", "optimizers", "all"}) CHECK(is_known_suite(s));
    CHECK_FALSE(is_known_suite("formula"));
    CHECK_THROWS(run_validation("formula", {}));
  }

  TEST_CASE("optimizer checks pass and serialize") {
    const auto checks = run_validation("optimizers", {});
    REQUIRE(!checks.empty());
    for (const auto& c : checks) {
      INFO(c.name << ": " << c.detail);
      CHECK(c.passed);
      CHECK(c.suite == "optimizers");
    }
    std::ostringstream out;
    write_validation_csv(out, checks);
    CHECK(first_line(out.str()) == "suite,check,passed,observed,expected,tolerance,tolerance_kind");
  }
}
