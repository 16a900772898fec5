// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/errors.hpp"
#include "spotsgd/preemptible_optimizer.hpp"
#include "spotsgd/rng.hpp"
#include "spotsgd/sgd_lab.hpp"
#include "spotsgd/simulator.hpp"

using namespace spotsgd;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " | " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double harmonic(int m) {
  double h = 0.0;
  for (int k = m; k >= 1; --k) h += 1.0 / k;
  return h;
}

// Uniform prices on [lo, hi] with exp(1) runtimes.
struct UniformOracle {
  double lo = 0.2, hi = 1.0;
  double F(double b) const { return std::clamp((b - lo) / (hi - lo), 0.0, 1.0); }
  double pmass(double a, double b) const { return (b * b - a * a) / (2.0 * (hi - lo)); }
  double completion(std::int64_t J, int n1, int n, double b1, double b2) const {
    const double g = F(b2) / F(b1);
    return J / F(b1) * (g * harmonic(n) + (1.0 - g) * harmonic(n1));
  }
  double cost(std::int64_t J, int n1, int n, double b1, double b2) const {
    return J / F(b1) * (n * harmonic(n) * pmass(lo, b2) + n1 * harmonic(n1) * pmass(b2, b1));
  }
  double inverse(int n1, int n, double b1, double b2) const {
    return ((F(b1) - F(b2)) / n1 + F(b2) / n) / F(b1);
  }
};

SgdConstants reference_constants() {
  SgdConstants k;
  k.alpha = 0.01;
  k.M = 200.0;
  return k;
}

double bound_const(const SgdConstants& k, double e, std::int64_t J) {
  double b = k.G0;
  for (std::int64_t j = 0; j < J; ++j) b = k.beta() * b + 0.5 * k.alpha * k.alpha * k.L * k.M * e;
  return b;
}

double eps_for_q(const SgdConstants& k, double q, std::int64_t J) {
  const double bJ = std::pow(k.beta(), double(J));
  return bJ * k.G0 + q * k.noise_floor_coefficient() * (1.0 - bJ);
}

SimConfig bid_sim(const BidPlan& plan, const PriceModel& price, std::int64_t trials, std::uint64_t seed) {
  SimConfig c;
  c.plan = SimPlan::from_bids(plan);
  c.price = price;
  c.runtime = RuntimeModel::exponential(1.0);
  c.trials = trials;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------

void criteria_1_2() {
  BidPlan plan;
  plan.b1 = plan.b2 = 0.6;
  plan.n1 = plan.n = 4;
  plan.J = 1000;
  const auto o = simulate(bid_sim(plan, PriceModel::uniform(0.2, 1.0), 100'000, 1));
  const double t = 1000.0 * (25.0 / 12.0) / 0.5;
  const double c = 10000.0 / 3.0;
  const double et = std::abs(o.completion.mean - t) / t;
  const double ec = std::abs(o.cost.mean - c) / c;
  report(1, "uniform-bid mean completion at 1e5 trials", et <= 0.02,
         "simulated=" + fmt(o.completion.mean) + " expected=" + fmt(t) + " rel_err=" + fmt(et) + " tol=0.02");
  report(2, "uniform-bid mean cost at 1e5 trials", ec <= 0.02,
         "simulated=" + fmt(o.cost.mean) + " expected=" + fmt(c) + " rel_err=" + fmt(ec) + " tol=0.02");
}

void criterion_3() {
  const auto k = reference_constants();
  const auto price = PriceModel::uniform(0.2, 1.0);
  const auto rt = RuntimeModel::exponential(1.0);
  const UniformOracle u;
  const JobRequirements req{0.35, 3700.0};
  const int n = 4;
  const auto best = optimal_uniform_bid(req, n, k, price, rt);
  const std::int64_t J = best.J;
  bool exact = std::abs(best.b1 - price.quantile(J * harmonic(n) / req.deadline)) < 1e-12;
  const double best_cost = u.cost(J, n, n, best.b1, best.b1);
  double grid_cost = std::numeric_limits<double>::infinity(), grid_bid = 0.0;
  int feasible = 0;
  for (int i = 1; i <= 500; ++i) {
    const double b = 0.2 + 0.8 * i / 500.0;
    if (u.completion(J, n, n, b, b) > req.deadline * (1.0 + 1e-12)) continue;
    if (bound_const(k, 1.0 / n, J) > req.epsilon) continue;
    ++feasible;
    const double c = u.cost(J, n, n, b, b);
    if (c < best_cost * (1.0 - 1e-12)) exact = false;
    if (c < grid_cost) {
      grid_cost = c;
      grid_bid = b;
    }
  }
  BidPlan g = best;
  g.b1 = g.b2 = grid_bid;
  const auto s_best = simulate(bid_sim(best, price, 20'000, 11));
  const auto s_grid = simulate(bid_sim(g, price, 20'000, 12));
  const double se = std::hypot(s_best.cost.std_error, s_grid.cost.std_error);
  const bool sim_ok = s_best.cost.mean <= s_grid.cost.mean + 2.0 * se;
  report(3, "optimal uniform bid against a 500-bid grid", exact && feasible > 0 && sim_ok,
         "b*=" + fmt(best.b1) + " J=" + fmt(double(J)) + " cost*=" + fmt(best_cost) + " grid_best=" + fmt(grid_cost) +
             " feasible=" + std::to_string(feasible) + " sim*=" + fmt(s_best.cost.mean) +
             " sim_grid=" + fmt(s_grid.cost.mean) + " se=" + fmt(se));
}

void criterion_4() {
  const auto k = reference_constants();
  const auto price = PriceModel::uniform(0.2, 1.0);
  const auto rt = RuntimeModel::exponential(1.0);
  const UniformOracle u;
  const std::int64_t J = 1000;
  const int n1 = 2, n = 4;
  const double eps = eps_for_q(k, 0.375, J);
  const double theta = 2.0 * J * ((harmonic(4) - harmonic(2)) * 0.5 + harmonic(2));
  const auto plan = optimal_two_bids({eps, theta}, n1, n, J, k, price, rt);
  const double err = bound_const(k, u.inverse(n1, n, plan.b1, plan.b2), J);
  const double time = u.completion(J, n1, n, plan.b1, plan.b2);
  const double tight_err = std::abs(err - eps) / eps;
  const double tight_time = std::abs(time - theta) / theta;
  const double best_cost = u.cost(J, n1, n, plan.b1, plan.b2);
  const int G = 200;
  const double step = 0.8 / G;
  double gmin = std::numeric_limits<double>::infinity(), gb1 = 0.0, gb2 = 0.0;
  for (int i = 1; i <= G; ++i) {
    const double b1 = 0.2 + step * i;
    for (int m = 0; m <= i; ++m) {
      const double b2 = 0.2 + step * m;
      if (u.completion(J, n1, n, b1, b2) > theta * (1.0 + 1e-9)) continue;
      if (bound_const(k, u.inverse(n1, n, b1, b2), J) > eps * (1.0 + 1e-9)) continue;
      const double c = u.cost(J, n1, n, b1, b2);
      if (c < gmin) {
        gmin = c;
        gb1 = b1;
        gb2 = b2;
      }
    }
  }
  const bool ok = std::abs(plan.b1 - 0.6) < 1e-9 && std::abs(plan.b2 - 0.4) < 1e-9 &&
                  std::abs(plan.gamma - 0.5) < 1e-9 && std::abs(gb1 - plan.b1) <= step + 1e-12 &&
                  std::abs(gb2 - plan.b2) <= step + 1e-12 && gmin >= best_cost * (1.0 - 1e-9) &&
                  tight_err <= 1e-9 && tight_time <= 1e-9;
  report(4, "two-bid worked instance against a 200x200 grid", ok,
         "b1*=" + fmt(plan.b1) + " b2*=" + fmt(plan.b2) + " gamma=" + fmt(plan.gamma) + " grid=(" + fmt(gb1) + "," +
             fmt(gb2) + ") cost*=" + fmt(best_cost) + " grid_cost=" + fmt(gmin) + " err_tight=" + fmt(tight_err) +
             " time_tight=" + fmt(tight_time));
}

void criterion_5() {
  const auto p = make_problem(20, 500, 10.0, 2024);
  const int batch = 10;
  const auto est = estimate_constants(p, 0.0, batch, 32, 7);
  const auto& k = est.constants;
  const int J = 250;
  std::vector<std::pair<std::string, std::vector<int>>> schedules;
  for (int y : {1, 2, 4, 8}) schedules.push_back({"static" + std::to_string(y), std::vector<int>(J, y)});
  {
    std::vector<int> alt(J), up(J), down(J), burst(J), geo(J), saw(J);
    for (int j = 0; j < J; ++j) {
      alt[j] = j % 2 ? 1 : 8;
      up[j] = 1 + 7 * j / (J - 1);
      down[j] = 8 - 7 * j / (J - 1);
      burst[j] = (j / 25) % 2 ? 8 : 1;
      geo[j] = std::min(16, static_cast<int>(std::ceil(std::pow(1.012, j))));
      saw[j] = 1 + j % 6;
    }
    schedules.push_back({"alternating", alt});
    schedules.push_back({"ramp_up", up});
    schedules.push_back({"ramp_down", down});
    schedules.push_back({"bursts", burst});
    schedules.push_back({"geometric", geo});
    schedules.push_back({"sawtooth", saw});
  }
  Rng rng(99);
  for (int s = 0; s < 10; ++s) {
    const int hi = 2 + s;
    std::vector<int> r(J);
    for (auto& y : r) y = 1 + static_cast<int>(rng.uniform() * hi);
    schedules.push_back({"random1-" + std::to_string(hi), r});
  }
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  std::string worst_name;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    const auto& [name, sched] = schedules[s];
    const auto rep = validate_bound(p, k, sched, batch, 100, 1000 + s);
    double b = k.G0;
    for (int j = 0; j <= J; ++j) {
      if (j > 0) b = k.beta() * b + k.noise_coefficient() / sched[j - 1];
      if (std::abs(rep.bound[j] - b) > 1e-12 * b) ok = false;
      const double se = rep.std_error[j];
      const double excess = rep.mean_gap[j] - b;
      if (excess > 3.0 * se + 1e-12 * b) ok = false;
      if (j == 0) continue;
      const double z = se > 0.0 ? excess / se : (excess > 1e-12 * b ? INFINITY : -INFINITY);
      if (z > worst) {
        worst = z;
        worst_name = name + "@" + std::to_string(j);
      }
    }
  }
  report(5, "SGD error bound on the synthetic quadratic", ok && schedules.size() >= 20,
         "schedules=" + std::to_string(schedules.size()) + " replications=100 d=20 S=500 condition=10 batch=10 " +
             "alpha=" + fmt(k.alpha) + " M=" + fmt(k.M) + " M_V=" + fmt(k.M_V) + " worst_excess_se=" + fmt(worst) +
             " at " + worst_name);
}

void criterion_6() {
  double worst = 0.0;
  for (int n = 1; n <= 20; ++n) {
    for (int i = 1; i <= 9; ++i) {
      const double q = i / 10.0;
      double num = 0.0, choose = 1.0;
      for (int y = 1; y <= n; ++y) {
        choose = choose * (n - y + 1) / y;
        num += choose * std::pow(1.0 - q, y) * std::pow(q, n - y) / y;
      }
      const double oracle = num / (1.0 - std::pow(q, n));
      worst = std::max(worst, std::abs(inverse_moment_binomial(n, q) - oracle) / oracle);
    }
  }
  bool cap = true;
  double worst_uniform = 0.0, h = 0.0;
  for (int n = 1; n <= 10'000; ++n) {
    h += 1.0 / n;
    const double v = inverse_moment_uniform(n);
    worst_uniform = std::max(worst_uniform, std::abs(v - h / n) / (h / n));
    if (v > (std::log(double(n)) + 1.0) / n * (1.0 + 1e-15)) cap = false;
  }
  report(6, "binomial and uniform inverse moments", worst <= 1e-12 && cap && worst_uniform <= 1e-12,
         "binomial_max_rel_err=" + fmt(worst) + " uniform_max_rel_err=" + fmt(worst_uniform) +
             " cap_holds=" + (cap ? std::string("true") : std::string("false")));
}

void criterion_7() {
  const BoundTerms t{1.0, 0.9, 0.05};
  const double eps = 0.2;
  const auto plan = co_optimize_workers_iterations(t, eps, 300);
  std::int64_t best = std::numeric_limits<std::int64_t>::max(), bn = 0, bJ = 0;
  for (std::int64_t J = 1; J <= 300; ++J) {
    for (std::int64_t n = 1; n <= 200; ++n) {
      const double bj = std::pow(0.9, double(J));
      if (bj + 0.05 * (1.0 - bj) / (n * 0.1) <= eps && n * J < best) {
        best = n * J;
        bn = n;
        bJ = J;
      }
    }
  }
  const double x = plan.J_tilde;
  const double bx = std::pow(0.9, x), l = std::log(1.0 / 0.9);
  const double H = bx * (x * l + 1.0 - bx) / (1.0 + bx * (x * l - 1.0));
  const double residual = std::abs(H - eps);
  const double err = std::pow(0.9, double(plan.J)) + 0.05 * (1.0 - std::pow(0.9, double(plan.J))) / (plan.n * 0.1);
  report(7, "workers-iterations optimum against brute force", plan.product == best && err <= eps && residual < 1e-10,
         "n*=" + std::to_string(plan.n) + " J*=" + std::to_string(plan.J) + " nJ=" + std::to_string(plan.product) +
             " brute=(" + std::to_string(bn) + "," + std::to_string(bJ) + ") nJ=" + std::to_string(best) +
             " H_residual=" + fmt(residual));
}

void criterion_8() {
  const BoundTerms t{1.0, 0.9, 0.05};
  double worst = 0.0;
  for (double n0 : {1.0, 3.0}) {
    for (double eta : {1.05, 1.5, 2.0}) {
      for (double chi : {0.5, 1.0}) {
        double b = t.A;
        for (std::int64_t j = 1; j <= 200; ++j) {
          b = t.beta * b + t.B / std::pow(n0 * std::pow(eta, double(j - 1)), chi);
          const double v = error_bound_dynamic(t, n0, eta, chi, j);
          worst = std::max(worst, std::abs(v - b) / b);
        }
      }
    }
  }
  const auto thr = dynamic_threshold(t, 1, 2.0, 1.0, 20'000);
  bool holds = thr.has_value();
  if (thr) {
    for (std::int64_t J = *thr; J <= 20'000; ++J) {
      const auto jp = dynamic_iteration_count(J, 2.0, 1.0);
      if (error_bound_dynamic(t, 1.0, 2.0, 1.0, jp) > static_error_bound(t, 1.0, 1.0, J)) holds = false;
    }
    if (*thr > 1) {
      const auto jp = dynamic_iteration_count(*thr - 1, 2.0, 1.0);
      if (error_bound_dynamic(t, 1.0, 2.0, 1.0, jp) <= static_error_bound(t, 1.0, 1.0, *thr - 1)) holds = false;
    }
  }
  const auto cmp = compare_dynamic_static(t, 1, 2.0, 1.0, 1000);
  const double expected_asym = t.B / ((1.0 - t.beta) * std::pow(1.0, 1.0));
  const bool asym = cmp.static_asymptote == expected_asym && std::abs(cmp.static_asymptote - 0.5) <= 1e-15;
  report(8, "dynamic provisioning bound", worst <= 1e-10 && holds && asym,
         "recursion_max_rel_err=" + fmt(worst) + " threshold_J=" + (thr ? std::to_string(*thr) : std::string("none")) +
             " static_asymptote=" + fmt(cmp.static_asymptote) + " expected=B/((1-beta)n0^chi)=" + fmt(expected_asym));
}

void criterion_9() {
  EtaProblem p;
  p.terms = BoundTerms{1.0, 0.9, 0.05};
  p.n0 = 1;
  p.q = 0.3;
  p.chi = 1.0;
  p.J = 50;
  p.runtime = 1.0;
  p.deadline = 80.0;
  p.eta_max = 3.0;
  const double lo = 1.0 / 0.9;
  auto objective = [&](double eta) { return (std::pow(eta, double(p.J)) - 1.0) / (eta - 1.0); };
  auto completion = [&](double eta) {
    double s = 0.0;
    for (int j = 1; j <= p.J; ++j) s += 1.0 / (1.0 - std::pow(0.3, std::pow(eta, double(j))));
    return s;
  };
  auto error = [&](double eta) {
    const double x = 1.0 / (0.9 * eta);
    return std::pow(0.9, double(p.J)) + 0.05 * std::pow(0.9, double(p.J - 1)) * (1.0 - std::pow(x, double(p.J))) / (1.0 - x);
  };
  p.epsilon = error(1.5);
  const auto plan = optimize_eta(p);
  const int G = 100'000;
  const double step = (p.eta_max - lo) / G;
  double best = std::numeric_limits<double>::infinity(), best_eta = 0.0;
  for (int i = 1; i <= G; ++i) {
    const double eta = lo + step * i;
    if (error(eta) > p.epsilon || completion(eta) > p.deadline) continue;
    const double f = objective(eta);
    if (f < best) {
      best = f;
      best_eta = eta;
    }
  }
  Rng rng(17);
  int convex = 0;
  const double a0 = plan.feasible_lo, a1 = plan.feasible_hi;
  for (int i = 0; i < 100; ++i) {
    const double a = a0 + (a1 - a0) * rng.uniform(), b = a0 + (a1 - a0) * rng.uniform();
    const double m = 0.5 * (a + b);
    const bool ok = objective(m) <= 0.5 * (objective(a) + objective(b)) * (1.0 + 1e-12) &&
                    completion(m) <= 0.5 * (completion(a) + completion(b)) * (1.0 + 1e-12) &&
                    error(m) <= 0.5 * (error(a) + error(b)) * (1.0 + 1e-12);
    convex += ok;
  }
  const bool ok = std::abs(plan.eta - best_eta) <= step && convex == 100 && a1 > a0;
  report(9, "growth-rate solver against a 1e5-point grid", ok,
         "eta*=" + fmt(plan.eta) + " grid=" + fmt(best_eta) + " resolution=" + fmt(step) + " feasible=[" + fmt(a0) + "," +
             fmt(a1) + "] convex_triples=" + std::to_string(convex) + "/100");
}

void criterion_10() {
  const auto k = reference_constants();
  const auto rt = RuntimeModel::exponential(1.0);
  const std::int64_t J = 1000;
  const double eps = eps_for_q(k, 0.375, J);
  const double theta = J * (harmonic(4) + harmonic(2));
  bool ok = true;
  std::string detail;
  for (const auto& [label, price] : std::vector<std::pair<std::string, PriceModel>>{
           {"uniform", PriceModel::uniform(0.2, 1.0)},
           {"gaussian", PriceModel::truncated_gaussian(0.6, 0.04, 0.2, 1.0)}}) {
    const auto plan = optimal_two_bids({eps, theta}, 2, 4, J, k, price, rt);
    const auto two = simulate(bid_sim(plan, price, 20'000, 31));
    SimConfig base;
    base.plan = SimPlan::no_interruptions(4, J);
    base.price = price;
    base.runtime = rt;
    base.trials = 20'000;
    base.seed = 32;
    const auto b = simulate(base);
    ok = ok && two.cost.mean < b.cost.mean;
    detail += label + ": two_bid=" + fmt(two.cost.mean) + " baseline=" + fmt(b.cost.mean) +
              " ratio=" + fmt(two.cost.mean / b.cost.mean) + "; ";
  }
  auto rebid = [&](std::vector<RebidStage> stages, bool stop) {
    RebidConfig rc;
    rc.stages = std::move(stages);
    rc.price = PriceModel::uniform(0.2, 1.0);
    rc.runtime = rt;
    rc.constants = k;
    rc.requirements = {0.35, 3700.0};
    rc.trials = 2000;
    rc.seed = 1;
    rc.stop_at_target = stop;
    return simulate_dynamic_rebid(rc);
  };
  const auto stat = rebid({{2, 4, 1000}}, true);
  const auto dyn = rebid({{2, 4, 400}, {4, 8, 600}}, true);
  const double se = std::hypot(stat.outcome.cost.std_error, dyn.outcome.cost.std_error);
  ok = ok && dyn.outcome.cost.mean <= stat.outcome.cost.mean + 2.0 * se;
  detail += "rebid_to_target: static=" + fmt(stat.outcome.cost.mean) + " dynamic=" + fmt(dyn.outcome.cost.mean) +
            " ratio=" + fmt(dyn.outcome.cost.mean / stat.outcome.cost.mean) + " se=" + fmt(se) + "; ";
  const auto stat_full = rebid({{2, 4, 1000}}, false);
  const auto dyn_full = rebid({{2, 4, 400}, {4, 8, 600}}, false);
  detail += "equal_J (reported only): static=" + fmt(stat_full.outcome.cost.mean) +
            " dynamic=" + fmt(dyn_full.outcome.cost.mean) +
            " ratio=" + fmt(dyn_full.outcome.cost.mean / stat_full.outcome.cost.mean);
  report(10, "two bids versus no-interruptions baseline and re-bidding", ok, detail);
}

// ---------------------------------------------------------------------------

const char* cli_path() {
#ifdef SPOTSGD_CLI
  return SPOTSGD_CLI;
#else
  return "spotsgd";
#endif
}

int run_in(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + cli_path() + "' " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

void criterion_11() {
  const std::string model = " --alpha 0.01 --M 200";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit-prices", "fit-prices --trace trace.csv --out model.json"},
      {"optimal-bid", "optimal-bid --n 4 --epsilon 0.35 --deadline 3700" + model},
      {"optimal-two-bids", "optimal-two-bids --n1 2 --n 4 --J 1000 --epsilon 0.35 --deadline 3700" + model},
      {"co-optimize", "optimal-two-bids --n 4 --J 1000 --epsilon 0.35 --deadline 3700 --co-optimize n1" + model},
      {"optimize-workers", "optimize-workers --q 0.3 --epsilon 0.2 --deadline 300 --delta 1" + model},
      {"optimize-eta",
       "optimize-eta --J 50 --q 0.3 --deadline 80 --epsilon 0.0063 --eta-max 3 --alpha 0.1 --M 10 --d 1"},
      {"simulate", "simulate --b1 0.6 --b2 0.4 --n1 2 --n 4 --J 300 --trials 500 --trials-csv t.csv "
                   "--trajectory-csv j.csv"},
      {"simulate-trace", "simulate --trace trace.csv --b1 0.6 --n 2 --J 20 --trials 5 --trials-csv t.csv"},
      {"simulate-preemptible", "simulate --preemptible --q 0.3 --eta 1.01 --n 2 --J 200 --trials 300"},
      {"simulate-rebid", "simulate --stages 2:4:400,4:8:600 --epsilon 0.35 --deadline 3700 --trials 100 "
                         "--stop-at-target" + model},
      {"train", "train --d 8 --S 100 --J 60 --schedule random:1:4 --replications 10 --batch 5 --csv train.csv"},
      {"validate", "validate --suite optimizers --csv v.csv"},
  };
  const fs::path root = fs::temp_directory_path() / "spotsgd_acceptance_rerun";
  fs::remove_all(root);
  bool ok = true;
  std::string detail;
  int compared = 0;
  for (const auto& [name, args] : commands) {
    std::map<std::string, std::string> runs[2];
    int codes[2];
    for (int r = 0; r < 2; ++r) {
      const fs::path dir = root / (name + "_" + std::to_string(r));
      fs::create_directories(dir);
      std::ofstream(dir / "trace.csv") << "timestamp,price\n0,0.3\n60,0.7\n120,0.5\n180,0.9\n240,0.35\n300,0.4\n";
      codes[r] = run_in(dir, "--seed 5 " + args);
      runs[r] = snapshot(dir);
    }
    const bool same = runs[0] == runs[1] && codes[0] == codes[1];
    const bool has_manifest = std::any_of(runs[0].begin(), runs[0].end(), [](const auto& kv) {
      return kv.first.find("manifest.json") != std::string::npos;
    });
    if (!same || !has_manifest || codes[0] != 0) {
      ok = false;
      detail += name + "(exit=" + std::to_string(codes[0]) + (same ? "" : ",differs") +
                (has_manifest ? "" : ",no manifest") + ") ";
    }
    compared += static_cast<int>(runs[0].size());
  }
  fs::remove_all(root);
  report(11, "byte-identical reruns", ok,
         "commands=" + std::to_string(commands.size()) + " files_compared=" + std::to_string(compared) +
             (detail.empty() ? "" : " failing: " + detail));
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> all = {
      {1, criteria_1_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},  {6, criterion_6},
      {7, criterion_7},  {8, criterion_8}, {9, criterion_9}, {10, criterion_10}, {11, criterion_11}};
  for (const auto& [id, fn] : all) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, "raised an exception", false, e.what());
      if (id == 1) report(2, "raised an exception", false, e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
