#include "spotsgd/serialize.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace spotsgd {

namespace {

// JSON has no infinity; unbounded values are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_inf(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

Json summary(const Summary& s) { return Json{{"mean", number(s.mean)}, {"std_error", number(s.std_error)}}; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json to_json(const SgdConstants& k) {
  return Json{{"L", k.L},         {"c", k.c},     {"mu", k.mu}, {"mu_G", k.mu_G}, {"M", k.M},
              {"M_V", k.M_V},     {"M_G", k.M_G}, {"alpha", k.alpha}, {"G0", k.G0}, {"beta", k.beta()}};
}

Json to_json(const RuntimeModel& rt) {
  Json j{{"family", std::string(to_string(rt.family))}};
  switch (rt.family) {
    case RuntimeFamily::shifted_exponential:
      j["shift"] = rt.shift;
      [[fallthrough]];
    case RuntimeFamily::exponential:
      j["rate"] = rt.rate;
      j["log_approximation"] = rt.log_approximation;
      break;
    case RuntimeFamily::deterministic:
      j["fixed_time"] = rt.fixed_time;
      break;
  }
  j["overhead"] = rt.server_overhead;
  return j;
}

Json to_json(const BidPlan& plan) {
  return Json{{"b1", number(plan.b1)},
              {"b2", number(plan.b2)},
              {"n1", plan.n1},
              {"n", plan.n},
              {"J", plan.J},
              {"gamma", number(plan.gamma)},
              {"inverse_moment", number(plan.inverse_moment)},
              {"q_epsilon", number(plan.q_epsilon)},
              {"expected_cost", number(plan.expected_cost)},
              {"expected_completion", number(plan.expected_completion)},
              {"expected_error", number(plan.expected_error)}};
}

BidPlan bid_plan_from_json(const Json& j) {
  const Json& p = j.contains("plan") ? j.at("plan") : j;
  BidPlan plan;
  plan.b1 = number_or_inf(p.at("b1"));
  plan.b2 = number_or_inf(p.at("b2"));
  plan.n1 = p.at("n1").get<int>();
  plan.n = p.at("n").get<int>();
  plan.J = p.at("J").get<std::int64_t>();
  return plan;
}

Json to_json(const WorkersIterationsPlan& plan) {
  return Json{{"n", plan.n},
              {"J", plan.J},
              {"product", plan.product},
              {"error", plan.error},
              {"J_tilde", plan.J_tilde},
              {"h_residual", plan.h_residual},
              {"closed_form_n", plan.closed_form_n},
              {"closed_form_J", plan.closed_form_J},
              {"closed_form_matches", plan.closed_form_matches}};
}

Json to_json(const EtaPlan& plan) {
  return Json{{"eta", plan.eta},
              {"J", plan.J},
              {"objective", plan.objective},
              {"completion", plan.completion},
              {"error", plan.error},
              {"feasible_eta", Json::array({plan.feasible_lo, plan.feasible_hi})},
              {"golden_section_steps", plan.iterations}};
}

Json to_json(const DynamicStaticComparison& c) {
  return Json{{"J", c.J},
              {"J_dynamic", c.J_dynamic},
              {"dynamic_bound", c.dynamic_bound},
              {"static_bound", c.static_bound},
              {"static_asymptote", c.static_asymptote},
              {"growth_condition", c.growth_condition},
              {"dynamic_not_worse", c.dynamic_not_worse}};
}

Json schedule_to_json(const WorkerSchedule& s) {
  Json head = Json::array();
  Json tail = Json::array();
  const std::int64_t edge = std::min<std::int64_t>(10, s.J);
  for (std::int64_t j = 1; j <= edge; ++j) head.push_back(s.workers_at(j));
  for (std::int64_t j = std::max<std::int64_t>(edge + 1, s.J - 9); j <= s.J; ++j) tail.push_back(s.workers_at(j));
  return Json{{"kind", s.kind == ScheduleKind::geometric ? "geometric" : "static"},
              {"n0", s.n0},
              {"eta", s.eta},
              {"J", s.J},
              {"first", head},
              {"last", tail},
              {"total_provisioned", s.total_provisioned()}};
}

Json to_json(const SimOutcome& o) {
  return Json{{"trials", o.trials},
              {"cost", summary(o.cost)},
              {"completion", summary(o.completion)},
              {"idle", summary(o.idle)},
              {"mean_iterations", o.mean_iterations},
              {"truncated_trials", o.truncated_trials},
              {"pooled_inverse_active", summary(pooled_inverse_active(o))}};
}

Json to_json(const RebidOutcome& r) {
  Json stages = Json::array();
  for (const auto& s : r.stages) {
    stages.push_back(Json{{"n1", s.n1},
                          {"n", s.n},
                          {"iterations", s.iterations},
                          {"initial_error", s.g0},
                          {"gamma", s.gamma},
                          {"gamma_clamped", s.gamma_clamped},
                          {"trials_entered", s.trials_entered},
                          {"b1_mean", s.b1_mean},
                          {"b2_mean", s.b2_mean},
                          {"first_trial_plan", to_json(s.first_trial_plan)}});
  }
  Json j = to_json(r.outcome);
  j["stages"] = stages;
  j["infeasible_trials"] = r.infeasible_trials;
  j["reached_target"] = r.reached_target;
  return j;
}

Json price_model_to_json(const PriceModel& m) {
  Json j{{"kind", std::string(to_string(m.kind()))}, {"lower", m.lower()}, {"upper", m.upper()}};
  if (m.kind() == PriceKind::truncated_gaussian) {
    j["mean"] = m.gaussian_mean();
    j["variance"] = m.gaussian_variance();
  }
  if (m.kind() == PriceKind::empirical) j["samples"] = m.samples();
  return j;
}

PriceModel price_model_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == to_string(PriceKind::uniform)) {
    return PriceModel::uniform(j.at("lower").get<double>(), j.at("upper").get<double>());
  }
  if (kind == to_string(PriceKind::truncated_gaussian)) {
    return PriceModel::truncated_gaussian(j.at("mean").get<double>(), j.at("variance").get<double>(),
                                          j.at("lower").get<double>(), j.at("upper").get<double>());
  }
  if (kind == to_string(PriceKind::empirical)) {
    return PriceModel::empirical(j.at("samples").get<std::vector<double>>());
  }
  throw std::invalid_argument("unknown price model kind '" + kind + "'");
}

Json price_summary(const PriceModel& m) {
  Json deciles = Json::array();
  for (int i = 1; i <= 9; ++i) deciles.push_back(m.quantile(i / 10.0));
  Json j{{"kind", std::string(to_string(m.kind()))},
         {"support", Json::array({m.lower(), m.upper()})},
         {"mean", m.mean()},
         {"median", m.quantile(0.5)},
         {"deciles", deciles}};
  if (m.kind() == PriceKind::empirical) j["samples"] = m.samples().size();
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_trials_csv(std::ostream& out, const SimOutcome& o) {
  out << "trial,cost,completion,iterations,idle\n";
  for (std::size_t i = 0; i < o.trial_records.size(); ++i) {
    const auto& r = o.trial_records[i];
    out << i << ',' << format_double(r.cost) << ',' << format_double(r.completion) << ',' << r.iterations << ','
        << format_double(r.idle) << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const SimOutcome& o) {
  out << "iter,mean_active,mean_inverse_active,cum_cost_mean,cum_time_mean\n";
  for (std::size_t j = 0; j < o.per_iteration.size(); ++j) {
    const auto& s = o.per_iteration[j];
    if (s.count == 0) break;
    out << j + 1 << ',' << format_double(s.mean_active) << ',' << format_double(s.mean_inverse_active) << ','
        << format_double(s.cum_cost_mean) << ',' << format_double(s.cum_time_mean) << '\n';
  }
}

void write_train_csv(std::ostream& out, const TrainRecord& rec, const std::vector<double>& bound) {
  out << "iter,active,gap,bound\n";
  for (std::size_t j = 0; j < rec.gap.size(); ++j) {
    out << j << ',';
    if (j > 0) out << rec.active[j - 1];
    out << ',' << format_double(rec.gap[j]) << ',';
    if (j < bound.size()) out << format_double(bound[j]);
    out << '\n';
  }
}

}  // namespace spotsgd
