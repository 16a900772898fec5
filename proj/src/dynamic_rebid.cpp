#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sim_kernel.hpp"
#include "spotsgd/simulator.hpp"

namespace spotsgd {

namespace {

struct StagePrep {
  double g0 = 0.0;
  double gamma = 1.0;
  bool clamped = false;
  double inverse_moment = 1.0;
};

}  // namespace

RebidOutcome simulate_dynamic_rebid(const RebidConfig& config) {
  if (config.stages.empty()) throw std::invalid_argument("at least one stage is required");
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  config.constants.validate();
  config.requirements.validate();
  config.runtime.validate();
  std::int64_t total = 0;
  for (const auto& st : config.stages) {
    if (st.n < 1 || st.n1 < 1 || st.n1 > st.n) throw std::invalid_argument("stage group sizes must satisfy 1 <= n1 <= n");
    if (st.iterations < 1) throw std::invalid_argument("stage iteration counts must be >= 1");
    total += st.iterations;
  }
  const std::size_t S = config.stages.size();

  const BidPlan first = optimal_two_bids(config.requirements, config.stages[0].n1, config.stages[0].n, total,
                                         config.constants, config.price, config.runtime);

  // The error bound carried into each stage uses the analytic E[1/y] of the
  // stages before it; gamma does not depend on the deadline.
  std::vector<StagePrep> prep(S);
  prep[0].g0 = config.constants.G0;
  prep[0].gamma = first.gamma;
  prep[0].inverse_moment = first.inverse_moment;
  std::int64_t remaining = total;
  for (std::size_t s = 0; s < S; ++s) {
    if (s > 0) {
      SgdConstants k = config.constants;
      k.G0 = prep[s].g0;
      const RebidStage& st = config.stages[s];
      double q;
      try {
        q = q_epsilon(k, config.requirements.epsilon, remaining);
      } catch (const ErrorFloor&) {
        q = 0.0;
      }
      const double lo = 1.0 / st.n;
      const double hi = 1.0 / st.n1;
      prep[s].clamped = st.n1 == st.n || q < lo * (1.0 - 1e-12) || q > hi * (1.0 + 1e-12);
      prep[s].gamma = st.n1 == st.n ? 1.0 : std::clamp((hi - q) / (hi - lo), 0.0, 1.0);
      prep[s].inverse_moment = prep[s].gamma * lo + (1.0 - prep[s].gamma) * hi;
    }
    if (s + 1 < S) {
      SgdConstants k = config.constants;
      k.G0 = prep[s].g0;
      prep[s + 1].g0 = error_bound_constant(k, prep[s].inverse_moment, config.stages[s].iterations);
    }
    remaining -= config.stages[s].iterations;
  }

  SimConfig env_config;
  env_config.price = config.price;
  env_config.runtime = config.runtime;
  env_config.redraw_interval = config.redraw_interval;
  env_config.idle_model = config.idle_model;
  env_config.keep_active_traces = config.keep_active_traces;
  const detail::Env env = detail::Env::from(env_config);

  const auto trials = static_cast<std::size_t>(config.trials);
  RebidOutcome result;
  result.stage_start.assign(trials, std::vector<double>(S, 0.0));
  result.stage_end.assign(trials, std::vector<double>(S, 0.0));
  std::vector<std::vector<double>> b1(trials, std::vector<double>(S, 0.0));
  std::vector<std::vector<double>> b2(trials, std::vector<double>(S, 0.0));
  std::vector<char> infeasible(trials, 0);
  std::vector<char> reached(trials, 0);
  std::vector<std::vector<char>> entered(trials, std::vector<char>(S, 0));
  std::vector<TrialRecord> records(trials);
  std::vector<BidPlan> trial0_plans(S);

  const detail::Accum acc = detail::run_trials(config.trials, total, true, [&](std::int64_t i, detail::Accum& block) {
    const auto ti = static_cast<std::size_t>(i);
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(i));
    detail::TrialState s;
    std::int64_t target = 0;
    std::int64_t left = total;
    detail::BoundTracker tracker{config.constants.beta(), config.constants.noise_coefficient(), config.constants.G0,
                                 config.requirements.epsilon};
    detail::BoundTracker* track = config.stop_at_target ? &tracker : nullptr;
    for (std::size_t st = 0; st < S; ++st) {
      const RebidStage& stage = config.stages[st];
      if (track && track->reached()) {
        for (std::size_t r = st; r < S; ++r) result.stage_start[ti][r] = result.stage_end[ti][r] = s.t;
        break;
      }
      BidPlan plan;
      if (st == 0) {
        plan = first;
      } else {
        try {
          SgdConstants k = config.constants;
          k.G0 = prep[st].g0;
          const JobRequirements req{config.requirements.epsilon, config.requirements.deadline - s.t};
          plan = clamped_two_bids(req, stage.n1, stage.n, left, k, config.price, config.runtime);
        } catch (const std::invalid_argument&) {
          infeasible[ti] = 1;
        } catch (const Error&) {
          infeasible[ti] = 1;
        }
        if (infeasible[ti]) {
          for (std::size_t r = st; r < S; ++r) result.stage_start[ti][r] = result.stage_end[ti][r] = s.t;
          break;
        }
      }
      if (i == 0) trial0_plans[st] = plan;
      entered[ti][st] = 1;
      b1[ti][st] = plan.b1;
      b2[ti][st] = plan.b2;
      result.stage_start[ti][st] = s.t;
      target += stage.iterations;
      detail::run_bid_segment(env, detail::BidParams{plan.b1, plan.b2, plan.n1, plan.n}, target, rng, s, block,
                              track);
      result.stage_end[ti][st] = s.t;
      left -= stage.iterations;
    }
    reached[ti] = track && track->reached() ? 1 : 0;
    records[ti] = s.to_record();
  });

  result.outcome = detail::finalize(std::move(records), acc);
  for (std::size_t t = 0; t < trials; ++t) {
    result.infeasible_trials += infeasible[t];
    result.reached_target += reached[t];
  }
  result.stages.resize(S);
  for (std::size_t st = 0; st < S; ++st) {
    StageReport& rep = result.stages[st];
    rep.n1 = config.stages[st].n1;
    rep.n = config.stages[st].n;
    rep.iterations = config.stages[st].iterations;
    rep.g0 = prep[st].g0;
    rep.gamma = prep[st].gamma;
    rep.gamma_clamped = prep[st].clamped;
    rep.first_trial_plan = trial0_plans[st];
    double s1 = 0.0, s2 = 0.0, c = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      if (!entered[t][st]) continue;
      s1 += b1[t][st];
      s2 += b2[t][st];
      c += 1.0;
    }
    rep.trials_entered = static_cast<std::int64_t>(c);
    if (c > 0.0) {
      rep.b1_mean = s1 / c;
      rep.b2_mean = s2 / c;
    }
  }
  if (result.infeasible_trials > 0) {
    const auto n = result.infeasible_trials;
    throw RebidInfeasible("remaining deadline infeasible at a stage boundary in " + std::to_string(n) + " of " +
                              std::to_string(config.trials) + " trials",
                          std::move(result));
  }
  return result;
}

}  // namespace spotsgd
