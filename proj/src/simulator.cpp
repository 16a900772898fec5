#include "spotsgd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spotsgd/numerics.hpp"
#include "sim_kernel.hpp"

namespace spotsgd {

std::string_view to_string(PriceMode mode) {
  return mode == PriceMode::iid_redraw ? "iid-redraw" : "trace-replay";
}

std::string_view to_string(IdleModel model) {
  return model == IdleModel::iteration_slot ? "iteration-slot" : "fixed-interval";
}

SimPlan SimPlan::from_bids(const BidPlan& plan) {
  SimPlan p;
  p.kind = SimPlanKind::bids;
  p.b1 = plan.b1;
  p.b2 = plan.b2;
  p.n1 = plan.n1;
  p.n = plan.n;
  p.J = plan.J;
  return p;
}

SimPlan SimPlan::no_interruptions(int n, std::int64_t J) {
  SimPlan p;
  p.kind = SimPlanKind::bids;
  p.b1 = p.b2 = std::numeric_limits<double>::infinity();
  p.n1 = p.n = n;
  p.J = J;
  p.baseline = true;
  return p;
}

SimPlan SimPlan::preemptible(const WorkerSchedule& schedule, double q, double unit_price) {
  SimPlan p;
  p.kind = SimPlanKind::preemptible;
  p.schedule = schedule;
  p.q = q;
  p.unit_price = unit_price;
  return p;
}

void SimPlan::validate() const {
  if (kind == SimPlanKind::bids) {
    if (n < 1 || n1 < 1 || n1 > n) throw std::invalid_argument("group sizes must satisfy 1 <= n1 <= n");
    if (J < 0) throw std::invalid_argument("iteration count must be >= 0");
    if (b2 > b1) throw std::invalid_argument("bids must satisfy b2 <= b1");
  } else {
    schedule.validate();
    if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("preemption probability must lie in [0, 1)");
    if (!(unit_price >= 0.0)) throw std::invalid_argument("unit price must be non-negative");
  }
}

void SimConfig::validate() const {
  plan.validate();
  runtime.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(redraw_interval > 0.0)) throw std::invalid_argument("redraw interval must be positive");
  if (plan.kind == SimPlanKind::bids) {
    if (mode == PriceMode::trace_replay) {
      if (!trace || trace->records.empty()) throw std::invalid_argument("trace replay needs a non-empty trace");
    } else if (!price) {
      throw std::invalid_argument("i.i.d. price mode needs a price model");
    } else if (!(price->cdf(plan.b1) > 0.0)) {
      throw InfeasibleBid("bid " + std::to_string(plan.b1) + " never runs: F(b) = 0", plan.b1);
    }
  }
}

namespace detail {

void Accum::resize(std::size_t n) {
  count.assign(n, 0.0);
  sum_active.assign(n, 0.0);
  sum_inverse.assign(n, 0.0);
  sum_inverse_sq.assign(n, 0.0);
  cum_cost.assign(n, 0.0);
  cum_time.assign(n, 0.0);
}

void Accum::add(const Accum& o) {
  for (std::size_t i = 0; i < count.size(); ++i) {
    count[i] += o.count[i];
    sum_active[i] += o.sum_active[i];
    sum_inverse[i] += o.sum_inverse[i];
    sum_inverse_sq[i] += o.sum_inverse_sq[i];
    cum_cost[i] += o.cum_cost[i];
    cum_time[i] += o.cum_time[i];
  }
}

void record_iteration(TrialState& s, Accum& acc, int y, bool keep) {
  const auto i = static_cast<std::size_t>(s.done);
  const double inv = 1.0 / y;
  acc.count[i] += 1.0;
  acc.sum_active[i] += y;
  acc.sum_inverse[i] += inv;
  acc.sum_inverse_sq[i] += inv * inv;
  acc.cum_cost[i] += s.cost;
  acc.cum_time[i] += s.t;
  ++s.done;
  if (keep) s.active.push_back(y);
}

Env Env::from(const SimConfig& c) {
  Env e;
  e.price = c.price ? &*c.price : nullptr;
  e.trace = c.mode == PriceMode::trace_replay ? c.trace.get() : nullptr;
  e.runtime = c.runtime;
  e.redraw = c.redraw_interval;
  e.idle = c.idle_model;
  e.fixed_within = c.price_fixed_within_iteration;
  e.keep = c.keep_active_traces;
  if (e.trace) {
    e.trace_end = static_cast<double>(e.trace->records.back().timestamp - e.trace->records.front().timestamp);
  }
  return e;
}

namespace {

// Price in force at simulation time t (step function over the trace).
std::optional<double> trace_price(const Env& env, TrialState& s, double t) {
  if (t > env.trace_end) return std::nullopt;
  const auto& r = env.trace->records;
  const double t_abs = static_cast<double>(r.front().timestamp) + t;
  while (s.cursor + 1 < r.size() && static_cast<double>(r[s.cursor + 1].timestamp) <= t_abs) ++s.cursor;
  return r[s.cursor].price;
}

int bid_active(double p, const BidParams& b) {
  if (p > b.b1) return 0;
  return p <= b.b2 ? b.n : b.n1;
}

}  // namespace

void run_bid_segment(const Env& env, const BidParams& b, std::int64_t target, Rng& rng, TrialState& s, Accum& acc,
                     BoundTracker* tracker) {
  const double f1 = env.trace ? 1.0 : env.price->cdf(b.b1);
  std::optional<double> pending;
  while (s.done < target && !(tracker && tracker->reached())) {
    double p;
    if (env.trace) {
      const auto tp = trace_price(env, s, s.t);
      if (!tp) {
        s.truncated = true;
        return;
      }
      p = *tp;
    } else if (pending) {
      p = *pending;
      pending.reset();
    } else {
      p = env.price->sample(rng);
    }

    const int y = bid_active(p, b);
    if (y == 0) {
      double dur;
      if (env.trace || env.idle == IdleModel::fixed_interval) {
        dur = env.redraw;
      } else {
        const double pp = env.price->quantile(rng.uniform_open_closed() * f1);
        dur = sample_iteration_runtime(std::max(1, bid_active(pp, b)), env.runtime, rng);
      }
      s.t += dur;
      s.idle += dur;
      continue;
    }

    const double dur = sample_iteration_runtime(y, env.runtime, rng);
    if (env.fixed_within) {
      if (env.trace && s.t + dur > env.trace_end) {
        s.cost += y * p * (env.trace_end - s.t);
        s.t = env.trace_end;
        s.truncated = s.prorated = true;
        return;
      }
      s.cost += y * p * dur;
    } else {
      double seg_start = 0.0;
      double cur = p;
      bool interrupted = false;
      for (double off = env.redraw; off < dur; off += env.redraw) {
        double np;
        if (env.trace) {
          const auto tp = trace_price(env, s, s.t + off);
          if (!tp) {
            s.cost += y * cur * (env.trace_end - s.t - seg_start);
            s.t = env.trace_end;
            s.truncated = s.prorated = true;
            return;
          }
          np = *tp;
        } else {
          np = env.price->sample(rng);
        }
        s.cost += y * cur * (off - seg_start);
        seg_start = off;
        if (bid_active(np, b) != y) {
          s.t += off;
          ++s.restarts;
          if (!env.trace) pending = np;
          interrupted = true;
          break;
        }
        cur = np;
      }
      if (interrupted) continue;
      if (env.trace && s.t + dur > env.trace_end) {
        s.cost += y * cur * (env.trace_end - s.t - seg_start);
        s.t = env.trace_end;
        s.truncated = s.prorated = true;
        return;
      }
      s.cost += y * cur * (dur - seg_start);
    }
    s.t += dur;
    record_iteration(s, acc, y, env.keep);
    if (tracker) tracker->step(y);
  }
}

namespace {

int binomial_active(std::int64_t n, double q, Rng& rng) {
  int y = 0;
  for (std::int64_t i = 0; i < n; ++i) y += rng.uniform() >= q ? 1 : 0;
  return y;
}

void run_preemptible(const Env& env, const SimPlan& plan, Rng& rng, TrialState& s, Accum& acc) {
  const std::int64_t target = plan.schedule.J;
  while (s.done < target) {
    const std::int64_t n = plan.schedule.workers_at(s.done + 1);
    const int y = binomial_active(n, plan.q, rng);
    if (y == 0) {
      double dur;
      if (env.idle == IdleModel::fixed_interval) {
        dur = env.redraw;
      } else {
        int yy = 0;
        while (yy == 0) yy = binomial_active(n, plan.q, rng);
        dur = sample_iteration_runtime(yy, env.runtime, rng);
      }
      s.t += dur;
      s.idle += dur;
      continue;
    }
    const double dur = sample_iteration_runtime(y, env.runtime, rng);
    s.cost += y * plan.unit_price * dur;
    s.t += dur;
    record_iteration(s, acc, y, env.keep);
  }
}

Summary summarize(const std::vector<double>& v) {
  Summary out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = numerics::pairwise_sum(v) / n;
  if (v.size() > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - out.mean) * (v[i] - out.mean);
    out.std_error = std::sqrt(numerics::pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

}  // namespace

SimOutcome finalize(std::vector<TrialRecord> records, const Accum& acc) {
  SimOutcome out;
  out.trials = static_cast<std::int64_t>(records.size());
  std::vector<double> cost(records.size()), completion(records.size()), idle(records.size()),
      iterations(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    cost[i] = records[i].cost;
    completion[i] = records[i].completion;
    idle[i] = records[i].idle;
    iterations[i] = static_cast<double>(records[i].iterations);
    if (records[i].truncated) ++out.truncated_trials;
  }
  out.cost = summarize(cost);
  out.completion = summarize(completion);
  out.idle = summarize(idle);
  out.mean_iterations = summarize(iterations).mean;
  out.per_iteration.resize(acc.count.size());
  for (std::size_t j = 0; j < acc.count.size(); ++j) {
    IterationStats& st = out.per_iteration[j];
    const double c = acc.count[j];
    st.count = static_cast<std::int64_t>(c);
    if (c == 0.0) continue;
    st.mean_active = acc.sum_active[j] / c;
    st.mean_inverse_active = acc.sum_inverse[j] / c;
    if (c > 1.0) {
      const double var = std::max(0.0, (acc.sum_inverse_sq[j] - c * st.mean_inverse_active * st.mean_inverse_active) /
                                           (c - 1.0));
      st.inverse_active_std_error = std::sqrt(var / c);
    }
    st.cum_cost_mean = acc.cum_cost[j] / c;
    st.cum_time_mean = acc.cum_time[j] / c;
  }
  out.trial_records = std::move(records);
  return out;
}

}  // namespace detail

namespace {

SimOutcome simulate_impl(const SimConfig& config, bool parallel) {
  config.validate();
  const detail::Env env = detail::Env::from(config);
  const SimPlan& plan = config.plan;
  const detail::BidParams bids{plan.b1, plan.b2, plan.n1, plan.n};
  std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
  const detail::Accum acc = detail::run_trials(
      config.trials, plan.iterations(), parallel, [&](std::int64_t i, detail::Accum& block) {
        Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(i));
        detail::TrialState s;
        if (plan.kind == SimPlanKind::bids) {
          detail::run_bid_segment(env, bids, plan.J, rng, s, block);
        } else {
          detail::run_preemptible(env, plan, rng, s, block);
        }
        records[static_cast<std::size_t>(i)] = s.to_record();
      });
  SimOutcome out = detail::finalize(std::move(records), acc);
  if (out.truncated_trials > 0) {
    throw TraceTruncated("price trace ended before " + std::to_string(out.truncated_trials) + " of " +
                             std::to_string(out.trials) + " trials completed",
                         std::move(out));
  }
  return out;
}

}  // namespace

SimOutcome simulate(const SimConfig& config) { return simulate_impl(config, true); }

SimOutcome simulate_serial(const SimConfig& config) { return simulate_impl(config, false); }

InverseMomentSeq empirical_inverse_moments(const SimOutcome& outcome) {
  if (outcome.trials < 1) throw std::invalid_argument("outcome has no trials");
  InverseMomentSeq seq;
  for (const auto& st : outcome.per_iteration) {
    if (st.count == 0) break;
    seq.values.push_back(st.mean_inverse_active);
  }
  return seq;
}

Summary pooled_inverse_active(const SimOutcome& outcome) {
  // Recover the pooled first and second moments from the per-iteration ones.
  double n = 0.0, s1 = 0.0, s2 = 0.0;
  for (const auto& st : outcome.per_iteration) {
    const double c = static_cast<double>(st.count);
    if (c == 0.0) continue;
    const double var_of_mean = st.inverse_active_std_error * st.inverse_active_std_error;
    const double second = c > 1.0 ? var_of_mean * c * (c - 1.0) / c + st.mean_inverse_active * st.mean_inverse_active
                                   : st.mean_inverse_active * st.mean_inverse_active;
    n += c;
    s1 += c * st.mean_inverse_active;
    s2 += c * second;
  }
  Summary out;
  if (n == 0.0) return out;
  out.mean = s1 / n;
  if (n > 1.0) out.std_error = std::sqrt(std::max(0.0, (s2 / n - out.mean * out.mean) * n / (n - 1.0)) / n);
  return out;
}

}  // namespace spotsgd
