#pragma once

// Shared per-trial machinery of the simulator and the staged re-bid driver.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <vector>

#include "spotsgd/simulator.hpp"

namespace spotsgd::detail {

struct Accum {
  std::vector<double> count;
  std::vector<double> sum_active;
  std::vector<double> sum_inverse;
  std::vector<double> sum_inverse_sq;
  std::vector<double> cum_cost;
  std::vector<double> cum_time;

  void resize(std::size_t n);
  void add(const Accum& o);
};

struct TrialState {
  double t = 0.0;
  double cost = 0.0;
  double idle = 0.0;
  std::int64_t done = 0;
  std::int64_t restarts = 0;
  bool truncated = false;
  bool prorated = false;
  std::size_t cursor = 0;  // trace position
  std::vector<int> active;

  TrialRecord to_record() {
    TrialRecord r;
    r.cost = cost;
    r.completion = t;
    r.idle = idle;
    r.iterations = done;
    r.restarts = restarts;
    r.truncated = truncated;
    r.prorated = prorated;
    r.active = std::move(active);
    return r;
  }
};

struct Env {
  const PriceModel* price = nullptr;
  const PriceTrace* trace = nullptr;
  RuntimeModel runtime;
  double redraw = 4.0;
  IdleModel idle = IdleModel::iteration_slot;
  bool fixed_within = true;
  bool keep = false;
  double trace_end = 0.0;

  static Env from(const SimConfig& c);
};

/// Error-bound recursion b_j = beta b_{j-1} + noise / y_j on the realised
/// active counts; the trial stops once it reaches the target.
struct BoundTracker {
  double beta = 1.0;
  double noise = 0.0;
  double bound = 0.0;
  double target = 0.0;

  void step(int y) { bound = beta * bound + noise / y; }
  bool reached() const { return bound <= target; }
};

struct BidParams {
  double b1;
  double b2;
  int n1;
  int n;
};

void record_iteration(TrialState& s, Accum& acc, int y, bool keep);

/// Runs bid-plan iterations until s.done reaches `target` or the trace ends.
/// With a tracker the segment also ends once the tracked bound reaches its target.
void run_bid_segment(const Env& env, const BidParams& b, std::int64_t target, Rng& rng, TrialState& s, Accum& acc,
                     BoundTracker* tracker = nullptr);

SimOutcome finalize(std::vector<TrialRecord> records, const Accum& acc);

/// Calls fn(trial, block_accumulator) for every trial. Trials are grouped in
/// blocks of 64; blocks run in parallel waves and are merged in block order.
template <class F>
Accum run_trials(std::int64_t trials, std::int64_t iterations, bool parallel, F&& fn) {
  constexpr std::int64_t kBlock = 64;
  const auto J = static_cast<std::size_t>(std::max<std::int64_t>(iterations, 0));
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  const std::int64_t per_block = 6 * static_cast<std::int64_t>(std::max<std::size_t>(J, 1));
  const std::int64_t wave = std::clamp<std::int64_t>(4'000'000 / per_block, 1, 64);

  Accum total;
  total.resize(J);
  std::vector<Accum> buffers(static_cast<std::size_t>(std::min(wave, blocks)));
  std::vector<std::exception_ptr> errors(buffers.size());
  for (std::int64_t w0 = 0; w0 < blocks; w0 += wave) {
    const std::int64_t wn = std::min(wave, blocks - w0);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t k = 0; k < wn; ++k) {
      Accum& a = buffers[static_cast<std::size_t>(k)];
      try {
        a.resize(J);
        const std::int64_t first = (w0 + k) * kBlock;
        const std::int64_t last = std::min(trials, first + kBlock);
        for (std::int64_t i = first; i < last; ++i) fn(i, a);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
    for (std::int64_t k = 0; k < wn; ++k) {
      if (errors[static_cast<std::size_t>(k)]) std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
      total.add(buffers[static_cast<std::size_t>(k)]);
    }
  }
  return total;
}

}  // namespace spotsgd::detail
