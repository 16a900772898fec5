#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/convergence.hpp"
#include "spotsgd/errors.hpp"
#include "spotsgd/preemptible_optimizer.hpp"
#include "spotsgd/price_model.hpp"
#include "spotsgd/runtime.hpp"

namespace spotsgd {

enum class PriceMode { iid_redraw, trace_replay };

/// Duration of a slot in which no worker runs.
///  iteration_slot: as long as the iteration that would have run (a fresh
///                  active configuration is drawn and its runtime sampled);
///  fixed_interval: redraw_interval seconds.
enum class IdleModel { iteration_slot, fixed_interval };

enum class SimPlanKind { bids, preemptible };

std::string_view to_string(PriceMode mode);
std::string_view to_string(IdleModel model);

struct SimPlan {
  SimPlanKind kind = SimPlanKind::bids;
  // Bid plans: n1 workers bid b1, the remaining n - n1 bid b2 <= b1.
  double b1 = 0.0;
  double b2 = 0.0;
  int n1 = 1;
  int n = 1;
  std::int64_t J = 0;
  bool baseline = false;
  // Preemptible plans.
  WorkerSchedule schedule;
  double q = 0.0;
  double unit_price = 1.0;

  static SimPlan from_bids(const BidPlan& plan);
  /// Bids above every price: n workers, never interrupted, charged the spot price.
  static SimPlan no_interruptions(int n, std::int64_t J);
  static SimPlan preemptible(const WorkerSchedule& schedule, double q, double unit_price);

  std::int64_t iterations() const noexcept { return kind == SimPlanKind::bids ? J : schedule.J; }
  void validate() const;
};

struct SimConfig {
  SimPlan plan;
  std::optional<PriceModel> price;          // required for i.i.d. bid plans
  std::shared_ptr<const PriceTrace> trace;  // required for trace replay
  PriceMode mode = PriceMode::iid_redraw;
  RuntimeModel runtime;
  double redraw_interval = 4.0;
  IdleModel idle_model = IdleModel::iteration_slot;
  /// false: the price is redrawn every redraw_interval during an iteration;
  /// a change of the active set interrupts the iteration, the elapsed time
  /// is charged and the iteration restarts.
  bool price_fixed_within_iteration = true;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  bool keep_active_traces = false;

  void validate() const;
};

struct TrialRecord {
  double cost = 0.0;
  double completion = 0.0;
  double idle = 0.0;
  std::int64_t iterations = 0;
  std::int64_t restarts = 0;
  bool truncated = false;
  bool prorated = false;    // last iteration cut by the end of the trace
  std::vector<int> active;  // per iteration, only with keep_active_traces
};

struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
};

struct IterationStats {
  std::int64_t count = 0;  // trials that executed this iteration
  double mean_active = 0.0;
  double mean_inverse_active = 0.0;
  double inverse_active_std_error = 0.0;
  double cum_cost_mean = 0.0;
  double cum_time_mean = 0.0;
};

struct SimOutcome {
  std::int64_t trials = 0;
  Summary cost;
  Summary completion;
  Summary idle;
  double mean_iterations = 0.0;
  std::int64_t truncated_trials = 0;
  std::vector<TrialRecord> trial_records;
  std::vector<IterationStats> per_iteration;
};

/// The trace ended before some trial finished; partial results attached.
class TraceTruncated : public Error {
 public:
  TraceTruncated(const std::string& what, SimOutcome partial)
      : Error(ExitCode::trace_truncation, what), partial_(std::move(partial)) {}
  const SimOutcome& partial() const noexcept { return partial_; }

 private:
  SimOutcome partial_;
};

/// Parallel (OpenMP) simulation. Trials are grouped in fixed blocks that are
/// merged in block order, so the result does not depend on the thread count
/// and equals simulate_serial bit for bit.
SimOutcome simulate(const SimConfig& config);

/// Single-threaded reference implementation.
SimOutcome simulate_serial(const SimConfig& config);

/// Per-iteration mean of 1/y_j across trials.
InverseMomentSeq empirical_inverse_moments(const SimOutcome& outcome);

/// Mean of 1/y over every executed iteration of every trial, with its
/// standard error.
Summary pooled_inverse_active(const SimOutcome& outcome);

// ---------------------------------------------------------------------------
// Staged re-bidding.

struct RebidStage {
  int n1 = 1;
  int n = 1;
  std::int64_t iterations = 0;
};

struct StageReport {
  int n1 = 0;
  int n = 0;
  std::int64_t iterations = 0;
  double g0 = 0.0;             // error bound carried into the stage
  std::int64_t trials_entered = 0;
  double b1_mean = 0.0;        // over trials that entered the stage
  double b2_mean = 0.0;
  double gamma = 0.0;
  bool gamma_clamped = false;  // Q(eps) outside [1/n, 1/n1] at the boundary
  BidPlan first_trial_plan;
};

struct RebidOutcome {
  SimOutcome outcome;
  std::vector<StageReport> stages;
  /// stage_start[trial][s] and stage_end[trial][s], seconds.
  std::vector<std::vector<double>> stage_start;
  std::vector<std::vector<double>> stage_end;
  std::int64_t infeasible_trials = 0;
  std::int64_t reached_target = 0;  // trials stopped by stop_at_target
};

struct RebidConfig {
  std::vector<RebidStage> stages;
  PriceModel price = PriceModel::uniform(0.0, 1.0);
  RuntimeModel runtime;
  SgdConstants constants;
  JobRequirements requirements;
  double redraw_interval = 4.0;
  IdleModel idle_model = IdleModel::iteration_slot;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  bool keep_active_traces = false;
  /// Stop a trial once the bound recursion on its realised active counts,
  /// b_j = beta b_{j-1} + (alpha^2 L M / 2) / y_j from b_0 = G0, reaches
  /// the target error (cost to reach a given accuracy).
  bool stop_at_target = false;
};

/// Runs stage 1 with optimal_two_bids over the whole job. At each later
/// boundary the bids are recomputed per trial with the deadline reduced by
/// the elapsed time, the remaining iteration count and the error bound
/// reached so far as the new initial error.
RebidOutcome simulate_dynamic_rebid(const RebidConfig& config);

/// Thrown when the remaining deadline is infeasible at a boundary.
class RebidInfeasible : public Error {
 public:
  RebidInfeasible(const std::string& what, RebidOutcome partial)
      : Error(ExitCode::infeasible_deadline, what), partial_(std::move(partial)) {}
  const RebidOutcome& partial() const noexcept { return partial_; }

 private:
  RebidOutcome partial_;
};

}  // namespace spotsgd
