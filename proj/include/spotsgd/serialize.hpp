#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/convergence.hpp"
#include "spotsgd/preemptible_optimizer.hpp"
#include "spotsgd/price_model.hpp"
#include "spotsgd/runtime.hpp"
#include "spotsgd/sgd_lab.hpp"
#include "spotsgd/simulator.hpp"

namespace spotsgd {

using Json = nlohmann::ordered_json;

Json to_json(const SgdConstants& k);
Json to_json(const RuntimeModel& rt);
Json to_json(const BidPlan& plan);
Json to_json(const WorkersIterationsPlan& plan);
Json to_json(const EtaPlan& plan);
Json to_json(const DynamicStaticComparison& c);
Json to_json(const SimOutcome& outcome);  // aggregates only
Json to_json(const RebidOutcome& outcome);

/// Round-trippable model description: kind, bounds, Gaussian parameters and,
/// for the empirical model, the sorted samples.
Json price_model_to_json(const PriceModel& model);
PriceModel price_model_from_json(const Json& j);

/// Support, mean, median and deciles.
Json price_summary(const PriceModel& model);

/// Plan fields back from the output of the bid commands.
BidPlan bid_plan_from_json(const Json& j);

/// Geometric schedule with the first and last 10 entries.
Json schedule_to_json(const WorkerSchedule& s);

/// Two-space indented dump followed by a newline.
std::string dump(const Json& j);

/// `trial,cost,completion,iterations,idle`
void write_trials_csv(std::ostream& out, const SimOutcome& outcome);
/// `iter,mean_active,mean_inverse_active,cum_cost_mean,cum_time_mean`
void write_trajectory_csv(std::ostream& out, const SimOutcome& outcome);
/// `iter,active,gap,bound`; row 0 is the starting point (active empty).
void write_train_csv(std::ostream& out, const TrainRecord& rec, const std::vector<double>& bound);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace spotsgd
