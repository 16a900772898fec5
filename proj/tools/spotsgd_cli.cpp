// spotsgd: bidding and provisioning plans for synchronous SGD on spot and
// preemptible instances.

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "spotsgd/bid_optimizer.hpp"
#include "spotsgd/config.hpp"
#include "spotsgd/errors.hpp"
#include "spotsgd/preemptible_optimizer.hpp"
#include "spotsgd/serialize.hpp"
#include "spotsgd/sgd_lab.hpp"
#include "spotsgd/simulator.hpp"
#include "spotsgd/validation.hpp"

using namespace spotsgd;

namespace {

struct Globals {
  int threads = 0;
  std::uint64_t seed = 1;
  std::string config_path;
  std::string manifest_path;
  bool no_manifest = false;
};

// Model flags shared by the bid and simulation commands. Unset flags keep
// the config file value, which keeps the built-in default.
struct ModelFlags {
  std::map<std::string, std::optional<double>> constants;
  std::optional<std::string> runtime_family;
  std::optional<double> rate, shift, fixed_time, overhead;
  bool log_approx = false;

  std::string prices = "uniform";
  double price_lower = 0.2;
  double price_upper = 1.0;
  double price_mean = 0.6;
  double price_variance = 0.04;
  std::string price_model_path;
  std::string trace_path;
};

void add_constant_flags(CLI::App* cmd, ModelFlags& f) {
  for (const auto& key : {"L", "c", "mu", "mu_G", "M", "M_V", "M_G", "alpha", "G0"}) {
    std::string flag = std::string("--") + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    cmd->add_option(flag, f.constants[key], std::string("SGD constant ") + key);
  }
}

void add_runtime_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--runtime", f.runtime_family, "Runtime family: exponential, shifted-exponential, deterministic");
  cmd->add_option("--rate", f.rate, "Exponential rate lambda (1/s)");
  cmd->add_option("--shift", f.shift, "Shift of the shifted exponential (s)");
  cmd->add_option("--fixed-time", f.fixed_time, "Deterministic iteration time (s)");
  cmd->add_option("--overhead", f.overhead, "Server overhead per iteration (s)");
  cmd->add_flag("--log-approx", f.log_approx, "Use ln(m)/lambda in place of H_m/lambda");
}

void add_price_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--prices", f.prices, "Price law: uniform, gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}))
      ->capture_default_str();
  cmd->add_option("--price-lower", f.price_lower, "Lower end of the price support")->capture_default_str();
  cmd->add_option("--price-upper", f.price_upper, "Upper end of the price support")->capture_default_str();
  cmd->add_option("--price-mean", f.price_mean, "Gaussian mean before truncation")->capture_default_str();
  cmd->add_option("--price-variance", f.price_variance, "Gaussian variance before truncation")
      ->capture_default_str();
  cmd->add_option("--price-model", f.price_model_path, "Model file written by fit-prices (overrides --prices)");
  cmd->add_option("--trace", f.trace_path, "Price trace CSV (timestamp,price); empirical law");
}

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  add_constant_flags(cmd, f);
  add_runtime_flags(cmd, f);
  add_price_flags(cmd, f);
}

struct Models {
  SgdConstants constants;
  RuntimeModel runtime;
  std::optional<PriceModel> price;
  std::shared_ptr<const PriceTrace> trace;
  std::vector<std::string> inputs;
};

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

Models resolve_models(const Globals& g, const ModelFlags& f, bool need_price) {
  Models m;
  if (!g.config_path.empty()) {
    const auto cfg = KeyValueConfig::load(g.config_path);
    apply_config(cfg, m.constants);
    apply_config(cfg, m.runtime);
    m.inputs.push_back(g.config_path);
  }
  const std::pair<const char*, double*> fields[] = {
      {"L", &m.constants.L},     {"c", &m.constants.c},         {"mu", &m.constants.mu},
      {"mu_G", &m.constants.mu_G}, {"M", &m.constants.M},       {"M_V", &m.constants.M_V},
      {"M_G", &m.constants.M_G}, {"alpha", &m.constants.alpha}, {"G0", &m.constants.G0}};
  for (const auto& [key, field] : fields) {
    const auto& v = f.constants.at(key);
    if (v) *field = *v;
  }
  if (f.runtime_family) m.runtime.family = parse_runtime_family(*f.runtime_family);
  if (f.rate) m.runtime.rate = *f.rate;
  if (f.shift) m.runtime.shift = *f.shift;
  if (f.fixed_time) m.runtime.fixed_time = *f.fixed_time;
  if (f.overhead) m.runtime.server_overhead = *f.overhead;
  if (f.log_approx) m.runtime.log_approximation = true;
  m.runtime.validate();

  if (!f.trace_path.empty()) {
    m.trace = std::make_shared<const PriceTrace>(load_trace_csv(f.trace_path));
    m.inputs.push_back(f.trace_path);
  }
  if (!need_price) return m;
  if (!f.price_model_path.empty()) {
    m.price = price_model_from_json(read_json(f.price_model_path).at("model"));
    m.inputs.push_back(f.price_model_path);
  } else if (m.trace) {
    m.price = fit_empirical(*m.trace);
  } else if (f.prices == "gaussian") {
    m.price = PriceModel::truncated_gaussian(f.price_mean, f.price_variance, f.price_lower, f.price_upper);
  } else {
    m.price = PriceModel::uniform(f.price_lower, f.price_upper);
  }
  return m;
}

Json models_json(const Models& m) {
  Json j{{"constants", to_json(m.constants)}, {"runtime", to_json(m.runtime)}};
  if (m.price) {
    j["price_model"] = price_model_to_json(*m.price);
    // Empirical sample lists can be long; the digest of the trace covers them.
    if (m.price->kind() == PriceKind::empirical) {
      j["price_model"].erase("samples");
      j["price_model"]["sample_count"] = m.price->samples().size();
    }
  }
  return j;
}

class Runner {
 public:
  explicit Runner(const Globals& g) : g_(g) {}

  void finish(const std::string& command, Json config, const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs) const {
    if (g_.no_manifest) return;
    cli::RunManifest m;
    m.command = command;
    m.config = std::move(config);
    m.seed = g_.seed;
    m.inputs = inputs;
    m.outputs = outputs;
    m.write(g_.manifest_path.empty() ? command + ".manifest.json" : g_.manifest_path);
  }

 private:
  const Globals& g_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

template <class Fn>
void write_with(const std::string& path, Fn fn) {
  std::ostringstream s;
  fn(s);
  write_text(path, s.str());
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string trace;
  std::string kind = "empirical";
  double lower = 0.0, upper = 0.0, mean = 0.0, variance = 0.0;
  std::string out;
};

int cmd_fit_prices(const Globals& g, const FitArgs& a) {
  std::vector<std::string> inputs;
  std::optional<PriceModel> model;
  if (!a.trace.empty()) {
    const PriceTrace trace = load_trace_csv(a.trace);
    inputs.push_back(a.trace);
    const PriceModel emp = fit_empirical(trace);
    const auto& s = emp.samples();
    if (a.kind == "empirical") {
      model = emp;
    } else if (a.kind == "uniform") {
      model = PriceModel::uniform(s.front(), s.back());
    } else {
      double mu = 0.0, var = 0.0;
      for (double v : s) mu += v;
      mu /= static_cast<double>(s.size());
      for (double v : s) var += (v - mu) * (v - mu);
      var /= static_cast<double>(s.size());
      model = PriceModel::truncated_gaussian(mu, var, s.front(), s.back());
    }
  } else {
    if (a.kind == "empirical") throw std::invalid_argument("--kind empirical needs --trace");
    if (a.kind == "uniform") {
      model = PriceModel::uniform(a.lower, a.upper);
    } else {
      model = PriceModel::truncated_gaussian(a.mean, a.variance, a.lower, a.upper);
    }
  }
  Json out{{"command", "fit-prices"}, {"summary", price_summary(*model)}, {"model", price_model_to_json(*model)}};
  std::vector<std::string> outputs;
  if (!a.out.empty()) {
    write_text(a.out, dump(Json{{"model", price_model_to_json(*model)}}));
    outputs.push_back(a.out);
  }
  std::cout << dump(Json{{"command", "fit-prices"}, {"summary", out["summary"]}});
  Runner(g).finish("fit-prices", Json{{"kind", a.kind}, {"trace", a.trace}, {"summary", out["summary"]}}, inputs,
                   outputs);
  return 0;
}

// ---------------------------------------------------------------------------

struct BidArgs {
  int n1 = 0;
  int n = 0;
  std::int64_t J = 0;
  double epsilon = 0.0;
  double deadline = 0.0;
  std::string co_optimize = "none";
};

int emit_plan(const Globals& g, const std::string& command, const Models& m, Json input, const BidPlan& plan) {
  Json model = models_json(m);
  for (auto& [k, v] : model.items()) input[k] = v;
  const Json out{{"command", command}, {"input", input}, {"plan", to_json(plan)}};
  std::cout << dump(out);
  Runner(g).finish(command, input, m.inputs, {});
  return 0;
}

int cmd_optimal_bid(const Globals& g, const ModelFlags& f, const BidArgs& a) {
  const Models m = resolve_models(g, f, true);
  const BidPlan plan = optimal_uniform_bid({a.epsilon, a.deadline}, a.n, m.constants, *m.price, m.runtime);
  return emit_plan(g, "optimal-bid", m, Json{{"n", a.n}, {"epsilon", a.epsilon}, {"deadline", a.deadline}}, plan);
}

int cmd_optimal_two_bids(const Globals& g, const ModelFlags& f, const BidArgs& a) {
  const Models m = resolve_models(g, f, true);
  const JobRequirements req{a.epsilon, a.deadline};
  BidPlan plan;
  if (a.co_optimize == "n1") {
    plan = co_optimize_group_size(req, a.n, a.J, m.constants, *m.price, m.runtime);
  } else if (a.co_optimize == "J") {
    plan = co_optimize_iterations(req, a.n1, a.n, m.constants, *m.price, m.runtime);
  } else {
    plan = optimal_two_bids(req, a.n1, a.n, a.J, m.constants, *m.price, m.runtime);
  }
  Json input{{"n1", a.n1}, {"n", a.n}, {"J", a.J}, {"epsilon", a.epsilon}, {"deadline", a.deadline},
             {"co_optimize", a.co_optimize}};
  return emit_plan(g, "optimal-two-bids", m, input, plan);
}

// ---------------------------------------------------------------------------

struct LawArgs {
  std::string law = "binomial";
  double q = 0.0;
  double chi = 1.0;
  std::optional<double> d;
};

PreemptionLaw resolve_law(const LawArgs& a) {
  const PreemptionKind kind = a.law == "uniform" ? PreemptionKind::uniform_active : PreemptionKind::binomial;
  if (a.d) {
    PreemptionLaw law{kind, a.q, a.chi, *a.d};
    law.validate();
    return law;
  }
  return fit_preemption_bound(kind, a.q, a.chi);
}

Json law_json(const PreemptionLaw& law) {
  return Json{{"law", law.kind == PreemptionKind::binomial ? "binomial" : "uniform"},
              {"q", law.q},
              {"chi", law.chi},
              {"d", law.d}};
}

struct WorkersArgs {
  LawArgs law;
  double epsilon = 0.0;
  double deadline = 0.0;
  double delta = 1.0;
};

int cmd_optimize_workers(const Globals& g, const ModelFlags& f, const WorkersArgs& a) {
  const Models m = resolve_models(g, f, false);
  const PreemptionLaw law = resolve_law(a.law);
  const auto plan = co_optimize_workers_iterations(m.constants, a.epsilon, a.deadline, a.delta, law.d);
  const BoundTerms t = BoundTerms::from(m.constants, law.d);
  Json input{{"epsilon", a.epsilon}, {"deadline", a.deadline}, {"iterations_per_second", a.delta},
             {"preemption", law_json(law)}, {"constants", to_json(m.constants)},
             {"terms", Json{{"A", t.A}, {"beta", t.beta}, {"B", t.B}}}};
  std::cout << dump(Json{{"command", "optimize-workers"}, {"input", input}, {"plan", to_json(plan)}});
  Runner(g).finish("optimize-workers", input, m.inputs, {});
  return 0;
}

struct EtaArgs {
  LawArgs law;
  std::int64_t n0 = 1;
  std::int64_t J = 1;
  double runtime = 1.0;
  std::optional<double> straggler_rate;
  double overhead = 0.0;
  double deadline = 0.0;
  double epsilon = 0.0;
  double eta_max = 100.0;
  bool joint = false;
  std::int64_t max_J = 100'000;
};

int cmd_optimize_eta(const Globals& g, const ModelFlags& f, const EtaArgs& a) {
  const Models m = resolve_models(g, f, false);
  LawArgs la = a.law;
  la.law = "binomial";
  const PreemptionLaw law = resolve_law(la);
  EtaProblem p;
  p.terms = BoundTerms::from(m.constants, law.d);
  p.n0 = a.n0;
  p.q = law.q;
  p.chi = law.chi;
  p.J = a.J;
  p.runtime = a.runtime;
  p.straggler_rate = a.straggler_rate;
  p.overhead = a.overhead;
  p.deadline = a.deadline;
  p.epsilon = a.epsilon;
  p.eta_max = a.eta_max;
  const EtaPlan plan = a.joint ? optimize_eta_joint(p, a.max_J) : optimize_eta(p);
  const WorkerSchedule s = WorkerSchedule::geometric(a.n0, plan.eta, plan.J);
  Json input{{"n0", a.n0},
             {"J", a.joint ? Json(nullptr) : Json(a.J)},
             {"joint", a.joint},
             {"runtime", a.runtime},
             {"straggler_rate", a.straggler_rate ? Json(*a.straggler_rate) : Json(nullptr)},
             {"overhead", a.overhead},
             {"deadline", a.deadline},
             {"epsilon", a.epsilon},
             {"eta_max", a.eta_max},
             {"preemption", law_json(law)},
             {"constants", to_json(m.constants)},
             {"terms", Json{{"A", p.terms.A}, {"beta", p.terms.beta}, {"B", p.terms.B}}}};
  std::cout << dump(Json{{"command", "optimize-eta"}, {"input", input}, {"plan", to_json(plan)},
                         {"schedule", schedule_to_json(s)}});
  Runner(g).finish("optimize-eta", input, m.inputs, {});
  return 0;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string plan_path;
  std::optional<double> b1, b2;
  std::optional<int> n1;
  int n = 1;
  std::int64_t J = 0;
  bool baseline = false;
  bool preemptible = false;
  double q = 0.0;
  double eta = 1.0;
  double unit_price = 1.0;
  std::int64_t trials = 1000;
  double redraw_interval = 4.0;
  std::string idle_model = "iteration-slot";
  bool price_varies = false;
  std::string stages;
  double epsilon = 0.0;
  double deadline = 0.0;
  bool stop_at_target = false;
  std::string out = "simulation.json";
  std::string trials_csv;
  std::string trajectory_csv;
};

std::vector<RebidStage> parse_stages(const std::string& text) {
  std::vector<RebidStage> stages;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    RebidStage s;
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> s.n1 >> c1 >> s.n >> c2 >> s.iterations) || c1 != ':' || c2 != ':' || !is.eof()) {
      throw std::invalid_argument("--stages expects n1:n:iterations[,n1:n:iterations...], got '" + item + "'");
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw std::invalid_argument("--stages is empty");
  return stages;
}

void write_sim_outputs(const SimArgs& a, const Json& json, const SimOutcome& o, std::vector<std::string>& outputs) {
  write_text(a.out, dump(json));
  outputs.push_back(a.out);
  if (!a.trials_csv.empty()) {
    write_with(a.trials_csv, [&](std::ostream& s) { write_trials_csv(s, o); });
    outputs.push_back(a.trials_csv);
  }
  if (!a.trajectory_csv.empty()) {
    write_with(a.trajectory_csv, [&](std::ostream& s) { write_trajectory_csv(s, o); });
    outputs.push_back(a.trajectory_csv);
  }
}

void print_summary(const SimOutcome& o) {
  std::cout << "mean_cost=" << format_double(o.cost.mean) << " mean_completion=" << format_double(o.completion.mean)
            << " trials=" << o.trials << '\n';
}

int cmd_simulate(const Globals& g, const ModelFlags& f, const SimArgs& a) {
  const IdleModel idle = a.idle_model == "fixed-interval" ? IdleModel::fixed_interval : IdleModel::iteration_slot;
  Models m = resolve_models(g, f, true);
  std::vector<std::string> inputs = m.inputs;
  std::vector<std::string> outputs;
  Json input{{"trials", a.trials}, {"redraw_interval", a.redraw_interval}, {"idle_model", a.idle_model},
             {"price_fixed_within_iteration", !a.price_varies}};
  const Json model = models_json(m);
  for (const auto& [k, v] : model.items()) input[k] = v;

  if (!a.stages.empty()) {
    RebidConfig rc;
    rc.stages = parse_stages(a.stages);
    rc.price = *m.price;
    rc.runtime = m.runtime;
    rc.constants = m.constants;
    rc.requirements = {a.epsilon, a.deadline};
    rc.redraw_interval = a.redraw_interval;
    rc.idle_model = idle;
    rc.trials = a.trials;
    rc.seed = g.seed;
    rc.stop_at_target = a.stop_at_target;
    Json stages = Json::array();
    for (const auto& s : rc.stages) stages.push_back(Json{{"n1", s.n1}, {"n", s.n}, {"iterations", s.iterations}});
    input["plan"] = Json{{"kind", "rebid"}, {"stages", stages}, {"epsilon", a.epsilon}, {"deadline", a.deadline},
                         {"stop_at_target", a.stop_at_target}};
    auto finish = [&](const RebidOutcome& r) {
      Json j{{"command", "simulate"}, {"input", input}, {"outcome", to_json(r)}};
      write_sim_outputs(a, j, r.outcome, outputs);
      print_summary(r.outcome);
      Runner(g).finish("simulate", input, inputs, outputs);
    };
    try {
      finish(simulate_dynamic_rebid(rc));
    } catch (const RebidInfeasible& e) {
      finish(e.partial());
      throw;
    }
    return 0;
  }

  SimConfig c;
  if (a.preemptible) {
    const WorkerSchedule s =
        a.eta == 1.0 ? WorkerSchedule::fixed(a.n, a.J) : WorkerSchedule::geometric(a.n, a.eta, a.J);
    c.plan = SimPlan::preemptible(s, a.q, a.unit_price);
    input["plan"] = Json{{"kind", "preemptible"}, {"q", a.q}, {"unit_price", a.unit_price},
                         {"schedule", schedule_to_json(s)}};
  } else if (a.baseline) {
    c.plan = SimPlan::no_interruptions(a.n, a.J);
    input["plan"] = Json{{"kind", "no-interruptions"}, {"n", a.n}, {"J", a.J}};
  } else {
    BidPlan plan;
    if (!a.plan_path.empty()) {
      plan = bid_plan_from_json(read_json(a.plan_path));
      inputs.push_back(a.plan_path);
    } else {
      if (!a.b1) throw std::invalid_argument("simulate needs --plan, --b1, --baseline or --preemptible");
      plan.b1 = *a.b1;
      plan.b2 = a.b2.value_or(*a.b1);
      plan.n = a.n;
      plan.n1 = a.n1.value_or(a.n);
      plan.J = a.J;
    }
    c.plan = SimPlan::from_bids(plan);
    input["plan"] = Json{{"kind", "bids"}, {"b1", plan.b1}, {"b2", plan.b2}, {"n1", plan.n1}, {"n", plan.n},
                         {"J", plan.J}};
  }
  c.price = m.price;
  if (m.trace) {
    c.trace = m.trace;
    c.mode = PriceMode::trace_replay;
  }
  input["mode"] = std::string(to_string(c.mode));
  c.runtime = m.runtime;
  c.redraw_interval = a.redraw_interval;
  c.idle_model = idle;
  c.price_fixed_within_iteration = !a.price_varies;
  c.trials = a.trials;
  c.seed = g.seed;
  auto finish = [&](const SimOutcome& o) {
    Json j{{"command", "simulate"}, {"input", input}, {"outcome", to_json(o)}};
    write_sim_outputs(a, j, o, outputs);
    print_summary(o);
    Runner(g).finish("simulate", input, inputs, outputs);
  };
  try {
    finish(simulate(c));
  } catch (const TraceTruncated& e) {
    finish(e.partial());
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  int d = 20;
  int S = 500;
  double condition = 10.0;
  std::int64_t J = 100;
  std::string schedule = "static:4";
  int replications = 100;
  int batch = 1;
  double alpha = 0.0;
  std::string csv;
};

std::vector<int> parse_schedule(const std::string& text, std::int64_t J, std::uint64_t seed) {
  std::vector<int> out;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "static") {
    out.assign(static_cast<std::size_t>(J), std::stoi(rest));
  } else if (kind == "random") {
    const auto c = rest.find(':');
    const int lo = std::stoi(rest.substr(0, c));
    const int hi = std::stoi(rest.substr(c + 1));
    if (lo < 1 || hi < lo) throw std::invalid_argument("random:lo:hi needs 1 <= lo <= hi");
    Rng rng(seed);
    for (std::int64_t j = 0; j < J; ++j) {
      out.push_back(lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1)));
    }
  } else if (kind == "list") {
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  } else {
    throw std::invalid_argument("schedule must be static:n, random:lo:hi or list:y1,y2,...");
  }
  for (int y : out) {
    if (y < 1) throw std::invalid_argument("schedule entries must be >= 1");
  }
  return out;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  const QuadraticProblem p = make_problem(a.d, a.S, a.condition, g.seed);
  const ConstantEstimate est = estimate_constants(p, a.alpha, a.batch, 32, g.seed + 1);
  const std::vector<int> schedule = parse_schedule(a.schedule, a.J, g.seed + 2);
  const BoundReport rep = validate_bound(p, est.constants, schedule, a.batch, a.replications, g.seed + 3);
  std::vector<std::string> outputs;
  if (!a.csv.empty()) {
    write_with(a.csv, [&](std::ostream& s) {
      s << "iter,mean_gap,std_error,bound\n";
      for (std::size_t j = 0; j < rep.mean_gap.size(); ++j) {
        s << j << ',' << format_double(rep.mean_gap[j]) << ',' << format_double(rep.std_error[j]) << ','
          << format_double(rep.bound[j]) << '\n';
      }
    });
    outputs.push_back(a.csv);
  }
  Json input{{"d", a.d}, {"S", a.S}, {"condition", a.condition}, {"J", static_cast<std::int64_t>(schedule.size())},
             {"schedule", a.schedule}, {"replications", a.replications}, {"batch", a.batch}};
  Json out{{"command", "train"},
           {"input", input},
           {"estimated_constants", to_json(est.constants)},
           {"valid", rep.valid},
           {"worst_excess_se", rep.worst_excess_se},
           {"terminal_mean_gap", rep.terminal_mean_gap},
           {"terminal_bound", rep.terminal_bound}};
  std::cout << dump(out);
  Runner(g).finish("train", input, {}, outputs);
  return rep.valid ? 0 : static_cast<int>(ExitCode::check_failed);
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string suite;
  std::string csv;
  std::int64_t trials = 20'000;
  int replications = 40;
};

int cmd_validate(const Globals& g, const ValidateArgs& a) {
  ValidationOptions o;
  o.trials = a.trials;
  o.replications = a.replications;
  o.seed = g.seed;
  const auto checks = run_validation(a.suite, o);
  bool all = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back(Json{{"suite", c.suite},
                        {"check", c.name},
                        {"passed", c.passed},
                        {"observed", std::isfinite(c.observed) ? Json(c.observed) : Json(nullptr)},
                        {"expected", c.expected},
                        {"tolerance", c.tolerance},
                        {"tolerance_kind", c.tolerance_kind},
                        {"detail", c.detail}});
  }
  std::string csv = a.csv;
  if (csv.empty() && a.suite == "all") csv = "validation_summary.csv";
  std::vector<std::string> outputs;
  if (!csv.empty()) {
    write_with(csv, [&](std::ostream& s) { write_validation_csv(s, checks); });
    outputs.push_back(csv);
  }
  std::cout << dump(Json{{"command", "validate"}, {"suite", a.suite}, {"passed", all}, {"checks", list}});
  Runner(g).finish("validate",
                   Json{{"suite", a.suite}, {"trials", a.trials}, {"replications", a.replications}}, {}, outputs);
  return all ? 0 : static_cast<int>(ExitCode::check_failed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spotsgd: cost-optimal bidding and provisioning for synchronous SGD on volatile instances"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.seed = 1;
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--threads", g.threads, "Cap on OpenMP threads (0 = runtime default)");
  app.add_option("--seed", seed_flag, "Random seed (default: SPOTSGD_SEED or 1)");
  app.add_option("--config", g.config_path, "Flat key = value file with SGD constants and runtime.* keys")
      ->check(CLI::ExistingFile);
  app.add_option("--manifest", g.manifest_path, "Manifest path (default: <command>.manifest.json)");
  app.add_flag("--no-manifest", g.no_manifest, "Do not write a manifest");
  app.footer(
      "Exit codes: 0 ok, 2 usage, 3 infeasible deadline, 4 error floor, 5 Q-range, 6 trace truncation, "
      "7 check failure.\nPrecedence: command-line flags, then --config values, then built-in defaults.");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-prices", "Fit a price model to a trace or build a parametric one");
  fit_cmd->add_option("--trace", fit.trace, "Price trace CSV (timestamp,price)");
  fit_cmd->add_option("--kind", fit.kind, "empirical, uniform or gaussian")
      ->check(CLI::IsMember({"empirical", "uniform", "gaussian"}))
      ->capture_default_str();
  fit_cmd->add_option("--lower", fit.lower, "Support lower end (no trace)");
  fit_cmd->add_option("--upper", fit.upper, "Support upper end (no trace)");
  fit_cmd->add_option("--mean", fit.mean, "Gaussian mean (no trace)");
  fit_cmd->add_option("--variance", fit.variance, "Gaussian variance (no trace)");
  fit_cmd->add_option("--out", fit.out, "Write the model file here");

  ModelFlags mf;
  BidArgs bid;
  auto* bid_cmd = app.add_subcommand("optimal-bid", "Cost-optimal identical bid for n workers");
  add_model_flags(bid_cmd, mf);
  bid_cmd->add_option("--n", bid.n, "Workers")->required();
  bid_cmd->add_option("--epsilon", bid.epsilon, "Target error")->required();
  bid_cmd->add_option("--deadline", bid.deadline, "Deadline theta (s)")->required();

  auto* two_cmd = app.add_subcommand("optimal-two-bids", "Cost-optimal bids for two worker groups");
  add_model_flags(two_cmd, mf);
  two_cmd->add_option("--n1", bid.n1, "Workers in the high-bid group");
  two_cmd->add_option("--n", bid.n, "Total workers")->required();
  two_cmd->add_option("--J", bid.J, "Iterations");
  two_cmd->add_option("--epsilon", bid.epsilon, "Target error")->required();
  two_cmd->add_option("--deadline", bid.deadline, "Deadline theta (s)")->required();
  two_cmd->add_option("--co-optimize", bid.co_optimize, "none, n1 (scan group size) or J (scan iterations)")
      ->check(CLI::IsMember({"none", "n1", "J"}))
      ->capture_default_str();

  auto add_law = [](CLI::App* cmd, LawArgs& l, bool with_kind) {
    if (with_kind) {
      cmd->add_option("--law", l.law, "Active-count law: binomial or uniform")
          ->check(CLI::IsMember({"binomial", "uniform"}))
          ->capture_default_str();
    }
    cmd->add_option("--q", l.q, "Per-worker preemption probability")->capture_default_str();
    cmd->add_option("--chi", l.chi, "Exponent of E[1/y] <= d / n^chi")->capture_default_str();
    cmd->add_option("--d", l.d, "Coefficient d (default: fitted over n <= 128)");
  };

  WorkersArgs wa;
  auto* workers_cmd = app.add_subcommand("optimize-workers", "Minimise workers x iterations for preemptible jobs");
  add_constant_flags(workers_cmd, mf);
  add_law(workers_cmd, wa.law, true);
  workers_cmd->add_option("--epsilon", wa.epsilon, "Target error")->required();
  workers_cmd->add_option("--deadline", wa.deadline, "Deadline theta (s)")->required();
  workers_cmd->add_option("--delta", wa.delta, "Iterations per second")->capture_default_str();

  EtaArgs ea;
  auto* eta_cmd = app.add_subcommand("optimize-eta", "Geometric worker growth rate for preemptible jobs");
  add_constant_flags(eta_cmd, mf);
  add_law(eta_cmd, ea.law, false);
  eta_cmd->add_option("--n0", ea.n0, "Initial workers")->capture_default_str();
  eta_cmd->add_option("--J", ea.J, "Iterations (ignored with --joint)")->capture_default_str();
  eta_cmd->add_option("--iteration-time", ea.runtime, "Constant iteration time (s)")->capture_default_str();
  eta_cmd->add_option("--straggler-rate", ea.straggler_rate, "Use R_j = overhead + ln(n_j) / rate");
  eta_cmd->add_option("--overhead", ea.overhead, "Server overhead with --straggler-rate (s)")->capture_default_str();
  eta_cmd->add_option("--deadline", ea.deadline, "Deadline theta (s)")->required();
  eta_cmd->add_option("--epsilon", ea.epsilon, "Target error")->required();
  eta_cmd->add_option("--eta-max", ea.eta_max, "Upper end of the eta search")->capture_default_str();
  eta_cmd->add_flag("--joint", ea.joint, "Also choose J");
  eta_cmd->add_option("--max-J", ea.max_J, "Largest J scanned with --joint")->capture_default_str();

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo simulation of a plan");
  add_model_flags(sim_cmd, mf);
  sim_cmd->add_option("--plan", sa.plan_path, "Plan JSON from optimal-bid / optimal-two-bids");
  sim_cmd->add_option("--b1", sa.b1, "High bid");
  sim_cmd->add_option("--b2", sa.b2, "Low bid (default: b1)");
  sim_cmd->add_option("--n1", sa.n1, "Workers bidding b1 (default: n)");
  sim_cmd->add_option("--n", sa.n, "Workers (n0 for --preemptible)")->capture_default_str();
  sim_cmd->add_option("--J", sa.J, "Iterations");
  sim_cmd->add_flag("--baseline", sa.baseline, "No-interruptions baseline with n workers");
  sim_cmd->add_flag("--preemptible", sa.preemptible, "Preemptible instances at a fixed price");
  sim_cmd->add_option("--q", sa.q, "Preemption probability (--preemptible)");
  sim_cmd->add_option("--eta", sa.eta, "Geometric growth rate (--preemptible)")->capture_default_str();
  sim_cmd->add_option("--unit-price", sa.unit_price, "Price per worker-second (--preemptible)")
      ->capture_default_str();
  sim_cmd->add_option("--trials", sa.trials, "Trials")->capture_default_str();
  sim_cmd->add_option("--redraw-interval", sa.redraw_interval, "Price redraw interval (s)")->capture_default_str();
  sim_cmd->add_option("--idle-model", sa.idle_model, "iteration-slot or fixed-interval")
      ->check(CLI::IsMember({"iteration-slot", "fixed-interval"}))
      ->capture_default_str();
  sim_cmd->add_flag("--price-varies", sa.price_varies, "Redraw prices during an iteration (restart on change)");
  sim_cmd->add_option("--stages", sa.stages, "Re-bid stages n1:n:iterations,...");
  sim_cmd->add_option("--epsilon", sa.epsilon, "Target error (--stages)");
  sim_cmd->add_option("--deadline", sa.deadline, "Deadline (--stages)");
  sim_cmd->add_flag("--stop-at-target", sa.stop_at_target, "Stop each trial once its bound reaches epsilon");
  sim_cmd->add_option("--out", sa.out, "Aggregate JSON")->capture_default_str();
  sim_cmd->add_option("--trials-csv", sa.trials_csv, "Per-trial CSV");
  sim_cmd->add_option("--trajectory-csv", sa.trajectory_csv, "Per-iteration CSV");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Synchronous SGD on a synthetic quadratic against the bound");
  train_cmd->add_option("--d", ta.d, "Dimension")->capture_default_str();
  train_cmd->add_option("--S", ta.S, "Samples")->capture_default_str();
  train_cmd->add_option("--condition", ta.condition, "Hessian condition number")->capture_default_str();
  train_cmd->add_option("--J", ta.J, "Iterations")->capture_default_str();
  train_cmd->add_option("--schedule", ta.schedule, "static:n, random:lo:hi or list:y1,y2,...")
      ->capture_default_str();
  train_cmd->add_option("--replications", ta.replications, "Replications")->capture_default_str();
  train_cmd->add_option("--batch", ta.batch, "Mini-batch size per worker")->capture_default_str();
  train_cmd->add_option("--alpha", ta.alpha, "Step size (<= 0: 0.9 / L)")->capture_default_str();
  train_cmd->add_option("--csv", ta.csv, "iter,mean_gap,std_error,bound");

  ValidateArgs va;
  auto* val_cmd = app.add_subcommand("validate", "Run a validation suite");
  val_cmd->add_option("--suite", va.suite, "formulas, bounds, optimizers or all")
      ->required()
      ->check(CLI::IsMember({"formulas", "bounds", "optimizers", "all"}));
  val_cmd->add_option("--csv", va.csv, "Summary CSV (default for all: validation_summary.csv)");
  val_cmd->add_option("--trials", va.trials, "Trials per simulation check")->capture_default_str();
  val_cmd->add_option("--replications", va.replications, "SGD replications per schedule")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::usage);
  }

  try {
    g.seed = seed_flag ? *seed_flag : default_seed(1);
    if (g.threads > 0) omp_set_num_threads(g.threads);
    if (*fit_cmd) return cmd_fit_prices(g, fit);
    if (*bid_cmd) return cmd_optimal_bid(g, mf, bid);
    if (*two_cmd) {
      if (bid.co_optimize != "n1" && bid.n1 <= 0) throw std::invalid_argument("--n1 is required");
      if (bid.co_optimize != "J" && bid.J <= 0) throw std::invalid_argument("--J is required");
      return cmd_optimal_two_bids(g, mf, bid);
    }
    if (*workers_cmd) return cmd_optimize_workers(g, mf, wa);
    if (*eta_cmd) return cmd_optimize_eta(g, mf, ea);
    if (*sim_cmd) return cmd_simulate(g, mf, sa);
    if (*train_cmd) return cmd_train(g, ta);
    if (*val_cmd) return cmd_validate(g, va);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const TraceParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::check_failed);
  }
  return static_cast<int>(ExitCode::usage);
}
