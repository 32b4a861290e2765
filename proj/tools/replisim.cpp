// Command-line surface for the replication simulator: run policies on traces,
// compute offline optima, sweep experiment grids, drive the adversary, emit
// allocation tables, and ingest raw traces.
//
// Exit codes: 0 success, 1 usage error, 2 validation/parse error, 3 internal
// invariant failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replisim/allocation.hpp"
#include "replisim/engine.hpp"
#include "replisim/generators.hpp"
#include "replisim/io.hpp"
#include "replisim/model.hpp"
#include "replisim/offline.hpp"
#include "replisim/policies.hpp"

namespace {

using namespace replisim;

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct PolicyFlags {
  std::string name = "predictive";
  double alpha = 1.0;
  double beta = 0.0;
  int warmup = 100;
};

std::unique_ptr<Policy> build_policy(const PolicyFlags& flags) {
  if (flags.name == "predictive") return predictive_policy({flags.alpha});
  if (flags.name == "conventional") return conventional_policy();
  if (flags.name == "adaptive") return adaptive_policy({flags.alpha, flags.beta, flags.warmup});
  if (flags.name == "wang") return wang_policy();
  throw ValidationError(ValidationError::Code::BadParams, "unknown policy " + flags.name);
}

RequestTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return read_trace_csv(in);
}

struct ExampleFlags {
  std::string example;
  double alpha = 0.5;
  double lambda = 100.0;
  double eps = 0.01;
  int m = 100;
  int cycles = 1;
};

// Trace plus the example's built-in prediction stream, when one exists.
std::pair<RequestTrace, std::optional<PredictionStream>> build_example(const ExampleFlags& f) {
  if (f.example == "robustness") {
    TightExample ex = make_robustness_tight(f.alpha, f.lambda, f.eps, f.m);
    return {ex.trace, ex.predictions};
  }
  if (f.example == "consistency") {
    TightExample ex = make_consistency_tight(f.lambda, f.eps, f.cycles);
    return {ex.trace, ex.predictions};
  }
  if (f.example == "wang") return {make_wang_counterexample(f.lambda, f.eps, f.m), std::nullopt};
  throw ValidationError(ValidationError::Code::BadParams, "unknown example " + f.example);
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw ParseError("cannot open " + path + " for writing", 0);
  return file;
}

int cmd_simulate(const std::string& trace_path, ExampleFlags example,
                 const std::string& predictions_path, std::optional<double> accuracy,
                 uint64_t seed, const PolicyFlags& policy_flags, double lambda,
                 const std::vector<double>& rates, const std::string& out_path) {
  example.alpha = policy_flags.alpha;
  example.lambda = lambda;
  RequestTrace trace;
  std::optional<PredictionStream> preds;
  if (!example.example.empty()) {
    auto [t, p] = build_example(example);
    trace = t;
    preds = p;
  } else if (!trace_path.empty()) {
    trace = load_trace(trace_path);
  } else {
    throw ValidationError(ValidationError::Code::BadParams, "need --trace or --example");
  }
  CostParams params{lambda, rates};
  if (!predictions_path.empty()) {
    std::ifstream in(predictions_path);
    if (!in) throw ParseError("cannot open " + predictions_path, 0);
    preds = read_predictions_csv(in);
  } else if (accuracy) {
    preds = synthesize_predictions(trace, params, *accuracy, seed);
  } else if (!preds) {
    preds = ground_truth_predictions(trace, params);
  }
  std::unique_ptr<Policy> policy = build_policy(policy_flags);
  auto [log, report] = run(trace, *preds, *policy, params);
  if (!out_path.empty()) {
    std::ofstream file;
    write_log_csv(log, open_output(file, out_path));
  }
  std::cout << "storage_cost " << fixed9(report.storage_cost) << "\n"
            << "transfer_cost " << fixed9(report.transfer_cost) << "\n"
            << "total " << fixed9(report.total) << "\n"
            << "excluded_final_regular " << fixed9(report.excluded_final_regular) << "\n"
            << "excluded_infinite_tail " << (report.excluded_infinite_tail ? 1 : 0) << "\n";
  return 0;
}

int cmd_offline(const std::string& trace_path, ExampleFlags example, const std::string& method,
                double lambda, const std::string& out_path) {
  example.lambda = lambda;
  RequestTrace trace;
  if (!example.example.empty())
    trace = build_example(example).first;
  else if (!trace_path.empty())
    trace = load_trace(trace_path);
  else
    throw ValidationError(ValidationError::Code::BadParams, "need --trace or --example");
  CostParams params{lambda, {}};
  if (method == "optl") {
    std::cout << fixed9(optl(trace, params)) << "\n";
    return 0;
  }
  OfflineSolution solution =
      method == "brute" ? brute_force_optimal(trace, params) : optimal_offline(trace, params);
  if (!out_path.empty()) {
    std::ofstream file;
    write_log_csv(solution.log, open_output(file, out_path));
  }
  std::cout << fixed9(solution.cost) << "\n";
  return 0;
}

int cmd_allocate(const std::string& trace_path, const std::string& predictions_path,
                 std::optional<double> accuracy, uint64_t seed, const PolicyFlags& policy_flags,
                 double lambda, const std::string& out_path) {
  RequestTrace trace = load_trace(trace_path);
  CostParams params{lambda, {}};
  PredictionStream preds;
  if (!predictions_path.empty()) {
    std::ifstream in(predictions_path);
    if (!in) throw ParseError("cannot open " + predictions_path, 0);
    preds = read_predictions_csv(in);
  } else if (accuracy) {
    preds = synthesize_predictions(trace, params, *accuracy, seed);
  } else {
    preds = ground_truth_predictions(trace, params);
  }
  std::unique_ptr<Policy> policy = build_policy(policy_flags);
  auto [log, report] = run(trace, preds, *policy, params);
  AllocationTable table = classify_and_allocate(log, trace, preds, params, policy_flags.alpha);
  {
    std::ofstream file;
    write_allocation_csv(table, open_output(file, out_path));
  }
  double sum = table.total_sum();
  double tolerance = 1e-9 * std::max(1.0, report.total);
  if (std::abs(sum - report.total) > tolerance)
    throw Error("allocation sum " + format_double(sum) + " deviates from accounted total " +
                format_double(report.total));
  std::cerr << "allocation sum matches accounted total " << fixed9(report.total) << "\n";
  return 0;
}

int cmd_adversary(const PolicyFlags& policy_flags, double lambda, double eps, int m,
                  const std::string& out_path) {
  std::unique_ptr<Policy> policy = build_policy(policy_flags);
  AdversaryResult result = run_adversary(*policy, lambda, eps, m);
  if (!out_path.empty()) {
    std::ofstream file;
    write_trace_csv(result.trace, open_output(file, out_path));
  }
  for (size_t i = 0; i < result.classes.size(); ++i)
    std::cout << i << ',' << to_string(result.classes[i]) << "\n";
  double opt = optimal_offline_cost(result.trace, CostParams{lambda, {}});
  std::cout << "online " << fixed9(result.report.total) << "\n"
            << "opt " << fixed9(opt) << "\n"
            << "ratio " << fixed9(result.report.total / opt) << "\n";
  return 0;
}

int cmd_experiment(const std::string& trace_path, int prefix, std::vector<std::string> policies,
                   std::vector<double> alphas, std::vector<double> lambdas,
                   std::vector<double> accuracies, int trials, uint64_t seed, double beta,
                   int warmup, const std::string& normalize, const std::string& out_path) {
  RequestTrace trace = load_trace(trace_path);
  if (prefix > 0 && static_cast<size_t>(prefix) + 1 < trace.requests.size()) {
    trace.requests.resize(static_cast<size_t>(prefix) + 1);
    trace = validate_trace(std::move(trace));
  }
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "policy,alpha,lambda,accuracy,trial,online_cost,opt_cost,optl,ratio\n";
  std::vector<std::pair<double, double>> opt_cache;   // (lambda, dp cost)
  std::vector<std::pair<double, double>> optl_cache;  // (lambda, optl)
  auto cached = [](std::vector<std::pair<double, double>>& cache, double key,
                   auto&& compute) -> double {
    for (auto& [k, v] : cache)
      if (k == key) return v;
    double v = compute();
    cache.emplace_back(key, v);
    return v;
  };
  for (const std::string& policy_name : policies)
    for (size_t ai = 0; ai < alphas.size(); ++ai)
      for (size_t li = 0; li < lambdas.size(); ++li)
        for (size_t qi = 0; qi < accuracies.size(); ++qi)
          for (int trial = 0; trial < trials; ++trial) {
            double lambda = lambdas[li];
            CostParams params{lambda, {}};
            out << policy_name << ',' << format_double(alphas[ai]) << ','
                << format_double(lambda) << ',' << format_double(accuracies[qi]) << ','
                << trial;
            try {
              uint64_t cell_seed = splitmix64(seed ^ splitmix64((ai << 24) ^ (li << 16) ^
                                                                (qi << 8) ^ uint64_t(trial)));
              PredictionStream preds =
                  synthesize_predictions(trace, params, accuracies[qi], cell_seed);
              PolicyFlags pf{policy_name, alphas[ai], beta, warmup};
              std::unique_ptr<Policy> policy = build_policy(pf);
              auto [log, report] = run(trace, preds, *policy, params);
              double lower = cached(optl_cache, lambda,
                                    [&] { return optl(trace, params); });
              double denom;
              std::string opt_field;
              if (normalize == "optl") {
                denom = lower;
                opt_field = "";
              } else {
                denom = cached(opt_cache, lambda,
                               [&] { return optimal_offline_cost(trace, params); });
                opt_field = format_double(denom);
              }
              out << ',' << format_double(report.total) << ',' << opt_field << ','
                  << format_double(lower) << ',' << format_double(report.total / denom) << "\n";
            } catch (const Error& e) {
              out << ",error,,,\n";
              std::cerr << "cell failed: " << e.what() << "\n";
            }
          }
  return 0;
}

int cmd_ingest(const IngestConfig& config, const std::string& out_path) {
  RequestTrace trace = ingest_trace(config);
  std::ofstream file;
  write_trace_csv(trace, open_output(file, out_path));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-driven dynamic data replication simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Plain key = value configuration file");

  // simulate ---------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Run a policy on a trace and print accounted costs");
  std::string sim_trace, sim_preds, sim_out;
  ExampleFlags sim_example;
  PolicyFlags sim_policy;
  std::optional<double> sim_accuracy;
  uint64_t sim_seed = 0;
  double sim_lambda = 100.0;
  std::vector<double> sim_rates;
  sim->add_option("--trace", sim_trace, "Trace file (time,server CSV)");
  sim->add_option("--example", sim_example.example, "Built-in example")
      ->check(CLI::IsMember({"robustness", "consistency", "wang"}));
  sim->add_option("--predictions", sim_preds, "Prediction file");
  sim->add_option("--accuracy", sim_accuracy, "Synthesize predictions at this accuracy");
  sim->add_option("--seed", sim_seed, "Seed for synthesized predictions");
  sim->add_option("--policy", sim_policy.name, "predictive|conventional|adaptive|wang")
      ->check(CLI::IsMember({"predictive", "conventional", "adaptive", "wang"}));
  sim->add_option("--alpha", sim_policy.alpha, "Distrust parameter in (0,1]");
  sim->add_option("--beta", sim_policy.beta, "Adaptive robustness slack (target 2+beta)");
  sim->add_option("--warmup", sim_policy.warmup, "Adaptive warm-up request count");
  sim->add_option("--lambda", sim_lambda, "Transfer cost");
  sim->add_option("--eps", sim_example.eps, "Example epsilon");
  sim->add_option("--m", sim_example.m, "Example request count");
  sim->add_option("--cycles", sim_example.cycles, "Consistency example cycles");
  sim->add_option("--rates", sim_rates, "Per-server storage rates (wang baseline)")
      ->delimiter(',');
  sim->add_option("--out", sim_out, "Export the replication log CSV here");

  // offline ----------------------------------------------------------------
  auto* off = app.add_subcommand("offline", "Optimal offline cost of a trace");
  std::string off_trace, off_method = "dp", off_out;
  ExampleFlags off_example;
  double off_lambda = 100.0;
  off->add_option("--trace", off_trace, "Trace file");
  off->add_option("--example", off_example.example, "Built-in example")
      ->check(CLI::IsMember({"robustness", "consistency", "wang"}));
  off->add_option("--alpha", off_example.alpha, "Example alpha");
  off->add_option("--eps", off_example.eps, "Example epsilon");
  off->add_option("--m", off_example.m, "Example request count");
  off->add_option("--cycles", off_example.cycles, "Consistency example cycles");
  off->add_option("--method", off_method, "dp|brute|optl")
      ->check(CLI::IsMember({"dp", "brute", "optl"}));
  off->add_option("--lambda", off_lambda, "Transfer cost");
  off->add_option("--out", off_out, "Export the strategy log CSV here (dp/brute)");

  // allocate ---------------------------------------------------------------
  auto* alloc = app.add_subcommand("allocate", "Per-request cost allocation table");
  std::string alloc_trace, alloc_preds, alloc_out;
  PolicyFlags alloc_policy;
  std::optional<double> alloc_accuracy;
  uint64_t alloc_seed = 0;
  double alloc_lambda = 100.0;
  alloc->add_option("--trace", alloc_trace, "Trace file")->required();
  alloc->add_option("--predictions", alloc_preds, "Prediction file");
  alloc->add_option("--accuracy", alloc_accuracy, "Synthesize predictions at this accuracy");
  alloc->add_option("--seed", alloc_seed, "Seed for synthesized predictions");
  alloc->add_option("--policy", alloc_policy.name, "predictive|conventional")
      ->check(CLI::IsMember({"predictive", "conventional"}));
  alloc->add_option("--alpha", alloc_policy.alpha, "Distrust parameter in (0,1]");
  alloc->add_option("--lambda", alloc_lambda, "Transfer cost");
  alloc->add_option("--out", alloc_out, "Write the allocation CSV here");

  // adversary ----------------------------------------------------------------
  auto* adv = app.add_subcommand("adversary", "Generate an adversarial trace online");
  PolicyFlags adv_policy;
  double adv_lambda = 100.0, adv_eps = 0.01;
  int adv_m = 100;
  std::string adv_out;
  adv->add_option("--policy", adv_policy.name, "predictive|conventional|adaptive|wang")
      ->check(CLI::IsMember({"predictive", "conventional", "adaptive", "wang"}));
  adv->add_option("--alpha", adv_policy.alpha, "Distrust parameter in (0,1]");
  adv->add_option("--beta", adv_policy.beta, "Adaptive robustness slack");
  adv->add_option("--warmup", adv_policy.warmup, "Adaptive warm-up request count");
  adv->add_option("--lambda", adv_lambda, "Transfer cost");
  adv->add_option("--eps", adv_eps, "Adversary epsilon");
  adv->add_option("--m", adv_m, "Number of generated requests");
  adv->add_option("--out", adv_out, "Write the emitted trace CSV here");

  // experiment ---------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "Sweep a parameter grid, emit a CSV table");
  std::string exp_trace, exp_out, exp_normalize = "dp";
  std::vector<std::string> exp_policies = {"predictive"};
  std::vector<double> exp_alphas = {0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> exp_lambdas = {10, 100, 1000, 10000};
  std::vector<double> exp_accuracies = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  int exp_trials = 1, exp_prefix = 0, exp_warmup = 100;
  uint64_t exp_seed = 0;
  double exp_beta = 0.0;
  exp->add_option("--trace", exp_trace, "Trace file")->required();
  exp->add_option("--prefix", exp_prefix, "Use only the first N requests");
  exp->add_option("--policy", exp_policies, "Policies to sweep")->delimiter(',');
  exp->add_option("--alpha", exp_alphas, "Alpha grid")->delimiter(',');
  exp->add_option("--lambda", exp_lambdas, "Lambda grid")->delimiter(',');
  exp->add_option("--accuracy", exp_accuracies, "Accuracy grid")->delimiter(',');
  exp->add_option("--trials", exp_trials, "Trials per cell");
  exp->add_option("--seed", exp_seed, "Base seed");
  exp->add_option("--beta", exp_beta, "Adaptive robustness slack");
  exp->add_option("--warmup", exp_warmup, "Adaptive warm-up request count");
  exp->add_option("--normalize", exp_normalize, "dp|optl")
      ->check(CLI::IsMember({"dp", "optl"}));
  exp->add_option("--out", exp_out, "Write the result CSV here");

  // ingest -------------------------------------------------------------------
  auto* ing = app.add_subcommand("ingest", "Convert a raw access trace into the native format");
  IngestConfig ing_config;
  std::string ing_out;
  ing->add_option("--trace", ing_config.source, "Raw trace file")->required();
  ing->add_option("--n", ing_config.server_count, "Number of servers");
  ing->add_option("--seed", ing_config.seed, "Server-assignment seed");
  ing->add_option("--zipf", ing_config.zipf_exponent, "Zipf exponent");
  ing->add_option("--time-col", ing_config.time_col, "Timestamp column index (0-based)");
  ing->add_option("--op-col", ing_config.op_col, "Operation column index (-1: no filter)");
  ing->add_option("--object-col", ing_config.object_col, "Object id column index (-1: no filter)");
  ing->add_option("--object", ing_config.object, "Keep only this object id");
  ing->add_option("--read-token", ing_config.read_token, "Substring marking read operations");
  ing->add_option("--time-div", ing_config.time_divisor, "Input time units per second");
  ing->add_option("--out", ing_out, "Write the native trace CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_trace, sim_example, sim_preds, sim_accuracy, sim_seed, sim_policy,
                          sim_lambda, sim_rates, sim_out);
    if (off->parsed())
      return cmd_offline(off_trace, off_example, off_method, off_lambda, off_out);
    if (alloc->parsed())
      return cmd_allocate(alloc_trace, alloc_preds, alloc_accuracy, alloc_seed, alloc_policy,
                          alloc_lambda, alloc_out);
    if (adv->parsed()) return cmd_adversary(adv_policy, adv_lambda, adv_eps, adv_m, adv_out);
    if (exp->parsed())
      return cmd_experiment(exp_trace, exp_prefix, exp_policies, exp_alphas, exp_lambdas,
                            exp_accuracies, exp_trials, exp_seed, exp_beta, exp_warmup,
                            exp_normalize, exp_out);
    if (ing->parsed()) return cmd_ingest(ing_config, ing_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedRates& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InstanceTooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TooManyServers& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
