// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "replisim/allocation.hpp"
#include "replisim/engine.hpp"
#include "replisim/generators.hpp"
#include "replisim/io.hpp"
#include "replisim/offline.hpp"
#include "replisim/policies.hpp"
#include "../tests/support.hpp"

using namespace replisim;
using testsupport::make_random_trace;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0});
}

// Criterion 1: alternating tight example, exact cost formula and ratio near
// the robustness bound.
void criterion_1() {
  const double lambda = 100.0, eps = 0.01;
  const int m = 2000;
  bool pass = true;
  std::string detail;
  for (double alpha : {0.2, 0.5, 1.0}) {
    auto start = std::chrono::steady_clock::now();
    TightExample ex = make_robustness_tight(alpha, lambda, eps, m);
    PredictivePolicy policy({alpha});
    auto [log, rep] = run(ex.trace, ex.predictions, policy, {lambda, {}});
    double dp = optimal_offline_cost(ex.trace, {lambda, {}});
    double elapsed = seconds_since(start);
    double expected = (m - 1) * (alpha * lambda + lambda) + lambda;
    double ratio = rep.total / dp;
    double bound = 1.0 + 1.0 / alpha;
    bool cost_ok = close_rel(rep.total, expected, 1e-9);
    bool ratio_ok = std::abs(ratio - bound) <= 0.01 * bound;
    bool time_ok = elapsed < 5.0;
    if (!cost_ok)
      detail += fmt("alpha=%.1f cost %.2f != expected %.2f (diff %.2f = the leftover copy "
                    "reassigned to r1); ",
                    alpha, rep.total, expected, rep.total - expected);
    if (!ratio_ok) detail += fmt("alpha=%.1f ratio %.4f vs %.4f; ", alpha, ratio, bound);
    if (!time_ok) detail += fmt("alpha=%.1f took %.2fs; ", alpha, elapsed);
    pass = pass && cost_ok && ratio_ok && time_ok;
  }
  if (pass) detail = "tight alternating example: exact cost and ratio within 1% at all alphas";
  report(1, pass, detail);
}

// Criterion 2: consistency tight example, per-cycle cost and ratio near the
// consistency bound.
void criterion_2() {
  const double lambda = 10.0, eps = 1e-3;
  const int cycles = 200;
  bool pass = true;
  std::string detail;
  for (double alpha : {0.2, 0.5, 1.0}) {
    auto start = std::chrono::steady_clock::now();
    TightExample ex = make_consistency_tight(lambda, eps, cycles);
    PredictivePolicy policy({alpha});
    auto [log, rep] = run(ex.trace, ex.predictions, policy, {lambda, {}});
    double dp = optimal_offline_cost(ex.trace, {lambda, {}});
    double elapsed = seconds_since(start);
    double per_cycle = rep.total / cycles;
    double expected = 5 * lambda + alpha * lambda;
    double ratio = rep.total / dp;
    double bound = (5 + alpha) / 3.0;
    bool cost_ok = close_rel(per_cycle, expected, 1e-9);
    bool ratio_ok = std::abs(ratio - bound) <= 0.01 * bound;
    bool time_ok = elapsed < 5.0;
    if (!cost_ok) detail += fmt("alpha=%.1f per-cycle %.6f vs %.6f; ", alpha, per_cycle, expected);
    if (!ratio_ok) detail += fmt("alpha=%.1f ratio %.4f vs %.4f; ", alpha, ratio, bound);
    if (!time_ok) detail += fmt("alpha=%.1f took %.2fs; ", alpha, elapsed);
    pass = pass && cost_ok && ratio_ok && time_ok;
  }
  if (pass) detail = "per-cycle cost exact and ratio within 1% of (5+alpha)/3 at all alphas";
  report(2, pass, detail);
}

// Criterion 3: Wang baseline on its counterexample trace.
void criterion_3() {
  const double lambda = 100.0, eps = 0.01;
  const int m = 2000;
  auto start = std::chrono::steady_clock::now();
  RequestTrace trace = make_wang_counterexample(lambda, eps, m);
  CostParams params{lambda, {}};
  WangPolicy wang;
  auto [log, rep] = run(trace, ground_truth_predictions(trace, params), wang, params);
  double dp = optimal_offline_cost(trace, params);
  double elapsed = seconds_since(start);
  double ratio = rep.total / dp;
  bool cost_ok = rep.total >= (m - 2) * 5.0 * lambda;
  bool ratio_ok = std::abs(ratio - 2.5) <= 0.02 * 2.5;
  bool time_ok = elapsed < 10.0;
  report(3, cost_ok && ratio_ok && time_ok,
         fmt("wang cost %.1f (floor %.1f), ratio %.4f vs 2.5, %.2fs", rep.total,
             (m - 2) * 5.0 * lambda, ratio, elapsed));
}

struct BoundCase {
  RequestTrace trace;
  double dp = 0.0;
};

std::vector<BoundCase>& bound_cases() {
  static std::vector<BoundCase> cases = [] {
    std::vector<BoundCase> out;
    CostParams params{100.0, {}};
    for (uint64_t seed = 1; seed <= 200; ++seed) {
      int n = 2 + static_cast<int>(seed % 4);
      int m = 20 + static_cast<int>((seed * 7) % 181);
      BoundCase c;
      c.trace = make_random_trace(n, m, params.lambda, seed * 1009);
      c.dp = optimal_offline_cost(c.trace, params);
      out.push_back(std::move(c));
    }
    return out;
  }();
  return cases;
}

// Criterion 4: robustness and consistency bounds on seeded random traces.
void criterion_4() {
  CostParams params{100.0, {}};
  bool pass = true;
  std::string detail;
  double worst_rob = 0.0, worst_con = 0.0;
  for (const BoundCase& c : bound_cases()) {
    for (double alpha : {0.25, 0.5, 1.0}) {
      for (double accuracy : {0.0, 0.5}) {
        PredictionStream p = synthesize_predictions(c.trace, params, accuracy,
                                                    static_cast<uint64_t>(alpha * 1000 + accuracy * 10));
        PredictivePolicy policy({alpha});
        auto [log, rep] = run(c.trace, p, policy, params);
        double ratio = rep.total / c.dp;
        worst_rob = std::max(worst_rob, ratio - (1.0 + 1.0 / alpha));
        if (ratio > 1.0 + 1.0 / alpha + 1e-6) {
          pass = false;
          detail += fmt("robustness violated: alpha=%.2f ratio %.6f; ", alpha, ratio);
        }
      }
      PredictionStream truth = ground_truth_predictions(c.trace, params);
      PredictivePolicy policy({alpha});
      auto [log, rep] = run(c.trace, truth, policy, params);
      double ratio = rep.total / c.dp;
      worst_con = std::max(worst_con, ratio - (5.0 + alpha) / 3.0);
      if (ratio > (5.0 + alpha) / 3.0 + 1e-6) {
        pass = false;
        detail += fmt("consistency violated: alpha=%.2f ratio %.6f; ", alpha, ratio);
      }
    }
  }
  if (pass)
    detail = fmt("200 traces x 3 alphas: worst robustness slack %.3g, worst consistency slack %.3g",
                 worst_rob, worst_con);
  report(4, pass, detail);
}

// Criterion 5: oracle equivalence and lower-bound dominance.
void criterion_5() {
  CostParams params{100.0, {}};
  bool pass = true;
  std::string detail;
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    int n = 2 + static_cast<int>(seed % 2);
    int m = 4 + static_cast<int>(seed % 7);
    RequestTrace t = make_random_trace(n, m, params.lambda, seed * 31 + 7);
    double dp = optimal_offline(t, params).cost;
    double brute = brute_force_optimal(t, params).cost;
    if (!close_rel(dp, brute, 1e-9)) {
      pass = false;
      detail += fmt("seed %llu: dp %.9f vs brute %.9f; ", (unsigned long long)seed, dp, brute);
    }
  }
  for (const BoundCase& c : bound_cases()) {
    double lower = optl(c.trace, CostParams{100.0, {}});
    if (lower > c.dp + 1e-9) {
      pass = false;
      detail += fmt("optl %.9f exceeds dp %.9f; ", lower, c.dp);
    }
  }
  if (pass) detail = "dp = brute force on 500 instances; optl <= dp on all bound-suite traces";
  report(5, pass, detail);
}

// Criterion 6: allocation identity plus the scripted type labels.
void criterion_6() {
  CostParams params{100.0, {}};
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  for (const BoundCase& c : bound_cases()) {
    for (double alpha : {0.25, 0.5, 1.0}) {
      for (double accuracy : {0.0, 0.5, 1.0}) {
        PredictionStream p =
            accuracy == 1.0 ? ground_truth_predictions(c.trace, params)
                            : synthesize_predictions(c.trace, params, accuracy,
                                                     static_cast<uint64_t>(alpha * 977 + accuracy * 13));
        PredictivePolicy policy({alpha});
        auto [log, rep] = run(c.trace, p, policy, params);
        AllocationTable table = classify_and_allocate(log, c.trace, p, params, alpha);
        double err = std::abs(table.total_sum() - rep.total) / std::max(1.0, rep.total);
        worst = std::max(worst, err);
        if (err > 1e-9) {
          pass = false;
          detail += fmt("identity violated: alpha=%.2f sum %.9f vs %.9f; ", alpha,
                        table.total_sum(), rep.total);
        }
      }
    }
  }
  // Scripted scenario: the expected labels are Type-1 for r1,r2,r3,r5,r8,
  // Type-2 for r4,r6, Type-3 for r7 and Type-4 for r9.
  {
    RequestTrace t;
    t.n = 4;
    int servers[] = {1, 2, 3, 4, 3, 4, 2, 2, 1, 2};
    double times[] = {0, 10, 25, 35, 60, 145, 170, 220, 240, 330};
    for (int i = 0; i < 10; ++i) t.requests.push_back({i, servers[i], times[i]});
    t = validate_trace(std::move(t));
    Prediction B = Prediction::BeyondLambda, W = Prediction::WithinLambda;
    PredictionStream p = {B, B, B, B, W, B, W, W, B, W};
    PredictivePolicy policy({0.2});
    auto [log, rep] = run(t, p, policy, params);
    AllocationTable table = classify_and_allocate(log, t, p, params, 0.2);
    std::vector<int> got;
    for (const AllocationEntry& e : table.entries) got.push_back(static_cast<int>(e.type));
    std::vector<int> want = {1, 1, 1, 2, 1, 2, 3, 1, 4};
    if (got != want) {
      pass = false;
      detail += "scripted type labels mismatch; ";
    }
    if (!close_rel(table.total_sum(), rep.total, 1e-9)) {
      pass = false;
      detail += "scripted identity mismatch; ";
    }
  }
  if (pass) detail = fmt("allocation identity holds (worst rel err %.3g); scripted labels match", worst);
  report(6, pass, detail);
}

// Criterion 7: the adaptive policy keeps the ratio near 2+beta where the
// plain predictive policy blows up.
void criterion_7() {
  auto start = std::chrono::steady_clock::now();
  const double alpha = 0.1, eps = 0.01;
  const int m = 2000;
  bool pass = true;
  std::string detail;
  for (double lambda : {1000.0, 10000.0}) {
    TightExample ex = make_robustness_tight(alpha, lambda, eps, m);
    CostParams params{lambda, {}};
    double dp = optimal_offline_cost(ex.trace, params);
    PredictivePolicy predictive({alpha});
    auto [plog, prep] = run(ex.trace, ex.predictions, predictive, params);
    double pred_ratio = prep.total / dp;
    for (double beta : {0.1, 1.0}) {
      AdaptivePolicy adaptive({alpha, beta, 100});
      auto [alog, arep] = run(ex.trace, ex.predictions, adaptive, params);
      double ratio = arep.total / dp;
      bool adaptive_ok = ratio <= 2.0 + beta + 0.05;
      bool predictive_bad = pred_ratio > 2.0 + beta;
      if (!adaptive_ok)
        detail += fmt("lambda=%.0f beta=%.1f adaptive ratio %.4f; ", lambda, beta, ratio);
      if (!predictive_bad)
        detail += fmt("lambda=%.0f predictive ratio %.4f not above %.1f; ", lambda, pred_ratio,
                      2.0 + beta);
      pass = pass && adaptive_ok && predictive_bad;
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 30.0) {
    pass = false;
    detail += fmt("took %.1fs; ", elapsed);
  }
  if (pass) detail = fmt("adaptive ratio bounded by 2+beta+0.05 at both lambdas, %.1fs", elapsed);
  report(7, pass, detail);
}

// Criterion 8: adversary strength plus the qualitative grid trends on a
// synthetic ten-server workload.
void criterion_8() {
  bool pass = true;
  std::string detail;
  const double lambda = 100.0, eps = 0.01;
  for (double alpha : {0.3, 0.7}) {
    PredictivePolicy policy({alpha});
    AdversaryResult result = run_adversary(policy, lambda, eps, 1000);
    double dp = optimal_offline_cost(result.trace, {lambda, {}});
    double ratio = result.report.total / dp;
    if (ratio < 1.45) {
      pass = false;
      detail += fmt("adversary ratio %.4f below 1.45 at alpha=%.1f; ", ratio, alpha);
    }
  }

  // Ten servers, 2000 reads with exponential inter-arrivals (mean 50 s),
  // assigned by the ingestion path.
  auto raw_path = std::filesystem::temp_directory_path() / "replisim_acceptance_workload.csv";
  {
    std::ofstream out(raw_path);
    std::mt19937_64 rng(2024);
    double t = 0.0;
    for (int i = 0; i < 2000; ++i) {
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      t += -50.0 * std::log1p(-u);
      out << t << "\n";
    }
  }
  IngestConfig config;
  config.source = raw_path.string();
  config.server_count = 10;
  config.seed = 99;
  RequestTrace workload = ingest_trace(config);
  std::remove(raw_path.string().c_str());

  CostParams params{1000.0, {}};
  double dp = optimal_offline_cost(workload, params);
  auto run_cell = [&](double alpha, double accuracy, uint64_t seed) {
    PredictionStream p = accuracy == 1.0 ? ground_truth_predictions(workload, params)
                                         : synthesize_predictions(workload, params, accuracy, seed);
    PredictivePolicy policy({alpha});
    auto [log, rep] = run(workload, p, policy, params);
    return rep.total;
  };
  double trusting = run_cell(0.01, 1.0, 0);
  double conservative0 = run_cell(1.0, 0.0, 1);
  double conservative5 = run_cell(1.0, 0.5, 2);
  double conservative1 = run_cell(1.0, 1.0, 3);
  if (!(trusting / dp < conservative1 / dp)) {
    pass = false;
    detail += fmt("trend violated: ratio(alpha=0.01,acc=1) %.4f !< ratio(alpha=1) %.4f; ",
                  trusting / dp, conservative1 / dp);
  }
  if (conservative0 != conservative5 || conservative5 != conservative1) {
    pass = false;
    detail += "alpha=1 row varies across accuracies; ";
  }
  if (pass)
    detail = fmt("adversary >= 1.45 at both alphas; grid trends hold (%.4f < %.4f, alpha=1 row constant)",
                 trusting / dp, conservative1 / dp);
  report(8, pass, detail);
}

// Criterion 9: misprediction penalty bound and M1-only immunity.
void criterion_9() {
  CostParams params{100.0, {}};
  bool pass = true;
  std::string detail;
  double worst_slack = -kInf;
  for (const BoundCase& c : bound_cases()) {
    PredictionStream truth = ground_truth_predictions(c.trace, params);
    for (double alpha : {0.25, 0.5, 1.0}) {
      PredictivePolicy base({alpha});
      auto [tlog, trep] = run(c.trace, truth, base, params);
      for (double accuracy : {0.0, 0.5}) {
        PredictionStream noisy = synthesize_predictions(
            c.trace, params, accuracy, static_cast<uint64_t>(alpha * 131 + accuracy * 17 + 5));
        PredictivePolicy policy({alpha});
        auto [nlog, nrep] = run(c.trace, noisy, policy, params);
        MispredictionReport r = misprediction_report(c.trace, noisy, params, alpha);
        double slack = (nrep.total - trep.total) - r.penalty_bound;
        worst_slack = std::max(worst_slack, slack);
        if (slack > 1e-6) {
          pass = false;
          detail += fmt("penalty bound violated by %.6f at alpha=%.2f; ", slack, alpha);
        }
      }
      // Corrupt exactly the predictions whose successor gap is short.
      PredictionStream corrupted = truth;
      std::vector<double> next(static_cast<size_t>(c.trace.n) + 1, -1.0);
      bool changed = false;
      for (size_t i = c.trace.requests.size(); i-- > 0;) {
        const Request& r = c.trace.requests[i];
        double succ = next[static_cast<size_t>(r.server)];
        if (succ >= 0 && succ - r.time <= alpha * params.lambda) {
          corrupted[i] = negate(corrupted[i]);
          changed = true;
        }
        next[static_cast<size_t>(r.server)] = r.time;
      }
      if (changed) {
        PredictivePolicy policy({alpha});
        auto [clog, crep] = run(c.trace, corrupted, policy, params);
        if (crep.total != trep.total) {
          pass = false;
          detail += fmt("M1-only corruption changed the cost by %.9f at alpha=%.2f; ",
                        crep.total - trep.total, alpha);
        }
      }
    }
  }
  if (pass) detail = fmt("penalty bound holds (worst slack %.3g); M1-only corruption is cost-neutral", worst_slack);
  report(9, pass, detail);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria failed\n", g_failures);
  return 1;
}
