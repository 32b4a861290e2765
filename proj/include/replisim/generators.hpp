#pragma once

// Trace and prediction generators: the two tight examples, the counterexample
// trace for the Wang baseline, accuracy-controlled prediction synthesis,
// real-trace ingestion with Zipf server assignment, and the interactive
// adversary that generates requests online against a running policy.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "engine.hpp"
#include "model.hpp"

namespace replisim {

struct TightExample {
  RequestTrace trace;
  PredictionStream predictions;
};

/// Two servers, per-server gap exactly alpha*lambda + eps, requests
/// alternating with offset eps; every prediction says beyond-lambda.
inline TightExample make_robustness_tight(double alpha, double lambda, double eps, int m) {
  if (!(alpha > 0) || !(alpha <= 1))
    throw ValidationError(ValidationError::Code::BadParams, "alpha must lie in (0, 1]");
  if (!(eps > 0) || (alpha < 1 && !(eps < (1 - alpha) * lambda)))
    throw ValidationError(ValidationError::Code::BadParams,
                          "eps must lie in (0, (1-alpha)*lambda)");
  if (m < 2) throw ValidationError(ValidationError::Code::BadParams, "need m >= 2");
  TightExample out;
  out.trace.n = 2;
  out.trace.requests.push_back({0, 1, 0.0});
  double gap = alpha * lambda + eps;
  for (int i = 1; i <= m; ++i) {
    if (i % 2 == 1)
      out.trace.requests.push_back({i, 2, eps + ((i - 1) / 2) * gap});
    else
      out.trace.requests.push_back({i, 1, (i / 2) * gap});
  }
  out.trace = validate_trace(std::move(out.trace));
  out.predictions.assign(out.trace.requests.size(), Prediction::BeyondLambda);
  return out;
}

/// Two servers; each cycle places requests at +lambda (away), +lambda+eps
/// (home) and +2*lambda+eps (away) from the cycle start, then swaps roles.
/// All predictions say beyond-lambda, which is correct here.
inline TightExample make_consistency_tight(double lambda, double eps, int cycles) {
  if (!(eps > 0) || !(eps < lambda))
    throw ValidationError(ValidationError::Code::BadParams, "eps must lie in (0, lambda)");
  if (cycles < 1) throw ValidationError(ValidationError::Code::BadParams, "need cycles >= 1");
  TightExample out;
  out.trace.n = 2;
  out.trace.requests.push_back({0, 1, 0.0});
  double base = 0.0;
  int home = 1, away = 2;
  for (int c = 0; c < cycles; ++c) {
    int id = 3 * c;
    out.trace.requests.push_back({id + 1, away, base + lambda});
    out.trace.requests.push_back({id + 2, home, base + lambda + eps});
    out.trace.requests.push_back({id + 3, away, base + 2 * lambda + eps});
    base += 2 * lambda + eps;
    std::swap(home, away);
  }
  out.trace = validate_trace(std::move(out.trace));
  out.predictions.assign(out.trace.requests.size(), Prediction::BeyondLambda);
  return out;
}

/// First request at server 1 at time 0 (the dummy), then m-1 requests at
/// server 2 spaced slightly more than 2*lambda apart.
inline RequestTrace make_wang_counterexample(double lambda, double eps, int m) {
  if (!(eps > 0) || !(eps < lambda))
    throw ValidationError(ValidationError::Code::BadParams, "eps must lie in (0, lambda)");
  if (m < 3) throw ValidationError(ValidationError::Code::BadParams, "need m >= 3");
  RequestTrace trace;
  trace.n = 2;
  trace.requests.push_back({0, 1, 0.0});
  for (int j = 1; j < m; ++j)
    trace.requests.push_back({j, 2, 2 * (j - 1) * lambda + j * eps});
  return validate_trace(std::move(trace));
}

namespace detail {

// Deterministic uniform double in [0, 1) independent of the standard
// library's distribution implementations.
inline double canonical(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Per request, emit the ground truth with probability `accuracy`, otherwise
/// its negation. Seeded and reproducible.
inline PredictionStream synthesize_predictions(const RequestTrace& trace,
                                               const CostParams& params, double accuracy,
                                               uint64_t seed) {
  if (!(accuracy >= 0) || !(accuracy <= 1))
    throw ValidationError(ValidationError::Code::BadParams, "accuracy must lie in [0, 1]");
  PredictionStream truth = ground_truth_predictions(trace, params);
  std::mt19937_64 rng(seed);
  for (Prediction& p : truth)
    if (!(detail::canonical(rng) < accuracy)) p = negate(p);
  return truth;
}

struct IngestConfig {
  std::string source;
  int time_col = 0;
  int op_col = -1;      // -1: no operation filtering
  int object_col = -1;  // -1: no object filtering
  std::string object;
  std::string read_token = "GET";
  int server_count = 10;
  double zipf_exponent = 1.0;
  uint64_t seed = 0;
  double time_divisor = 1.0;  // input time units per second
};

/// Reads a whitespace- or comma-separated trace, keeps read operations,
/// normalizes timestamps to seconds from the first event, perturbs duplicate
/// timestamps by multiples of 1e-6 s, and assigns servers i.i.d. with
/// P(i) proportional to i^(-zipf_exponent).
inline RequestTrace ingest_trace(const IngestConfig& config) {
  std::ifstream in(config.source);
  if (!in) throw ParseError("cannot open " + config.source, 0);
  if (config.server_count < 1)
    throw ValidationError(ValidationError::Code::BadParams, "need at least one server");

  std::vector<double> times;
  std::string line;
  long line_no = 0;
  int max_col = std::max({config.time_col, config.op_col, config.object_col});
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    if (line.find(',') != std::string::npos) {
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) fields.push_back(tok);
    } else {
      std::stringstream ss(line);
      std::string tok;
      while (ss >> tok) fields.push_back(tok);
    }
    if (static_cast<int>(fields.size()) <= max_col)
      throw ParseError("too few columns", line_no);
    if (config.op_col >= 0 &&
        fields[static_cast<size_t>(config.op_col)].find(config.read_token) == std::string::npos)
      continue;
    if (config.object_col >= 0 && !config.object.empty() &&
        fields[static_cast<size_t>(config.object_col)] != config.object)
      continue;
    try {
      times.push_back(std::stod(fields[static_cast<size_t>(config.time_col)]));
    } catch (const std::exception&) {
      throw ParseError("bad timestamp '" + fields[static_cast<size_t>(config.time_col)] + "'",
                       line_no);
    }
  }
  if (times.empty()) throw ParseError("no read requests after filtering", line_no);

  std::sort(times.begin(), times.end());
  double t0 = times.front();
  constexpr double kDelta = 1e-6;
  double prev = -kInf;
  for (double& t : times) {
    t = (t - t0) / config.time_divisor;
    if (t <= prev) t = prev + kDelta;
    prev = t;
  }
  // The dummy request owns time 0; shift real events off it if needed.
  if (times.front() == 0.0)
    for (double& t : times) t += kDelta;

  // Zipf weights P(i) = i^-s / sum_j j^-s, sampled by inverted CDF.
  std::vector<double> cdf(static_cast<size_t>(config.server_count));
  double acc = 0.0;
  for (int i = 1; i <= config.server_count; ++i) {
    acc += std::pow(static_cast<double>(i), -config.zipf_exponent);
    cdf[static_cast<size_t>(i) - 1] = acc;
  }
  std::mt19937_64 rng(config.seed);
  RequestTrace trace;
  trace.n = config.server_count;
  trace.requests.push_back({0, 1, 0.0});
  for (double t : times) {
    double u = detail::canonical(rng) * acc;
    int server = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
    if (server > config.server_count) server = config.server_count;
    trace.requests.push_back({0, server, t});
  }
  return validate_trace(std::move(trace));
}

// ---------------------------------------------------------------------------
// Interactive lower-bound adversary
// ---------------------------------------------------------------------------

enum class AdversaryClass { Seed, K1a, K1b, K1c, K2 };

inline const char* to_string(AdversaryClass c) {
  switch (c) {
    case AdversaryClass::Seed: return "seed";
    case AdversaryClass::K1a: return "K1a";
    case AdversaryClass::K1b: return "K1b";
    case AdversaryClass::K1c: return "K1c";
    case AdversaryClass::K2: return "K2";
  }
  return "?";
}

struct AdversaryResult {
  RequestTrace trace;
  PredictionStream predictions;  // all beyond-lambda, correct on the emitted trace
  ReplicationLog log;
  CostReport report;
  std::vector<AdversaryClass> classes;  // per request id
};

/// Generates requests online against the policy on two servers. After each
/// request it targets the idle server s: if s holds no copy at
/// t' = max(t_prev + eps, t_last(s) + lambda + eps) it requests there at t'
/// (K1a when t' is the lambda-spaced instant, K1b otherwise); if s holds a
/// copy it watches the open window (t', t_prev + lambda) and requests at
/// drop-time + eps (K1c); if s keeps its copy throughout, it requests at the
/// previous server at t_prev + lambda + eps (K2).
inline AdversaryResult run_adversary(Policy& policy, double lambda, double eps, int m) {
  if (!(eps > 0) || !(eps < lambda))
    throw ValidationError(ValidationError::Code::BadParams, "eps must lie in (0, lambda)");
  if (m < 2) throw ValidationError(ValidationError::Code::BadParams, "need m >= 2");
  CostParams params{lambda, {}};
  Session session(2, params, policy, Prediction::BeyondLambda);
  session.inject_request(2, eps, Prediction::BeyondLambda);

  std::vector<double> last_at = {0.0, 0.0, eps};  // 1-based
  AdversaryResult result;
  result.classes = {AdversaryClass::Seed, AdversaryClass::Seed};

  int prev_server = 2;
  double prev_time = eps;
  for (int i = 2; i <= m; ++i) {
    int target = prev_server == 1 ? 2 : 1;
    double lambda_spaced = last_at[static_cast<size_t>(target)] + lambda + eps;
    double t_prime = std::max(prev_time + eps, lambda_spaced);

    // Advance strictly below t': whether the target holds a copy at t' is
    // decided by the state once all earlier expiries have fired.
    while (auto next = session.next_expiry_time()) {
      if (!(*next < t_prime)) break;
      session.step_until(*next);
    }

    AdversaryClass cls;
    int server;
    double when;
    if (!session.holds_copy(target)) {
      cls = lambda_spaced >= prev_time + eps ? AdversaryClass::K1a : AdversaryClass::K1b;
      server = target;
      when = t_prime;
    } else {
      double window_end = prev_time + lambda;
      double drop_time = -1.0;
      while (auto next = session.next_expiry_time()) {
        if (!(*next < window_end)) break;  // a drop at exactly the end counts as kept
        StepObservation obs = session.step_until(*next);
        for (const StepEvent& ev : obs.events) {
          if (ev.kind == StepEvent::Kind::CopyDropped && ev.server == target &&
              ev.time > t_prime && ev.time < window_end) {
            drop_time = ev.time;
            break;
          }
        }
        if (drop_time >= 0 || !session.holds_copy(target)) break;
      }
      if (drop_time >= 0) {
        cls = AdversaryClass::K1c;
        server = target;
        when = drop_time + eps;
      } else {
        cls = AdversaryClass::K2;
        server = prev_server;
        when = prev_time + lambda + eps;
      }
    }
    session.inject_request(server, when, Prediction::BeyondLambda);
    result.classes.push_back(cls);
    last_at[static_cast<size_t>(server)] = when;
    prev_server = server;
    prev_time = when;
  }

  result.trace = session.trace_so_far();
  result.predictions.assign(result.trace.requests.size(), Prediction::BeyondLambda);
  result.log = session.finish();
  result.report = finalize_costs(result.log, result.trace, params);
  return result;
}

}  // namespace replisim
