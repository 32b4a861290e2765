#pragma once

// Core domain types shared by the simulator: request traces, binary
// inter-request-time predictions, copy intervals, transfers and cost reports.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace replisim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  enum class Code {
    NonMonotoneTimes,
    BadDummy,
    ServerOutOfRange,
    BadPredictions,
    BadParams,
  };
  ValidationError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class PolicyViolation : public Error {
 public:
  using Error::Error;
};
class TimeRegression : public Error {
 public:
  using Error::Error;
};
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};
class TooManyServers : public Error {
 public:
  using Error::Error;
};
class UnsupportedRates : public Error {
 public:
  using Error::Error;
};
class StructureMismatch : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Binary forecast about the next request at the same server: does it arise
/// within lambda time units of the current one, or beyond?
enum class Prediction { WithinLambda, BeyondLambda };

inline Prediction negate(Prediction p) {
  return p == Prediction::WithinLambda ? Prediction::BeyondLambda : Prediction::WithinLambda;
}

/// Cost model: uniform transfer cost lambda plus per-server storage rates.
/// An empty rate vector means rate 1 for every server.
struct CostParams {
  double lambda = 1.0;
  std::vector<double> storage_rates;

  double rate(int server) const {
    return storage_rates.empty() ? 1.0 : storage_rates.at(static_cast<size_t>(server) - 1);
  }
  bool unit_rates() const {
    return std::all_of(storage_rates.begin(), storage_rates.end(),
                       [](double r) { return r == 1.0; });
  }
  void validate(int server_count) const {
    if (!(lambda > 0) || !std::isfinite(lambda))
      throw ValidationError(ValidationError::Code::BadParams, "lambda must be positive and finite");
    if (!storage_rates.empty() && storage_rates.size() != static_cast<size_t>(server_count))
      throw ValidationError(ValidationError::Code::BadParams,
                            "storage_rates must be empty or have one entry per server");
    for (double r : storage_rates)
      if (!(r > 0) || !std::isfinite(r))
        throw ValidationError(ValidationError::Code::BadParams, "storage rates must be positive");
  }
};

struct Request {
  int id = 0;
  int server = 1;     // 1-based
  double time = 0.0;  // seconds
};

/// Ordered request sequence including the dummy request r0 at (server 1, time 0).
struct RequestTrace {
  int n = 1;
  std::vector<Request> requests;

  int last_id() const { return static_cast<int>(requests.size()) - 1; }
  double horizon() const { return requests.back().time; }
};

/// Checks the trace invariants and returns the trace with ids normalized to
/// sequence positions.
inline RequestTrace validate_trace(RequestTrace trace) {
  if (trace.n < 1)
    throw ValidationError(ValidationError::Code::BadParams, "server count must be at least 1");
  if (trace.requests.empty())
    throw ValidationError(ValidationError::Code::BadDummy, "trace must contain the dummy request r0");
  const Request& r0 = trace.requests.front();
  if (r0.server != 1 || r0.time != 0.0)
    throw ValidationError(ValidationError::Code::BadDummy,
                          "r0 must arise at server 1 at time 0");
  double prev = -1.0;
  for (size_t i = 0; i < trace.requests.size(); ++i) {
    Request& r = trace.requests[i];
    r.id = static_cast<int>(i);
    if (!std::isfinite(r.time) || r.time < 0)
      throw ValidationError(ValidationError::Code::NonMonotoneTimes,
                            "request times must be finite and non-negative");
    if (i > 0 && !(r.time > prev))
      throw ValidationError(ValidationError::Code::NonMonotoneTimes,
                            "request times must be strictly increasing (request " +
                                std::to_string(i) + ")");
    prev = r.time;
    if (r.server < 1 || r.server > trace.n)
      throw ValidationError(ValidationError::Code::ServerOutOfRange,
                            "request " + std::to_string(i) + " at server " +
                                std::to_string(r.server) + " out of range [1," +
                                std::to_string(trace.n) + "]");
  }
  return trace;
}

using PredictionStream = std::vector<Prediction>;

/// Ground truth for each request: WithinLambda iff the next request at the
/// same server arises no later than t_i + lambda. A request with no
/// same-server successor has ground truth BeyondLambda.
inline PredictionStream ground_truth_predictions(const RequestTrace& trace,
                                                 const CostParams& params) {
  PredictionStream out(trace.requests.size(), Prediction::BeyondLambda);
  std::vector<double> next_time(static_cast<size_t>(trace.n) + 1, kInf);
  for (size_t i = trace.requests.size(); i-- > 0;) {
    const Request& r = trace.requests[i];
    if (next_time[static_cast<size_t>(r.server)] <= r.time + params.lambda)
      out[i] = Prediction::WithinLambda;
    next_time[static_cast<size_t>(r.server)] = r.time;
  }
  return out;
}

enum class CopyKind { Regular, Special, InfiniteTail };

struct CopyInterval {
  int server = 0;
  double start = 0.0;
  double end = 0.0;  // kInf for the infinite tail
  CopyKind kind = CopyKind::Regular;

  bool operator==(const CopyInterval&) const = default;
};

/// A transfer between servers. serves < 0 marks a relocation that does not
/// serve any request (the Wang baseline moves the object this way).
struct Transfer {
  double time = 0.0;
  int src = 0;
  int dst = 0;
  int serves = -1;

  bool operator==(const Transfer&) const = default;
};

struct ReplicationLog {
  std::vector<CopyInterval> intervals;
  std::vector<Transfer> transfers;
  double horizon = 0.0;

  bool operator==(const ReplicationLog&) const = default;
};

/// Accounted storage + transfer cost with the end-of-sequence exclusions
/// itemized: the copy created at the final request's server is excluded, and
/// the infinite tail kept beyond the latest intended expiry is excluded.
struct CostReport {
  double storage_cost = 0.0;
  double transfer_cost = 0.0;
  double total = 0.0;
  double excluded_final_regular = 0.0;
  bool excluded_infinite_tail = false;
};

}  // namespace replisim
