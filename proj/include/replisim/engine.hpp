#pragma once

// Deterministic event-driven simulation kernel. A Session feeds requests and
// copy-expiry events to a policy, records every copy interval and transfer,
// and supports interactive stepping so an adversary can watch the policy.
//
// Event ordering: at equal timestamps a request is processed before expiry
// events (a request at exactly E_j is served locally), and expiry events tie-
// break by ascending server index. inject_request fires expiries strictly
// before the request time; step_until fires expiries up to and including the
// target time.

#include <cassert>
#include <optional>
#include <utility>
#include <vector>

#include "model.hpp"

namespace replisim {

class Session;

struct ServeDecision {
  enum class Mode { Local, ByTransfer };
  Mode mode = Mode::Local;
  int src = -1;
  double new_intended_expiry = 0.0;

  static ServeDecision local(double expiry) { return {Mode::Local, -1, expiry}; }
  static ServeDecision by_transfer(int src, double expiry) {
    return {Mode::ByTransfer, src, expiry};
  }
};

struct ExpiryDecision {
  enum class Action { Drop, KeepAsSpecial, Renew, RelocateAndDrop };
  Action action = Action::Drop;
  double new_expiry = 0.0;
  int relocate_dst = -1;
  double relocate_expiry = 0.0;

  static ExpiryDecision drop() { return {Action::Drop, 0, -1, 0}; }
  static ExpiryDecision keep_as_special() { return {Action::KeepAsSpecial, 0, -1, 0}; }
  static ExpiryDecision renew(double expiry) { return {Action::Renew, expiry, -1, 0}; }
  static ExpiryDecision relocate_and_drop(int dst, double dst_expiry) {
    return {Action::RelocateAndDrop, 0, dst, dst_expiry};
  }
};

struct PostTransferDecision {
  bool drop_copy = false;
};

struct ServeOutcome {
  bool local = true;
  int src = -1;  // source server when served by transfer
};

struct StepEvent {
  enum class Kind { CopyDropped, TagSet };
  Kind kind;
  int server;
  double time;
};

struct StepObservation {
  std::vector<StepEvent> events;
  bool empty() const { return events.empty(); }
};

/// Replication policy callbacks. A policy may inspect only the current
/// holding state through the session it is handed; one instance drives one
/// session at a time and is reset when a session starts.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(int server_count, const CostParams& params) {
    (void)server_count;
    (void)params;
  }
  virtual ServeDecision on_request(const Request& request, Prediction prediction,
                                   const Session& view) = 0;
  virtual ExpiryDecision on_copy_expiry(int server, double time, const Session& view) = 0;
  virtual PostTransferDecision on_outgoing_transfer(int server, double time,
                                                    const Session& view) = 0;
  virtual bool needs_unit_rates() const { return true; }
};

class Session {
 public:
  Session(int server_count, CostParams params, Policy& policy, Prediction dummy_prediction)
      : params_(std::move(params)), policy_(&policy), slots_(static_cast<size_t>(server_count) + 1) {
    if (server_count < 1)
      throw ValidationError(ValidationError::Code::BadParams, "need at least one server");
    params_.validate(server_count);
    if (policy_->needs_unit_rates() && !params_.unit_rates())
      throw UnsupportedRates("policy requires unit storage rates");
    policy_->reset(server_count, params_);
    // The initial copy lives at server 1 and is picked up by the dummy request,
    // which sets its first intended expiry.
    slots_[1].holds = true;
    slots_[1].open_start = 0.0;
    slots_[1].expiry = kInf;
    copy_count_ = 1;
    process_request(1, 0.0, dummy_prediction, nullptr);
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ServeOutcome inject_request(int server, double time, Prediction prediction) {
    require_active();
    if (!(time > clock_) || !(time > last_request_time()))
      throw TimeRegression("request time must exceed the current clock");
    return process_request(server, time, prediction, nullptr);
  }

  StepObservation step_until(double time) {
    require_active();
    if (time < clock_) throw TimeRegression("cannot step backwards");
    StepObservation obs;
    fire_expiries(time, /*inclusive=*/true, &obs);
    clock_ = std::max(clock_, time);
    return obs;
  }

  std::optional<double> next_expiry_time() const {
    std::optional<double> best;
    for (int j = 1; j <= server_count(); ++j) {
      const Slot& s = slots_[static_cast<size_t>(j)];
      if (s.holds && !s.tag && (!best || s.expiry < *best)) best = s.expiry;
    }
    return best;
  }

  int server_count() const { return static_cast<int>(slots_.size()) - 1; }
  double clock() const { return clock_; }
  double last_request_time() const { return seen_.empty() ? -1.0 : seen_.back().time; }
  const CostParams& params() const { return params_; }
  int copy_count() const { return copy_count_; }
  bool holds_copy(int server) const { return slot(server).holds; }
  double intended_expiry(int server) const { return slot(server).expiry; }
  bool keep_tag(int server) const { return slot(server).tag; }

  RequestTrace trace_so_far() const {
    RequestTrace t;
    t.n = server_count();
    t.requests = seen_;
    return t;
  }

  /// Closes the log right after the most recent request: every live copy ends
  /// at its intended expiry and the latest-expiring one continues as the
  /// infinite tail.
  ReplicationLog finish() {
    require_active();
    finished_ = true;
    const double t_m = last_request_time();
    int tail_server = -1;
    double tail_start = -kInf;
    for (int j = 1; j <= server_count(); ++j) {
      Slot& s = slots_[static_cast<size_t>(j)];
      if (!s.holds) continue;
      if (s.tag) {
        // Only reachable when the caller stepped past the final request; the
        // special copy is the tail itself.
        if (s.open_start > tail_start) {
          tail_server = j;
          tail_start = s.open_start;
        }
        continue;
      }
      double end = std::max(s.expiry, t_m);
      intervals_.push_back({j, s.open_start, end, CopyKind::Regular});
      if (end > tail_start) {
        tail_server = j;
        tail_start = end;
      }
    }
    if (tail_server > 0) intervals_.push_back({tail_server, tail_start, kInf, CopyKind::InfiniteTail});
    ReplicationLog log;
    log.intervals = std::move(intervals_);
    log.transfers = std::move(transfers_);
    log.horizon = t_m;
    return log;
  }

 private:
  struct Slot {
    bool holds = false;
    bool tag = false;          // kept beyond the intended expiry (special copy)
    double expiry = -kInf;     // intended expiry E_j
    double open_start = 0.0;   // start of the currently open interval
  };

  const Slot& slot(int server) const {
    if (server < 1 || server > server_count())
      throw ValidationError(ValidationError::Code::ServerOutOfRange, "server index out of range");
    return slots_[static_cast<size_t>(server)];
  }

  void require_active() const {
    if (finished_) throw Error("session already finished");
  }

  ServeOutcome process_request(int server, double time, Prediction prediction,
                               StepObservation* obs) {
    if (server < 1 || server > server_count())
      throw ValidationError(ValidationError::Code::ServerOutOfRange, "server index out of range");
    fire_expiries(time, /*inclusive=*/false, obs);
    Request request{static_cast<int>(seen_.size()), server, time};
    ServeDecision decision = policy_->on_request(request, prediction, *this);
    if (!(decision.new_intended_expiry >= time) || !std::isfinite(decision.new_intended_expiry))
      throw PolicyViolation("intended expiry must be a finite time at or after the request");

    ServeOutcome outcome;
    Slot& dst = slots_[static_cast<size_t>(server)];
    if (decision.mode == ServeDecision::Mode::Local) {
      if (!dst.holds) throw PolicyViolation("local service without a local copy");
      outcome = {true, -1};
      close_interval(server, time);
      dst.open_start = time;
    } else {
      int src = decision.src;
      if (src < 1 || src > server_count() || src == server)
        throw PolicyViolation("bad transfer source");
      if (!slots_[static_cast<size_t>(src)].holds)
        throw PolicyViolation("transfer from a server without a copy");
      if (dst.holds) throw PolicyViolation("transfer to a server that already holds a copy");
      outcome = {false, src};
      transfers_.push_back({time, src, server, request.id});
      dst.holds = true;
      dst.open_start = time;
      ++copy_count_;
    }
    dst.expiry = decision.new_intended_expiry;
    dst.tag = false;
    seen_.push_back(request);
    clock_ = time;

    if (!outcome.local) {
      PostTransferDecision pd = policy_->on_outgoing_transfer(outcome.src, time, *this);
      if (pd.drop_copy) drop_copy(outcome.src, time, obs);
    }
    assert(copy_count_ >= 1);
    return outcome;
  }

  void fire_expiries(double until, bool inclusive, StepObservation* obs) {
    for (;;) {
      int best = -1;
      double best_time = kInf;
      for (int j = 1; j <= server_count(); ++j) {
        const Slot& s = slots_[static_cast<size_t>(j)];
        if (!s.holds || s.tag) continue;
        if (inclusive ? s.expiry <= until : s.expiry < until) {
          if (s.expiry < best_time) {
            best = j;
            best_time = s.expiry;
          }
        }
      }
      if (best < 0) return;
      fire_one(best, best_time, obs);
    }
  }

  void fire_one(int server, double time, StepObservation* obs) {
    clock_ = std::max(clock_, time);
    Slot& s = slots_[static_cast<size_t>(server)];
    ExpiryDecision d = policy_->on_copy_expiry(server, time, *this);
    switch (d.action) {
      case ExpiryDecision::Action::Drop:
        drop_copy(server, time, obs);
        break;
      case ExpiryDecision::Action::KeepAsSpecial:
        if (copy_count_ != 1)
          throw PolicyViolation("only the sole copy in the system may be kept as special");
        close_interval(server, time);
        s.open_start = time;
        s.tag = true;
        if (obs) obs->events.push_back({StepEvent::Kind::TagSet, server, time});
        break;
      case ExpiryDecision::Action::Renew:
        if (!(d.new_expiry > time)) throw PolicyViolation("renewal must extend the expiry");
        s.expiry = d.new_expiry;
        break;
      case ExpiryDecision::Action::RelocateAndDrop: {
        int dst = d.relocate_dst;
        if (copy_count_ != 1) throw PolicyViolation("relocation is only legal for the sole copy");
        if (dst < 1 || dst > server_count() || dst == server)
          throw PolicyViolation("bad relocation destination");
        if (!(d.relocate_expiry >= time)) throw PolicyViolation("bad relocation expiry");
        transfers_.push_back({time, server, dst, -1});
        close_interval(server, time);
        s.holds = false;
        s.tag = false;
        Slot& t = slots_[static_cast<size_t>(dst)];
        t.holds = true;
        t.tag = false;
        t.open_start = time;
        t.expiry = d.relocate_expiry;
        if (obs) obs->events.push_back({StepEvent::Kind::CopyDropped, server, time});
        break;
      }
    }
  }

  void drop_copy(int server, double time, StepObservation* obs) {
    if (copy_count_ <= 1) throw PolicyViolation("dropping the last copy in the system");
    close_interval(server, time);
    Slot& s = slots_[static_cast<size_t>(server)];
    s.holds = false;
    s.tag = false;
    --copy_count_;
    if (obs) obs->events.push_back({StepEvent::Kind::CopyDropped, server, time});
  }

  // Closes the currently open interval at `server` ending at `time`.
  void close_interval(int server, double time) {
    Slot& s = slots_[static_cast<size_t>(server)];
    if (time == s.open_start) return;  // zero-length segment, nothing to record
    intervals_.push_back(
        {server, s.open_start, time, s.tag ? CopyKind::Special : CopyKind::Regular});
  }

  CostParams params_;
  Policy* policy_;
  std::vector<Slot> slots_;  // 1-based
  int copy_count_ = 0;
  double clock_ = -1.0;
  bool finished_ = false;
  std::vector<Request> seen_;
  std::vector<CopyInterval> intervals_;
  std::vector<Transfer> transfers_;
};

/// Accounted cost of a finished run: the regular copy created at the final
/// request's server after the final request is excluded, the infinite tail is
/// excluded, and every other interval is charged at its recorded span.
inline CostReport finalize_costs(const ReplicationLog& log, const RequestTrace& trace,
                                 const CostParams& params) {
  CostReport report;
  const Request& last = trace.requests.back();
  bool final_regular_seen = false;
  for (const CopyInterval& iv : log.intervals) {
    if (iv.kind == CopyKind::InfiniteTail) {
      report.excluded_infinite_tail = true;
      continue;
    }
    double cost = params.rate(iv.server) * (iv.end - iv.start);
    if (!final_regular_seen && iv.kind == CopyKind::Regular && iv.server == last.server &&
        iv.start == last.time) {
      report.excluded_final_regular = cost;
      final_regular_seen = true;
      continue;
    }
    report.storage_cost += cost;
  }
  report.transfer_cost = params.lambda * static_cast<double>(log.transfers.size());
  report.total = report.storage_cost + report.transfer_cost;
  return report;
}

/// Batch simulation of a validated trace under the given policy.
inline std::pair<ReplicationLog, CostReport> run(const RequestTrace& trace,
                                                 const PredictionStream& predictions,
                                                 Policy& policy, const CostParams& params) {
  RequestTrace validated = validate_trace(trace);
  if (predictions.size() != validated.requests.size())
    throw ValidationError(ValidationError::Code::BadPredictions,
                          "need exactly one prediction per request");
  Session session(validated.n, params, policy, predictions.front());
  for (size_t i = 1; i < validated.requests.size(); ++i) {
    const Request& r = validated.requests[i];
    session.inject_request(r.server, r.time, predictions[i]);
  }
  ReplicationLog log = session.finish();
  CostReport report = finalize_costs(log, validated, params);
  return {std::move(log), report};
}

}  // namespace replisim
