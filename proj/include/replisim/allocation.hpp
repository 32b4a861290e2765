#pragma once

// Classifies every request of a prediction-driven run as Type-1/2/3/4 and
// attributes the accounted online cost to individual requests:
//   Type-1  served by a transfer from a regular copy   -> l_i + lambda
//   Type-2  served by a transfer from a special copy   -> (t_i - t'_i) + l_i + lambda
//   Type-3  served locally by a regular copy           -> t_i - t_p(i)
//   Type-4  served locally by a special copy           -> t_i - t_p(i)
// where l_i is the intended duration of the regular copy after the preceding
// same-server request and t'_i is the regular-to-special switch instant.
// The regular copies left after each server's final request (except the
// server of the final request overall) are reassigned to the first requests
// at servers other than server 1, pairing both sides by server index.

#include <algorithm>
#include <optional>
#include <vector>

#include "model.hpp"
#include "offline.hpp"

namespace replisim {

enum class RequestType { Type1 = 1, Type2 = 2, Type3 = 3, Type4 = 4 };

struct AllocationEntry {
  int request = 0;
  RequestType type = RequestType::Type3;
  double regular_term = 0.0;
  double special_term = 0.0;
  double transfer_term = 0.0;
  double extra_leftover = 0.0;
  double total = 0.0;
};

struct AllocationTable {
  std::vector<AllocationEntry> entries;  // r_1 .. r_m; the dummy r0 carries no cost

  double total_sum() const {
    double s = 0.0;
    for (const AllocationEntry& e : entries) s += e.total;
    return s;
  }
};

inline AllocationTable classify_and_allocate(const ReplicationLog& log, const RequestTrace& trace,
                                             const PredictionStream& predictions,
                                             const CostParams& params, double alpha) {
  if (predictions.size() != trace.requests.size())
    throw ValidationError(ValidationError::Code::BadPredictions,
                          "need exactly one prediction per request");
  if (!(alpha > 0) || !(alpha <= 1))
    throw ValidationError(ValidationError::Code::BadParams, "alpha must lie in (0, 1]");
  for (const Transfer& t : log.transfers)
    if (t.serves < 0)
      throw StructureMismatch("log contains bare relocations; not a prediction-driven run");

  size_t count = trace.requests.size();
  std::vector<const Transfer*> serving(count, nullptr);
  for (const Transfer& t : log.transfers) {
    if (t.serves >= static_cast<int>(count)) throw StructureMismatch("transfer serves unknown request");
    serving[static_cast<size_t>(t.serves)] = &t;
  }

  // Per-server interval lists, in chronological order as recorded.
  std::vector<std::vector<const CopyInterval*>> by_server(static_cast<size_t>(trace.n) + 1);
  for (const CopyInterval& iv : log.intervals)
    if (iv.kind != CopyKind::InfiniteTail) by_server[static_cast<size_t>(iv.server)].push_back(&iv);

  auto interval_covering = [&](int server, double t) -> const CopyInterval* {
    for (const CopyInterval* iv : by_server[static_cast<size_t>(server)])
      if (iv->start < t && t <= iv->end) return iv;
    return nullptr;
  };
  auto interval_starting = [&](int server, double t) -> const CopyInterval* {
    for (const CopyInterval* iv : by_server[static_cast<size_t>(server)])
      if (iv->start == t && iv->kind == CopyKind::Regular) return iv;
    return nullptr;
  };

  std::vector<std::optional<double>> prev_at(static_cast<size_t>(trace.n) + 1);
  prev_at[static_cast<size_t>(trace.requests[0].server)] = trace.requests[0].time;

  AllocationTable table;
  std::vector<int> first_requests;  // first request id at servers other than server 1
  for (size_t i = 1; i < count; ++i) {
    const Request& r = trace.requests[i];
    std::optional<double> t_p = prev_at[static_cast<size_t>(r.server)];
    AllocationEntry e;
    e.request = static_cast<int>(i);
    if (const Transfer* t = serving[i]) {
      const CopyInterval* src = interval_covering(t->src, r.time);
      if (!src) throw StructureMismatch("no source copy covering a served transfer");
      e.transfer_term = params.lambda;
      if (src->kind == CopyKind::Special) {
        e.type = RequestType::Type2;
        e.special_term = r.time - src->start;
      } else {
        e.type = RequestType::Type1;
      }
      if (t_p) {
        const CopyInterval* reg = interval_starting(r.server, *t_p);
        if (!reg) throw StructureMismatch("missing regular copy after the preceding request");
        e.regular_term = reg->end - reg->start;
      } else {
        first_requests.push_back(e.request);
      }
    } else {
      if (!t_p) throw StructureMismatch("local service at a server with no earlier request");
      const CopyInterval* seg = nullptr;
      for (const CopyInterval* iv : by_server[static_cast<size_t>(r.server)])
        if (iv->end == r.time) seg = iv;
      if (!seg) throw StructureMismatch("no local copy segment ending at a locally served request");
      if (seg->kind == CopyKind::Special) {
        e.type = RequestType::Type4;
        e.special_term = r.time - seg->start;
        const CopyInterval* reg = interval_starting(r.server, *t_p);
        if (!reg) throw StructureMismatch("missing regular copy after the preceding request");
        e.regular_term = reg->end - reg->start;
      } else {
        e.type = RequestType::Type3;
        e.regular_term = r.time - *t_p;
      }
    }
    prev_at[static_cast<size_t>(r.server)] = r.time;
    table.entries.push_back(e);
  }

  // Reassign the leftover regular copies to the first requests, both sides
  // ordered by server index.
  const Request& final_request = trace.requests.back();
  std::vector<std::pair<int, double>> leftovers;  // (server, span)
  for (int s = 1; s <= trace.n; ++s) {
    if (s == final_request.server) continue;
    if (!prev_at[static_cast<size_t>(s)]) continue;
    const CopyInterval* reg = interval_starting(s, *prev_at[static_cast<size_t>(s)]);
    if (!reg) throw StructureMismatch("missing leftover copy after a server's final request");
    leftovers.emplace_back(s, reg->end - reg->start);
  }
  std::sort(first_requests.begin(), first_requests.end(), [&](int a, int b) {
    return trace.requests[static_cast<size_t>(a)].server <
           trace.requests[static_cast<size_t>(b)].server;
  });
  if (leftovers.size() != first_requests.size())
    throw StructureMismatch("leftover copies and first requests do not pair up");
  for (size_t i = 0; i < leftovers.size(); ++i) {
    AllocationEntry& e = table.entries[static_cast<size_t>(first_requests[i]) - 1];
    e.extra_leftover = leftovers[i].second;
  }
  for (AllocationEntry& e : table.entries)
    e.total = e.regular_term + e.special_term + e.transfer_term + e.extra_leftover;
  return table;
}

/// Mispredicted requests grouped by the real inter-request gap:
///   M1: gap <= alpha*lambda, M2: alpha*lambda < gap <= lambda, M3: gap > lambda.
/// A wrong prediction after a server's final request has no successor; it is
/// tallied separately (m3_tail) and enters the penalty bound like an M3 entry
/// because it inflates a leftover copy by up to (1 - alpha) * lambda.
struct MispredictionReport {
  std::vector<int> m1, m2, m3;
  std::vector<int> m3_tail;  // ids of final-at-server requests with a wrong prediction
  double penalty_bound = 0.0;
  double optl_denominator = 0.0;
  double ratio_increase_bound = 0.0;
};

inline MispredictionReport misprediction_report(const RequestTrace& trace,
                                                const PredictionStream& predictions,
                                                const CostParams& params, double alpha) {
  if (predictions.size() != trace.requests.size())
    throw ValidationError(ValidationError::Code::BadPredictions,
                          "need exactly one prediction per request");
  PredictionStream truth = ground_truth_predictions(trace, params);
  std::vector<std::optional<size_t>> prev_at(static_cast<size_t>(trace.n) + 1);
  prev_at[static_cast<size_t>(trace.requests[0].server)] = 0;
  MispredictionReport report;
  std::vector<char> has_successor(trace.requests.size(), 0);
  for (size_t i = 1; i < trace.requests.size(); ++i) {
    const Request& r = trace.requests[i];
    std::optional<size_t> p = prev_at[static_cast<size_t>(r.server)];
    if (p) {
      has_successor[*p] = 1;
      if (predictions[*p] != truth[*p]) {
        double gap = r.time - trace.requests[*p].time;
        if (gap <= alpha * params.lambda)
          report.m1.push_back(static_cast<int>(i));
        else if (gap <= params.lambda)
          report.m2.push_back(static_cast<int>(i));
        else
          report.m3.push_back(static_cast<int>(i));
      }
    }
    prev_at[static_cast<size_t>(r.server)] = i;
  }
  for (size_t i = 0; i < trace.requests.size(); ++i)
    if (!has_successor[i] && predictions[i] != truth[i])
      report.m3_tail.push_back(static_cast<int>(i));
  report.penalty_bound =
      params.lambda * static_cast<double>(report.m2.size()) +
      (2.0 - alpha) * params.lambda *
          static_cast<double>(report.m3.size() + report.m3_tail.size());
  report.optl_denominator = optl(trace, params);
  report.ratio_increase_bound =
      report.optl_denominator > 0
          ? report.penalty_bound / report.optl_denominator
          : (report.penalty_bound > 0 ? kInf : 0.0);
  return report;
}

}  // namespace replisim
