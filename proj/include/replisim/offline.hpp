#pragma once

// Exact offline-optimal replication cost and strategy.
//
// The dynamic program tracks the set of servers holding copies immediately
// after each request. Between consecutive requests a nonempty kept subset
// accrues storage; at the next request the object is served locally when its
// server kept a copy and by a paid transfer otherwise. Copies are created
// only at requesting servers and dropped only at request instants; a
// brute-force enumeration over the same move set (including decline-to-keep
// branches) serves as an independent oracle on small instances.

#include <bit>
#include <cstdint>
#include <map>
#include <vector>

#include "model.hpp"

namespace replisim {

struct OfflineSolution {
  double cost = 0.0;
  ReplicationLog log;
};

namespace detail {

struct DenseServers {
  std::vector<int> originals;        // dense index -> original server id
  std::vector<int> dense_of_server;  // original server id -> dense index (-1 if absent)
  std::vector<int> request_dense;    // per request, dense server index
};

inline DenseServers compress_servers(const RequestTrace& trace) {
  DenseServers d;
  d.dense_of_server.assign(static_cast<size_t>(trace.n) + 1, -1);
  for (const Request& r : trace.requests) {
    if (d.dense_of_server[static_cast<size_t>(r.server)] < 0) {
      d.dense_of_server[static_cast<size_t>(r.server)] = static_cast<int>(d.originals.size());
      d.originals.push_back(r.server);
    }
  }
  d.request_dense.reserve(trace.requests.size());
  for (const Request& r : trace.requests)
    d.request_dense.push_back(d.dense_of_server[static_cast<size_t>(r.server)]);
  return d;
}

// Superset minimum: h[S] = min over T >= S of g[T], with argmin tracking.
inline void superset_min(std::vector<double>& h, std::vector<uint32_t>& arg, int bits) {
  for (int b = 0; b < bits; ++b) {
    uint32_t bit = 1u << b;
    for (uint32_t s = 0; s < h.size(); ++s) {
      if (s & bit) continue;
      if (h[s | bit] < h[s]) {
        h[s] = h[s | bit];
        arg[s] = arg[s | bit];
      }
    }
  }
}

}  // namespace detail

inline void check_offline_preconditions(const RequestTrace& trace, const CostParams& params) {
  params.validate(trace.n);
  if (!params.unit_rates()) throw UnsupportedRates("the offline optimum requires unit storage rates");
}

/// Exact optimal offline cost. Runs the subset DP without building the
/// strategy log; suitable for experiment grids.
inline double optimal_offline_cost(const RequestTrace& trace, const CostParams& params) {
  check_offline_preconditions(trace, params);
  detail::DenseServers dense = detail::compress_servers(trace);
  int k = static_cast<int>(dense.originals.size());
  if (k > 16) throw TooManyServers("the exact offline optimum handles at most 16 active servers");
  size_t states = 1ull << k;
  std::vector<double> g(states, kInf), h(states);
  std::vector<uint32_t> arg(states);
  g[1u << dense.request_dense[0]] = 0.0;
  for (size_t i = 0; i + 1 < trace.requests.size(); ++i) {
    double delta = trace.requests[i + 1].time - trace.requests[i].time;
    int v = dense.request_dense[i + 1];
    uint32_t vbit = 1u << v;
    h = g;
    for (uint32_t s = 0; s < states; ++s) arg[s] = s;
    detail::superset_min(h, arg, k);
    std::fill(g.begin(), g.end(), kInf);
    for (uint32_t s = 0; s < states; ++s) {
      if (!(s & vbit)) continue;
      double local = h[s] + std::popcount(s) * delta;
      uint32_t without = s & ~vbit;
      double transferred =
          without ? h[without] + std::popcount(without) * delta + params.lambda : kInf;
      g[s] = local <= transferred ? local : transferred;
    }
  }
  double best = kInf;
  for (double c : g) best = std::min(best, c);
  return best;
}

/// Exact optimal offline cost together with a strategy log realizing it.
inline OfflineSolution optimal_offline(const RequestTrace& trace, const CostParams& params) {
  check_offline_preconditions(trace, params);
  detail::DenseServers dense = detail::compress_servers(trace);
  int k = static_cast<int>(dense.originals.size());
  if (k > 16) throw TooManyServers("the exact offline optimum handles at most 16 active servers");
  size_t states = 1ull << k;
  size_t m = trace.requests.size() - 1;

  std::vector<double> g(states, kInf), h(states);
  std::vector<uint32_t> arg(states);
  // parent word per (step, state): predecessor state << 1 | served-locally bit
  std::vector<std::vector<uint32_t>> parent(m, std::vector<uint32_t>(states, 0));
  g[1u << dense.request_dense[0]] = 0.0;
  for (size_t i = 0; i < m; ++i) {
    double delta = trace.requests[i + 1].time - trace.requests[i].time;
    int v = dense.request_dense[i + 1];
    uint32_t vbit = 1u << v;
    h = g;
    for (uint32_t s = 0; s < states; ++s) arg[s] = s;
    detail::superset_min(h, arg, k);
    std::fill(g.begin(), g.end(), kInf);
    for (uint32_t s = 0; s < states; ++s) {
      if (!(s & vbit)) continue;
      double local = h[s] + std::popcount(s) * delta;
      uint32_t without = s & ~vbit;
      double transferred =
          without ? h[without] + std::popcount(without) * delta + params.lambda : kInf;
      if (local <= transferred) {
        g[s] = local;
        parent[i][s] = (arg[s] << 1) | 1u;
      } else {
        g[s] = transferred;
        parent[i][s] = arg[without] << 1;
      }
    }
  }

  uint32_t best_state = 0;
  double best = kInf;
  for (uint32_t s = 0; s < states; ++s) {
    if (g[s] < best) {
      best = g[s];
      best_state = s;
    }
  }

  // Walk back to recover the kept set over every gap.
  std::vector<uint32_t> kept(m), after(m + 1);
  after[m] = best_state;
  for (size_t i = m; i-- > 0;) {
    uint32_t word = parent[i][after[i + 1]];
    bool local = word & 1u;
    uint32_t vbit = 1u << dense.request_dense[i + 1];
    kept[i] = local ? after[i + 1] : (after[i + 1] & ~vbit);
    after[i] = word >> 1;
  }

  OfflineSolution solution;
  solution.cost = best;
  solution.log.horizon = trace.horizon();
  for (size_t i = 0; i < m; ++i) {
    uint32_t vbit = 1u << dense.request_dense[i + 1];
    if (!(kept[i] & vbit)) {
      int src_dense = std::countr_zero(kept[i]);
      solution.log.transfers.push_back({trace.requests[i + 1].time,
                                        dense.originals[static_cast<size_t>(src_dense)],
                                        trace.requests[i + 1].server,
                                        static_cast<int>(i + 1)});
    }
  }
  for (int u = 0; u < k; ++u) {
    uint32_t ubit = 1u << u;
    int run_start = -1;
    for (size_t i = 0; i <= m; ++i) {
      bool held = i < m && (kept[i] & ubit);
      if (held && run_start < 0) run_start = static_cast<int>(i);
      if (!held && run_start >= 0) {
        solution.log.intervals.push_back({dense.originals[static_cast<size_t>(u)],
                                          trace.requests[static_cast<size_t>(run_start)].time,
                                          trace.requests[i].time, CopyKind::Regular});
        run_start = -1;
      }
    }
  }
  if (m == 0)
    solution.log.intervals.push_back({trace.requests[0].server, 0.0, 0.0, CopyKind::Regular});
  return solution;
}

/// Independent oracle: exhaustive enumeration over kept-set chains, including
/// decline-to-keep branches after transfers. Small instances only.
inline OfflineSolution brute_force_optimal(const RequestTrace& trace, const CostParams& params) {
  check_offline_preconditions(trace, params);
  detail::DenseServers dense = detail::compress_servers(trace);
  int k = static_cast<int>(dense.originals.size());
  size_t m = trace.requests.size() - 1;
  if (k > 3 || m > 10)
    throw InstanceTooLarge("brute force handles at most 3 active servers and 10 requests");

  std::map<std::pair<size_t, uint32_t>, double> memo;
  auto best_from = [&](auto&& self, size_t i, uint32_t holding) -> double {
    if (i == m) return 0.0;
    auto it = memo.find({i, holding});
    if (it != memo.end()) return it->second;
    double delta = trace.requests[i + 1].time - trace.requests[i].time;
    uint32_t vbit = 1u << dense.request_dense[i + 1];
    double best = kInf;
    for (uint32_t kept = holding;; kept = (kept - 1) & holding) {
      if (kept != 0) {
        double carry = std::popcount(kept) * delta;
        if (kept & vbit) {
          best = std::min(best, carry + self(self, i + 1, kept));
        } else {
          // keep a copy at the destination, or serve and decline
          best = std::min(best, carry + params.lambda + self(self, i + 1, kept | vbit));
          best = std::min(best, carry + params.lambda + self(self, i + 1, kept));
        }
      }
      if (kept == 0) break;
    }
    memo[{i, holding}] = best;
    return best;
  };

  OfflineSolution solution;
  uint32_t start = 1u << dense.request_dense[0];
  solution.cost = best_from(best_from, 0, start);

  // Re-walk the argmin chain to emit a realizing log.
  solution.log.horizon = trace.horizon();
  std::vector<uint32_t> kept_chain(m);
  uint32_t holding = start;
  for (size_t i = 0; i < m; ++i) {
    double target = best_from(best_from, i, holding);
    double delta = trace.requests[i + 1].time - trace.requests[i].time;
    uint32_t vbit = 1u << dense.request_dense[i + 1];
    bool found = false;
    for (uint32_t kept = holding; !found; kept = (kept - 1) & holding) {
      if (kept != 0) {
        double carry = std::popcount(kept) * delta;
        if (kept & vbit) {
          if (carry + best_from(best_from, i + 1, kept) == target) {
            kept_chain[i] = kept;
            holding = kept;
            found = true;
          }
        } else {
          if (carry + params.lambda + best_from(best_from, i + 1, kept | vbit) == target) {
            kept_chain[i] = kept;
            holding = kept | vbit;
            found = true;
          } else if (carry + params.lambda + best_from(best_from, i + 1, kept) == target) {
            kept_chain[i] = kept;
            holding = kept;
            found = true;
          }
        }
      }
      if (kept == 0) break;
    }
    if (!found) throw Error("brute force failed to reconstruct its own optimum");
    if (!(kept_chain[i] & vbit)) {
      int src_dense = std::countr_zero(kept_chain[i]);
      solution.log.transfers.push_back({trace.requests[i + 1].time,
                                        dense.originals[static_cast<size_t>(src_dense)],
                                        trace.requests[i + 1].server,
                                        static_cast<int>(i + 1)});
    }
  }
  for (int u = 0; u < k; ++u) {
    uint32_t ubit = 1u << u;
    int run_start = -1;
    for (size_t i = 0; i <= m; ++i) {
      bool held = i < m && (kept_chain[i] & ubit);
      if (held && run_start < 0) run_start = static_cast<int>(i);
      if (!held && run_start >= 0) {
        solution.log.intervals.push_back({dense.originals[static_cast<size_t>(u)],
                                          trace.requests[static_cast<size_t>(run_start)].time,
                                          trace.requests[i].time, CopyKind::Regular});
        run_start = -1;
      }
    }
  }
  if (m == 0)
    solution.log.intervals.push_back({trace.requests[0].server, 0.0, 0.0, CopyKind::Regular});
  return solution;
}

/// Closed-form running lower bound on the optimal offline cost: per request,
/// min(same-server gap, lambda), plus the excess of any consecutive-request
/// gap beyond lambda.
inline double optl(const RequestTrace& trace, const CostParams& params) {
  std::vector<double> last(static_cast<size_t>(trace.n) + 1, -1.0);
  last[static_cast<size_t>(trace.requests[0].server)] = 0.0;
  double sum = 0.0;
  for (size_t i = 1; i < trace.requests.size(); ++i) {
    const Request& r = trace.requests[i];
    double& prev_here = last[static_cast<size_t>(r.server)];
    if (prev_here >= 0) {
      double gap = r.time - prev_here;
      sum += gap > params.lambda ? params.lambda : gap;
    }
    double step = r.time - trace.requests[i - 1].time;
    if (step > params.lambda) sum += step - params.lambda;
    prev_here = r.time;
  }
  return sum;
}

}  // namespace replisim
