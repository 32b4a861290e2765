#pragma once

// Shared helpers for the test suites: seeded random traces with gap scales
// mixed around lambda, and structural checks on replication logs.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "replisim/model.hpp"

namespace testsupport {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

/// Random trace whose inter-arrival gaps straddle lambda: short gaps that a
/// copy should cover, medium gaps near the rent/buy boundary, and long gaps.
inline replisim::RequestTrace make_random_trace(int n, int m, double lambda, uint64_t seed) {
  std::mt19937_64 rng(seed);
  replisim::RequestTrace trace;
  trace.n = n;
  trace.requests.push_back({0, 1, 0.0});
  double t = 0.0;
  for (int i = 1; i <= m; ++i) {
    double pick = uniform(rng, 0.0, 1.0);
    double gap;
    if (pick < 0.4)
      gap = uniform(rng, 0.02, 0.3) * lambda;
    else if (pick < 0.8)
      gap = uniform(rng, 0.3, 1.3) * lambda;
    else
      gap = uniform(rng, 1.3, 4.0) * lambda;
    t += gap;
    int server = 1 + static_cast<int>(rng() % static_cast<uint64_t>(n));
    trace.requests.push_back({i, server, t});
  }
  return replisim::validate_trace(std::move(trace));
}

/// Every instant in [0, horizon] is covered by at least one interval.
inline bool covers_horizon(const replisim::ReplicationLog& log) {
  std::vector<double> points;
  points.push_back(0.0);
  points.push_back(log.horizon);
  for (const auto& iv : log.intervals) {
    if (iv.start <= log.horizon) points.push_back(iv.start);
    if (iv.end <= log.horizon) points.push_back(iv.end);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  auto covered = [&](double t) {
    for (const auto& iv : log.intervals)
      if (iv.start <= t && t <= iv.end) return true;
    return false;
  };
  for (size_t i = 0; i < points.size(); ++i) {
    if (!covered(points[i])) return false;
    if (i + 1 < points.size() && !covered((points[i] + points[i + 1]) / 2)) return false;
  }
  return true;
}

/// Special intervals are pairwise disjoint and disjoint from regular ones.
inline bool specials_disjoint(const replisim::ReplicationLog& log) {
  using replisim::CopyKind;
  for (size_t i = 0; i < log.intervals.size(); ++i) {
    const auto& a = log.intervals[i];
    if (a.kind != CopyKind::Special) continue;
    for (size_t j = 0; j < log.intervals.size(); ++j) {
      if (i == j) continue;
      const auto& b = log.intervals[j];
      if (b.kind == CopyKind::InfiniteTail) continue;
      if (std::max(a.start, b.start) < std::min(a.end, b.end)) return false;
    }
  }
  return true;
}

inline bool log_well_formed(const replisim::ReplicationLog& log) {
  return covers_horizon(log) && specials_disjoint(log);
}

}  // namespace testsupport
