#pragma once

// Concrete replication policies: the prediction-driven policy with distrust
// parameter alpha, the conventional policy that ignores predictions, the
// adaptive variant that bounds its robustness by monitoring a running
// online-to-optimal ratio, and the Wang et al. baseline with per-server
// storage rates.

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "engine.hpp"
#include "model.hpp"

namespace replisim {

/// Lowest-index untagged holder if any, otherwise the unique special holder.
/// Cost-neutral under a uniform transfer cost; fixed for determinism.
inline int pick_transfer_source(const Session& view, int dst) {
  int tagged = -1;
  for (int j = 1; j <= view.server_count(); ++j) {
    if (j == dst || !view.holds_copy(j)) continue;
    if (!view.keep_tag(j)) return j;
    tagged = j;
  }
  if (tagged < 0) throw PolicyViolation("no transfer source available");
  return tagged;
}

struct PredictivePolicyConfig {
  double alpha = 1.0;  // in (0, 1]
};

namespace detail {

// Shared mechanics of the prediction-driven policy family: only the choice of
// the next intended duration differs between members.
class IntendedDurationPolicy : public Policy {
 public:
  ServeDecision on_request(const Request& request, Prediction prediction,
                           const Session& view) final {
    double duration = intended_duration(request, prediction, view);
    double expiry = request.time + duration;
    if (view.holds_copy(request.server)) return ServeDecision::local(expiry);
    return ServeDecision::by_transfer(pick_transfer_source(view, request.server), expiry);
  }
  ExpiryDecision on_copy_expiry(int, double, const Session& view) final {
    return view.copy_count() == 1 ? ExpiryDecision::keep_as_special() : ExpiryDecision::drop();
  }
  PostTransferDecision on_outgoing_transfer(int server, double, const Session& view) final {
    return {view.keep_tag(server)};
  }

 protected:
  virtual double intended_duration(const Request& request, Prediction prediction,
                                   const Session& view) = 0;
};

}  // namespace detail

class PredictivePolicy : public detail::IntendedDurationPolicy {
 public:
  explicit PredictivePolicy(PredictivePolicyConfig config) : alpha_(config.alpha) {
    if (!(alpha_ > 0) || !(alpha_ <= 1))
      throw ValidationError(ValidationError::Code::BadParams, "alpha must lie in (0, 1]");
  }
  double alpha() const { return alpha_; }

 protected:
  double intended_duration(const Request&, Prediction prediction, const Session& view) override {
    double lambda = view.params().lambda;
    return prediction == Prediction::WithinLambda ? lambda : alpha_ * lambda;
  }

 private:
  double alpha_;
};

/// Intended duration lambda after every request, irrespective of predictions.
class ConventionalPolicy : public detail::IntendedDurationPolicy {
 protected:
  double intended_duration(const Request&, Prediction, const Session& view) override {
    return view.params().lambda;
  }
};

struct AdaptivePolicyConfig {
  double alpha = 1.0;
  double beta = 0.0;         // target robustness is 2 + beta
  int warmup_requests = 100;  // ids 1..warmup_requests act purely predictively
};

/// Running lower bound on the optimal cost (optl) and conservative upper
/// bound on the online cost (allocated costs plus 2*lambda per touched
/// server).
struct AdaptiveMonitor {
  double optl = 0.0;
  double onlineu_allocated = 0.0;
  int servers_touched = 0;

  double onlineu(double lambda) const {
    return onlineu_allocated + 2.0 * lambda * servers_touched;
  }
};

/// Adds request r_i's contribution to the optimal-cost lower bound:
/// min(gap, lambda) for the same-server gap when a predecessor exists, plus
/// the bridging excess of the consecutive-request gap beyond lambda.
inline void update_optl(AdaptiveMonitor& monitor, double t_i, std::optional<double> t_p,
                        double t_prev, double lambda) {
  if (t_p) {
    double gap = t_i - *t_p;
    monitor.optl += gap > lambda ? lambda : gap;
  }
  double step = t_i - t_prev;
  if (step > lambda) monitor.optl += step - lambda;
}

class AdaptivePolicy : public detail::IntendedDurationPolicy {
 public:
  explicit AdaptivePolicy(AdaptivePolicyConfig config) : config_(config) {
    if (!(config_.alpha > 0) || !(config_.alpha <= 1))
      throw ValidationError(ValidationError::Code::BadParams, "alpha must lie in (0, 1]");
    if (!(config_.beta >= 0))
      throw ValidationError(ValidationError::Code::BadParams, "beta must be non-negative");
    if (config_.warmup_requests < 0)
      throw ValidationError(ValidationError::Code::BadParams, "warmup must be non-negative");
  }

  void reset(int server_count, const CostParams&) override {
    monitor_ = AdaptiveMonitor{};
    last_time_.assign(static_cast<size_t>(server_count) + 1, std::nullopt);
    last_duration_.assign(static_cast<size_t>(server_count) + 1, 0.0);
    prev_request_time_ = 0.0;
  }

  const AdaptiveMonitor& monitor() const { return monitor_; }

 protected:
  double intended_duration(const Request& request, Prediction prediction,
                           const Session& view) override {
    double lambda = view.params().lambda;
    size_t s = static_cast<size_t>(request.server);
    std::optional<double> t_p = last_time_[s];
    if (request.id > 0) {
      update_optl(monitor_, request.time, t_p, prev_request_time_, lambda);
      monitor_.onlineu_allocated += allocated_cost(request, t_p, view, lambda);
    }
    if (!t_p) ++monitor_.servers_touched;

    double predicted =
        prediction == Prediction::WithinLambda ? lambda : config_.alpha * lambda;
    double duration = predicted;
    if (request.id > config_.warmup_requests && monitor_.optl > 0 &&
        monitor_.onlineu(lambda) / monitor_.optl > 2.0 + config_.beta) {
      duration = lambda;  // fall back to the conventional setting
    }
    last_time_[s] = request.time;
    last_duration_[s] = duration;
    prev_request_time_ = request.time;
    return duration;
  }

 private:
  // Cost allocated to the arriving request: local service charges the
  // same-server gap; a transfer charges lambda, the span of the serving
  // special copy, and the intended duration of the expired local copy.
  double allocated_cost(const Request& request, std::optional<double> t_p, const Session& view,
                        double lambda) const {
    if (view.holds_copy(request.server)) return request.time - *t_p;
    double cost = lambda;
    int src = pick_transfer_source(view, request.server);
    if (view.keep_tag(src)) cost += request.time - view.intended_expiry(src);
    if (t_p) cost += last_duration_[static_cast<size_t>(request.server)];
    return cost;
  }

  AdaptivePolicyConfig config_;
  AdaptiveMonitor monitor_;
  std::vector<std::optional<double>> last_time_;
  std::vector<double> last_duration_;
  double prev_request_time_ = 0.0;
};

/// Wang et al.'s baseline. Each server holds the copy for lambda/mu after a
/// local request; server 1 renews the sole copy indefinitely; any other
/// server renews the sole copy once and then relocates it to server 1.
class WangPolicy : public Policy {
 public:
  bool needs_unit_rates() const override { return false; }

  void reset(int server_count, const CostParams& params) override {
    for (size_t i = 1; i < params.storage_rates.size(); ++i)
      if (params.storage_rates[i] < params.storage_rates[i - 1])
        throw ValidationError(ValidationError::Code::BadParams,
                              "storage rates must be ascending by server index");
    last_local_.assign(static_cast<size_t>(server_count) + 1, 0.0);
    renewed_once_.assign(static_cast<size_t>(server_count) + 1, 0);
  }

  ServeDecision on_request(const Request& request, Prediction, const Session& view) override {
    size_t s = static_cast<size_t>(request.server);
    last_local_[s] = request.time;
    renewed_once_[s] = 0;
    double expiry = request.time + hold_span(request.server, view);
    if (view.holds_copy(request.server)) return ServeDecision::local(expiry);
    return ServeDecision::by_transfer(pick_transfer_source(view, request.server), expiry);
  }

  ExpiryDecision on_copy_expiry(int server, double time, const Session& view) override {
    if (view.copy_count() > 1) return ExpiryDecision::drop();
    if (server == 1) return ExpiryDecision::renew(time + hold_span(1, view));
    if (!renewed_once_[static_cast<size_t>(server)]) {
      renewed_once_[static_cast<size_t>(server)] = 1;
      return ExpiryDecision::renew(time + hold_span(server, view));
    }
    // Held for two full spans without a local request: hand the object back.
    return ExpiryDecision::relocate_and_drop(1, time + hold_span(1, view));
  }

  PostTransferDecision on_outgoing_transfer(int, double, const Session&) override {
    return {false};
  }

 private:
  double hold_span(int server, const Session& view) const {
    return view.params().lambda / view.params().rate(server);
  }

  std::vector<double> last_local_;
  std::vector<char> renewed_once_;
};

inline std::unique_ptr<Policy> predictive_policy(PredictivePolicyConfig config) {
  return std::make_unique<PredictivePolicy>(config);
}
inline std::unique_ptr<Policy> conventional_policy() {
  return std::make_unique<ConventionalPolicy>();
}
inline std::unique_ptr<Policy> adaptive_policy(AdaptivePolicyConfig config) {
  return std::make_unique<AdaptivePolicy>(config);
}
inline std::unique_ptr<Policy> wang_policy() { return std::make_unique<WangPolicy>(); }

}  // namespace replisim
