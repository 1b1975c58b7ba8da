#pragma once

#include <cstdint>
#include <vector>

#include "p2psched/scheduler.hpp"

namespace p2psched {

// Constants of the deterministic backlog guarantees. data_queue_cap[k] is
// utility_weight * nu_k + receive_cap_k; norm_cap bounds the Euclidean norm
// of the combined queue vector as offset + slope * utility_weight.
struct BoundConstants {
  double drift_bound = 0.0;   // one-slot drift constant
  double utility_span = 0.0;  // sum over users of utility(cap) - utility(0)
  double offset = 0.0;
  double slope = 0.0;
  double service_gain = 0.0;  // weight gap a queue-blind schedule can leave
  double utility_weight = 0.0;
  std::vector<double> data_queue_cap;
  double norm_cap = 0.0;
};

// One-slot drift constant: half the sum over users of
//   max(alpha * receive_cap, beta + upload_cap)^2 + receive_cap^2.
// upload_cap[k] bounds the packets user k can send to peers in a slot.
double drift_bound(const std::vector<UserConfig>& users,
                   const std::vector<int>& upload_cap);

// Requires every utility to have bounded slope and every beta positive;
// throws ConfigError otherwise (the guarantees do not apply).
BoundConstants bound_constants(const std::vector<UserConfig>& users,
                               double drift_bound_value, double utility_weight);

double lyapunov(const VirtualQueues& q);    // half the squared queue norm
double theta_norm(const VirtualQueues& q);  // Euclidean norm of both queues

// Running statistics appended once per slot (kept only with keep_series).
struct SlotAggregate {
  double mean_ap_throughput;   // running mean per user, AP-sourced packets
  double mean_p2p_throughput;  // running mean per user, peer-sourced packets
  double mean_data_queue;      // this slot, averaged over users
  double max_data_queue;       // this slot
  double max_reputation;       // this slot
  double utility_of_running_avg;
};

// Per-run statistics sink. Always tracks per-user sums and peaks; with
// keep_series it also stores the full per-slot delivery and quota series so
// window residuals can be scanned afterwards.
class TraceAccumulator {
 public:
  TraceAccumulator(std::vector<UserConfig> users, bool keep_series);

  void record(const SlotDecision& d, const VirtualQueues& q);

  int num_users() const { return static_cast<int>(users_.size()); }
  int64_t slots() const { return slots_; }
  bool has_series() const { return keep_series_; }
  const std::vector<UserConfig>& users() const { return users_; }

  int received_at(int64_t slot, int user) const;
  int uploaded_at(int64_t slot, int user) const;
  double quota_at(int64_t slot, int user) const;
  const std::vector<SlotAggregate>& aggregates() const { return aggregates_; }

  double mean_received(int user) const;
  double mean_uploaded(int user) const;
  double mean_quota(int user) const;
  double peak_data_queue(int user) const { return data_peak_[user]; }
  double peak_reputation(int user) const { return reputation_peak_[user]; }
  double peak_norm() const { return norm_peak_; }
  double max_data_queue() const;   // over users
  double max_reputation() const;   // over users
  int64_t ap_packets() const { return ap_packets_; }
  int64_t p2p_packets() const { return p2p_packets_; }

  double total_throughput() const;  // network packets per slot
  double total_utility() const;     // sum of utility(mean rate)
  double avg_mean_data_queue() const;

 private:
  std::vector<UserConfig> users_;
  bool keep_series_;
  int64_t slots_ = 0;
  std::vector<int64_t> received_sum_, uploaded_sum_;
  std::vector<double> quota_sum_;
  std::vector<double> data_peak_, reputation_peak_;
  double norm_peak_ = 0.0;
  double mean_data_queue_sum_ = 0.0;
  int64_t ap_packets_ = 0, p2p_packets_ = 0;
  std::vector<uint16_t> received_series_, uploaded_series_;  // slot-major
  std::vector<double> quota_series_;
  std::vector<SlotAggregate> aggregates_;
};

// Average constraint slack left over a finite window starting at `start`:
//   tft = (alpha * sum received - beta * window - sum uploaded) / window
//   aux = (sum quota - sum received) / window
// Both telescope through the queue updates, so each is at most the matching
// observed queue peak divided by the window length.
struct ResidualPair {
  double tft;
  double aux;
};
std::vector<ResidualPair> residuals(const TraceAccumulator& acc, int64_t start,
                                    int64_t window);

// Scan every window start and user; pass means no residual exceeded its
// peak-over-window bound. Excesses are reported in per-slot units and are
// negative margins when the check passes.
struct ResidualCheck {
  int64_t window = 0;
  bool pass = false;
  double worst_tft_excess = 0.0;
  double worst_aux_excess = 0.0;
};
ResidualCheck check_residuals(const TraceAccumulator& acc, int64_t window);

// Observed peaks against the deterministic caps.
struct TraceReport {
  bool data_queue_ok = false;
  bool norm_ok = false;
  double worst_data_queue_excess = 0.0;  // max over users of peak - cap
  double norm_excess = 0.0;              // peak norm - norm cap
};
TraceReport check_trace(const TraceAccumulator& acc, const BoundConstants& bc);

}  // namespace p2psched
