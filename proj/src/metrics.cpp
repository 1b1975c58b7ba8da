#include "p2psched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "p2psched/errors.hpp"

namespace p2psched {

double drift_bound(const std::vector<UserConfig>& users,
                   const std::vector<int>& upload_cap) {
  double b = 0.0;
  for (size_t k = 0; k < users.size(); ++k) {
    const double inflow = users[k].alpha * users[k].receive_cap;
    const double outflow = users[k].beta + upload_cap[k];
    const double reputation_step = std::max(inflow, outflow);
    const double data_step = users[k].receive_cap;  // quota and service caps
    b += 0.5 * (reputation_step * reputation_step + data_step * data_step);
  }
  return b;
}

BoundConstants bound_constants(const std::vector<UserConfig>& users,
                               double drift_bound_value, double utility_weight) {
  BoundConstants bc;
  bc.drift_bound = drift_bound_value;
  bc.utility_weight = utility_weight;
  if (users.empty()) return bc;

  double beta_min = std::numeric_limits<double>::infinity();
  double nu_max = 0.0, alpha_max = 0.0;
  int cap_max = 0;
  for (const auto& u : users) {
    if (!u.utility.bounded_slope())
      throw ConfigError("deterministic caps need bounded-slope utilities");
    beta_min = std::min(beta_min, u.beta);
    nu_max = std::max(nu_max, u.utility.nu);
    alpha_max = std::max(alpha_max, u.alpha);
    cap_max = std::max(cap_max, u.receive_cap);
    bc.utility_span += u.utility.value(u.receive_cap) - u.utility.value(0.0);
    bc.data_queue_cap.push_back(utility_weight * u.utility.nu + u.receive_cap);
  }
  if (beta_min <= 0.0)
    throw ConfigError("deterministic caps need positive beta for every user");

  const double k = static_cast<double>(users.size());
  // The basic gain covers price vectors scaled by alpha up to 1; larger
  // prices stretch the reachable weight gap proportionally.
  bc.service_gain = std::max(1.0, alpha_max) * cap_max * std::sqrt(2.0 * k);
  bc.offset = drift_bound_value / beta_min + cap_max * std::sqrt(k) +
              bc.service_gain;
  bc.slope = bc.utility_span / beta_min + nu_max * std::sqrt(k);
  bc.norm_cap = bc.offset + bc.slope * utility_weight;
  return bc;
}

double lyapunov(const VirtualQueues& q) {
  double sum = 0.0;
  for (int k = 0; k < q.num_users(); ++k)
    sum += q.data[k] * q.data[k] + q.reputation[k] * q.reputation[k];
  return 0.5 * sum;
}

double theta_norm(const VirtualQueues& q) {
  double sum = 0.0;
  for (int k = 0; k < q.num_users(); ++k)
    sum += q.data[k] * q.data[k] + q.reputation[k] * q.reputation[k];
  return std::sqrt(sum);
}

TraceAccumulator::TraceAccumulator(std::vector<UserConfig> users,
                                   bool keep_series)
    : users_(std::move(users)),
      keep_series_(keep_series),
      received_sum_(users_.size(), 0),
      uploaded_sum_(users_.size(), 0),
      quota_sum_(users_.size(), 0.0),
      data_peak_(users_.size(), 0.0),
      reputation_peak_(users_.size(), 0.0) {}

void TraceAccumulator::record(const SlotDecision& d, const VirtualQueues& q) {
  const int n = num_users();
  double mean_q = 0.0, max_q = 0.0, max_h = 0.0, sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    received_sum_[k] += d.received[k];
    uploaded_sum_[k] += d.uploaded[k];
    quota_sum_[k] += d.quota[k];
    const double dq = q.data[k], rep = q.reputation[k];
    mean_q += dq;
    max_q = std::max(max_q, dq);
    max_h = std::max(max_h, rep);
    data_peak_[k] = std::max(data_peak_[k], dq);
    reputation_peak_[k] = std::max(reputation_peak_[k], rep);
    sumsq += dq * dq + rep * rep;
  }
  norm_peak_ = std::max(norm_peak_, std::sqrt(sumsq));
  ap_packets_ += d.ap_packets;
  p2p_packets_ += d.p2p_packets;
  if (n > 0) mean_q /= n;
  mean_data_queue_sum_ += mean_q;
  ++slots_;

  if (!keep_series_) return;
  for (int k = 0; k < n; ++k) {
    received_series_.push_back(static_cast<uint16_t>(d.received[k]));
    uploaded_series_.push_back(static_cast<uint16_t>(d.uploaded[k]));
    quota_series_.push_back(d.quota[k]);
  }
  SlotAggregate agg;
  const double scale = n > 0 ? 1.0 / (static_cast<double>(slots_) * n) : 0.0;
  agg.mean_ap_throughput = ap_packets_ * scale;
  agg.mean_p2p_throughput = p2p_packets_ * scale;
  agg.mean_data_queue = mean_q;
  agg.max_data_queue = max_q;
  agg.max_reputation = max_h;
  double util = 0.0;
  for (int k = 0; k < n; ++k)
    util += users_[k].utility.value(received_sum_[k] /
                                    static_cast<double>(slots_));
  agg.utility_of_running_avg = util;
  aggregates_.push_back(agg);
}

int TraceAccumulator::received_at(int64_t slot, int user) const {
  if (!keep_series_) throw InternalError("series were not recorded");
  return received_series_[static_cast<size_t>(slot) * num_users() + user];
}

int TraceAccumulator::uploaded_at(int64_t slot, int user) const {
  if (!keep_series_) throw InternalError("series were not recorded");
  return uploaded_series_[static_cast<size_t>(slot) * num_users() + user];
}

double TraceAccumulator::quota_at(int64_t slot, int user) const {
  if (!keep_series_) throw InternalError("series were not recorded");
  return quota_series_[static_cast<size_t>(slot) * num_users() + user];
}

double TraceAccumulator::mean_received(int user) const {
  return slots_ > 0 ? received_sum_[user] / static_cast<double>(slots_) : 0.0;
}

double TraceAccumulator::mean_uploaded(int user) const {
  return slots_ > 0 ? uploaded_sum_[user] / static_cast<double>(slots_) : 0.0;
}

double TraceAccumulator::mean_quota(int user) const {
  return slots_ > 0 ? quota_sum_[user] / static_cast<double>(slots_) : 0.0;
}

double TraceAccumulator::max_data_queue() const {
  double m = 0.0;
  for (double v : data_peak_) m = std::max(m, v);
  return m;
}

double TraceAccumulator::max_reputation() const {
  double m = 0.0;
  for (double v : reputation_peak_) m = std::max(m, v);
  return m;
}

double TraceAccumulator::total_throughput() const {
  if (slots_ == 0) return 0.0;
  int64_t total = 0;
  for (int64_t v : received_sum_) total += v;
  return total / static_cast<double>(slots_);
}

double TraceAccumulator::total_utility() const {
  double util = 0.0;
  for (int k = 0; k < num_users(); ++k)
    util += users_[k].utility.value(mean_received(k));
  return util;
}

double TraceAccumulator::avg_mean_data_queue() const {
  return slots_ > 0 ? mean_data_queue_sum_ / static_cast<double>(slots_) : 0.0;
}

std::vector<ResidualPair> residuals(const TraceAccumulator& acc, int64_t start,
                                    int64_t window) {
  if (window < 1) throw ConfigError("window must be at least one slot");
  if (start < 0 || start + window > acc.slots())
    throw ConfigError("window exceeds the recorded trace");
  std::vector<ResidualPair> out(acc.num_users());
  for (int k = 0; k < acc.num_users(); ++k) {
    int64_t rx = 0, tx = 0;
    long double quota = 0.0;
    for (int64_t t = start; t < start + window; ++t) {
      rx += acc.received_at(t, k);
      tx += acc.uploaded_at(t, k);
      quota += acc.quota_at(t, k);
    }
    const auto& u = acc.users()[k];
    const double w = static_cast<double>(window);
    out[k].tft = (u.alpha * rx - u.beta * w - tx) / w;
    out[k].aux = (static_cast<double>(quota) - rx) / w;
  }
  return out;
}

ResidualCheck check_residuals(const TraceAccumulator& acc, int64_t window) {
  ResidualCheck res;
  res.window = window;
  if (window < 1 || window > acc.slots())
    throw ConfigError("window must fit inside the recorded trace");
  const int64_t slots = acc.slots();
  const double w = static_cast<double>(window);
  double worst_tft = -std::numeric_limits<double>::infinity();
  double worst_aux = worst_tft;
  std::vector<int64_t> rx(slots + 1), tx(slots + 1);
  std::vector<long double> quota(slots + 1);
  for (int k = 0; k < acc.num_users(); ++k) {
    rx[0] = tx[0] = 0;
    quota[0] = 0.0;
    for (int64_t t = 0; t < slots; ++t) {
      rx[t + 1] = rx[t] + acc.received_at(t, k);
      tx[t + 1] = tx[t] + acc.uploaded_at(t, k);
      quota[t + 1] = quota[t] + acc.quota_at(t, k);
    }
    const auto& u = acc.users()[k];
    const double rep_peak = acc.peak_reputation(k);
    const double data_peak = acc.peak_data_queue(k);
    for (int64_t s = 0; s + window <= slots; ++s) {
      const double sum_rx = static_cast<double>(rx[s + window] - rx[s]);
      const double sum_tx = static_cast<double>(tx[s + window] - tx[s]);
      const double sum_quota =
          static_cast<double>(quota[s + window] - quota[s]);
      const double tft_excess =
          (u.alpha * sum_rx - u.beta * w - sum_tx - rep_peak) / w;
      const double aux_excess = (sum_quota - sum_rx - data_peak) / w;
      worst_tft = std::max(worst_tft, tft_excess);
      worst_aux = std::max(worst_aux, aux_excess);
    }
  }
  if (acc.num_users() == 0) worst_tft = worst_aux = 0.0;
  res.worst_tft_excess = worst_tft;
  res.worst_aux_excess = worst_aux;
  res.pass = worst_tft <= 0.0 && worst_aux <= 0.0;
  return res;
}

TraceReport check_trace(const TraceAccumulator& acc, const BoundConstants& bc) {
  TraceReport report;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < acc.num_users(); ++k)
    worst = std::max(worst, acc.peak_data_queue(k) - bc.data_queue_cap[k]);
  if (acc.num_users() == 0) worst = 0.0;
  report.worst_data_queue_excess = worst;
  report.data_queue_ok = worst <= 0.0;
  report.norm_excess = acc.peak_norm() - bc.norm_cap;
  report.norm_ok = report.norm_excess <= 0.0;
  return report;
}

}  // namespace p2psched
