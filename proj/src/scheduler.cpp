#include "p2psched/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "p2psched/errors.hpp"

namespace p2psched {

double UtilitySpec::value(double rate) const {
  switch (kind) {
    case Kind::piecewise_linear:
      return nu * std::min(rate, theta);
    case Kind::log_one_plus:
      return std::log1p(nu * rate);
    case Kind::pure_log:
      return std::log(rate);
  }
  return 0.0;
}

void UtilitySpec::validate(int receive_cap) const {
  if (nu <= 0.0) throw ConfigError("utility scale must be positive");
  if (kind == Kind::piecewise_linear) {
    if (theta <= 0.0) throw ConfigError("saturation point must be positive");
    if (theta > receive_cap)
      throw ConfigError("saturation point must not exceed the receive cap");
  }
}

double choose_quota(const UtilitySpec& u, double backlog, double utility_weight,
                    int receive_cap) {
  if (utility_weight <= 0.0) return 0.0;  // penalty term only: admit nothing
  const double cap = receive_cap;
  switch (u.kind) {
    case UtilitySpec::Kind::piecewise_linear:
      return backlog <= utility_weight * u.nu ? u.theta : 0.0;
    case UtilitySpec::Kind::log_one_plus: {
      if (backlog <= 0.0) return cap;
      return std::clamp(utility_weight / backlog - 1.0 / u.nu, 0.0, cap);
    }
    case UtilitySpec::Kind::pure_log: {
      if (backlog <= 0.0) return cap;
      return std::clamp(utility_weight / backlog, 0.0, cap);
    }
  }
  return 0.0;
}

double transmission_weight(int sender, int user, const VirtualQueues& queues,
                           const std::vector<UserConfig>& users) {
  double w = queues.data[user] - users[user].alpha * queues.reputation[user];
  if (sender < queues.num_users()) w += queues.reputation[sender];
  return w;
}

std::optional<LinkChoice> schedule_access_point(
    int ap, const TopologyState& state, const VirtualQueues& queues,
    const FileState& fs, const std::vector<UserConfig>& users) {
  std::optional<LinkChoice> best;
  for (int k = 0; k < state.num_users; ++k) {
    const int rate = state.channel(ap, k);
    if (rate == 0 || !fs.has_file(ap, k)) continue;
    const double value = rate * transmission_weight(ap, k, queues, users);
    if (value < 0.0) continue;  // serving this user would hurt the objective
    if (!best || value > best->value) best = LinkChoice{ap, k, rate, value};
  }
  return best;
}

std::optional<LinkChoice> schedule_subcell(
    int cell, const TopologyState& state, const VirtualQueues& queues,
    const FileState& fs, const std::vector<UserConfig>& users) {
  std::optional<LinkChoice> best;
  for (int a = 0; a < state.num_users; ++a) {
    if (state.positions[a] != cell) continue;
    for (int k = 0; k < state.num_users; ++k) {
      if (k == a || state.positions[k] != cell) continue;
      const int rate = state.channel(a, k);
      if (rate == 0 || !fs.has_file(a, k)) continue;
      const double value = rate * transmission_weight(a, k, queues, users);
      if (value < 0.0) continue;
      if (!best || value > best->value) best = LinkChoice{a, k, rate, value};
    }
  }
  return best;
}

TransmissionMatrix choose_transmissions(const TopologyState& state,
                                        const VirtualQueues& queues,
                                        const FileState& fs,
                                        const std::vector<UserConfig>& users) {
  const int num_users = state.num_users;
  std::vector<LinkChoice> picks;
  for (int ap = num_users; ap < state.num_devices(); ++ap)
    if (auto c = schedule_access_point(ap, state, queues, fs, users))
      picks.push_back(*c);

  std::vector<int> cells(state.positions.begin(),
                         state.positions.begin() + num_users);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (int cell : cells)
    if (auto c = schedule_subcell(cell, state, queues, fs, users))
      picks.push_back(*c);

  // The per-AP and per-cell argmaxes are taken independently, so a popular
  // receiver can be pushed past its cap when several senders pick it. Drop
  // its cheapest links (largest sender id on value ties) until it fits.
  for (bool repaired = false; !repaired;) {
    repaired = true;
    std::vector<int> load(num_users, 0);
    for (const auto& p : picks) load[p.receiver] += p.packets;
    for (int k = 0; k < num_users && repaired; ++k) {
      if (load[k] <= users[k].receive_cap) continue;
      size_t drop = picks.size();
      for (size_t i = 0; i < picks.size(); ++i) {
        if (picks[i].receiver != k) continue;
        if (drop == picks.size() || picks[i].value < picks[drop].value ||
            (picks[i].value == picks[drop].value &&
             picks[i].sender > picks[drop].sender))
          drop = i;
      }
      picks.erase(picks.begin() + drop);
      repaired = false;
    }
  }

  TransmissionMatrix mu;
  for (const auto& p : picks) mu.set(p.sender, p.receiver, p.packets);
  return mu;
}

double matrix_objective(const TransmissionMatrix& mu, const VirtualQueues& queues,
                        const FileState& fs,
                        const std::vector<UserConfig>& users) {
  double total = 0.0;
  for (const auto& e : mu.entries)
    total += e.packets * fs.has_file(e.sender, e.receiver) *
             transmission_weight(e.sender, e.receiver, queues, users);
  return total;
}

void update_queues(VirtualQueues& queues, const SlotDecision& d,
                   const std::vector<UserConfig>& users) {
  for (int k = 0; k < queues.num_users(); ++k) {
    queues.reputation[k] =
        std::max(queues.reputation[k] + users[k].alpha * d.received[k] -
                     users[k].beta - d.uploaded[k],
                 0.0);
    queues.data[k] = std::max(queues.data[k] + d.quota[k] - d.received[k], 0.0);
  }
}

SlotDecision run_controller(const TopologyState& state, VirtualQueues& queues,
                            const FileState& fs,
                            const std::vector<UserConfig>& users,
                            double utility_weight) {
  const int num_users = state.num_users;
  SlotDecision d;
  d.quota.resize(num_users);
  d.received.assign(num_users, 0);
  d.uploaded.assign(num_users, 0);
  for (int k = 0; k < num_users; ++k)
    d.quota[k] = choose_quota(users[k].utility, queues.data[k], utility_weight,
                              users[k].receive_cap);
  d.mu = choose_transmissions(state, queues, fs, users);
  for (const auto& e : d.mu.entries) {
    const int got = e.packets * fs.has_file(e.sender, e.receiver);
    d.received[e.receiver] += got;
    if (e.sender < num_users) {
      d.uploaded[e.sender] += got;
      d.p2p_packets += got;
    } else {
      d.ap_packets += got;
    }
  }
  std::vector<int> caps(num_users);
  for (int k = 0; k < num_users; ++k) caps[k] = users[k].receive_cap;
  if (!validate_feasible(d.mu, state, caps))
    throw InternalError("controller produced an infeasible schedule");
  update_queues(queues, d, users);
  return d;
}

void SimulationConfig::validate() const {
  topology.validate();
  if (users.size() != static_cast<size_t>(topology.num_users))
    throw ConfigError("one UserConfig required per user");
  for (const auto& u : users) {
    if (u.alpha < 0.0) throw ConfigError("alpha must be non-negative");
    if (u.beta < 0.0) throw ConfigError("beta must be non-negative");
    if (u.receive_cap < 1) throw ConfigError("receive cap must be at least 1");
    u.utility.validate(u.receive_cap);
  }
  if (utility_weight < 0.0)
    throw ConfigError("utility weight must be non-negative");
  if (files.file_size < 1) throw ConfigError("file size must be at least 1");
  if (files.idle_restart_prob < 0.0 || files.idle_restart_prob > 1.0)
    throw ConfigError("idle restart probability must lie in [0, 1]");
  phases.validate();
}

Simulation::Simulation(const SimulationConfig& cfg)
    : cfg_(cfg),
      rng_(cfg.seed),
      state_(make_initial_state(cfg.topology, rng_)),
      queues_(cfg.topology.num_users) {
  // Requests are drawn by the first step(); until then everyone is idle.
  files_.num_users = cfg_.topology.num_users;
  files_.num_devices = cfg_.topology.num_devices();
  files_.finite = cfg_.files.finite;
  files_.holder_mask.assign(
      static_cast<size_t>(files_.num_users) * files_.num_devices, 0);
  files_.active.assign(files_.num_users, 0);
  files_.remaining.assign(files_.num_users, 0);
}

const SlotDecision& Simulation::step() {
  regenerate_requests(files_, cfg_.phases, slot_, cfg_.files, rng_);
  step_mobility(state_, cfg_.topology, rng_);
  sample_channels(state_, cfg_.topology, rng_);
  last_ = run_controller(state_, queues_, files_, cfg_.users,
                         cfg_.utility_weight);
  if (cfg_.files.finite)
    for (int k = 0; k < files_.num_users; ++k)
      if (last_.received[k] > 0) apply_delivery(files_, k, last_.received[k]);
  ++slot_;
  return last_;
}

}  // namespace p2psched
