#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "p2psched/files.hpp"
#include "p2psched/rng.hpp"
#include "p2psched/topology.hpp"

namespace p2psched {

// Concave reward on a user's long-run average download rate.
struct UtilitySpec {
  enum class Kind { piecewise_linear, log_one_plus, pure_log };
  Kind kind = Kind::log_one_plus;
  double nu = 1.0;     // slope or curvature scale
  double theta = 1.0;  // saturation point (piecewise_linear only)

  double value(double rate) const;
  // Slope at zero rate is finite; needed by the deterministic queue caps.
  bool bounded_slope() const { return kind != Kind::pure_log; }
  void validate(int receive_cap) const;  // throws ConfigError
};

struct UserConfig {
  double alpha = 0.5;   // uploads owed per downloaded packet
  double beta = 0.05;   // free download allowance per slot
  int receive_cap = 3;  // max packets a user can take per slot
  UtilitySpec utility;
};

// Backlogs of the two virtual queues driving the controller. data[k] is
// admitted-but-undelivered credit; reputation[k] is download debt not yet
// worked off by uploads (the tit-for-tat ledger).
struct VirtualQueues {
  std::vector<double> data;
  std::vector<double> reputation;

  explicit VirtualQueues(int num_users = 0)
      : data(num_users, 0.0), reputation(num_users, 0.0) {}
  int num_users() const { return static_cast<int>(data.size()); }
};

// Everything the controller decided in one slot.
struct SlotDecision {
  std::vector<double> quota;  // demand admitted per user
  TransmissionMatrix mu;      // scheduled transmissions
  std::vector<int> received;  // packets delivered to each user
  std::vector<int> uploaded;  // packets each user sent to peers
  int64_t ap_packets = 0;     // delivered packets that came from APs
  int64_t p2p_packets = 0;    // delivered packets that came from peers
};

// Demand admitted for one user: the maximizer of
//   utility_weight * utility(q) - backlog * q   over q in [0, receive_cap],
// evaluated in closed form. Zero backlog admits the full cap (the limit of
// the log rules); utility_weight = 0 admits nothing.
double choose_quota(const UtilitySpec& u, double backlog, double utility_weight,
                    int receive_cap);

// Marginal value of one packet moved from sender to user: the receiver's
// data credit minus its priced reputation debt, plus the sender's debt
// relief when the sender is itself a user.
double transmission_weight(int sender, int user, const VirtualQueues& queues,
                           const std::vector<UserConfig>& users);

struct LinkChoice {
  int sender;
  int receiver;
  int packets;
  double value;
};

// Best user for this AP to serve: argmax of rate * weight over users with a
// positive channel that request a file the AP holds. Returns nothing when
// every candidate has negative value. Ties keep the lowest user index.
std::optional<LinkChoice> schedule_access_point(
    int ap, const TopologyState& state, const VirtualQueues& queues,
    const FileState& fs, const std::vector<UserConfig>& users);

// Best ordered sender-receiver pair among users co-located in this cell,
// same objective and tie rule (lexicographic by sender then receiver).
std::optional<LinkChoice> schedule_subcell(
    int cell, const TopologyState& state, const VirtualQueues& queues,
    const FileState& fs, const std::vector<UserConfig>& users);

// Full transmission selection: per-AP and per-subcell argmaxes, then a
// repair pass that drops the cheapest links of any receiver pushed past its
// receive cap by independent selections.
TransmissionMatrix choose_transmissions(const TopologyState& state,
                                        const VirtualQueues& queues,
                                        const FileState& fs,
                                        const std::vector<UserConfig>& users);

// The objective choose_transmissions maximizes, evaluated for any schedule:
// sum of packets * holder_flag * transmission_weight over entries, in the
// matrix's canonical entry order.
double matrix_objective(const TransmissionMatrix& mu, const VirtualQueues& queues,
                        const FileState& fs, const std::vector<UserConfig>& users);

// One backlog update from a slot's decision:
//   reputation' = max(reputation + alpha * received - beta - uploaded, 0)
//   data'       = max(data + quota - received, 0)
void update_queues(VirtualQueues& queues, const SlotDecision& d,
                   const std::vector<UserConfig>& users);

// One full controller slot against a fixed network state: quotas, the
// transmission selection, delivered/uploaded tallies, then queue updates.
// Throws InternalError if the chosen schedule fails structural validation.
SlotDecision run_controller(const TopologyState& state, VirtualQueues& queues,
                            const FileState& fs,
                            const std::vector<UserConfig>& users,
                            double utility_weight);

struct SimulationConfig {
  Topology topology;
  std::vector<UserConfig> users;  // one per mobile user
  double utility_weight = 10.0;
  FileConfig files;
  PhaseSchedule phases;
  uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// Drives the slot loop: request redraws, mobility, channel sampling, the
// controller, and finite-file delivery accounting. All randomness flows
// from the single seeded generator in a fixed draw order, so a seed pins
// the entire sample path.
class Simulation {
 public:
  explicit Simulation(const SimulationConfig& cfg);

  const SlotDecision& step();

  const VirtualQueues& queues() const { return queues_; }
  const TopologyState& state() const { return state_; }
  const FileState& files() const { return files_; }
  int64_t slot() const { return slot_; }

 private:
  SimulationConfig cfg_;
  Rng rng_;
  TopologyState state_;
  FileState files_;
  VirtualQueues queues_;
  SlotDecision last_;
  int64_t slot_ = 0;
};

}  // namespace p2psched
