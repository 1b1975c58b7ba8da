#pragma once

#include <cstdint>
#include <vector>

#include "p2psched/rng.hpp"

namespace p2psched {

struct GridSpec {
  int rows = 1;
  int cols = 1;
  double stay_probability = 0.5;

  int cells() const { return rows * cols; }
};

// Static network description: mobile users indexed 0..num_users-1, then
// access points indexed num_users..num_devices()-1.
struct Topology {
  GridSpec grid;
  int num_users = 0;
  int num_aps = 0;
  int ap_cell = 0;    // cell the access points sit in (position is recorded
                      // but reach is decided by the sampled channel rates)
  int peer_rate = 1;  // packets/slot on a link between co-located users
  std::vector<uint8_t> peer_upload_off;  // per user; empty = all enabled

  int num_devices() const { return num_users + num_aps; }
  bool is_user(int device) const { return device < num_users; }
  bool upload_enabled(int user) const {
    return peer_upload_off.empty() || !peer_upload_off[static_cast<size_t>(user)];
  }
  void validate() const;  // throws ConfigError on a bad description
};

// Per-slot random state: device positions plus the channel rate matrix.
// channels is row-major [device][user]: packets deliverable on that link
// this slot if the controller schedules it.
struct TopologyState {
  int num_users = 0;
  std::vector<int> positions;  // per device, cell index
  std::vector<int> channels;   // num_devices x num_users

  int num_devices() const { return static_cast<int>(positions.size()); }
  int channel(int device, int user) const {
    return channels[static_cast<size_t>(device) * num_users + user];
  }
  int& channel(int device, int user) {
    return channels[static_cast<size_t>(device) * num_users + user];
  }
};

// Sparse slot schedule: packets moved per (sender device, receiver user).
struct TransmissionMatrix {
  struct Entry {
    int sender;
    int receiver;
    int packets;
  };
  std::vector<Entry> entries;  // kept sorted by (sender, receiver)

  void set(int sender, int receiver, int packets);
  int at(int sender, int receiver) const;
  void clear() { entries.clear(); }
};

TopologyState make_initial_state(const Topology& topo, Rng& rng);

// One random-walk step for every user. A user stays put with probability
// stay_probability; otherwise it picks one of the four axis directions
// uniformly and moves, with moves that would leave the grid falling back
// to staying put. Blocked moves turning into stays keeps the transition
// matrix doubly stochastic, so cell occupancy is uniform in steady state.
void step_mobility(TopologyState& state, const Topology& topo, Rng& rng);

// Redraw the channel matrix for the current positions: co-located distinct
// user pairs get peer_rate (unless the sender's uploads are disabled) and
// every AP-to-user link gets an iid rate uniform on {0, 1, 2}.
void sample_channels(TopologyState& state, const Topology& topo, Rng& rng);

std::vector<int> users_in_reach(const TopologyState& state, int ap);

// Structural feasibility of a slot schedule: every entry is 0 or the full
// channel rate, user-to-user transmissions only between co-located devices
// with at most one per subcell, each AP serves at most one user, and no
// receiver takes more than receive_cap[k] packets in total.
bool validate_feasible(const TransmissionMatrix& mu, const TopologyState& state,
                       const std::vector<int>& receive_cap);

}  // namespace p2psched
