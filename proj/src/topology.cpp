#include "p2psched/topology.hpp"

#include <algorithm>

#include "p2psched/errors.hpp"

namespace p2psched {

void Topology::validate() const {
  if (grid.rows < 1 || grid.cols < 1)
    throw ConfigError("grid must have at least one row and one column");
  if (grid.stay_probability < 0.0 || grid.stay_probability > 1.0)
    throw ConfigError("stay_probability must lie in [0, 1]");
  if (num_users < 0) throw ConfigError("negative user count");
  if (num_aps < 0) throw ConfigError("negative access point count");
  if (num_aps > 0 && (ap_cell < 0 || ap_cell >= grid.cells()))
    throw ConfigError("ap_cell outside the grid");
  if (peer_rate < 0) throw ConfigError("negative peer_rate");
  if (!peer_upload_off.empty() &&
      peer_upload_off.size() != static_cast<size_t>(num_users))
    throw ConfigError("peer_upload_off must list every user or none");
}

void TransmissionMatrix::set(int sender, int receiver, int packets) {
  auto key_less = [](const Entry& e, const Entry& v) {
    return e.sender != v.sender ? e.sender < v.sender : e.receiver < v.receiver;
  };
  Entry wanted{sender, receiver, packets};
  auto it = std::lower_bound(entries.begin(), entries.end(), wanted, key_less);
  if (it != entries.end() && it->sender == sender && it->receiver == receiver)
    it->packets = packets;
  else
    entries.insert(it, wanted);
}

int TransmissionMatrix::at(int sender, int receiver) const {
  auto key_less = [](const Entry& e, const Entry& v) {
    return e.sender != v.sender ? e.sender < v.sender : e.receiver < v.receiver;
  };
  Entry wanted{sender, receiver, 0};
  auto it = std::lower_bound(entries.begin(), entries.end(), wanted, key_less);
  if (it != entries.end() && it->sender == sender && it->receiver == receiver)
    return it->packets;
  return 0;
}

TopologyState make_initial_state(const Topology& topo, Rng& rng) {
  TopologyState state;
  state.num_users = topo.num_users;
  state.positions.resize(topo.num_devices());
  state.channels.assign(
      static_cast<size_t>(topo.num_devices()) * topo.num_users, 0);
  const int cells = topo.grid.cells();
  for (int k = 0; k < topo.num_users; ++k)
    state.positions[k] = static_cast<int>(rng.next_below(cells));
  for (int a = topo.num_users; a < topo.num_devices(); ++a)
    state.positions[a] = topo.ap_cell;
  return state;
}

void step_mobility(TopologyState& state, const Topology& topo, Rng& rng) {
  static constexpr int kRowStep[4] = {-1, 1, 0, 0};
  static constexpr int kColStep[4] = {0, 0, -1, 1};
  const int rows = topo.grid.rows;
  const int cols = topo.grid.cols;
  for (int k = 0; k < topo.num_users; ++k) {
    if (rng.next_unit() < topo.grid.stay_probability) continue;
    const int dir = static_cast<int>(rng.next_below(4));
    const int r = state.positions[k] / cols + kRowStep[dir];
    const int c = state.positions[k] % cols + kColStep[dir];
    if (r < 0 || r >= rows || c < 0 || c >= cols) continue;  // blocked: stay
    state.positions[k] = r * cols + c;
  }
}

void sample_channels(TopologyState& state, const Topology& topo, Rng& rng) {
  std::fill(state.channels.begin(), state.channels.end(), 0);
  for (int a = 0; a < topo.num_users; ++a) {
    if (!topo.upload_enabled(a)) continue;
    for (int k = 0; k < topo.num_users; ++k)
      if (k != a && state.positions[a] == state.positions[k])
        state.channel(a, k) = topo.peer_rate;
  }
  for (int a = topo.num_users; a < topo.num_devices(); ++a)
    for (int k = 0; k < topo.num_users; ++k)
      state.channel(a, k) = static_cast<int>(rng.next_below(3));
}

std::vector<int> users_in_reach(const TopologyState& state, int ap) {
  std::vector<int> reach;
  for (int k = 0; k < state.num_users; ++k)
    if (state.channel(ap, k) > 0) reach.push_back(k);
  return reach;
}

bool validate_feasible(const TransmissionMatrix& mu, const TopologyState& state,
                       const std::vector<int>& receive_cap) {
  const int num_users = state.num_users;
  const int num_devices = state.num_devices();
  std::vector<int> received(num_users, 0);
  std::vector<int> ap_sends;          // APs that already transmit
  std::vector<int> cells_with_peer;   // subcells with a user-to-user send
  for (const auto& e : mu.entries) {
    if (e.sender < 0 || e.sender >= num_devices) return false;
    if (e.receiver < 0 || e.receiver >= num_users) return false;
    if (e.packets == 0) continue;
    if (e.packets != state.channel(e.sender, e.receiver)) return false;
    if (e.sender < num_users) {
      if (state.positions[e.sender] != state.positions[e.receiver]) return false;
      const int cell = state.positions[e.sender];
      if (std::find(cells_with_peer.begin(), cells_with_peer.end(), cell) !=
          cells_with_peer.end())
        return false;
      cells_with_peer.push_back(cell);
    } else {
      if (std::find(ap_sends.begin(), ap_sends.end(), e.sender) !=
          ap_sends.end())
        return false;
      ap_sends.push_back(e.sender);
    }
    received[e.receiver] += e.packets;
    if (received[e.receiver] > receive_cap[e.receiver]) return false;
  }
  return true;
}

}  // namespace p2psched
