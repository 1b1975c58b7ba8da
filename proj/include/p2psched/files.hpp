#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "p2psched/rng.hpp"

namespace p2psched {

// How download requests behave over time.
struct FileConfig {
  bool finite = false;  // false: users want data forever (saturated demand)

  enum class SizeDist { fixed, geometric };
  SizeDist size_dist = SizeDist::fixed;
  int64_t file_size = 100;  // fixed size, or mean for geometric

  // Chance per slot that an idle user requests a fresh file. 0 = users that
  // finish stay idle until the next network-wide request redraw.
  double idle_restart_prob = 0.0;
};

// Who wants data and who can source it. holder_mask[user][device] is the
// subset of devices holding (part of) the file user k currently requests.
// A user never sources its own request. In finite mode a user with no
// remaining demand is idle: its holder row is empty until a restart.
struct FileState {
  int num_users = 0;
  int num_devices = 0;
  bool finite = false;
  std::vector<uint8_t> holder_mask;  // num_users x num_devices
  std::vector<uint8_t> active;       // per user; always 1 in infinite mode
  std::vector<int64_t> remaining;    // packets still wanted (finite mode)

  int has_file(int device, int user) const {
    return holder_mask[static_cast<size_t>(user) * num_devices + device] ? 1 : 0;
  }
  bool is_active(int user) const { return active[static_cast<size_t>(user)] != 0; }
  void set_holder(int user, int device, bool holds);
  void clear_user(int user);  // drop to idle: no holders, no demand
};

// Fresh request state: every user becomes active, each other user holds the
// requested file independently with probability p, and every access point
// holds it with probability 1.
FileState draw_requests(int num_users, int num_devices, double p,
                        const FileConfig& cfg, Rng& rng);

// Account packets delivered to a user this slot. Infinite mode: no-op.
// Finite mode: decrements remaining demand, clamping over-delivery at zero,
// and drops the user to idle once nothing remains.
void apply_delivery(FileState& fs, int user, int packets);

// Piecewise-constant schedule for the holder probability p. Fractions of
// the horizon must sum to one; phase j starts at slot
// floor(total_slots * sum of earlier fractions).
struct PhaseSchedule {
  struct Phase {
    double fraction;
    double p;
  };
  std::vector<Phase> phases;
  int64_t total_slots = 0;

  int64_t phase_start(int j) const;
  int phase_index(int64_t slot) const;
  // Set when a fresh network-wide request draw is due at this slot.
  std::optional<double> redraw_p(int64_t slot) const;
  void validate() const;  // throws ConfigError
};

// Per-slot request dynamics: a full redraw at phase boundaries, otherwise
// (finite mode) geometric restarts of idle users with the current phase p.
void regenerate_requests(FileState& fs, const PhaseSchedule& schedule,
                         int64_t slot, const FileConfig& cfg, Rng& rng);

}  // namespace p2psched
