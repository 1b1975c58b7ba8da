#pragma once

#include <cstdint>
#include <vector>

#include "p2psched/scheduler.hpp"

namespace p2psched {

// A fully explicit tiny network: a handful of users and cells, a finite set
// of network states with known probabilities, and fixed holder sets. Small
// enough that the schedule set and the best attainable operating point can
// be found by exhaustive search.
struct TinyInstance {
  struct State {
    double prob = 0.0;
    std::vector<int> positions;  // per device
    std::vector<int> channels;   // num_devices x num_users, row-major
  };
  int num_users = 0;
  int num_aps = 0;
  std::vector<UserConfig> users;
  std::vector<std::vector<int>> holders;  // per user: devices sourcing it
  std::vector<State> states;

  int num_devices() const { return num_users + num_aps; }
  TopologyState topology_state(int state_index) const;
  FileState file_state() const;  // holder sets as an infinite-demand state
  void validate() const;         // throws ConfigError
};

// Every structurally feasible schedule for one state, enumerated as the
// cartesian sweep of per-AP choices (none first, then users ascending) and
// per-cell ordered pair choices (none first, then lexicographic), keeping
// only combinations inside every receive cap. The no-transmission schedule
// is always element 0. Throws ConfigError past `limit` schedules.
std::vector<TransmissionMatrix> enumerate_feasible(const TinyInstance& inst,
                                                   int state_index,
                                                   size_t limit = 200000);

struct OracleResult {
  double utility = 0.0;        // best objective found on the grid
  std::vector<double> rates;   // per-user mean delivery at the best point
};

// Best stationary operating point by brute force: over distributions on
// each state's feasible schedules (a product of probability simplices),
// maximize the sum of user utilities of mean delivery rates subject to
// every user's reciprocity constraint
//   alpha_k * downloads_k <= beta_k + uploads_k.
// The simplex grid starts at resolution 1/base and is refined twice by 8x
// around the incumbent, ending below 1e-3. Deliberately dependency-free.
OracleResult optimal_utility(const TinyInstance& inst, int base = 20);

struct GapPoint {
  double utility_weight = 0.0;
  double achieved = 0.0;  // utility of the controller's long-run mean rates
  double optimal = 0.0;   // grid-search optimum for reference
};

// Run the backlog-driven controller on the tiny instance (states drawn iid
// from the given probabilities) once per utility weight, reusing the same
// seed so every weight sees the identical state sequence.
std::vector<GapPoint> gap_curve(const TinyInstance& inst,
                                const std::vector<double>& weights,
                                int64_t slots, uint64_t seed);

}  // namespace p2psched
