#include "p2psched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "p2psched/errors.hpp"

namespace p2psched {

namespace {

constexpr size_t kGridLeafLimit = 5000000;

// Delivered/uploaded packets per user for one schedule, holder-masked.
struct SchedRates {
  std::vector<int> delivered;
  std::vector<int> uploaded;
};

SchedRates rates_for(const TransmissionMatrix& mu, const FileState& fs,
                     int num_users) {
  SchedRates r;
  r.delivered.assign(num_users, 0);
  r.uploaded.assign(num_users, 0);
  for (const auto& e : mu.entries) {
    const int got = e.packets * fs.has_file(e.sender, e.receiver);
    r.delivered[e.receiver] += got;
    if (e.sender < num_users) r.uploaded[e.sender] += got;
  }
  return r;
}

// Integer weight vectors w with lo <= w <= hi pointwise and sum(w) = total,
// in lexicographic order. Prunes on partial sums.
void for_each_weight_vector(const std::vector<int>& lo,
                            const std::vector<int>& hi, int total,
                            const std::function<void(const std::vector<int>&)>& fn) {
  const size_t m = lo.size();
  std::vector<int> suffix_lo(m + 1, 0), suffix_hi(m + 1, 0);
  for (size_t j = m; j-- > 0;) {
    suffix_lo[j] = suffix_lo[j + 1] + lo[j];
    suffix_hi[j] = suffix_hi[j + 1] + hi[j];
  }
  std::vector<int> w(m);
  std::function<void(size_t, int)> rec = [&](size_t pos, int remaining) {
    if (pos == m) {
      if (remaining == 0) fn(w);
      return;
    }
    const int least = std::max(lo[pos], remaining - suffix_hi[pos + 1]);
    const int most = std::min(hi[pos], remaining - suffix_lo[pos + 1]);
    for (int v = least; v <= most; ++v) {
      w[pos] = v;
      rec(pos + 1, remaining - v);
    }
  };
  rec(0, total);
}

}  // namespace

TopologyState TinyInstance::topology_state(int state_index) const {
  const State& s = states[state_index];
  TopologyState st;
  st.num_users = num_users;
  st.positions = s.positions;
  st.channels = s.channels;
  return st;
}

FileState TinyInstance::file_state() const {
  FileState fs;
  fs.num_users = num_users;
  fs.num_devices = num_devices();
  fs.finite = false;
  fs.holder_mask.assign(static_cast<size_t>(num_users) * num_devices(), 0);
  fs.active.assign(num_users, 1);
  fs.remaining.assign(num_users, 0);
  for (int k = 0; k < num_users; ++k)
    for (int dev : holders[k]) fs.set_holder(k, dev, true);
  return fs;
}

void TinyInstance::validate() const {
  if (num_users < 1) throw ConfigError("tiny instance needs at least one user");
  if (num_aps < 0) throw ConfigError("negative access point count");
  if (users.size() != static_cast<size_t>(num_users))
    throw ConfigError("tiny instance needs one UserConfig per user");
  if (holders.size() != static_cast<size_t>(num_users))
    throw ConfigError("tiny instance needs one holder list per user");
  for (int k = 0; k < num_users; ++k)
    for (int dev : holders[k]) {
      if (dev < 0 || dev >= num_devices())
        throw ConfigError("holder device out of range");
      if (dev == k) throw ConfigError("a user cannot source its own request");
    }
  for (const auto& u : users) {
    if (u.alpha < 0.0) throw ConfigError("alpha must be non-negative");
    if (u.beta < 0.0) throw ConfigError("beta must be non-negative");
    if (u.receive_cap < 1) throw ConfigError("receive cap must be at least 1");
    u.utility.validate(u.receive_cap);
  }
  if (states.empty()) throw ConfigError("tiny instance needs at least one state");
  double sum = 0.0;
  for (const auto& s : states) {
    if (s.prob < 0.0) throw ConfigError("negative state probability");
    sum += s.prob;
    if (s.positions.size() != static_cast<size_t>(num_devices()))
      throw ConfigError("state positions must cover every device");
    if (s.channels.size() !=
        static_cast<size_t>(num_devices()) * num_users)
      throw ConfigError("state channel matrix has the wrong shape");
    for (int a = 0; a < num_devices(); ++a)
      for (int k = 0; k < num_users; ++k) {
        const int rate = s.channels[static_cast<size_t>(a) * num_users + k];
        if (rate < 0) throw ConfigError("negative channel rate");
        if (a == k && rate != 0)
          throw ConfigError("self channels must be zero");
        if (a < num_users && a != k && rate != 0 &&
            s.positions[a] != s.positions[k])
          throw ConfigError("peer channels must stay within one cell");
      }
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("state probabilities must sum to 1");
}

std::vector<TransmissionMatrix> enumerate_feasible(const TinyInstance& inst,
                                                   int state_index,
                                                   size_t limit) {
  if (state_index < 0 ||
      state_index >= static_cast<int>(inst.states.size()))
    throw ConfigError("state index out of range");
  const TopologyState st = inst.topology_state(state_index);
  const int num_users = inst.num_users;

  struct Option {
    int sender = -1;  // -1: this group transmits nothing
    int receiver = -1;
    int packets = 0;
  };
  std::vector<std::vector<Option>> groups;
  for (int ap = num_users; ap < inst.num_devices(); ++ap) {
    std::vector<Option> opts{Option{}};
    for (int k = 0; k < num_users; ++k)
      if (st.channel(ap, k) > 0)
        opts.push_back({ap, k, st.channel(ap, k)});
    groups.push_back(std::move(opts));
  }
  std::vector<int> cells(st.positions.begin(),
                         st.positions.begin() + num_users);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (int cell : cells) {
    std::vector<Option> opts{Option{}};
    for (int a = 0; a < num_users; ++a) {
      if (st.positions[a] != cell) continue;
      for (int k = 0; k < num_users; ++k) {
        if (k == a || st.positions[k] != cell) continue;
        if (st.channel(a, k) > 0) opts.push_back({a, k, st.channel(a, k)});
      }
    }
    groups.push_back(std::move(opts));
  }

  size_t count = 1;
  for (const auto& g : groups) {
    count *= g.size();
    if (count > limit)
      throw ConfigError("tiny instance has too many schedules to enumerate");
  }

  std::vector<TransmissionMatrix> result;
  if (groups.empty()) {
    result.emplace_back();
    return result;
  }
  std::vector<size_t> idx(groups.size(), 0);
  std::vector<int> load(num_users);
  for (;;) {
    std::fill(load.begin(), load.end(), 0);
    bool ok = true;
    for (size_t gi = 0; gi < groups.size() && ok; ++gi) {
      const Option& o = groups[gi][idx[gi]];
      if (o.sender < 0) continue;
      load[o.receiver] += o.packets;
      if (load[o.receiver] > inst.users[o.receiver].receive_cap) ok = false;
    }
    if (ok) {
      TransmissionMatrix mu;
      for (size_t gi = 0; gi < groups.size(); ++gi) {
        const Option& o = groups[gi][idx[gi]];
        if (o.sender >= 0) mu.set(o.sender, o.receiver, o.packets);
      }
      result.push_back(std::move(mu));
    }
    size_t g = groups.size();
    for (;;) {
      if (g == 0) return result;
      --g;
      if (++idx[g] < groups[g].size()) break;
      idx[g] = 0;
    }
  }
}

OracleResult optimal_utility(const TinyInstance& inst, int base) {
  inst.validate();
  if (base < 1) throw ConfigError("grid base must be positive");
  const int num_users = inst.num_users;
  const int num_states = static_cast<int>(inst.states.size());
  const FileState fs = inst.file_state();

  // Probability-scaled rate vectors per (state, schedule).
  std::vector<std::vector<std::vector<double>>> xs(num_states), ys(num_states);
  for (int i = 0; i < num_states; ++i) {
    const auto mats = enumerate_feasible(inst, i);
    for (const auto& mu : mats) {
      const SchedRates r = rates_for(mu, fs, num_users);
      std::vector<double> x(num_users), y(num_users);
      for (int k = 0; k < num_users; ++k) {
        x[k] = inst.states[i].prob * r.delivered[k];
        y[k] = inst.states[i].prob * r.uploaded[k];
      }
      xs[i].push_back(std::move(x));
      ys[i].push_back(std::move(y));
    }
  }

  struct Candidate {
    std::vector<int> w;
    std::vector<double> xc, yc;  // mean-rate contribution of this state
  };

  double best_obj = -std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<double> best_rates(num_users, 0.0);
  // best_w is expressed in units of best_denom, the resolution of the pass
  // that recorded it; a later pass may leave it untouched when the coarse
  // grid already contains the optimum.
  std::vector<std::vector<int>> best_w(num_states);
  int best_denom = base;

  auto scan = [&](int denom, const std::vector<std::vector<int>>& lo,
                  const std::vector<std::vector<int>>& hi) {
    std::vector<std::vector<Candidate>> cands(num_states);
    size_t leaves = 1;
    for (int i = 0; i < num_states; ++i) {
      const size_t m = xs[i].size();
      for_each_weight_vector(lo[i], hi[i], denom, [&](const std::vector<int>& w) {
        Candidate c;
        c.w = w;
        c.xc.assign(num_users, 0.0);
        c.yc.assign(num_users, 0.0);
        for (size_t j = 0; j < m; ++j) {
          if (w[j] == 0) continue;
          const double q = static_cast<double>(w[j]) / denom;
          for (int k = 0; k < num_users; ++k) {
            c.xc[k] += q * xs[i][j][k];
            c.yc[k] += q * ys[i][j][k];
          }
        }
        cands[i].push_back(std::move(c));
      });
      if (cands[i].empty())
        throw InternalError("empty candidate grid for a state");
      leaves *= cands[i].size();
      if (leaves > kGridLeafLimit)
        throw ConfigError("tiny instance too large for the oracle grid");
    }

    // Cross states with per-level partial sums so no drift accumulates.
    std::vector<std::vector<double>> xl(num_states + 1,
                                        std::vector<double>(num_users, 0.0));
    std::vector<std::vector<double>> yl = xl;
    std::vector<size_t> pick(num_states, 0);
    std::function<void(int)> rec = [&](int si) {
      if (si == num_states) {
        const auto& x = xl[num_states];
        const auto& y = yl[num_states];
        for (int k = 0; k < num_users; ++k)
          if (inst.users[k].alpha * x[k] > inst.users[k].beta + y[k] + 1e-12)
            return;
        double obj = 0.0;
        for (int k = 0; k < num_users; ++k)
          obj += inst.users[k].utility.value(x[k]);
        if (!found || obj > best_obj) {
          found = true;
          best_obj = obj;
          best_rates = x;
          for (int i = 0; i < num_states; ++i) best_w[i] = cands[i][pick[i]].w;
          best_denom = denom;
        }
        return;
      }
      for (size_t ci = 0; ci < cands[si].size(); ++ci) {
        const Candidate& c = cands[si][ci];
        for (int k = 0; k < num_users; ++k) {
          xl[si + 1][k] = xl[si][k] + c.xc[k];
          yl[si + 1][k] = yl[si][k] + c.yc[k];
        }
        pick[si] = ci;
        rec(si + 1);
      }
    };
    rec(0);
  };

  // Full sweep at the base resolution, then two 8x refinements boxed around
  // the incumbent (which always stays inside its own box, so the objective
  // never regresses).
  int denom = base;
  std::vector<std::vector<int>> lo(num_states), hi(num_states);
  for (int i = 0; i < num_states; ++i) {
    lo[i].assign(xs[i].size(), 0);
    hi[i].assign(xs[i].size(), denom);
  }
  scan(denom, lo, hi);
  for (int pass = 0; pass < 2; ++pass) {
    denom *= 8;
    const int scale = denom / best_denom;
    for (int i = 0; i < num_states; ++i)
      for (size_t j = 0; j < xs[i].size(); ++j) {
        const int center = best_w[i][j] * scale;
        lo[i][j] = std::max(0, center - 8);
        hi[i][j] = std::min(denom, center + 8);
      }
    scan(denom, lo, hi);
  }
  if (!found) throw InternalError("oracle found no feasible operating point");
  return {best_obj, best_rates};
}

std::vector<GapPoint> gap_curve(const TinyInstance& inst,
                                const std::vector<double>& weights,
                                int64_t slots, uint64_t seed) {
  inst.validate();
  if (slots < 1) throw ConfigError("slots must be at least 1");
  if (weights.empty()) throw ConfigError("need at least one utility weight");
  const int num_users = inst.num_users;
  const int num_states = static_cast<int>(inst.states.size());
  const FileState fs = inst.file_state();
  const OracleResult opt = optimal_utility(inst);

  std::vector<std::vector<SchedRates>> sched(num_states);
  for (int i = 0; i < num_states; ++i)
    for (const auto& mu : enumerate_feasible(inst, i))
      sched[i].push_back(rates_for(mu, fs, num_users));
  std::vector<double> cum(num_states);
  double acc = 0.0;
  for (int i = 0; i < num_states; ++i) {
    acc += inst.states[i].prob;
    cum[i] = acc;
  }

  std::vector<GapPoint> out;
  for (double w : weights) {
    Rng rng(seed);
    VirtualQueues q(num_users);
    SlotDecision d;
    d.quota.resize(num_users);
    d.received.assign(num_users, 0);
    d.uploaded.assign(num_users, 0);
    std::vector<int64_t> delivered(num_users, 0);
    for (int64_t t = 0; t < slots; ++t) {
      const double u = rng.next_unit();
      int i = 0;
      while (i + 1 < num_states && u >= cum[i]) ++i;
      for (int k = 0; k < num_users; ++k)
        d.quota[k] = choose_quota(inst.users[k].utility, q.data[k], w,
                                  inst.users[k].receive_cap);
      double best = -std::numeric_limits<double>::infinity();
      size_t bj = 0;
      for (size_t j = 0; j < sched[i].size(); ++j) {
        const SchedRates& s = sched[i][j];
        double val = 0.0;
        for (int k = 0; k < num_users; ++k) {
          val += (q.data[k] - inst.users[k].alpha * q.reputation[k]) *
                 s.delivered[k];
          val += q.reputation[k] * s.uploaded[k];
        }
        if (val > best) {
          best = val;
          bj = j;
        }
      }
      for (int k = 0; k < num_users; ++k) {
        d.received[k] = sched[i][bj].delivered[k];
        d.uploaded[k] = sched[i][bj].uploaded[k];
        delivered[k] += d.received[k];
      }
      update_queues(q, d, inst.users);
    }
    double achieved = 0.0;
    for (int k = 0; k < num_users; ++k)
      achieved += inst.users[k].utility.value(
          delivered[k] / static_cast<double>(slots));
    out.push_back({w, achieved, opt.utility});
  }
  return out;
}

}  // namespace p2psched
