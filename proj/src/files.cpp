#include "p2psched/files.hpp"

#include <cmath>

#include "p2psched/errors.hpp"

namespace p2psched {

namespace {

int64_t draw_size(const FileConfig& cfg, Rng& rng) {
  if (cfg.size_dist == FileConfig::SizeDist::fixed) return cfg.file_size;
  // geometric on {1, 2, ...} with the configured mean, via inverse CDF
  const double q = 1.0 / static_cast<double>(cfg.file_size);
  if (q >= 1.0) return 1;
  const double u = rng.next_unit();
  const double size = std::ceil(std::log1p(-u) / std::log1p(-q));
  return size < 1.0 ? 1 : static_cast<int64_t>(size);
}

void redraw_user(FileState& fs, int user, double p, const FileConfig& cfg,
                 Rng& rng) {
  for (int dev = 0; dev < fs.num_devices; ++dev) {
    if (dev == user) continue;
    const bool holds = dev < fs.num_users ? rng.bernoulli(p) : true;
    fs.set_holder(user, dev, holds);
  }
  fs.active[user] = 1;
  fs.remaining[user] = cfg.finite ? draw_size(cfg, rng) : 0;
}

}  // namespace

void FileState::set_holder(int user, int device, bool holds) {
  if (device == user)
    throw InternalError("a user cannot source its own request");
  holder_mask[static_cast<size_t>(user) * num_devices + device] = holds ? 1 : 0;
}

void FileState::clear_user(int user) {
  for (int dev = 0; dev < num_devices; ++dev)
    holder_mask[static_cast<size_t>(user) * num_devices + dev] = 0;
  active[user] = 0;
  remaining[user] = 0;
}

FileState draw_requests(int num_users, int num_devices, double p,
                        const FileConfig& cfg, Rng& rng) {
  FileState fs;
  fs.num_users = num_users;
  fs.num_devices = num_devices;
  fs.finite = cfg.finite;
  fs.holder_mask.assign(static_cast<size_t>(num_users) * num_devices, 0);
  fs.active.assign(num_users, 0);
  fs.remaining.assign(num_users, 0);
  for (int k = 0; k < num_users; ++k) redraw_user(fs, k, p, cfg, rng);
  return fs;
}

void apply_delivery(FileState& fs, int user, int packets) {
  if (packets < 0) throw InternalError("negative delivery");
  if (!fs.finite || packets == 0) return;
  if (!fs.is_active(user)) throw InternalError("delivery to an idle user");
  if (fs.remaining[user] > packets) {
    fs.remaining[user] -= packets;
    return;
  }
  fs.clear_user(user);  // over-delivery clamps at zero demand
}

int64_t PhaseSchedule::phase_start(int j) const {
  double cum = 0.0;
  for (int i = 0; i < j; ++i) cum += phases[i].fraction;
  return static_cast<int64_t>(std::floor(static_cast<double>(total_slots) * cum));
}

int PhaseSchedule::phase_index(int64_t slot) const {
  int idx = 0;
  for (int j = 1; j < static_cast<int>(phases.size()); ++j)
    if (phase_start(j) <= slot) idx = j;
  return idx;
}

std::optional<double> PhaseSchedule::redraw_p(int64_t slot) const {
  // Highest phase wins if short horizons make boundaries coincide.
  for (int j = static_cast<int>(phases.size()) - 1; j >= 0; --j)
    if (phase_start(j) == slot) return phases[j].p;
  return std::nullopt;
}

void PhaseSchedule::validate() const {
  if (phases.empty()) throw ConfigError("phase schedule must not be empty");
  double sum = 0.0;
  for (const auto& ph : phases) {
    if (ph.fraction < 0.0) throw ConfigError("negative phase fraction");
    if (ph.p < 0.0 || ph.p > 1.0)
      throw ConfigError("holder probability must lie in [0, 1]");
    sum += ph.fraction;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ConfigError("phase fractions must sum to 1");
}

void regenerate_requests(FileState& fs, const PhaseSchedule& schedule,
                         int64_t slot, const FileConfig& cfg, Rng& rng) {
  if (auto p = schedule.redraw_p(slot)) {
    fs = draw_requests(fs.num_users, fs.num_devices, *p, cfg, rng);
    return;
  }
  if (!cfg.finite || cfg.idle_restart_prob <= 0.0) return;
  const double p = schedule.phases[schedule.phase_index(slot)].p;
  for (int k = 0; k < fs.num_users; ++k)
    if (!fs.is_active(k) && rng.bernoulli(cfg.idle_restart_prob))
      redraw_user(fs, k, p, cfg, rng);
}

}  // namespace p2psched
