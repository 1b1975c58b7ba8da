#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "p2psched/errors.hpp"
#include "p2psched/files.hpp"
#include "p2psched/rng.hpp"

using namespace p2psched;

TEST_CASE("fresh requests hold files with the phase probability") {
  const int num_users = 50;
  const int num_devices = 51;  // one access point
  FileConfig cfg;
  Rng rng(42);
  int64_t peer_holders = 0;
  const int draws = 2000;
  for (int d = 0; d < draws; ++d) {
    const FileState fs = draw_requests(num_users, num_devices, 0.05, cfg, rng);
    for (int k = 0; k < num_users; ++k) {
      REQUIRE(fs.is_active(k));
      REQUIRE(fs.remaining[k] == 0);       // infinite mode tracks no size
      REQUIRE(fs.has_file(k, k) == 0);     // never its own source
      REQUIRE(fs.has_file(50, k) == 1);    // the access point always holds
      for (int peer = 0; peer < num_users; ++peer)
        peer_holders += fs.has_file(peer, k);
    }
  }
  const double mean_holders = peer_holders / double(draws * num_users);
  CHECK(mean_holders == doctest::Approx(49 * 0.05).epsilon(0.05));
}

TEST_CASE("finite mode draws sizes and clamps deliveries") {
  FileConfig cfg;
  cfg.finite = true;
  cfg.file_size = 100;
  Rng rng(7);
  FileState fs = draw_requests(3, 4, 1.0, cfg, rng);
  REQUIRE(fs.remaining[0] == 100);
  REQUIRE(fs.is_active(0));
  REQUIRE(fs.has_file(1, 0) == 1);

  apply_delivery(fs, 0, 60);
  CHECK(fs.remaining[0] == 40);
  CHECK(fs.is_active(0));
  apply_delivery(fs, 0, 40);  // exact finish drops to idle
  CHECK(!fs.is_active(0));
  CHECK(fs.remaining[0] == 0);
  CHECK(fs.has_file(1, 0) == 0);
  CHECK(fs.has_file(3, 0) == 0);

  apply_delivery(fs, 1, 150);  // over-delivery clamps at zero demand
  CHECK(!fs.is_active(1));

  apply_delivery(fs, 0, 0);  // zero packets to an idle user is a no-op
  CHECK_THROWS_AS(apply_delivery(fs, 0, 1), InternalError);
  CHECK_THROWS_AS(apply_delivery(fs, 2, -1), InternalError);

  FileConfig endless;
  FileState inf = draw_requests(2, 3, 1.0, endless, rng);
  apply_delivery(inf, 0, 500);  // infinite mode ignores deliveries
  CHECK(inf.is_active(0));
}

TEST_CASE("a user never sources its own request") {
  FileState fs;
  fs.num_users = 2;
  fs.num_devices = 3;
  fs.holder_mask.assign(6, 0);
  fs.active.assign(2, 1);
  fs.remaining.assign(2, 0);
  CHECK_THROWS_AS(fs.set_holder(1, 1, true), InternalError);
  CHECK_NOTHROW(fs.set_holder(1, 0, true));
}

TEST_CASE("geometric sizes are at least one and match the configured mean") {
  FileConfig cfg;
  cfg.finite = true;
  cfg.size_dist = FileConfig::SizeDist::geometric;
  cfg.file_size = 20;
  Rng rng(2024);
  int64_t total = 0;
  const int draws = 30000;
  for (int d = 0; d < draws; ++d) {
    const FileState fs = draw_requests(1, 2, 0.5, cfg, rng);
    REQUIRE(fs.remaining[0] >= 1);
    total += fs.remaining[0];
  }
  CHECK(total / double(draws) == doctest::Approx(20.0).epsilon(0.03));

  cfg.file_size = 1;  // success probability one degenerates to size one
  const FileState fs = draw_requests(1, 2, 0.5, cfg, rng);
  CHECK(fs.remaining[0] == 1);
}

TEST_CASE("phase boundaries land on floors of cumulative fractions") {
  PhaseSchedule ps;
  ps.phases = {{1.0 / 3, 0.05}, {1.0 / 3, 0.10}, {1.0 / 3, 0.07}};
  ps.total_slots = 100000;
  ps.validate();
  CHECK(ps.phase_start(0) == 0);
  CHECK(ps.phase_start(1) == 33333);
  CHECK(ps.phase_start(2) == 66666);
  CHECK(ps.phase_index(0) == 0);
  CHECK(ps.phase_index(33332) == 0);
  CHECK(ps.phase_index(33333) == 1);
  CHECK(ps.phase_index(66665) == 1);
  CHECK(ps.phase_index(66666) == 2);
  CHECK(ps.phase_index(99999) == 2);
  CHECK(ps.redraw_p(0) == 0.05);
  CHECK(ps.redraw_p(33333) == 0.10);
  CHECK(ps.redraw_p(66666) == 0.07);
  CHECK(!ps.redraw_p(1));
  CHECK(!ps.redraw_p(33332));
}

TEST_CASE("coinciding phase boundaries give the later phase the redraw") {
  PhaseSchedule ps;
  ps.phases = {{0.5, 0.2}, {0.0, 0.9}, {0.5, 0.3}};
  ps.total_slots = 10;
  ps.validate();
  CHECK(ps.phase_start(1) == 5);
  CHECK(ps.phase_start(2) == 5);
  CHECK(ps.redraw_p(5) == 0.3);
  CHECK(ps.phase_index(5) == 2);
}

TEST_CASE("phase validation rejects malformed schedules") {
  PhaseSchedule ps;
  ps.total_slots = 100;
  CHECK_THROWS_AS(ps.validate(), ConfigError);  // empty
  ps.phases = {{0.5, 0.1}, {0.4, 0.2}};
  CHECK_THROWS_AS(ps.validate(), ConfigError);  // fractions sum to 0.9
  ps.phases = {{-0.5, 0.1}, {1.5, 0.2}};
  CHECK_THROWS_AS(ps.validate(), ConfigError);  // negative fraction
  ps.phases = {{1.0, 1.5}};
  CHECK_THROWS_AS(ps.validate(), ConfigError);  // probability above one
  ps.phases = {{0.25, 0.1}, {0.75, 0.2}};
  CHECK_NOTHROW(ps.validate());
}

TEST_CASE("regeneration redraws at boundaries and leaves other slots alone") {
  PhaseSchedule ps;
  ps.phases = {{0.5, 1.0}, {0.5, 0.0}};
  ps.total_slots = 100;
  FileConfig cfg;
  Rng rng(5);
  FileState fs;
  fs.num_users = 2;
  fs.num_devices = 3;
  fs.holder_mask.assign(6, 0);
  fs.active.assign(2, 0);
  fs.remaining.assign(2, 0);

  regenerate_requests(fs, ps, 0, cfg, rng);  // p = 1: every peer holds
  CHECK(fs.is_active(0));
  CHECK(fs.has_file(1, 0) == 1);
  CHECK(fs.has_file(0, 1) == 1);

  const auto mask_before = fs.holder_mask;
  regenerate_requests(fs, ps, 17, cfg, rng);  // mid-phase, infinite mode
  CHECK(fs.holder_mask == mask_before);

  regenerate_requests(fs, ps, 50, cfg, rng);  // p = 0: only the AP holds
  CHECK(fs.has_file(1, 0) == 0);
  CHECK(fs.has_file(2, 0) == 1);
}

TEST_CASE("idle users restart with the configured probability") {
  PhaseSchedule ps;
  ps.phases = {{1.0, 0.5}};
  ps.total_slots = 1000000;
  FileConfig cfg;
  cfg.finite = true;
  cfg.file_size = 10;
  cfg.idle_restart_prob = 0.25;
  Rng rng(9);

  FileState fs = draw_requests(1, 2, 0.5, cfg, rng);
  fs.clear_user(0);
  int restarts = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    fs.clear_user(0);
    regenerate_requests(fs, ps, 1 + t, cfg, rng);
    if (fs.is_active(0)) {
      ++restarts;
      CHECK(fs.remaining[0] == 10);
    }
  }
  CHECK(restarts / double(trials) == doctest::Approx(0.25).epsilon(0.05));

  cfg.idle_restart_prob = 0.0;
  fs.clear_user(0);
  regenerate_requests(fs, ps, 123, cfg, rng);
  CHECK(!fs.is_active(0));  // finished users stay idle without restarts
}
