#include "p2psched/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "p2psched/config.hpp"
#include "p2psched/errors.hpp"

namespace p2psched {

SimulationConfig ExperimentConfig::build() const {
  if (slots < 1) throw ConfigError("slots must be at least 1");
  SimulationConfig sc;
  sc.topology.grid = {grid_rows, grid_cols, stay_probability};
  sc.topology.num_users = num_users;
  sc.topology.num_aps = num_aps;
  sc.topology.ap_cell = ap_cell;
  sc.topology.peer_rate = peer_rate;
  UserConfig base{alpha, beta, receive_cap, utility};
  sc.users.assign(num_users > 0 ? num_users : 0, base);
  bool any_upload_off = false;
  for (const auto& o : overrides) {
    if (o.user < 0 || o.user >= num_users)
      throw ConfigError("override for unknown user " + std::to_string(o.user));
    auto& u = sc.users[o.user];
    if (o.alpha) u.alpha = *o.alpha;
    if (o.beta) u.beta = *o.beta;
    if (o.receive_cap) u.receive_cap = *o.receive_cap;
    if (o.utility) u.utility = *o.utility;
    if (o.peer_upload_off) any_upload_off = true;
  }
  if (any_upload_off) {
    sc.topology.peer_upload_off.assign(num_users, 0);
    for (const auto& o : overrides)
      if (o.peer_upload_off && *o.peer_upload_off)
        sc.topology.peer_upload_off[o.user] = 1;
  }
  sc.utility_weight = utility_weight;
  sc.files.finite = finite;
  sc.files.size_dist = size_dist;
  sc.files.file_size = file_size;
  sc.files.idle_restart_prob = idle_restart_prob;
  sc.phases.phases = phases;
  sc.phases.total_slots = slots;
  sc.seed = seed;
  sc.validate();
  return sc;
}

RunResult run(const ExperimentConfig& cfg) {
  const SimulationConfig sc = cfg.build();
  Simulation sim(sc);
  TraceAccumulator acc(sc.users, cfg.keep_series);
  const int num_users = sc.topology.num_users;

  bool caps_apply = num_users > 0;
  for (const auto& u : sc.users)
    caps_apply = caps_apply && u.utility.bounded_slope();
  std::vector<double> caps;
  if (caps_apply)
    for (const auto& u : sc.users)
      caps.push_back(sc.utility_weight * u.utility.nu + u.receive_cap);

  std::optional<BoundConstants> bc;
  if (caps_apply) {
    double beta_min = std::numeric_limits<double>::infinity();
    for (const auto& u : sc.users) beta_min = std::min(beta_min, u.beta);
    if (beta_min > 0.0) {
      const std::vector<int> upload_cap(num_users, sc.topology.peer_rate);
      bc = bound_constants(sc.users, drift_bound(sc.users, upload_cap),
                           sc.utility_weight);
    }
  }

  std::vector<PhaseStats> phases;
  for (size_t j = 0; j < sc.phases.phases.size(); ++j) {
    PhaseStats st;
    st.index = static_cast<int>(j);
    st.start_slot = sc.phases.phase_start(static_cast<int>(j));
    st.end_slot = j + 1 < sc.phases.phases.size()
                      ? sc.phases.phase_start(static_cast<int>(j) + 1)
                      : cfg.slots;
    st.p = sc.phases.phases[j].p;
    phases.push_back(st);
  }

  for (int64_t t = 0; t < cfg.slots; ++t) {
    const SlotDecision& d = sim.step();
    acc.record(d, sim.queues());
    if (caps_apply)
      for (int k = 0; k < num_users; ++k)
        if (sim.queues().data[k] > caps[k])
          throw InternalError("data queue exceeded its deterministic cap");
    PhaseStats& ph = phases[sc.phases.phase_index(t)];
    ph.ap_packets += d.ap_packets;
    ph.p2p_packets += d.p2p_packets;
  }
  for (auto& ph : phases) {
    const int64_t len = ph.end_slot - ph.start_slot;
    if (len > 0) {
      ph.ap_rate = ph.ap_packets / static_cast<double>(len);
      ph.p2p_rate = ph.p2p_packets / static_cast<double>(len);
    }
  }

  RunResult result{std::move(acc), bc, std::nullopt, {}, std::move(phases)};
  if (bc) result.report = check_trace(result.trace, *bc);
  if (cfg.keep_series)
    for (int64_t window : {int64_t{100}, int64_t{1000}, int64_t{10000}})
      if (window <= cfg.slots)
        result.residual_checks.push_back(check_residuals(result.trace, window));
  return result;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::vector<double>& weights) {
  if (weights.empty())
    throw ConfigError("sweep needs at least one utility weight");
  std::vector<SweepRow> rows;
  for (double w : weights) {
    ExperimentConfig c = cfg;
    c.utility_weight = w;
    c.keep_series = false;  // summaries only; the numbers match a full run
    c.out_prefix.clear();
    c.sweep.clear();
    const RunResult r = run(c);
    SweepRow row;
    row.utility_weight = w;
    row.throughput = r.trace.total_throughput();
    row.utility = r.trace.total_utility();
    row.avg_mean_data_queue = r.trace.avg_mean_data_queue();
    row.max_data_queue = r.trace.max_data_queue();
    row.max_reputation = r.trace.max_reputation();
    double cap = 0.0;
    bool bounded = true;
    for (const auto& u : r.trace.users()) {
      bounded = bounded && u.utility.bounded_slope();
      cap = std::max(cap, w * u.utility.nu + u.receive_cap);
    }
    row.data_queue_cap =
        bounded ? cap : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

namespace {

class CsvFile {
 public:
  explicit CsvFile(const std::string& path)
      : path_(path), f_(std::fopen(path.c_str(), "w")) {
    if (!f_) throw ConfigError("cannot open output file: " + path);
  }
  ~CsvFile() {
    if (f_) std::fclose(f_);
  }
  std::FILE* get() { return f_; }
  void close() {
    const bool bad = std::ferror(f_) != 0;
    const bool failed = std::fclose(f_) != 0;
    f_ = nullptr;
    if (bad || failed) throw ConfigError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::FILE* f_;
};

}  // namespace

void write_timeseries_csv(const RunResult& r, const std::string& path) {
  CsvFile csv(path);
  std::fputs(
      "slot,mean_ap_throughput,mean_p2p_throughput,mean_Q,max_Q,max_H,"
      "utility_of_running_avg\n",
      csv.get());
  const auto& aggs = r.trace.aggregates();
  for (size_t t = 0; t < aggs.size(); ++t) {
    const auto& a = aggs[t];
    std::fprintf(csv.get(), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                 static_cast<long long>(t), a.mean_ap_throughput,
                 a.mean_p2p_throughput, a.mean_data_queue, a.max_data_queue,
                 a.max_reputation, a.utility_of_running_avg);
  }
  csv.close();
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  CsvFile csv(path);
  std::fputs("V,throughput,utility,avg_mean_Q,max_Q,max_H,Q_bound\n",
             csv.get());
  for (const auto& row : rows)
    std::fprintf(csv.get(), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                 row.utility_weight, row.throughput, row.utility,
                 row.avg_mean_data_queue, row.max_data_queue,
                 row.max_reputation, row.data_queue_cap);
  csv.close();
}

void write_gap_csv(const std::vector<GapPoint>& rows, const std::string& path) {
  CsvFile csv(path);
  std::fputs("V,achieved_utility,optimal_utility\n", csv.get());
  for (const auto& row : rows)
    std::fprintf(csv.get(), "%.10g,%.10g,%.10g\n", row.utility_weight,
                 row.achieved, row.optimal);
  csv.close();
}

void write_report_json(const RunResult& r, const ExperimentConfig& cfg,
                       const std::string& path) {
  nlohmann::json j;
  j["config"] = {
      {"users", cfg.num_users},
      {"aps", cfg.num_aps},
      {"grid", std::to_string(cfg.grid_rows) + "x" +
                   std::to_string(cfg.grid_cols)},
      {"ap_cell", cfg.ap_cell},
      {"stay_probability", cfg.stay_probability},
      {"peer_rate", cfg.peer_rate},
      {"slots", cfg.slots},
      {"V", cfg.utility_weight},
      {"alpha", cfg.alpha},
      {"beta", cfg.beta},
      {"x_max", cfg.receive_cap},
      {"utility", utility_to_string(cfg.utility)},
      {"phases", phases_to_string(cfg.phases)},
      {"seed", cfg.seed},
      {"mode", cfg.finite ? "finite" : "infinite"},
      {"file_size", cfg.file_size},
      {"idle_restart_prob", cfg.idle_restart_prob},
      {"overrides", cfg.overrides.size()},
  };
  j["totals"] = {
      {"slots", r.trace.slots()},
      {"ap_packets", r.trace.ap_packets()},
      {"p2p_packets", r.trace.p2p_packets()},
      {"throughput", r.trace.total_throughput()},
      {"utility", r.trace.total_utility()},
      {"avg_mean_data_queue", r.trace.avg_mean_data_queue()},
      {"max_data_queue", r.trace.max_data_queue()},
      {"max_reputation", r.trace.max_reputation()},
      {"peak_norm", r.trace.peak_norm()},
  };
  j["per_user"] = nlohmann::json::array();
  for (int k = 0; k < r.trace.num_users(); ++k)
    j["per_user"].push_back({
        {"mean_received", r.trace.mean_received(k)},
        {"mean_uploaded", r.trace.mean_uploaded(k)},
        {"mean_quota", r.trace.mean_quota(k)},
        {"peak_data_queue", r.trace.peak_data_queue(k)},
        {"peak_reputation", r.trace.peak_reputation(k)},
    });
  j["phases"] = nlohmann::json::array();
  for (const auto& ph : r.phases)
    j["phases"].push_back({
        {"index", ph.index},
        {"start", ph.start_slot},
        {"end", ph.end_slot},
        {"p", ph.p},
        {"ap_packets", ph.ap_packets},
        {"p2p_packets", ph.p2p_packets},
        {"ap_rate", ph.ap_rate},
        {"p2p_rate", ph.p2p_rate},
    });
  if (r.bounds) {
    double cap_max = 0.0;
    for (double c : r.bounds->data_queue_cap) cap_max = std::max(cap_max, c);
    j["bounds"] = {
        {"applicable", true},
        {"drift_bound", r.bounds->drift_bound},
        {"utility_span", r.bounds->utility_span},
        {"offset", r.bounds->offset},
        {"slope", r.bounds->slope},
        {"norm_cap", r.bounds->norm_cap},
        {"max_data_queue_cap", cap_max},
        {"data_queue_ok", r.report->data_queue_ok},
        {"norm_ok", r.report->norm_ok},
        {"worst_data_queue_excess", r.report->worst_data_queue_excess},
        {"norm_excess", r.report->norm_excess},
    };
  } else {
    j["bounds"] = {{"applicable", false}};
  }
  j["residuals"] = nlohmann::json::array();
  for (const auto& rc : r.residual_checks)
    j["residuals"].push_back({
        {"window", rc.window},
        {"pass", rc.pass},
        {"worst_tft_excess", rc.worst_tft_excess},
        {"worst_aux_excess", rc.worst_aux_excess},
    });

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace p2psched
