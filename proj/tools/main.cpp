// Command line front end: single runs, utility-weight sweeps, and tiny
// reference instances, all driven by a flat key=value config file with
// flag overrides. Exit status: 0 success, 1 bad configuration or I/O,
// 2 broken internal invariant.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "p2psched/config.hpp"
#include "p2psched/errors.hpp"
#include "p2psched/experiment.hpp"

namespace {

void print_run_summary(const p2psched::RunResult& r) {
  std::printf("slots            %lld\n",
              static_cast<long long>(r.trace.slots()));
  std::printf("throughput       %.6f packets/slot\n",
              r.trace.total_throughput());
  std::printf("utility          %.6f\n", r.trace.total_utility());
  std::printf("max data queue   %.6f\n", r.trace.max_data_queue());
  std::printf("max reputation   %.6f\n", r.trace.max_reputation());
  for (const auto& ph : r.phases)
    std::printf("phase %d (p=%.3g): ap %.4f p2p %.4f packets/slot\n", ph.index,
                ph.p, ph.ap_rate, ph.p2p_rate);
  if (r.report) {
    std::printf("data queue caps  %s\n",
                r.report->data_queue_ok ? "ok" : "VIOLATED");
    std::printf("norm cap         %s\n", r.report->norm_ok ? "ok" : "VIOLATED");
  }
  for (const auto& rc : r.residual_checks)
    std::printf("residuals T=%-6lld %s\n", static_cast<long long>(rc.window),
                rc.pass ? "ok" : "VIOLATED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backlog-driven peer-to-peer download scheduler simulator"};
  std::string config_path, tiny_path, out_override, grid, utility, phases,
      sweep_list, gap_list, mode;
  int64_t slots = -1, file_size = -1;
  double utility_weight = -1.0, alpha = -1.0, beta = -1.0, stay = -1.0,
         idle_restart = -1.0;
  int users = -1, aps = -1, receive_cap = -1, peer_rate = -1;
  int64_t seed = -1, gap_slots = 1000000;

  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--slots", slots, "simulation horizon in slots");
  app.add_option("--V", utility_weight, "utility weight");
  app.add_option("--alpha", alpha, "uploads owed per downloaded packet");
  app.add_option("--beta", beta, "free download allowance per slot");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--users", users, "number of mobile users");
  app.add_option("--aps", aps, "number of access points");
  app.add_option("--grid", grid, "grid as RxC, e.g. 4x4");
  app.add_option("--x-max", receive_cap, "per-user receive cap");
  app.add_option("--peer-rate", peer_rate, "co-located peer link rate");
  app.add_option("--stay", stay, "mobility stay probability");
  app.add_option("--utility", utility,
                 "log | log1p:<nu> | piecewise:<nu>:<theta>");
  app.add_option("--phases", phases, "<fraction>:<p>,... demand phases");
  app.add_option("--mode", mode, "infinite | finite demand");
  app.add_option("--file-size", file_size, "finite-mode file size");
  app.add_option("--idle-restart", idle_restart,
                 "finite-mode restart probability");
  app.add_option("--out", out_override, "output file prefix");
  app.add_option("--sweep", sweep_list, "comma list of utility weights");
  app.add_option("--tiny", tiny_path, "tiny instance file (oracle mode)");
  app.add_option("--gap", gap_list,
                 "tiny mode: utility weights for the gap curve");
  app.add_option("--gap-slots", gap_slots, "tiny mode: slots per weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  try {
    if (!tiny_path.empty()) {
      const p2psched::TinyInstance inst =
          p2psched::load_tiny_instance(tiny_path);
      const std::vector<double> weights =
          gap_list.empty() ? std::vector<double>{1.0, 10.0, 100.0}
                           : p2psched::parse_double_list(gap_list);
      const uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 1;
      const auto curve = p2psched::gap_curve(inst, weights, gap_slots, s);
      std::printf("V,achieved_utility,optimal_utility\n");
      for (const auto& pt : curve)
        std::printf("%.10g,%.10g,%.10g\n", pt.utility_weight, pt.achieved,
                    pt.optimal);
      if (!out_override.empty())
        p2psched::write_gap_csv(curve, out_override + "_gap.csv");
      return 0;
    }

    p2psched::ExperimentConfig cfg;
    if (!config_path.empty())
      p2psched::apply_config(cfg, p2psched::parse_config_file(config_path));
    if (slots >= 0) cfg.slots = slots;
    if (utility_weight >= 0) cfg.utility_weight = utility_weight;
    if (alpha >= 0) cfg.alpha = alpha;
    if (beta >= 0) cfg.beta = beta;
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (users >= 0) cfg.num_users = users;
    if (aps >= 0) cfg.num_aps = aps;
    if (!grid.empty())
      p2psched::apply_config(cfg, p2psched::parse_config_text("grid = " + grid));
    if (receive_cap >= 0) cfg.receive_cap = receive_cap;
    if (peer_rate >= 0) cfg.peer_rate = peer_rate;
    if (stay >= 0) cfg.stay_probability = stay;
    if (!utility.empty()) cfg.utility = p2psched::parse_utility(utility);
    if (!phases.empty()) cfg.phases = p2psched::parse_phases(phases);
    if (!mode.empty()) {
      if (mode == "finite")
        cfg.finite = true;
      else if (mode == "infinite")
        cfg.finite = false;
      else
        throw p2psched::ConfigError("mode must be infinite or finite");
    }
    if (file_size >= 0) cfg.file_size = file_size;
    if (idle_restart >= 0) cfg.idle_restart_prob = idle_restart;
    if (!out_override.empty()) cfg.out_prefix = out_override;
    if (!sweep_list.empty()) cfg.sweep = p2psched::parse_double_list(sweep_list);

    if (!cfg.sweep.empty()) {
      const auto rows = p2psched::sweep(cfg, cfg.sweep);
      std::printf("V,throughput,utility,avg_mean_Q,max_Q,max_H,Q_bound\n");
      for (const auto& row : rows)
        std::printf("%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                    row.utility_weight, row.throughput, row.utility,
                    row.avg_mean_data_queue, row.max_data_queue,
                    row.max_reputation, row.data_queue_cap);
      if (!cfg.out_prefix.empty())
        p2psched::write_sweep_csv(rows, cfg.out_prefix + "_sweep.csv");
      return 0;
    }

    const p2psched::RunResult result = p2psched::run(cfg);
    print_run_summary(result);
    if (!cfg.out_prefix.empty()) {
      p2psched::write_timeseries_csv(result,
                                     cfg.out_prefix + "_timeseries.csv");
      p2psched::write_report_json(result, cfg, cfg.out_prefix + "_report.json");
    }
    return 0;
  } catch (const p2psched::InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  } catch (const p2psched::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
