#pragma once

#include <string>
#include <utility>
#include <vector>

#include "p2psched/experiment.hpp"
#include "p2psched/oracle.hpp"

namespace p2psched {

// Flat key = value text (one pair per line, '#' comments). Later
// occurrences of a key override earlier ones.
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> items;

  const std::string* find(const std::string& key) const;  // last match
  bool has(const std::string& key) const { return find(key) != nullptr; }
};

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

// "log1p:<nu>", "piecewise:<nu>:<theta>", or "log".
UtilitySpec parse_utility(const std::string& text);
std::string utility_to_string(const UtilitySpec& u);

// "<fraction>:<p>,<fraction>:<p>,..."
std::vector<PhaseSchedule::Phase> parse_phases(const std::string& text);
std::string phases_to_string(const std::vector<PhaseSchedule::Phase>& phases);

std::vector<double> parse_double_list(const std::string& text);  // "1,2,5"

// Fold recognized keys into the config; unknown keys are a ConfigError.
// Per-user overrides use user.<k>.alpha / beta / x_max / utility /
// peer_upload (on or off).
void apply_config(ExperimentConfig& cfg, const KeyValues& kv);

// Tiny instances use the same file format under tiny.* keys plus the
// shared parameter keys (alpha, beta, x_max, utility, user.<k>.*).
TinyInstance parse_tiny_instance(const KeyValues& kv);
TinyInstance load_tiny_instance(const std::string& path);

}  // namespace p2psched
