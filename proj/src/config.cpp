#include "p2psched/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "p2psched/errors.hpp"

namespace p2psched {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw ConfigError("bad number for " + what + ": '" + raw + "'");
  return v;
}

int64_t parse_i64(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad integer for " + what + ": '" + raw + "'");
  return v;
}

int parse_int(const std::string& raw, const std::string& what) {
  const int64_t v = parse_i64(raw, what);
  if (v < INT32_MIN || v > INT32_MAX)
    throw ConfigError(what + " out of range: '" + raw + "'");
  return static_cast<int>(v);
}

uint64_t parse_u64(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad integer for " + what + ": '" + raw + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ','))
    out.push_back(parse_int(part, what));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

UserOverride& override_for(ExperimentConfig& cfg, int user) {
  for (auto& o : cfg.overrides)
    if (o.user == user) return o;
  cfg.overrides.push_back(UserOverride{});
  cfg.overrides.back().user = user;
  return cfg.overrides.back();
}

}  // namespace

const std::string* KeyValues::find(const std::string& key) const {
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    if (it->first == key) return &it->second;
  return nullptr;
}

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has an empty key");
    kv.items.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

UtilitySpec parse_utility(const std::string& text) {
  const auto parts = split(trim(text), ':');
  UtilitySpec u;
  if (parts[0] == "log" && parts.size() == 1) {
    u.kind = UtilitySpec::Kind::pure_log;
    return u;
  }
  if (parts[0] == "log1p" && parts.size() == 2) {
    u.kind = UtilitySpec::Kind::log_one_plus;
    u.nu = parse_double(parts[1], "utility scale");
    return u;
  }
  if (parts[0] == "piecewise" && parts.size() == 3) {
    u.kind = UtilitySpec::Kind::piecewise_linear;
    u.nu = parse_double(parts[1], "utility slope");
    u.theta = parse_double(parts[2], "utility saturation");
    return u;
  }
  throw ConfigError("bad utility spec: '" + text +
                    "' (expected log, log1p:<nu>, or piecewise:<nu>:<theta>)");
}

std::string utility_to_string(const UtilitySpec& u) {
  switch (u.kind) {
    case UtilitySpec::Kind::pure_log:
      return "log";
    case UtilitySpec::Kind::log_one_plus:
      return "log1p:" + format_double(u.nu);
    case UtilitySpec::Kind::piecewise_linear:
      return "piecewise:" + format_double(u.nu) + ":" + format_double(u.theta);
  }
  return "";
}

std::vector<PhaseSchedule::Phase> parse_phases(const std::string& text) {
  std::vector<PhaseSchedule::Phase> out;
  for (const auto& part : split(text, ',')) {
    const auto bits = split(part, ':');
    if (bits.size() != 2)
      throw ConfigError("bad phase entry: '" + part +
                        "' (expected <fraction>:<p>)");
    out.push_back({parse_double(bits[0], "phase fraction"),
                   parse_double(bits[1], "phase holder probability")});
  }
  return out;
}

std::string phases_to_string(const std::vector<PhaseSchedule::Phase>& phases) {
  std::string out;
  for (const auto& ph : phases) {
    if (!out.empty()) out += ",";
    out += format_double(ph.fraction) + ":" + format_double(ph.p);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ','))
    out.push_back(parse_double(part, "list entry"));
  return out;
}

void apply_config(ExperimentConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv.items) {
    if (key == "users") {
      cfg.num_users = parse_int(value, key);
    } else if (key == "aps") {
      cfg.num_aps = parse_int(value, key);
    } else if (key == "grid") {
      const auto parts = split(value, 'x');
      if (parts.size() != 2)
        throw ConfigError("bad grid: '" + value + "' (expected RxC)");
      cfg.grid_rows = parse_int(parts[0], "grid rows");
      cfg.grid_cols = parse_int(parts[1], "grid cols");
    } else if (key == "ap_cell") {
      cfg.ap_cell = parse_int(value, key);
    } else if (key == "stay_probability") {
      cfg.stay_probability = parse_double(value, key);
    } else if (key == "peer_rate") {
      cfg.peer_rate = parse_int(value, key);
    } else if (key == "slots") {
      cfg.slots = parse_i64(value, key);
    } else if (key == "V") {
      cfg.utility_weight = parse_double(value, key);
    } else if (key == "alpha") {
      cfg.alpha = parse_double(value, key);
    } else if (key == "beta") {
      cfg.beta = parse_double(value, key);
    } else if (key == "x_max") {
      cfg.receive_cap = parse_int(value, key);
    } else if (key == "utility") {
      cfg.utility = parse_utility(value);
    } else if (key == "phases") {
      cfg.phases = parse_phases(value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(value, key);
    } else if (key == "mode") {
      if (value == "infinite")
        cfg.finite = false;
      else if (value == "finite")
        cfg.finite = true;
      else
        throw ConfigError("mode must be infinite or finite");
    } else if (key == "file_size") {
      cfg.file_size = parse_i64(value, key);
    } else if (key == "file_size_dist") {
      if (value == "fixed")
        cfg.size_dist = FileConfig::SizeDist::fixed;
      else if (value == "geometric")
        cfg.size_dist = FileConfig::SizeDist::geometric;
      else
        throw ConfigError("file_size_dist must be fixed or geometric");
    } else if (key == "idle_restart_prob") {
      cfg.idle_restart_prob = parse_double(value, key);
    } else if (key == "out") {
      cfg.out_prefix = value;
    } else if (key == "sweep") {
      cfg.sweep = parse_double_list(value);
    } else if (key.rfind("user.", 0) == 0) {
      const auto rest = key.substr(5);
      const auto dot = rest.find('.');
      if (dot == std::string::npos)
        throw ConfigError("bad per-user key: '" + key + "'");
      const int user = parse_int(rest.substr(0, dot), "user index");
      const std::string field = rest.substr(dot + 1);
      UserOverride& o = override_for(cfg, user);
      if (field == "alpha")
        o.alpha = parse_double(value, key);
      else if (field == "beta")
        o.beta = parse_double(value, key);
      else if (field == "x_max")
        o.receive_cap = parse_int(value, key);
      else if (field == "utility")
        o.utility = parse_utility(value);
      else if (field == "peer_upload") {
        if (value == "on")
          o.peer_upload_off = false;
        else if (value == "off")
          o.peer_upload_off = true;
        else
          throw ConfigError("peer_upload must be on or off");
      } else {
        throw ConfigError("unknown per-user field: '" + field + "'");
      }
    } else {
      throw ConfigError("unknown config key: '" + key + "'");
    }
  }
}

TinyInstance parse_tiny_instance(const KeyValues& kv) {
  TinyInstance inst;
  const std::string* v = kv.find("tiny.users");
  if (!v) throw ConfigError("tiny instance needs tiny.users");
  inst.num_users = parse_int(*v, "tiny.users");
  if ((v = kv.find("tiny.aps"))) inst.num_aps = parse_int(*v, "tiny.aps");

  UserConfig base;
  if ((v = kv.find("alpha"))) base.alpha = parse_double(*v, "alpha");
  if ((v = kv.find("beta"))) base.beta = parse_double(*v, "beta");
  if ((v = kv.find("x_max"))) base.receive_cap = parse_int(*v, "x_max");
  if ((v = kv.find("utility"))) base.utility = parse_utility(*v);
  inst.users.assign(inst.num_users, base);
  for (int k = 0; k < inst.num_users; ++k) {
    const std::string prefix = "user." + std::to_string(k) + ".";
    if ((v = kv.find(prefix + "alpha")))
      inst.users[k].alpha = parse_double(*v, prefix + "alpha");
    if ((v = kv.find(prefix + "beta")))
      inst.users[k].beta = parse_double(*v, prefix + "beta");
    if ((v = kv.find(prefix + "x_max")))
      inst.users[k].receive_cap = parse_int(*v, prefix + "x_max");
    if ((v = kv.find(prefix + "utility")))
      inst.users[k].utility = parse_utility(*v);
  }

  inst.holders.resize(inst.num_users);
  for (int k = 0; k < inst.num_users; ++k) {
    const std::string key = "tiny.holders." + std::to_string(k);
    if ((v = kv.find(key))) inst.holders[k] = parse_int_list(*v, key);
  }

  if (!(v = kv.find("tiny.states")))
    throw ConfigError("tiny instance needs tiny.states");
  const int num_states = parse_int(*v, "tiny.states");
  for (int i = 0; i < num_states; ++i) {
    const std::string prefix = "tiny.state." + std::to_string(i) + ".";
    TinyInstance::State st;
    if (!(v = kv.find(prefix + "prob")))
      throw ConfigError("missing " + prefix + "prob");
    st.prob = parse_double(*v, prefix + "prob");
    if (!(v = kv.find(prefix + "positions")))
      throw ConfigError("missing " + prefix + "positions");
    st.positions = parse_int_list(*v, prefix + "positions");
    if (!(v = kv.find(prefix + "channels")))
      throw ConfigError("missing " + prefix + "channels");
    for (const auto& row : split(*v, ';'))
      for (int rate : parse_int_list(row, prefix + "channels"))
        st.channels.push_back(rate);
    inst.states.push_back(std::move(st));
  }
  inst.validate();
  return inst;
}

TinyInstance load_tiny_instance(const std::string& path) {
  return parse_tiny_instance(parse_config_file(path));
}

}  // namespace p2psched
