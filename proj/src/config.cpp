#include "granular/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

namespace granular {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (errno != 0 || end != text.c_str() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(const std::string& text) {
  if (text.empty() || text[0] == '-') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (errno != 0 || end != text.c_str() + text.size()) return std::nullopt;
  return static_cast<std::uint64_t>(v);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void KeyValues::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(source_ + ": key '" + key + "': " + what + " (got '" + entries_.at(key) + "')");
}

std::optional<std::string> KeyValues::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<double> KeyValues::get_double(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  auto v = to_double(*s);
  if (!v) fail(key, "expected a number");
  return v;
}

std::optional<std::uint64_t> KeyValues::get_uint(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  auto v = to_uint(*s);
  if (!v) fail(key, "expected a non-negative integer");
  return v;
}

std::optional<bool> KeyValues::get_bool(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
  if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
  fail(key, "expected a boolean");
}

std::optional<std::vector<double>> KeyValues::get_double_list(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_list(*s)) {
    auto v = to_double(item);
    if (!v) fail(key, "expected a comma-separated list of numbers");
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<std::uint64_t>> KeyValues::get_uint_list(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(*s)) {
    auto v = to_uint(item);
    if (!v) fail(key, "expected a comma-separated list of non-negative integers");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> KeyValues::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

KeyValues parse_key_values(std::istream& in, const std::string& source_name) {
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key");
    if (entries.count(key)) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries.emplace(key, value);
  }
  return KeyValues(std::move(entries), source_name);
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_key_values(in, path);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    auto v = to_double(item);
    if (!v) throw ConfigError("expected a number in list, got '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

SimConfig sim_config_from(const KeyValues& kv, bool reject_unknown) {
  SimConfig c;
  if (auto v = kv.get_double("epsilon")) c.epsilon = *v;
  if (auto v = kv.get_string("alpha_model")) {
    if (*v == "constant") {
      c.alpha_model = AlphaModel::constant;
    } else if (*v == "velocity_dependent") {
      c.alpha_model = AlphaModel::velocity_dependent;
    } else {
      throw ConfigError(kv.source() + ": unknown alpha_model '" + *v + "'");
    }
  }
  if (auto v = kv.get_double("alpha")) c.alpha = *v;
  if (auto v = kv.get_double("gamma")) c.gamma = *v;
  if (auto v = kv.get_uint("n_particles")) c.n_particles = *v;
  if (auto v = kv.get_uint("n_cells")) c.n_cells = *v;
  if (auto v = kv.get_double("domain.x_min")) c.x_min = *v;
  if (auto v = kv.get_double("domain.x_max")) c.x_max = *v;
  if (auto v = kv.get_string("boundary")) {
    if (*v == "free") {
      c.boundary = Boundary::free;
    } else if (*v == "periodic") {
      c.boundary = Boundary::periodic;
    } else {
      throw ConfigError(kv.source() + ": unknown boundary '" + *v + "'");
    }
  }
  if (auto v = kv.get_double("t_end")) c.t_end = *v;
  if (auto v = kv.get_double("dt")) c.dt = *v;
  if (auto v = kv.get_uint("seed")) c.seed = *v;
  if (auto v = kv.get_string("output_dir")) c.output_dir = *v;
  if (auto v = kv.get_double("output_every")) c.output_every = *v;
  if (auto v = kv.get_bool("event_log")) c.event_log = *v;

  if (auto v = kv.get_double("functional.eta")) c.functional.eta = *v;
  if (auto v = kv.get_double("functional.mu")) c.functional.mu = *v;
  if (auto v = kv.get_uint("functional.k")) c.functional.k = static_cast<int>(*v);
  if (auto v = kv.get_double("functional.delta")) c.functional.delta = *v;
  if (auto v = kv.get_uint_list("functional.k_list")) {
    c.functional.k_list.clear();
    for (auto k : *v) c.functional.k_list.push_back(static_cast<int>(k));
  }
  if (auto v = kv.get_uint("functional.l_max_particles")) c.functional.l_max_particles = *v;

  c.init.x_min = c.x_min;
  c.init.x_max = c.x_max;
  c.init.x_split = 0.5 * (c.x_min + c.x_max);
  if (auto v = kv.get_string("init.kind")) c.init.kind = parse_init_kind(*v);
  if (auto v = kv.get_double("init.u_left")) c.init.u_left = *v;
  if (auto v = kv.get_double("init.u_right")) c.init.u_right = *v;
  if (auto v = kv.get_double("init.x_split")) c.init.x_split = *v;
  if (auto v = kv.get_double("init.v_peak")) c.init.v_peak = *v;
  if (auto v = kv.get_double("init.u0")) c.init.u0 = *v;
  if (auto v = kv.get_string("init.profile")) {
    if (*v == "constant") {
      c.init.profile = VelocityProfile::constant;
    } else if (*v == "linear") {
      c.init.profile = VelocityProfile::linear;
    } else if (*v == "sine") {
      c.init.profile = VelocityProfile::sine;
    } else {
      throw ConfigError(kv.source() + ": unknown init.profile '" + *v + "'");
    }
  }
  if (auto v = kv.get_double("init.amplitude")) c.init.amplitude = *v;
  if (auto v = kv.get_double("init.sigma_v")) c.init.sigma_v = *v;

  if (auto v = kv.get_bool("sticky.record_events")) c.sticky_record_events = *v;
  if (auto v = kv.get_string("sticky.projection")) {
    if (*v == "particles") {
      c.sticky_project_cells = false;
    } else if (*v == "cells") {
      c.sticky_project_cells = true;
    } else {
      throw ConfigError(kv.source() + ": unknown sticky.projection '" + *v + "'");
    }
  }

  if (reject_unknown) {
    for (const auto& key : kv.unused_keys()) {
      if (key.rfind("sweep.", 0) == 0) continue;
      throw ConfigError(kv.source() + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> to_key_values(const SimConfig& c) {
  std::map<std::string, std::string> m;
  m["epsilon"] = format_double(c.epsilon);
  m["alpha_model"] = c.alpha_model == AlphaModel::constant ? "constant" : "velocity_dependent";
  m["alpha"] = format_double(c.alpha);
  m["gamma"] = format_double(c.gamma);
  m["n_particles"] = std::to_string(c.n_particles);
  m["n_cells"] = std::to_string(c.n_cells);
  m["domain.x_min"] = format_double(c.x_min);
  m["domain.x_max"] = format_double(c.x_max);
  m["boundary"] = c.boundary == Boundary::free ? "free" : "periodic";
  m["t_end"] = format_double(c.t_end);
  m["dt"] = format_double(c.dt);
  m["seed"] = std::to_string(c.seed);
  m["output_dir"] = c.output_dir;
  m["output_every"] = format_double(c.output_every);
  m["event_log"] = c.event_log ? "true" : "false";
  m["functional.eta"] = format_double(c.functional.eta);
  m["functional.mu"] = format_double(c.functional.mu);
  m["functional.k"] = std::to_string(c.functional.k);
  m["functional.delta"] = format_double(c.functional.delta);
  std::string ks;
  for (std::size_t i = 0; i < c.functional.k_list.size(); ++i) {
    ks += (i ? "," : "") + std::to_string(c.functional.k_list[i]);
  }
  m["functional.k_list"] = ks;
  m["functional.l_max_particles"] = std::to_string(c.functional.l_max_particles);
  m["init.kind"] = to_string(c.init.kind);
  m["init.u_left"] = format_double(c.init.u_left);
  m["init.u_right"] = format_double(c.init.u_right);
  m["init.x_split"] = format_double(c.init.x_split);
  m["init.v_peak"] = format_double(c.init.v_peak);
  m["init.u0"] = format_double(c.init.u0);
  const char* profiles[] = {"constant", "linear", "sine"};
  m["init.profile"] = profiles[static_cast<int>(c.init.profile)];
  m["init.amplitude"] = format_double(c.init.amplitude);
  m["init.sigma_v"] = format_double(c.init.sigma_v);
  m["sticky.record_events"] = c.sticky_record_events ? "true" : "false";
  m["sticky.projection"] = c.sticky_project_cells ? "cells" : "particles";
  return m;
}

}  // namespace granular
