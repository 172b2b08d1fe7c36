/* Copyright 2026 The pgasrt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pgas/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pgas/error.hpp"

namespace pgas {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("config: '" + std::string(key) + "' expects an unsigned integer, got '" +
                      std::string(text) + "'");
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(text), &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" +
                    std::string(text) + "'");
}

std::chrono::nanoseconds parse_duration(std::string_view key, std::string_view text) {
  std::size_t split = 0;
  while (split < text.size() && (std::isdigit(static_cast<unsigned char>(text[split])) ||
                                 text[split] == '.'))
    ++split;
  const double value = parse_double(key, text.substr(0, split));
  const std::string unit = lower(trim(text.substr(split)));
  double scale = 0;
  if (unit == "ns") scale = 1;
  else if (unit == "us") scale = 1e3;
  else if (unit == "ms") scale = 1e6;
  else if (unit == "s") scale = 1e9;
  else
    throw ConfigError("config: '" + std::string(key) + "' needs a unit suffix (ns, us, ms, s)");
  return std::chrono::nanoseconds(static_cast<std::int64_t>(value * scale + 0.5));
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string v = lower(text);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects a boolean");
}

}  // namespace

std::string_view to_string(ProgressMode mode) {
  switch (mode) {
    case ProgressMode::Deferred: return "deferred";
    case ProgressMode::EagerDirect: return "eager-direct";
    case ProgressMode::Agent: return "agent";
  }
  return "?";
}

ProgressMode parse_mode(std::string_view text) {
  const std::string v = lower(trim(text));
  if (v == "deferred") return ProgressMode::Deferred;
  if (v == "eager" || v == "eager-direct") return ProgressMode::EagerDirect;
  if (v == "agent") return ProgressMode::Agent;
  throw ConfigError("unknown progress mode '" + std::string(text) + "'");
}

std::uint64_t parse_bytes(std::string_view text) {
  text = trim(text);
  std::size_t split = 0;
  while (split < text.size() && std::isdigit(static_cast<unsigned char>(text[split]))) ++split;
  if (split == 0) throw ConfigError("bad byte count '" + std::string(text) + "'");
  const std::uint64_t value = parse_uint("bytes", text.substr(0, split));
  const std::string unit = lower(trim(text.substr(split)));
  std::uint64_t scale = 1;
  if (unit.empty() || unit == "b") scale = 1;
  else if (unit == "k" || unit == "kb" || unit == "kib") scale = 1ull << 10;
  else if (unit == "m" || unit == "mb" || unit == "mib") scale = 1ull << 20;
  else if (unit == "g" || unit == "gb" || unit == "gib") scale = 1ull << 30;
  else throw ConfigError("bad byte unit in '" + std::string(text) + "'");
  return value * scale;
}

void Config::validate() const {
  if (nodes < 1) throw ConfigError("config: nodes must be >= 1");
  if (agents_per_node < 1) throw ConfigError("config: agents_per_node must be >= 1");
  if (agents_per_node >= units_per_node)
    throw ConfigError("config: agents_per_node (" + std::to_string(agents_per_node) +
                      ") must be smaller than units_per_node (" +
                      std::to_string(units_per_node) + ")");
  if (net_bandwidth == 0) throw ConfigError("config: net_bandwidth must be positive");
  if (net_latency.count() < 0) throw ConfigError("config: net_latency must be non-negative");
  if (!(time_dilation > 0)) throw ConfigError("config: time_dilation must be positive");
}

Config parse_config(std::istream& in) {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));

    if (key == "nodes") cfg.nodes = parse_uint(key, value);
    else if (key == "units_per_node") cfg.units_per_node = parse_uint(key, value);
    else if (key == "agents_per_node") cfg.agents_per_node = parse_uint(key, value);
    else if (key == "threshold_bytes") cfg.threshold_bytes = parse_bytes(value);
    else if (key == "net_latency") cfg.net_latency = parse_duration(key, value);
    else if (key == "net_bandwidth") cfg.net_bandwidth = parse_uint(key, value);
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "time_dilation") cfg.time_dilation = parse_double(key, value);
    else if (key == "region_bytes") cfg.region_bytes = parse_bytes(value);
    else if (key == "agent_park")
      cfg.agent_park = std::chrono::duration_cast<std::chrono::microseconds>(parse_duration(key, value));
    else if (key == "collective_timeout")
      cfg.collective_timeout =
          std::chrono::duration_cast<std::chrono::milliseconds>(parse_duration(key, value));
    else if (key == "transcript") cfg.transcript = parse_bool(key, value);
    else if (key == "transcript_path") cfg.transcript_path = std::string(value);
    else
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

Config parse_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace pgas
