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

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace pgas {

// How non-blocking RMA makes progress.
//   Deferred     the transfer is performed inside wait (weak progress).
//   EagerDirect  the origin initiates the transfer itself at call time.
//   Agent        messages above the threshold are handed to an on-node
//                progress agent; smaller ones take the eager-direct path.
enum class ProgressMode { Deferred, EagerDirect, Agent };

std::string_view to_string(ProgressMode mode);
// Accepts "deferred", "eager-direct" (alias "eager") and "agent".
ProgressMode parse_mode(std::string_view text);

struct Config {
  std::size_t nodes = 1;
  std::size_t units_per_node = 4;  // application units + agents
  std::size_t agents_per_node = 1;
  std::size_t threshold_bytes = 4096;
  std::chrono::nanoseconds net_latency{std::chrono::microseconds(100)};
  std::uint64_t net_bandwidth = 1'000'000'000;  // bytes per second
  std::uint64_t seed = 1;

  ProgressMode mode = ProgressMode::Agent;
  // Scales every modeled network delay.
  double time_dilation = 1.0;
  // Size of each application unit's non-collective region.
  std::size_t region_bytes = std::size_t{4} << 20;
  // Upper bound on an idle agent's park before it re-probes.
  std::chrono::microseconds agent_park{1000};
  std::chrono::milliseconds collective_timeout{30000};
  bool transcript = true;
  // When set, the transcript is also written here at finalize.
  std::string transcript_path;
  // Tests may start agents by hand to drive them step by step.
  bool autostart_agents = true;

  std::size_t app_units_per_node() const { return units_per_node - agents_per_node; }
  std::size_t total_units() const { return nodes * units_per_node; }

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Plain "key = value" lines; '#' starts a comment. Keys mirror the field
// names above, durations take an explicit suffix (ns, us, ms, s).
Config parse_config(std::istream& in);
Config parse_config_text(std::string_view text);
Config load_config(const std::string& path);

// Parses byte counts such as "4096", "4K", "64KiB", "1M".
std::uint64_t parse_bytes(std::string_view text);

}  // namespace pgas
