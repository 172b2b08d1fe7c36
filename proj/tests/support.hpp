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

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "pgas/config.hpp"
#include "pgas/runtime.hpp"
#include "pgas/transport.hpp"

namespace testing {

inline pgas::Config small_config(std::size_t nodes = 2, std::size_t per_node = 3,
                                 std::size_t agents = 1) {
  pgas::Config c;
  c.nodes = nodes;
  c.units_per_node = per_node;
  c.agents_per_node = agents;
  c.net_latency = std::chrono::microseconds(20);
  c.collective_timeout = std::chrono::milliseconds(5000);
  return c;
}

using Kind = pgas::TranscriptRecord::Kind;

inline std::size_t count(const std::vector<pgas::TranscriptRecord>& log, Kind kind) {
  return std::count_if(log.begin(), log.end(), [&](const auto& r) { return r.kind == kind; });
}

inline std::size_t count_ctrl(const std::vector<pgas::TranscriptRecord>& log, pgas::Tag tag) {
  return std::count_if(log.begin(), log.end(),
                       [&](const auto& r) { return r.kind == Kind::Ctrl && r.tag == tag; });
}

inline std::vector<std::byte> pattern(std::size_t n, unsigned seed) {
  std::vector<std::byte> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::byte((i * 131 + seed * 7 + 3) & 0xff);
  return v;
}

}  // namespace testing
